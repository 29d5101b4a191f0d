#include "cli.hpp"

#include "idxlab/bench.hpp"
#include "idxlab/catalog.hpp"
#include "idxlab/config.hpp"
#include "idxlab/errors.hpp"
#include "idxlab/executor.hpp"
#include "idxlab/planner.hpp"
#include "idxlab/storage.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace fs = std::filesystem;

namespace idxlab {

namespace {

struct IndexDef {
    std::string name;
    IndexKind kind;
    Column column;
};

fs::path index_file(const fs::path& dir, const std::string& table) { return dir / (table + ".indexes"); }

std::vector<IndexDef> read_index_defs(const fs::path& dir, const std::string& table) {
    std::vector<IndexDef> defs;
    std::ifstream in(index_file(dir, table));
    if (!in) return defs;
    std::string name, kind, column;
    while (in >> name >> kind >> column) defs.push_back({name, parse_index_kind(kind), parse_column(column)});
    return defs;
}

void write_index_defs(const fs::path& dir, const std::string& table, const std::vector<IndexDef>& defs) {
    std::ofstream out(index_file(dir, table), std::ios::trunc);
    if (!out) throw IoError("cannot write " + index_file(dir, table).string());
    for (const auto& d : defs) out << d.name << ' ' << index_kind_name(d.kind) << ' ' << column_name(d.column) << '\n';
}

void build_index(IndexCatalog& catalog, const HeapTable& table, const IndexDef& def, const EngineConfig& cfg) {
    if (def.kind == IndexKind::Bitmap) catalog.add(BitmapIndex::build(table, def.column, def.name));
    else catalog.add(BTreeIndex::build(table, def.column, def.name, cfg.fanout), table);
}

// Index contents are not persisted; the definitions are replayed against the
// loaded table, which gives the same structures because builds are deterministic.
IndexCatalog load_catalog(const fs::path& dir, const HeapTable& table, const EngineConfig& cfg) {
    IndexCatalog catalog;
    for (const auto& def : read_index_defs(dir, table.name())) build_index(catalog, table, def, cfg);
    return catalog;
}

Column column_arg(const std::string& text) {
    try {
        return parse_column(text);
    } catch (const CatalogError& e) {
        throw UsageError(e.what());
    }
}

std::int64_t parse_int(std::string_view text, std::string_view what) {
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty())
        throw UsageError("bad " + std::string(what) + " '" + std::string(text) + "'");
    return v;
}

std::int64_t parse_value(Column column, std::string_view text) {
    if (column == Column::Gender) {
        if (text.size() == 3 && text.front() == '\'' && text.back() == '\'') text = text.substr(1, 1);
        if (text == "M" || text == "m") return kMaleCode;
        if (text == "F" || text == "f") return kFemaleCode;
        throw UsageError("gender value must be M or F, got '" + std::string(text) + "'");
    }
    return parse_int(text, std::string(column_name(column)) + " value");
}

// col=v | col=lo..hi | col=a,b,c | col=null
Predicate parse_where(const std::string& clause) {
    auto eq = clause.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == clause.size())
        throw UsageError("--where expects col=value, col=lo..hi, col=a,b,c or col=null; got '" + clause + "'");
    Column column = column_arg(clause.substr(0, eq));
    std::string rhs = clause.substr(eq + 1);
    std::string lowered = rhs;
    std::transform(lowered.begin(), lowered.end(), lowered.begin(), [](unsigned char c) { return std::tolower(c); });
    if (lowered == "null") return Predicate::is_null(column);
    if (auto dots = rhs.find(".."); dots != std::string::npos)
        return Predicate::range(column, parse_value(column, rhs.substr(0, dots)), parse_value(column, rhs.substr(dots + 2)));
    if (rhs.find(',') != std::string::npos) {
        std::vector<std::int64_t> values;
        std::stringstream ss(rhs);
        for (std::string item; std::getline(ss, item, ',');) values.push_back(parse_value(column, item));
        return Predicate::in_list(column, std::move(values));
    }
    return Predicate::eq(column, parse_value(column, rhs));
}

std::string default_index_name(const std::string& table, Column column, IndexKind kind) {
    std::string s = table + "_" + std::string(column_name(column)) + (kind == IndexKind::Bitmap ? "_BMX" : "_IDX");
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::toupper(c); });
    return s;
}

void print_index_stats(std::ostream& out, const std::vector<IndexStats>& stats) {
    if (stats.empty()) {
        out << "no indexes\n";
        return;
    }
    out << std::left << std::setw(24) << "index" << std::setw(8) << "kind" << std::setw(8) << "column" << std::right
        << std::setw(12) << "bytes" << std::setw(8) << "blocks" << std::setw(8) << "blevel" << std::setw(10) << "cf"
        << std::setw(10) << "entries" << std::setw(10) << "keys" << "\n";
    for (const auto& s : stats)
        out << std::left << std::setw(24) << s.name << std::setw(8) << index_kind_name(s.kind) << std::setw(8)
            << column_name(s.column) << std::right << std::setw(12) << s.size_bytes << std::setw(8) << s.blocks
            << std::setw(8) << s.blevel << std::setw(10) << s.clustering_factor << std::setw(10) << s.entry_count
            << std::setw(10) << s.distinct_keys << "\n";
}

void print_table_stats(std::ostream& out, const TableStats& ts) {
    out << "table " << ts.table << ": " << ts.row_count << " rows, " << ts.block_count << " blocks\n";
    for (const auto& [col, cs] : ts.columns) {
        out << "  " << std::left << std::setw(8) << column_name(col) << std::right << " ndv=" << cs.ndv;
        if (cs.min) out << " min=" << format_value(col, *cs.min) << " max=" << format_value(col, *cs.max);
        out << " nulls=" << cs.null_count << "\n";
    }
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Bitmap versus B-tree index laboratory", "idxlab"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all");

    std::optional<std::size_t> page_size, pool_blocks;
    std::string config_file;
    app.add_option("--page-size", page_size, "Block size in bytes for generated tables");
    app.add_option("--pool-blocks", pool_blocks, "Buffer pool capacity in blocks");
    app.add_option("--config", config_file, "key=value configuration file")->check(CLI::ExistingFile);

    std::string dir = ".";
    std::string table;

    auto* gen = app.add_subcommand("gen", "Generate a table and save it");
    std::uint64_t rows = 1000, seed = 1;
    std::string random_from;
    bool gender = false;
    gen->add_option("--dir", dir, "Data directory")->capture_default_str();
    gen->add_option("--table", table, "Table name")->required();
    gen->add_option("--rows", rows, "Rows to generate (ignored with --random-from)")->capture_default_str();
    gen->add_option("--seed", seed, "Generator seed")->capture_default_str();
    gen->add_option("--random-from", random_from, "Reinsert the rows of this table in random order");
    gen->add_flag("--gender", gender, "Assign gender from empno");

    auto* index = app.add_subcommand("index", "Create a bitmap or B-tree index on a column");
    std::string kind_text, column_text, index_name;
    index->add_option("--dir", dir, "Data directory")->capture_default_str();
    index->add_option("--table", table, "Table name")->required();
    index->add_option("--kind", kind_text, "bitmap or btree")->required()->check(CLI::IsMember({"bitmap", "btree"}));
    index->add_option("--column", column_text, "Indexed column")->required();
    index->add_option("--name", index_name, "Index name (default derived from table and column)");

    auto* analyze = app.add_subcommand("analyze", "Print table and index statistics");
    analyze->add_option("--dir", dir, "Data directory")->capture_default_str();
    analyze->add_option("--table", table, "Table name")->required();

    auto* query = app.add_subcommand("query", "Plan and run a query, printing the plan and I/O statistics");
    std::vector<std::string> wheres;
    bool count = false;
    query->add_option("--dir", dir, "Data directory")->capture_default_str();
    query->add_option("--table", table, "Table name")->required();
    query->add_option("--where", wheres, "col=v, col=lo..hi, col=a,b,c or col=null; repeat to AND")
        ->required()
        ->allow_extra_args(false);
    query->add_flag("--count", count, "SELECT COUNT(*) instead of rows");

    auto* bench = app.add_subcommand("bench", "Run one scenario");
    std::string scenario, format_text = "md";
    std::uint64_t scale = 100000, bench_seed = 1;
    bench->add_option("--scenario", scenario, "Scenario name")->required()->check(CLI::IsMember(scenario_names()));
    bench->add_option("--scale", scale, "Rows per generated table")->capture_default_str();
    bench->add_option("--seed", bench_seed, "Generator seed")->capture_default_str();
    bench->add_option("--format", format_text, "md, csv or txt")->capture_default_str();

    auto* report = app.add_subcommand("report", "Run the full replication suite");
    bool all = false;
    report->add_flag("--all", all, "Every paired scenario plus the conclusion query")->required();
    report->add_option("--scale", scale, "Rows per generated table")->capture_default_str();
    report->add_option("--seed", bench_seed, "Generator seed")->capture_default_str();
    report->add_option("--format", format_text, "md, csv or txt")->capture_default_str();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        std::string msg = e.what();
        err << "usage error: " << msg << " (see --help)\n";
        return 2;
    }

    try {
        EngineConfig cfg;
        if (!config_file.empty()) cfg = load_config(config_file, cfg);
        if (page_size) cfg.page_size = *page_size;
        if (pool_blocks) cfg.pool_blocks = *pool_blocks;
        cfg.validate();

        if (*gen) {
            fs::create_directories(dir);
            HeapTable t = random_from.empty()
                              ? generate_normal(rows, seed, cfg.page_size, table)
                              : generate_random(HeapTable::load(dir, random_from), seed, table);
            if (gender) {
                GenderCounts g = t.assign_gender();
                out << "gender: M=" << g.male << " F=" << g.female << " NULL=" << g.null << "\n";
            }
            t.save(dir);
            out << "table " << t.name() << ": " << t.row_count() << " rows, " << t.block_count() << " blocks\n";
        } else if (*index) {
            HeapTable t = HeapTable::load(dir, table);
            IndexDef def{index_name, parse_index_kind(kind_text), column_arg(column_text)};
            if (def.name.empty()) def.name = default_index_name(table, def.column, def.kind);
            auto defs = read_index_defs(dir, table);
            if (std::any_of(defs.begin(), defs.end(), [&](const IndexDef& d) { return d.name == def.name; }))
                throw UsageError("index " + def.name + " already exists on " + table);
            IndexCatalog catalog;
            build_index(catalog, t, def, cfg);
            defs.push_back(def);
            write_index_defs(dir, table, defs);
            print_index_stats(out, catalog.stats());
        } else if (*analyze) {
            HeapTable t = HeapTable::load(dir, table);
            print_table_stats(out, analyze_table(t));
            print_index_stats(out, load_catalog(dir, t, cfg).stats());
        } else if (*query) {
            HeapTable t = HeapTable::load(dir, table);
            IndexCatalog catalog = load_catalog(dir, t, cfg);
            std::vector<Predicate> parts;
            for (const auto& w : wheres) parts.push_back(parse_where(w));
            Query q{Predicate::all_of(std::move(parts)), count};
            TableStats ts = analyze_table(t);
            std::vector<IndexStats> ix = catalog.stats();
            Plan plan = choose_plan(q, ix, ts, cfg.cost);
            BufferPool pool(cfg.pool_blocks);
            ExecResult res = execute(plan, t, catalog, pool);
            out << "where " << q.predicate.to_string() << "\n\n" << explain(plan) << "\n";
            if (count) out << "count = " << res.count << "\n\n";
            else out << res.count << " rows selected\n\n";
            out << format_statistics(res.stats);
        } else if (*bench || *report) {
            ReportFormat fmt = parse_report_format(format_text);
            BenchRunner runner(cfg);
            std::vector<Report> reports;
            if (*bench) reports.push_back(runner.run(scenario, scale, bench_seed));
            else
                for (const auto& name : full_suite_names()) reports.push_back(runner.run(name, scale, bench_seed));
            out << render(reports, fmt);
        }
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

} // namespace idxlab
