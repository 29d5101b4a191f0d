#include "idxlab/bench.hpp"

#include "idxlab/errors.hpp"
#include "idxlab/executor.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <iomanip>
#include <sstream>

namespace idxlab {

namespace {

// Probe values and ranges chosen for the million-row tables; scaled at run time.
constexpr std::int64_t kEmpnoProbes[] = {1000, 2398, 8545, 98008, 85342, 128444, 858};
constexpr std::pair<std::int64_t, std::int64_t> kEmpnoRanges[] = {
    {1, 2300}, {8, 1980}, {1850, 4250}, {28888, 31850}, {82900, 85478}, {984888, 1000000}};
// Salary values are independent of scale.
constexpr std::int64_t kSalProbes[] = {1869, 3548, 6500, 7000, 2500};
constexpr std::pair<std::int64_t, std::int64_t> kSalRanges[] = {
    {1500, 2000}, {2000, 2500}, {2500, 3000}, {3000, 4000}, {4000, 7000}};
constexpr std::int64_t kConclusionSalaries[] = {1000, 1500, 2000, 2500, 3000, 3500, 4000, 4500, 5000};

enum class Source { Normal, Random };

struct QuerySpec {
    std::string id;
    Query query;
};

struct ScenarioSpec {
    Source source = Source::Normal;
    std::vector<Column> columns;
    std::vector<IndexKind> kinds;
    std::vector<QuerySpec> queries;
    bool gender_summary = false;
};

std::vector<QuerySpec> empno_equalities(std::uint64_t scale) {
    std::vector<QuerySpec> out;
    int i = 1;
    for (std::int64_t v : kEmpnoProbes)
        out.push_back({"q" + std::to_string(i++), {Predicate::eq(Column::Empno, scale_value(v, scale))}});
    return out;
}

std::vector<QuerySpec> empno_ranges(std::uint64_t scale) {
    std::vector<QuerySpec> out;
    int i = 1;
    for (auto [lo, hi] : kEmpnoRanges)
        out.push_back({"q" + std::to_string(i++),
                       {Predicate::range(Column::Empno, scale_value(lo, scale), scale_value(hi, scale))}});
    return out;
}

std::vector<QuerySpec> salary_queries() {
    std::vector<QuerySpec> out;
    int i = 1;
    for (std::int64_t v : kSalProbes) out.push_back({"q" + std::to_string(i++), {Predicate::eq(Column::Sal, v)}});
    for (auto [lo, hi] : kSalRanges)
        out.push_back({"q" + std::to_string(i++), {Predicate::range(Column::Sal, lo, hi)}});
    return out;
}

std::vector<QuerySpec> gender_queries() {
    return {{"q1", {Predicate::is_null(Column::Gender)}},
            {"q2", {Predicate::eq(Column::Gender, kMaleCode)}},
            {"q3", {Predicate::eq(Column::Gender, kFemaleCode)}}};
}

std::vector<QuerySpec> conclusion_query() {
    std::vector<std::int64_t> sal(std::begin(kConclusionSalaries), std::end(kConclusionSalaries));
    return {{"q1",
             {Predicate::all_of({Predicate::in_list(Column::Sal, sal), Predicate::eq(Column::Gender, kMaleCode)})}}};
}

const std::vector<IndexKind> kBoth = {IndexKind::Bitmap, IndexKind::BTree};
const std::vector<IndexKind> kBitmapOnly = {IndexKind::Bitmap};
const std::vector<IndexKind> kBTreeOnly = {IndexKind::BTree};

ScenarioSpec scenario_spec(std::string_view name, std::uint64_t scale) {
    ScenarioSpec s;
    std::string base(name);
    std::vector<IndexKind> kinds = kBoth;
    if (base.size() == 6 && base.starts_with("step") && (base.back() == 'a' || base.back() == 'b')) {
        kinds = base.back() == 'a' ? kBitmapOnly : kBTreeOnly;
        base.pop_back();
        if (base > "step5") throw UsageError("unknown scenario '" + std::string(name) + "'");
    }
    s.kinds = kinds;
    if (base == "step1" || base == "step2") {
        s.source = base == "step1" ? Source::Normal : Source::Random;
        s.columns = {Column::Empno};
        s.queries = empno_equalities(scale);
    } else if (base == "step3" || base == "step4") {
        s.source = base == "step3" ? Source::Normal : Source::Random;
        s.columns = {Column::Empno};
        s.queries = empno_ranges(scale);
    } else if (base == "step5") {
        s.columns = {Column::Sal};
        s.queries = salary_queries();
    } else if (base == "step6") {
        s.columns = {Column::Gender};
        s.gender_summary = true;
    } else if (base == "step7" || base == "step8") {
        s.columns = {Column::Gender};
        s.kinds = base == "step7" ? kBitmapOnly : kBTreeOnly;
        s.queries = gender_queries();
    } else if (base == "conclusion") {
        s.columns = {Column::Sal, Column::Gender};
        s.queries = conclusion_query();
    } else {
        throw UsageError("unknown scenario '" + std::string(name) + "'");
    }
    return s;
}

std::string upper(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    return out;
}

std::string index_name(Source source, Column column, IndexKind kind) {
    return std::string(source == Source::Normal ? "NORMAL_" : "RANDOM_") + upper(column_name(column)) +
           (kind == IndexKind::Bitmap ? "_BMX" : "_IDX");
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string megabytes(std::uint64_t bytes) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(3) << static_cast<double>(bytes) / (1024.0 * 1024.0);
    return s.str();
}

std::string kind_label(IndexKind k) { return k == IndexKind::Bitmap ? "Bitmap" : "B-tree"; }

using Table = std::vector<std::vector<std::string>>; // first row is the header

Table index_table(const Report& r) {
    Table t{{"Index", "Kind", "Table", "Column", "Size (MB)", "Blocks", "BLevel", "Clustering factor"}};
    for (const auto& ix : r.indexes)
        t.push_back({ix.name, kind_label(ix.stats.kind), ix.table, std::string(column_name(ix.stats.column)),
                     megabytes(ix.stats.size_bytes), std::to_string(ix.stats.blocks), std::to_string(ix.stats.blevel),
                     std::to_string(ix.stats.clustering_factor)});
    return t;
}

// One line per query, one column group per index kind.
Table query_table(const Report& r) {
    std::vector<IndexKind> kinds;
    for (const auto& q : r.queries)
        if (std::find(kinds.begin(), kinds.end(), q.index_kind) == kinds.end()) kinds.push_back(q.index_kind);
    std::sort(kinds.begin(), kinds.end());

    Table t;
    std::vector<std::string> header{"Query", "Predicate"};
    for (IndexKind k : kinds) {
        header.push_back(kind_label(k) + " plan");
        header.push_back(kind_label(k) + " consistent gets");
        header.push_back(kind_label(k) + " physical reads");
    }
    header.push_back("Rows");
    t.push_back(header);

    std::vector<std::string> ids;
    for (const auto& q : r.queries)
        if (std::find(ids.begin(), ids.end(), q.query_id) == ids.end()) ids.push_back(q.query_id);
    for (const auto& id : ids) {
        std::vector<std::string> row{id, ""};
        std::uint64_t rows = 0;
        for (IndexKind k : kinds) {
            auto it = std::find_if(r.queries.begin(), r.queries.end(),
                                   [&](const QueryMeasurement& q) { return q.query_id == id && q.index_kind == k; });
            if (it == r.queries.end()) {
                row.insert(row.end(), {"", "", ""});
                continue;
            }
            row[1] = it->predicate;
            rows = it->rows;
            row.push_back(it->plan_shape);
            row.push_back(std::to_string(it->consistent_gets));
            row.push_back(std::to_string(it->physical_reads));
        }
        row.push_back(std::to_string(rows));
        t.push_back(row);
    }
    return t;
}

void markdown_table(std::ostringstream& out, const Table& t) {
    for (std::size_t i = 0; i < t.size(); ++i) {
        out << "|";
        for (const auto& cell : t[i]) out << " " << cell << " |";
        out << "\n";
        if (i == 0) {
            out << "|";
            for (std::size_t c = 0; c < t[0].size(); ++c) out << (c < 2 ? "---|" : "---:|");
            out << "\n";
        }
    }
}

void text_table(std::ostringstream& out, const Table& t) {
    std::vector<std::size_t> width(t.front().size(), 0);
    for (const auto& row : t)
        for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
    for (std::size_t i = 0; i < t.size(); ++i) {
        for (std::size_t c = 0; c < t[i].size(); ++c) {
            if (c) out << "  ";
            out << (c < 2 ? std::left : std::right) << std::setw(static_cast<int>(width[c])) << t[i][c];
        }
        out << "\n";
        if (i == 0) {
            std::size_t total = 0;
            for (auto w : width) total += w + 2;
            out << std::string(total - 2, '-') << "\n";
        }
    }
}

} // namespace

ReportFormat parse_report_format(std::string_view name) {
    if (name == "md" || name == "markdown") return ReportFormat::Markdown;
    if (name == "csv") return ReportFormat::Csv;
    if (name == "txt" || name == "text") return ReportFormat::Text;
    throw UsageError("unknown report format '" + std::string(name) + "' (expected md, csv or txt)");
}

std::int64_t scale_value(std::int64_t value_at_million, std::uint64_t scale) {
    auto v = static_cast<std::int64_t>(
        std::llround(static_cast<double>(value_at_million) * static_cast<double>(scale) / 1'000'000.0));
    return std::max<std::int64_t>(v, 1);
}

const std::vector<std::string>& scenario_names() {
    static const std::vector<std::string> names = {
        "step1",  "step1a", "step1b", "step2", "step2a", "step2b", "step3", "step3a", "step3b", "step4",
        "step4a", "step4b", "step5",  "step5a", "step5b", "step6", "step7", "step8",  "conclusion"};
    return names;
}

const std::vector<std::string>& full_suite_names() {
    static const std::vector<std::string> names = {"step1", "step2", "step3", "step4", "step5",
                                                   "step6", "step7", "step8", "conclusion"};
    return names;
}

std::string render_csv(const std::vector<Report>& reports) {
    std::ostringstream out;
    out << kCsvHeader << "\n";
    for (const auto& r : reports)
        for (const auto& q : r.queries)
            out << r.scenario << "," << q.query_id << "," << csv_field(q.predicate) << ","
                << index_kind_name(q.index_kind) << "," << plan_kind_name(q.plan_kind) << "," << q.cost_est << ","
                << q.card_est << "," << q.rows << "," << q.consistent_gets << "," << q.physical_reads << "\n";
    return out.str();
}

std::string render_markdown(const Report& r) {
    std::ostringstream out;
    out << "## " << r.scenario << " (scale " << r.scale << ", seed " << r.seed << ")\n\n";
    if (!r.indexes.empty()) {
        markdown_table(out, index_table(r));
        out << "\n";
    }
    if (!r.queries.empty()) {
        markdown_table(out, query_table(r));
        out << "\n";
    }
    for (const auto& n : r.notes) out << "- " << n << "\n";
    if (!r.notes.empty()) out << "\n";
    return out.str();
}

std::string render_text(const Report& r) {
    std::ostringstream out;
    out << r.scenario << " (scale " << r.scale << ", seed " << r.seed << ")\n\n";
    if (!r.indexes.empty()) {
        text_table(out, index_table(r));
        out << "\n";
    }
    if (!r.queries.empty()) {
        text_table(out, query_table(r));
        out << "\n";
    }
    for (const auto& n : r.notes) out << n << "\n";
    if (!r.notes.empty()) out << "\n";
    return out.str();
}

std::string render(const std::vector<Report>& reports, ReportFormat format) {
    if (format == ReportFormat::Csv) return render_csv(reports);
    std::string out;
    for (const auto& r : reports) out += format == ReportFormat::Markdown ? render_markdown(r) : render_text(r);
    return out;
}

// ---------------------------------------------------------------------------
// BenchRunner
// ---------------------------------------------------------------------------

struct BenchRunner::Dataset {
    HeapTable normal;
    HeapTable random;
    GenderCounts normal_genders;
    GenderCounts random_genders;
    TableStats normal_stats;
    TableStats random_stats;
};

BenchRunner::BenchRunner(EngineConfig config) : config_(config) { config_.validate(); }

BenchRunner::~BenchRunner() = default;

BenchRunner::Dataset& BenchRunner::dataset(std::uint64_t scale, std::uint64_t seed) {
    auto key = std::make_pair(scale, seed);
    if (auto it = cache_.find(key); it != cache_.end()) return *it->second;

    HeapTable normal = generate_normal(scale, seed, config_.page_size);
    HeapTable random = generate_random(normal, seed);
    GenderCounts ng = normal.assign_gender();
    GenderCounts rg = random.assign_gender();
    TableStats ns = analyze_table(normal);
    TableStats rs = analyze_table(random);
    auto ds = std::make_unique<Dataset>(
        Dataset{std::move(normal), std::move(random), ng, rg, std::move(ns), std::move(rs)});
    return *cache_.emplace(key, std::move(ds)).first->second;
}

Report BenchRunner::run(std::string_view scenario, std::uint64_t scale, std::uint64_t seed) {
    ScenarioSpec spec = scenario_spec(scenario, scale);
    if (scale < kMinScenarioScale)
        throw UsageError("scale " + std::to_string(scale) + " is below the minimum of " +
                         std::to_string(kMinScenarioScale) + " rows");

    Dataset& ds = dataset(scale, seed);
    const HeapTable& table = spec.source == Source::Normal ? ds.normal : ds.random;
    const TableStats& stats = spec.source == Source::Normal ? ds.normal_stats : ds.random_stats;

    Report report;
    report.scenario = std::string(scenario);
    report.scale = scale;
    report.seed = seed;

    BufferPool pool(config_.pool_blocks);
    for (IndexKind kind : spec.kinds) {
        IndexCatalog catalog;
        for (Column col : spec.columns) {
            std::string name = index_name(spec.source, col, kind);
            if (kind == IndexKind::Bitmap) catalog.add(BitmapIndex::build(table, col, name));
            else catalog.add(BTreeIndex::build(table, col, name, config_.fanout), table);
        }
        for (const auto& s : catalog.stats()) report.indexes.push_back({s.name, table.name(), s});

        std::vector<IndexStats> ix = catalog.stats();
        for (const auto& q : spec.queries) {
            Plan plan = choose_plan(q.query, ix, stats, config_.cost);
            pool.flush_pool();
            pool.reset_counters();
            ExecResult res = execute(plan, table, catalog, pool);

            QueryMeasurement m;
            m.query_id = q.id;
            m.predicate = q.query.predicate.to_string();
            m.index_kind = kind;
            m.plan_kind = plan.kind;
            m.plan_shape = plan.shape();
            m.cost_est = plan.cost;
            m.card_est = plan.card;
            m.rows = res.count;
            m.consistent_gets = res.stats.consistent_gets;
            m.physical_reads = res.stats.physical_reads;
            report.queries.push_back(std::move(m));
        }
    }

    if (spec.gender_summary) {
        auto line = [](const std::string& t, const GenderCounts& g) {
            return t + " gender counts: M=" + std::to_string(g.male) + " F=" + std::to_string(g.female) +
                   " NULL=" + std::to_string(g.null);
        };
        report.notes.push_back(line(ds.normal.name(), ds.normal_genders));
        report.notes.push_back(line(ds.random.name(), ds.random_genders));
    }
    report.notes.push_back(table.name() + ": " + std::to_string(table.row_count()) + " rows in " +
                           std::to_string(table.block_count()) + " blocks (" + megabytes(table.size_bytes()) +
                           " MB)");
    if (scale != 1'000'000 && (spec.columns.front() == Column::Empno))
        report.notes.push_back("empno probe values scaled by " + std::to_string(scale) + "/1000000");
    return report;
}

Report run_scenario(std::string_view scenario, std::uint64_t scale, std::uint64_t seed, const EngineConfig& config) {
    BenchRunner runner(config);
    return runner.run(scenario, scale, seed);
}

} // namespace idxlab
