#include "idxlab/executor.hpp"

#include "idxlab/errors.hpp"

#include <algorithm>
#include <iomanip>
#include <map>
#include <sstream>

namespace idxlab {

SegmentIo ExecStats::segment(const std::string& name) const {
    for (const auto& s : breakdown)
        if (s.segment == name) return s.io;
    return {};
}

namespace {

class Meter {
public:
    Meter(BufferPool& pool) : pool_(pool), before_(pool.segment_snapshot()), start_(std::chrono::steady_clock::now()) {}

    ExecStats finish(std::uint64_t rows, const HeapTable* table, const IndexCatalog& indexes) {
        ExecStats s;
        s.elapsed = std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - start_);
        s.rows_processed = rows;
        pool_.add_rows_processed(rows);
        std::map<std::string, SegmentIo> named;
        for (const auto& [seg, io] : pool_.segment_snapshot()) {
            SegmentIo prev;
            if (auto it = before_.find(seg); it != before_.end()) prev = it->second;
            SegmentIo delta{io.consistent_gets - prev.consistent_gets, io.physical_reads - prev.physical_reads};
            if (delta.consistent_gets == 0) continue;
            std::string name;
            if (table && seg == table->segment()) name = table->name();
            else if (auto owner = indexes.segment_owner(seg)) name = *owner;
            else name = "segment#" + std::to_string(seg);
            auto& acc = named[name];
            acc.consistent_gets += delta.consistent_gets;
            acc.physical_reads += delta.physical_reads;
        }
        for (const auto& [name, io] : named) {
            s.consistent_gets += io.consistent_gets;
            s.physical_reads += io.physical_reads;
            s.breakdown.push_back({name, io});
        }
        return s;
    }

private:
    BufferPool& pool_;
    std::map<SegmentId, SegmentIo> before_;
    std::chrono::steady_clock::time_point start_;
};

const BitmapIndex& require_bitmap(const IndexCatalog& indexes, const std::string& name, std::uint64_t rows) {
    const BitmapIndex* idx = indexes.find_bitmap(name);
    if (!idx) throw ExecutionError("bitmap index " + name + " is not available");
    if (idx->row_count() != rows)
        throw ExecutionError("bitmap index " + name + " covers " + std::to_string(idx->row_count()) +
                             " rows, table has " + std::to_string(rows));
    return *idx;
}

CompressedBitmap evaluate(const BitmapNode& node, const IndexCatalog& indexes, BufferPool& pool,
                          std::uint64_t rows) {
    switch (node.op) {
    case BitmapNode::Op::SingleValue:
        return require_bitmap(indexes, node.index, rows).lookup_eq(pool, node.lo);
    case BitmapNode::Op::NullValue:
        return require_bitmap(indexes, node.index, rows).lookup_null(pool);
    case BitmapNode::Op::RangeScan:
        return require_bitmap(indexes, node.index, rows)
            .lookup_range(pool, node.lo, node.hi, node.lo_inclusive, node.hi_inclusive);
    case BitmapNode::Op::Or: {
        std::vector<CompressedBitmap> parts;
        parts.reserve(node.children.size());
        for (const auto& c : node.children) parts.push_back(evaluate(c, indexes, pool, rows));
        std::vector<const CompressedBitmap*> ptrs;
        for (const auto& p : parts) ptrs.push_back(&p);
        return bm_or_many(rows, ptrs);
    }
    case BitmapNode::Op::And: {
        CompressedBitmap acc = evaluate(node.children.front(), indexes, pool, rows);
        for (std::size_t i = 1; i < node.children.size(); ++i)
            acc = bm_and(acc, evaluate(node.children[i], indexes, pool, rows));
        return acc;
    }
    }
    throw ExecutionError("unknown bitmap operator");
}

const BitmapNode& first_leaf(const BitmapNode& node) {
    const BitmapNode* n = &node;
    while (!n->is_leaf()) n = &n->children.front();
    return *n;
}

// Fetches rows in the given order. Consecutive RowIds in the same block share
// one block access.
void fetch_rows(const HeapTable& table, BufferPool& pool, const std::vector<RowId>& rids,
                const Predicate& filter, bool keep_rows, ExecResult& out) {
    std::optional<BlockView> view;
    for (const RowId& rid : rids) {
        if (!view || view->block_no() != rid.block_no) view = table.read_block(pool, rid.block_no);
        Row row = view->row(rid.slot);
        if (!filter.matches(row)) continue;
        ++out.count;
        if (keep_rows) {
            out.rows.push_back(std::move(row));
            out.rowids.push_back(rid);
        }
    }
}

} // namespace

ExecResult execute(const Plan& plan, const HeapTable& table, const IndexCatalog& indexes, BufferPool& pool) {
    Meter meter(pool);
    ExecResult out;
    const Predicate& filter = plan.query.predicate;
    const bool keep = !plan.query.count_only;

    switch (plan.kind) {
    case PlanKind::FullScan:
        table.full_scan(pool, [&](const RowId& rid, const Row& row) {
            if (!filter.matches(row)) return;
            ++out.count;
            if (keep) {
                out.rows.push_back(row);
                out.rowids.push_back(rid);
            }
        });
        break;

    case PlanKind::BTreeAccess: {
        const BTreeIndex* idx = indexes.find_btree(plan.index);
        if (!idx) throw ExecutionError("B-tree index " + plan.index + " is not available");
        if (!plan.access) throw ExecutionError("B-tree plan without an access predicate");
        const Predicate& access = *plan.access;
        std::vector<RowId> rids;
        auto take = [&](const std::vector<BTreeEntry>& entries) {
            for (const auto& e : entries) rids.push_back(e.rowid);
        };
        switch (access.kind()) {
        case Predicate::Kind::Eq: take(idx->scan_range(pool, access.value(), access.value())); break;
        case Predicate::Kind::Range:
            take(idx->scan_range(pool, access.lo(), access.hi(), access.lo_inclusive(), access.hi_inclusive()));
            break;
        case Predicate::Kind::InList: {
            std::vector<std::int64_t> keys = access.values();
            std::sort(keys.begin(), keys.end());
            for (std::int64_t k : keys) take(idx->scan_range(pool, k, k));
            break;
        }
        default: throw ExecutionError("predicate " + access.to_string() + " cannot drive a B-tree");
        }
        fetch_rows(table, pool, rids, filter, keep, out);
        break;
    }

    case PlanKind::BitmapPlan: {
        if (!plan.bitmap) throw ExecutionError("bitmap plan without a bitmap tree");
        CompressedBitmap bm = evaluate(*plan.bitmap, indexes, pool, table.row_count());
        const BitmapIndex& any = require_bitmap(indexes, first_leaf(*plan.bitmap).index, table.row_count());
        fetch_rows(table, pool, any.to_rowids(bm), filter, keep, out);
        break;
    }

    case PlanKind::BitmapCountOnly: {
        if (!plan.bitmap) throw ExecutionError("count plan without a bitmap tree");
        out.count = bm_count(evaluate(*plan.bitmap, indexes, pool, table.row_count()));
        break;
    }
    }

    out.stats = meter.finish(keep ? out.rows.size() : 1, &table, indexes);
    return out;
}

CountResult execute_count(const Plan& plan, const IndexCatalog& indexes, BufferPool& pool) {
    if (plan.kind != PlanKind::BitmapCountOnly || !plan.bitmap)
        throw UsageError("execute_count needs a BitmapCountOnly plan, got " + std::string(plan_kind_name(plan.kind)));

    const std::string& name = first_leaf(*plan.bitmap).index;
    const BitmapIndex* idx = indexes.find_bitmap(name);
    if (!idx) throw ExecutionError("bitmap index " + name + " is not available");

    Meter meter(pool);
    CountResult out;
    out.count = bm_count(evaluate(*plan.bitmap, indexes, pool, idx->row_count()));
    out.stats = meter.finish(1, nullptr, indexes);
    return out;
}

std::string format_statistics(const ExecStats& stats) {
    std::ostringstream out;
    out << "Statistics\n"
        << "----------------------------------------------------------\n"
        << std::setw(10) << stats.consistent_gets << "  consistent gets\n"
        << std::setw(10) << stats.physical_reads << "  physical reads\n"
        << std::setw(10) << stats.rows_processed << "  rows processed\n";
    for (const auto& s : stats.breakdown)
        out << std::setw(10) << s.io.consistent_gets << "  consistent gets on " << s.segment << " ("
            << s.io.physical_reads << " physical)\n";
    return out.str();
}

} // namespace idxlab
