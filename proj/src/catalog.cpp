#include "idxlab/catalog.hpp"

#include "idxlab/errors.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_set>

namespace idxlab {

namespace {

constexpr Column kAnalyzedColumns[] = {Column::Empno, Column::Sal, Column::Gender};

} // namespace

const ColumnStats& TableStats::column(Column c) const {
    auto it = columns.find(c);
    if (it == columns.end())
        throw PlanningError("no statistics for column " + std::string(column_name(c)) + " of " + table);
    return it->second;
}

TableStats analyze_table(const HeapTable& table) {
    TableStats stats;
    stats.table = table.name();
    stats.row_count = table.row_count();
    stats.block_count = table.block_count();

    std::map<Column, std::unordered_set<std::int64_t>> distinct;
    for (Column c : kAnalyzedColumns) stats.columns[c].column = c;
    table.for_each_row([&](const RowId&, const Row& row) {
        for (Column c : kAnalyzedColumns) {
            ColumnStats& cs = stats.columns[c];
            auto v = column_value(row, c);
            if (!v) {
                ++cs.null_count;
                continue;
            }
            distinct[c].insert(*v);
            cs.min = cs.min ? std::min(*cs.min, *v) : *v;
            cs.max = cs.max ? std::max(*cs.max, *v) : *v;
        }
    });
    for (Column c : kAnalyzedColumns) stats.columns[c].ndv = distinct[c].size();
    return stats;
}

std::string_view index_kind_name(IndexKind kind) {
    return kind == IndexKind::Bitmap ? "bitmap" : "btree";
}

IndexKind parse_index_kind(std::string_view name) {
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
    if (lower == "bitmap") return IndexKind::Bitmap;
    if (lower == "btree" || lower == "b-tree") return IndexKind::BTree;
    throw UsageError("unknown index kind '" + std::string(name) + "' (expected bitmap or btree)");
}

std::uint64_t clustering_factor(const BTreeIndex& index, const HeapTable& table) {
    std::uint64_t cf = 0;
    bool first = true;
    std::uint64_t prev_block = 0;
    index.for_each_entry([&](const BTreeEntry& e) {
        if (e.rowid.block_no >= table.block_count())
            throw CatalogError("index " + index.name() + " references a block outside " + table.name());
        if (first || e.rowid.block_no != prev_block) ++cf;
        first = false;
        prev_block = e.rowid.block_no;
    });
    return cf;
}

IndexStats index_stats(const BTreeIndex& index, const HeapTable& table) {
    IndexStats s;
    s.name = index.name();
    s.kind = IndexKind::BTree;
    s.column = index.column();
    s.size_bytes = index.size_bytes();
    s.blocks = index.leaf_blocks();
    s.blevel = index.blevel();
    s.clustering_factor = clustering_factor(index, table);
    s.entry_count = index.entry_count();
    std::optional<std::int64_t> prev;
    index.for_each_entry([&](const BTreeEntry& e) {
        if (!prev || *prev != e.key) ++s.distinct_keys;
        prev = e.key;
    });
    return s;
}

IndexStats index_stats(const BitmapIndex& index) {
    IndexStats s;
    s.name = index.name();
    s.kind = IndexKind::Bitmap;
    s.column = index.column();
    s.size_bytes = index.size_bytes();
    s.blocks = index.segment_blocks();
    s.blevel = index.directory_levels();
    s.clustering_factor = index.clustering_factor();
    s.entry_count = index.row_count();
    s.distinct_keys = index.distinct_keys();
    return s;
}

void IndexCatalog::add(BitmapIndex index) {
    if (contains(index.name())) throw CatalogError("index " + index.name() + " already exists");
    std::string name = index.name();
    stats_[name] = index_stats(index);
    bitmaps_.emplace(name, std::move(index));
}

void IndexCatalog::add(BTreeIndex index, const HeapTable& table) {
    if (contains(index.name())) throw CatalogError("index " + index.name() + " already exists");
    std::string name = index.name();
    stats_[name] = index_stats(index, table);
    btrees_.emplace(name, std::move(index));
}

void IndexCatalog::drop(const std::string& name) {
    if (!contains(name)) throw CatalogError("no index named " + name);
    bitmaps_.erase(name);
    btrees_.erase(name);
    stats_.erase(name);
}

void IndexCatalog::clear() {
    bitmaps_.clear();
    btrees_.clear();
    stats_.clear();
}

const BitmapIndex* IndexCatalog::find_bitmap(std::string_view name) const {
    auto it = bitmaps_.find(name);
    return it == bitmaps_.end() ? nullptr : &it->second;
}

const BTreeIndex* IndexCatalog::find_btree(std::string_view name) const {
    auto it = btrees_.find(name);
    return it == btrees_.end() ? nullptr : &it->second;
}

bool IndexCatalog::contains(std::string_view name) const { return stats_.find(name) != stats_.end(); }

std::vector<IndexStats> IndexCatalog::stats() const {
    std::vector<IndexStats> out;
    for (const auto& [name, s] : stats_) out.push_back(s);
    return out;
}

std::optional<std::string> IndexCatalog::segment_owner(SegmentId segment) const {
    for (const auto& [name, idx] : bitmaps_)
        if (idx.segment() == segment) return name;
    for (const auto& [name, idx] : btrees_)
        if (idx.segment() == segment) return name;
    return std::nullopt;
}

} // namespace idxlab
