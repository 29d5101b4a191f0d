#pragma once

#include "idxlab/bitmap.hpp"
#include "idxlab/btree.hpp"
#include "idxlab/storage.hpp"

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace idxlab {

struct ColumnStats {
    Column column = Column::Empno;
    std::uint64_t ndv = 0; // distinct non-null values
    std::optional<std::int64_t> min;
    std::optional<std::int64_t> max;
    std::uint64_t null_count = 0;

    friend bool operator==(const ColumnStats&, const ColumnStats&) = default;
};

struct TableStats {
    std::string table;
    std::uint64_t row_count = 0;
    std::uint64_t block_count = 0;
    std::map<Column, ColumnStats> columns;

    // Throws PlanningError when the column was not analyzed.
    const ColumnStats& column(Column c) const;

    friend bool operator==(const TableStats&, const TableStats&) = default;
};

// Exact statistics over every integer-keyed column.
TableStats analyze_table(const HeapTable& table);

enum class IndexKind { Bitmap, BTree };

std::string_view index_kind_name(IndexKind kind);
IndexKind parse_index_kind(std::string_view name);

struct IndexStats {
    std::string name;
    IndexKind kind = IndexKind::BTree;
    Column column = Column::Empno;
    std::uint64_t size_bytes = 0;
    // Leaf blocks for a B-tree, segment blocks for a bitmap index.
    std::uint64_t blocks = 0;
    std::size_t blevel = 0;
    std::uint64_t clustering_factor = 0;
    std::uint64_t entry_count = 0;
    std::uint64_t distinct_keys = 0;
};

// Number of table-block changes met while walking the leaf entries in
// (key, RowId) order; the first entry counts as one.
std::uint64_t clustering_factor(const BTreeIndex& index, const HeapTable& table);

IndexStats index_stats(const BTreeIndex& index, const HeapTable& table);
// Clustering factor of a bitmap index is reported as the row count.
IndexStats index_stats(const BitmapIndex& index);

// The indexes available on one table, keyed by name.
class IndexCatalog {
public:
    void add(BitmapIndex index);
    void add(BTreeIndex index, const HeapTable& table);
    void drop(const std::string& name);
    void clear();

    const BitmapIndex* find_bitmap(std::string_view name) const;
    const BTreeIndex* find_btree(std::string_view name) const;
    bool contains(std::string_view name) const;

    // Sorted by index name.
    std::vector<IndexStats> stats() const;
    bool empty() const { return bitmaps_.empty() && btrees_.empty(); }

    // Index name for a segment id, if one of ours.
    std::optional<std::string> segment_owner(SegmentId segment) const;

private:
    std::map<std::string, BitmapIndex, std::less<>> bitmaps_;
    std::map<std::string, BTreeIndex, std::less<>> btrees_;
    std::map<std::string, IndexStats, std::less<>> stats_;
};

} // namespace idxlab
