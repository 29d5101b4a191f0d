#pragma once

#include "idxlab/storage.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace idxlab {

struct BTreeEntry {
    std::int64_t key = 0;
    RowId rowid;

    friend bool operator==(const BTreeEntry&, const BTreeEntry&) = default;
    friend auto operator<=>(const BTreeEntry&, const BTreeEntry&) = default;
};

struct BTreeStats {
    std::size_t blevel = 0;
    std::uint64_t leaf_blocks = 0;
    std::uint64_t entry_count = 0;
};

// Non-unique B-tree bulk-loaded bottom-up from sorted (key, RowId) pairs.
// NULL keys are not indexed. Every node occupies one block of the index
// segment: leaves take blocks [0, leaf_blocks), branch levels follow.
class BTreeIndex {
public:
    static constexpr std::size_t kDefaultFanout = 400;
    static constexpr std::size_t kNodeHeaderBytes = 192;
    static constexpr std::size_t kLeafEntryBytes = 16;   // key + rowid
    static constexpr std::size_t kBranchEntryBytes = 16; // separator key + child address

    static BTreeIndex build(const HeapTable& table, Column column, std::string name,
                            std::size_t fanout = kDefaultFanout);

    BTreeIndex(BTreeIndex&&) noexcept = default;
    BTreeIndex& operator=(BTreeIndex&&) noexcept = default;
    BTreeIndex(const BTreeIndex&) = delete;
    BTreeIndex& operator=(const BTreeIndex&) = delete;

    const std::string& name() const { return name_; }
    Column column() const { return column_; }
    SegmentId segment() const { return segment_; }
    std::size_t fanout() const { return fanout_; }

    // Metered probes: blevel + 1 gets to reach the first leaf, one more per
    // additional leaf walked.
    std::vector<RowId> search_eq(BufferPool& pool, std::int64_t key) const;
    std::vector<BTreeEntry> scan_range(BufferPool& pool, std::int64_t lo, std::int64_t hi,
                                       bool lo_inclusive = true, bool hi_inclusive = true) const;

    BTreeStats stats() const;
    std::size_t blevel() const { return branch_levels_.size(); }
    std::uint64_t leaf_blocks() const { return leaves_.size(); }
    std::uint64_t entry_count() const { return entry_count_; }
    std::uint64_t node_count() const;
    std::uint64_t size_bytes() const;

    // Unmetered leaf walk in (key, RowId) order.
    template <typename Fn>
    void for_each_entry(Fn&& fn) const {
        for (const auto& leaf : leaves_)
            for (const auto& e : leaf.entries) fn(e);
    }

    // Full structural check: equal leaf depth, occupancy bounds, ordering and
    // separator consistency. Returns an empty string when sound.
    std::string check_structure() const;

private:
    BTreeIndex() = default;

    struct Leaf {
        std::vector<BTreeEntry> entries;
    };
    struct Branch {
        std::vector<BTreeEntry> low_keys;    // smallest entry under each child
        // Per child: the separator key alone splits it from its left
        // neighbour (no duplicate run crosses the boundary), so it is stored
        // without a rowid suffix.
        std::vector<bool> key_only;
        std::vector<std::uint64_t> children; // node index within the level below
    };

    // Descends to the first leaf holding a key >= key (or > key when
    // !inclusive), charging one get per level. Returns the leaf index.
    std::size_t descend(BufferPool& pool, std::int64_t key, bool inclusive) const;
    std::uint64_t branch_block(std::size_t level, std::uint64_t node) const;

    std::string name_;
    Column column_ = Column::Empno;
    SegmentId segment_ = 0;
    std::size_t fanout_ = kDefaultFanout;
    std::uint64_t entry_count_ = 0;
    std::vector<Leaf> leaves_;
    std::vector<std::vector<Branch>> branch_levels_; // [0] is just above the leaves; back() is the root
};

} // namespace idxlab
