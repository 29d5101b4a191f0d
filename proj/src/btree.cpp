#include "idxlab/btree.hpp"

#include "idxlab/errors.hpp"

#include <algorithm>
#include <sstream>

namespace idxlab {

namespace {

// Splits `n` items into ceil(n / cap) groups whose sizes differ by at most one.
std::vector<std::size_t> even_groups(std::size_t n, std::size_t cap) {
    std::vector<std::size_t> sizes;
    if (n == 0) return sizes;
    std::size_t groups = (n + cap - 1) / cap;
    std::size_t base = n / groups, extra = n % groups;
    for (std::size_t g = 0; g < groups; ++g) sizes.push_back(base + (g < extra ? 1 : 0));
    return sizes;
}

} // namespace

BTreeIndex BTreeIndex::build(const HeapTable& table, Column column, std::string name, std::size_t fanout) {
    if (column == Column::Ename) throw CatalogError("column ename cannot carry a B-tree index");
    if (fanout < 4) throw ConfigError("B-tree fanout must be at least 4");
    if (kNodeHeaderBytes + fanout * kLeafEntryBytes > table.page_size())
        throw ConfigError("fanout " + std::to_string(fanout) + " does not fit a " +
                          std::to_string(table.page_size()) + "-byte page");

    BTreeIndex tree;
    tree.name_ = std::move(name);
    tree.column_ = column;
    tree.segment_ = allocate_segment_id();
    tree.fanout_ = fanout;

    std::vector<BTreeEntry> entries;
    entries.reserve(table.row_count());
    table.for_each_row([&](const RowId& rid, const Row& row) {
        if (auto v = column_value(row, column)) entries.push_back({*v, rid});
    });
    std::sort(entries.begin(), entries.end());
    tree.entry_count_ = entries.size();

    std::size_t pos = 0;
    for (std::size_t n : even_groups(entries.size(), fanout)) {
        Leaf leaf;
        leaf.entries.assign(entries.begin() + static_cast<std::ptrdiff_t>(pos),
                            entries.begin() + static_cast<std::ptrdiff_t>(pos + n));
        tree.leaves_.push_back(std::move(leaf));
        pos += n;
    }

    std::vector<BTreeEntry> low_keys, high_keys;
    for (const auto& leaf : tree.leaves_) {
        low_keys.push_back(leaf.entries.front());
        high_keys.push_back(leaf.entries.back());
    }
    while (low_keys.size() > 1) {
        std::vector<Branch> level;
        std::vector<BTreeEntry> next_low, next_high;
        std::size_t child = 0;
        for (std::size_t n : even_groups(low_keys.size(), fanout)) {
            Branch br;
            for (std::size_t k = 0; k < n; ++k, ++child) {
                br.low_keys.push_back(low_keys[child]);
                br.key_only.push_back(child == 0 || high_keys[child - 1].key != low_keys[child].key);
                br.children.push_back(child);
            }
            next_low.push_back(low_keys[child - n]);
            next_high.push_back(high_keys[child - 1]);
            level.push_back(std::move(br));
        }
        tree.branch_levels_.push_back(std::move(level));
        low_keys = std::move(next_low);
        high_keys = std::move(next_high);
    }
    return tree;
}

std::uint64_t BTreeIndex::node_count() const {
    std::uint64_t n = leaves_.size();
    for (const auto& level : branch_levels_) n += level.size();
    return n;
}

std::uint64_t BTreeIndex::size_bytes() const {
    std::uint64_t branch_entries = 0;
    for (const auto& level : branch_levels_)
        for (const auto& br : level) branch_entries += br.children.size();
    return node_count() * kNodeHeaderBytes + entry_count_ * kLeafEntryBytes +
           branch_entries * kBranchEntryBytes;
}

BTreeStats BTreeIndex::stats() const { return {blevel(), leaf_blocks(), entry_count_}; }

std::uint64_t BTreeIndex::branch_block(std::size_t level, std::uint64_t node) const {
    std::uint64_t block = leaves_.size();
    for (std::size_t l = 0; l < level; ++l) block += branch_levels_[l].size();
    return block + node;
}

std::size_t BTreeIndex::descend(BufferPool& pool, std::int64_t key, bool inclusive) const {
    std::uint64_t node = 0;
    for (std::size_t level = branch_levels_.size(); level-- > 0;) {
        pool.access(segment_, branch_block(level, node));
        const Branch& br = branch_levels_[level][node];
        // Move right past every separator that bounds the target from below. A
        // separator equal to an inclusive target only qualifies when the key
        // alone separates the children, i.e. no duplicate run straddles them.
        std::size_t child = 0;
        for (std::size_t c = 1; c < br.children.size(); ++c) {
            std::int64_t sep = br.low_keys[c].key;
            bool right = inclusive ? sep < key || (sep == key && br.key_only[c]) : sep <= key;
            if (!right) break;
            child = c;
        }
        node = br.children[child];
    }
    pool.access(segment_, node); // leaf blocks are numbered by leaf index
    return static_cast<std::size_t>(node);
}

std::vector<BTreeEntry> BTreeIndex::scan_range(BufferPool& pool, std::int64_t lo, std::int64_t hi,
                                               bool lo_inclusive, bool hi_inclusive) const {
    std::vector<BTreeEntry> out;
    if (leaves_.empty() || lo > hi) return out;
    std::size_t leaf = descend(pool, lo, lo_inclusive);
    auto before_hi = [&](std::int64_t k) { return hi_inclusive ? k <= hi : k < hi; };
    auto after_lo = [&](std::int64_t k) { return lo_inclusive ? k >= lo : k > lo; };

    const auto* entries = &leaves_[leaf].entries;
    auto it = std::find_if(entries->begin(), entries->end(), [&](const BTreeEntry& e) { return after_lo(e.key); });
    for (;;) {
        for (; it != entries->end(); ++it) {
            if (!before_hi(it->key)) return out;
            out.push_back(*it);
        }
        // The parent's separator already bounds the next leaf.
        if (++leaf == leaves_.size() || !before_hi(leaves_[leaf].entries.front().key)) return out;
        pool.access(segment_, leaf);
        entries = &leaves_[leaf].entries;
        it = entries->begin();
    }
}

std::vector<RowId> BTreeIndex::search_eq(BufferPool& pool, std::int64_t key) const {
    std::vector<RowId> out;
    for (const auto& e : scan_range(pool, key, key)) out.push_back(e.rowid);
    return out;
}

std::string BTreeIndex::check_structure() const {
    std::ostringstream err;
    const std::size_t min_fill = (fanout_ + 1) / 2;
    const bool leaf_is_root = branch_levels_.empty();

    std::uint64_t counted = 0;
    const BTreeEntry* prev = nullptr;
    for (std::size_t i = 0; i < leaves_.size(); ++i) {
        const auto& entries = leaves_[i].entries;
        if (entries.empty() || entries.size() > fanout_) err << "leaf " << i << " size " << entries.size() << "; ";
        if (!leaf_is_root && entries.size() < min_fill) err << "leaf " << i << " underfull; ";
        for (const auto& e : entries) {
            if (prev && e < *prev) err << "order broken at leaf " << i << "; ";
            prev = &e;
        }
        counted += entries.size();
    }
    if (counted != entry_count_) err << "entry count mismatch; ";

    // Each branch level must cover the level below exactly once, in order,
    // with separators equal to the child's smallest entry.
    std::size_t below = leaves_.size();
    for (std::size_t l = 0; l < branch_levels_.size(); ++l) {
        const auto& level = branch_levels_[l];
        const bool is_root = l + 1 == branch_levels_.size();
        std::uint64_t expect_child = 0;
        for (std::size_t n = 0; n < level.size(); ++n) {
            const Branch& br = level[n];
            if (br.children.size() > fanout_ || (!is_root && br.children.size() < min_fill) ||
                (is_root && br.children.size() < 2))
                err << "branch " << l << "/" << n << " occupancy " << br.children.size() << "; ";
            for (std::size_t c = 0; c < br.children.size(); ++c) {
                if (br.children[c] != expect_child++) err << "branch " << l << "/" << n << " child gap; ";
                const BTreeEntry& low = l == 0 ? leaves_[br.children[c]].entries.front()
                                               : branch_levels_[l - 1][br.children[c]].low_keys.front();
                if (!(low == br.low_keys[c])) err << "separator mismatch at " << l << "/" << n << "; ";
            }
        }
        if (expect_child != below) err << "level " << l << " does not cover its children; ";
        below = level.size();
    }
    if (!branch_levels_.empty() && branch_levels_.back().size() != 1) err << "more than one root; ";
    return err.str();
}

} // namespace idxlab
