#pragma once

#include "idxlab/storage.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace idxlab {

// Run-length encoded bit vector over row ordinals. Runs alternate between
// zero and one bits starting with first_bit(); no run is empty.
class CompressedBitmap {
public:
    CompressedBitmap() = default;

    static CompressedBitmap zeros(std::uint64_t length);
    static CompressedBitmap ones(std::uint64_t length);
    // `ordinals` must be strictly increasing and < length.
    static CompressedBitmap from_ordinals(std::uint64_t length, std::span<const std::uint64_t> ordinals);
    static CompressedBitmap from_bits(const std::vector<bool>& bits);
    // Parses "0101..." (bit i = character i).
    static CompressedBitmap from_string(std::string_view bits);

    std::uint64_t length() const { return length_; }
    std::uint64_t popcount() const { return popcount_; }
    bool first_bit() const { return first_bit_; }
    const std::vector<std::uint64_t>& runs() const { return runs_; }
    std::size_t run_count() const { return runs_.size(); }

    bool test(std::uint64_t ordinal) const;
    std::vector<std::uint64_t> set_ordinals() const;
    std::vector<bool> to_bits() const;
    std::string to_string() const;

    // Calls fn(start, len) for every run of ones, ascending.
    template <typename Fn>
    void for_each_set_run(Fn&& fn) const {
        std::uint64_t pos = 0;
        bool bit = first_bit_;
        for (std::uint64_t len : runs_) {
            if (bit) fn(pos, len);
            pos += len;
            bit = !bit;
        }
    }

    // Structural invariants: run sum, no empty runs, cached popcount.
    bool is_well_formed() const;

    friend bool operator==(const CompressedBitmap&, const CompressedBitmap&) = default;

private:
    friend class BitmapBuilder;

    std::uint64_t length_ = 0;
    std::uint64_t popcount_ = 0;
    bool first_bit_ = false;
    std::vector<std::uint64_t> runs_;
};

// Appends runs left to right, coalescing equal neighbours.
class BitmapBuilder {
public:
    void append(bool bit, std::uint64_t len);
    CompressedBitmap finish() &&;

private:
    CompressedBitmap out_;
    bool started_ = false;
    bool last_bit_ = false;
};

CompressedBitmap bm_and(const CompressedBitmap& a, const CompressedBitmap& b);
CompressedBitmap bm_or(const CompressedBitmap& a, const CompressedBitmap& b);
CompressedBitmap bm_xor(const CompressedBitmap& a, const CompressedBitmap& b);
CompressedBitmap bm_not(const CompressedBitmap& a);
std::uint64_t bm_count(const CompressedBitmap& a);

// OR of many equal-length bitmaps by merging their one-runs; cheaper than a
// pairwise fold when the inputs are sparse.
CompressedBitmap bm_or_many(std::uint64_t length, std::span<const CompressedBitmap* const> inputs);

// Bytes of an unsigned LEB128 encoding of v.
std::size_t varint_size(std::uint64_t v);

// Value-per-bitmap index over one integer-keyed column. Immutable after build.
//
// Segment layout: a fixed header followed by one entry per distinct key in key
// order, then the NULL entry. An entry is
//   key(8) | first set ordinal(8) | last set ordinal(8) | payload length(4) | payload
// where the payload is the varint run lengths between the first and last set
// bit. Lookups descend a key directory (fanout directory_fanout) and then read
// every segment block the entry spans.
class BitmapIndex {
public:
    static constexpr std::size_t kHeaderBytes = 64;
    static constexpr std::size_t kEntryHeaderBytes = 28;
    static constexpr std::size_t kDefaultDirectoryFanout = 400;

    static BitmapIndex build(const HeapTable& table, Column column, std::string name,
                             std::size_t directory_fanout = kDefaultDirectoryFanout);

    BitmapIndex(BitmapIndex&&) noexcept = default;
    BitmapIndex& operator=(BitmapIndex&&) noexcept = default;
    BitmapIndex(const BitmapIndex&) = delete;
    BitmapIndex& operator=(const BitmapIndex&) = delete;

    const std::string& name() const { return name_; }
    Column column() const { return column_; }
    SegmentId segment() const { return segment_; }
    std::uint64_t row_count() const { return row_count_; }

    const std::vector<std::int64_t>& keys() const { return keys_; }
    std::size_t distinct_keys() const { return keys_.size(); }
    // Unmetered access to a stored bitmap; nullptr for absent keys.
    const CompressedBitmap* find(std::int64_t key) const;
    const CompressedBitmap& null_bitmap() const { return null_bitmap_; }

    // Metered lookups. Absent keys yield an all-zeros bitmap.
    CompressedBitmap lookup_eq(BufferPool& pool, std::int64_t value) const;
    CompressedBitmap lookup_null(BufferPool& pool) const;
    CompressedBitmap lookup_range(BufferPool& pool, std::int64_t lo, std::int64_t hi,
                                  bool lo_inclusive = true, bool hi_inclusive = true) const;

    // Ascending RowIds of the set ordinals. Throws UsageError on length mismatch.
    std::vector<RowId> to_rowids(const CompressedBitmap& bitmap) const;

    std::uint64_t size_bytes() const { return size_bytes_; }
    std::uint64_t segment_blocks() const;
    std::size_t directory_levels() const { return directory_levels_; }
    std::uint64_t clustering_factor() const { return row_count_; }

private:
    BitmapIndex() = default;

    struct EntryPlacement {
        std::uint64_t offset = 0;
        std::uint64_t bytes = 0;
    };

    void layout_segment();
    void charge_directory(BufferPool& pool, std::uint64_t data_block) const;
    void charge_span(BufferPool& pool, std::uint64_t first_byte, std::uint64_t last_byte) const;
    void charge_insertion_point(BufferPool& pool, std::size_t key_pos) const;

    std::string name_;
    Column column_ = Column::Empno;
    SegmentId segment_ = 0;
    std::uint64_t row_count_ = 0;
    std::uint32_t rows_per_block_ = 1;
    std::size_t page_size_ = kDefaultPageSize;
    std::size_t directory_fanout_ = kDefaultDirectoryFanout;

    std::vector<std::int64_t> keys_;
    std::vector<CompressedBitmap> bitmaps_;
    CompressedBitmap null_bitmap_;

    std::vector<EntryPlacement> placement_; // parallel to keys_
    EntryPlacement null_placement_;
    std::uint64_t size_bytes_ = 0;
    std::size_t directory_levels_ = 0;
    std::vector<std::uint64_t> directory_level_base_; // first block id of each level, leaf-most first
};

// Serialized bytes for one stored bitmap entry.
std::uint64_t bitmap_entry_bytes(const CompressedBitmap& bitmap);

} // namespace idxlab
