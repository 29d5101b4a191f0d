#include "idxlab/bitmap.hpp"

#include "idxlab/errors.hpp"

#include <algorithm>
#include <utility>

namespace idxlab {

// ---------------------------------------------------------------------------
// BitmapBuilder / CompressedBitmap
// ---------------------------------------------------------------------------

void BitmapBuilder::append(bool bit, std::uint64_t len) {
    if (len == 0) return;
    if (!started_) {
        out_.first_bit_ = bit;
        out_.runs_.push_back(len);
        started_ = true;
    } else if (bit == last_bit_) {
        out_.runs_.back() += len;
    } else {
        out_.runs_.push_back(len);
    }
    last_bit_ = bit;
    out_.length_ += len;
    if (bit) out_.popcount_ += len;
}

CompressedBitmap BitmapBuilder::finish() && { return std::move(out_); }

CompressedBitmap CompressedBitmap::zeros(std::uint64_t length) {
    BitmapBuilder b;
    b.append(false, length);
    return std::move(b).finish();
}

CompressedBitmap CompressedBitmap::ones(std::uint64_t length) {
    BitmapBuilder b;
    b.append(true, length);
    return std::move(b).finish();
}

CompressedBitmap CompressedBitmap::from_ordinals(std::uint64_t length,
                                                 std::span<const std::uint64_t> ordinals) {
    BitmapBuilder b;
    std::uint64_t pos = 0;
    for (std::uint64_t ord : ordinals) {
        if (ord < pos || ord >= length)
            throw UsageError("ordinals must be strictly increasing and below the bitmap length");
        b.append(false, ord - pos);
        b.append(true, 1);
        pos = ord + 1;
    }
    b.append(false, length - pos);
    return std::move(b).finish();
}

CompressedBitmap CompressedBitmap::from_bits(const std::vector<bool>& bits) {
    BitmapBuilder b;
    for (bool bit : bits) b.append(bit, 1);
    return std::move(b).finish();
}

CompressedBitmap CompressedBitmap::from_string(std::string_view bits) {
    BitmapBuilder b;
    for (char ch : bits) {
        if (ch != '0' && ch != '1') throw UsageError("bit string may only contain 0 and 1");
        b.append(ch == '1', 1);
    }
    return std::move(b).finish();
}

bool CompressedBitmap::test(std::uint64_t ordinal) const {
    if (ordinal >= length_) throw UsageError("bit ordinal out of range");
    std::uint64_t pos = 0;
    bool bit = first_bit_;
    for (std::uint64_t len : runs_) {
        if (ordinal < pos + len) return bit;
        pos += len;
        bit = !bit;
    }
    return false;
}

std::vector<std::uint64_t> CompressedBitmap::set_ordinals() const {
    std::vector<std::uint64_t> out;
    out.reserve(popcount_);
    for_each_set_run([&](std::uint64_t start, std::uint64_t len) {
        for (std::uint64_t i = 0; i < len; ++i) out.push_back(start + i);
    });
    return out;
}

std::vector<bool> CompressedBitmap::to_bits() const {
    std::vector<bool> bits(length_, false);
    for_each_set_run([&](std::uint64_t start, std::uint64_t len) {
        std::fill_n(bits.begin() + static_cast<std::ptrdiff_t>(start), len, true);
    });
    return bits;
}

std::string CompressedBitmap::to_string() const {
    std::string s(length_, '0');
    for_each_set_run([&](std::uint64_t start, std::uint64_t len) { s.replace(start, len, len, '1'); });
    return s;
}

bool CompressedBitmap::is_well_formed() const {
    std::uint64_t sum = 0, ones = 0;
    bool bit = first_bit_;
    for (std::uint64_t len : runs_) {
        if (len == 0) return false;
        sum += len;
        if (bit) ones += len;
        bit = !bit;
    }
    if (runs_.empty() && first_bit_) return false;
    return sum == length_ && ones == popcount_;
}

namespace {

// Walks two run lists in lockstep and emits op(bit_a, bit_b) per segment.
template <typename Op>
CompressedBitmap combine(const CompressedBitmap& a, const CompressedBitmap& b, Op op) {
    if (a.length() != b.length())
        throw UsageError("bitmap length mismatch: " + std::to_string(a.length()) + " vs " +
                         std::to_string(b.length()));
    BitmapBuilder out;
    const auto& ra = a.runs();
    const auto& rb = b.runs();
    std::size_t ia = 0, ib = 0;
    std::uint64_t left_a = ra.empty() ? 0 : ra[0];
    std::uint64_t left_b = rb.empty() ? 0 : rb[0];
    bool bit_a = a.first_bit(), bit_b = b.first_bit();
    while (ia < ra.size() && ib < rb.size()) {
        std::uint64_t step = std::min(left_a, left_b);
        out.append(op(bit_a, bit_b), step);
        left_a -= step;
        left_b -= step;
        if (left_a == 0 && ++ia < ra.size()) {
            left_a = ra[ia];
            bit_a = !bit_a;
        }
        if (left_b == 0 && ++ib < rb.size()) {
            left_b = rb[ib];
            bit_b = !bit_b;
        }
    }
    return std::move(out).finish();
}

} // namespace

CompressedBitmap bm_and(const CompressedBitmap& a, const CompressedBitmap& b) {
    return combine(a, b, [](bool x, bool y) { return x && y; });
}

CompressedBitmap bm_or(const CompressedBitmap& a, const CompressedBitmap& b) {
    return combine(a, b, [](bool x, bool y) { return x || y; });
}

CompressedBitmap bm_xor(const CompressedBitmap& a, const CompressedBitmap& b) {
    return combine(a, b, [](bool x, bool y) { return x != y; });
}

CompressedBitmap bm_not(const CompressedBitmap& a) {
    BitmapBuilder out;
    bool bit = a.first_bit();
    for (std::uint64_t len : a.runs()) {
        out.append(!bit, len);
        bit = !bit;
    }
    return std::move(out).finish();
}

std::uint64_t bm_count(const CompressedBitmap& a) { return a.popcount(); }

CompressedBitmap bm_or_many(std::uint64_t length, std::span<const CompressedBitmap* const> inputs) {
    std::vector<std::pair<std::uint64_t, std::uint64_t>> intervals; // [start, end)
    for (const CompressedBitmap* bm : inputs) {
        if (bm->length() != length)
            throw UsageError("bitmap length mismatch in OR: " + std::to_string(bm->length()) +
                             " vs " + std::to_string(length));
        bm->for_each_set_run([&](std::uint64_t s, std::uint64_t n) { intervals.emplace_back(s, s + n); });
    }
    std::sort(intervals.begin(), intervals.end());
    BitmapBuilder out;
    std::uint64_t pos = 0;
    for (std::size_t i = 0; i < intervals.size();) {
        auto [start, end] = intervals[i];
        std::size_t j = i + 1;
        while (j < intervals.size() && intervals[j].first <= end) end = std::max(end, intervals[j++].second);
        out.append(false, start - pos);
        out.append(true, end - start);
        pos = end;
        i = j;
    }
    out.append(false, length - pos);
    return std::move(out).finish();
}

std::size_t varint_size(std::uint64_t v) {
    std::size_t n = 1;
    while (v >= 0x80) {
        v >>= 7;
        ++n;
    }
    return n;
}

std::uint64_t bitmap_entry_bytes(const CompressedBitmap& bitmap) {
    const auto& runs = bitmap.runs();
    std::size_t begin = bitmap.first_bit() ? 0 : 1;
    std::size_t end = runs.size();
    // The final run is zeros iff the run count parity says so.
    if (end > begin && (bitmap.first_bit() == (end % 2 == 0))) --end;
    std::uint64_t payload = 0;
    for (std::size_t i = begin; i < end; ++i) payload += varint_size(runs[i]);
    return BitmapIndex::kEntryHeaderBytes + payload;
}

// ---------------------------------------------------------------------------
// BitmapIndex
// ---------------------------------------------------------------------------

BitmapIndex BitmapIndex::build(const HeapTable& table, Column column, std::string name,
                               std::size_t directory_fanout) {
    if (column == Column::Ename) throw CatalogError("column ename cannot carry a bitmap index");
    if (directory_fanout < 2) throw ConfigError("bitmap directory fanout must be at least 2");

    BitmapIndex idx;
    idx.name_ = std::move(name);
    idx.column_ = column;
    idx.segment_ = allocate_segment_id();
    idx.row_count_ = table.row_count();
    idx.rows_per_block_ = table.rows_per_block();
    idx.page_size_ = table.page_size();
    idx.directory_fanout_ = directory_fanout;

    std::vector<std::pair<std::int64_t, std::uint64_t>> pairs; // (value, ordinal)
    std::vector<std::uint64_t> null_ordinals;
    pairs.reserve(table.row_count());
    table.for_each_row([&](const RowId& rid, const Row& row) {
        auto v = column_value(row, column);
        std::uint64_t ord = table.ordinal_of(rid);
        if (v) pairs.emplace_back(*v, ord);
        else null_ordinals.push_back(ord);
    });
    std::sort(pairs.begin(), pairs.end());

    std::vector<std::uint64_t> ords;
    for (std::size_t i = 0; i < pairs.size();) {
        std::size_t j = i;
        ords.clear();
        while (j < pairs.size() && pairs[j].first == pairs[i].first) ords.push_back(pairs[j++].second);
        idx.keys_.push_back(pairs[i].first);
        idx.bitmaps_.push_back(CompressedBitmap::from_ordinals(idx.row_count_, ords));
        i = j;
    }
    idx.null_bitmap_ = CompressedBitmap::from_ordinals(idx.row_count_, null_ordinals);
    idx.layout_segment();
    return idx;
}

void BitmapIndex::layout_segment() {
    std::uint64_t offset = kHeaderBytes;
    placement_.clear();
    placement_.reserve(bitmaps_.size());
    for (const auto& bm : bitmaps_) {
        std::uint64_t bytes = bitmap_entry_bytes(bm);
        placement_.push_back({offset, bytes});
        offset += bytes;
    }
    null_placement_ = {offset, 0};
    if (null_bitmap_.popcount() > 0) {
        null_placement_.bytes = bitmap_entry_bytes(null_bitmap_);
        offset += null_placement_.bytes;
    }
    size_bytes_ = offset;

    std::uint64_t blocks = segment_blocks();
    directory_levels_ = 0;
    directory_level_base_.clear();
    std::uint64_t base = blocks;
    std::uint64_t span = 1;
    while (span < blocks) {
        span *= directory_fanout_;
        ++directory_levels_;
        directory_level_base_.push_back(base);
        base += (blocks + span - 1) / span;
    }
}

std::uint64_t BitmapIndex::segment_blocks() const {
    return (size_bytes_ + page_size_ - 1) / page_size_;
}

const CompressedBitmap* BitmapIndex::find(std::int64_t key) const {
    auto it = std::lower_bound(keys_.begin(), keys_.end(), key);
    if (it == keys_.end() || *it != key) return nullptr;
    return &bitmaps_[static_cast<std::size_t>(it - keys_.begin())];
}

void BitmapIndex::charge_directory(BufferPool& pool, std::uint64_t data_block) const {
    std::uint64_t span = 1;
    std::vector<std::uint64_t> path;
    for (std::size_t level = 0; level < directory_levels_; ++level) {
        span *= directory_fanout_;
        path.push_back(directory_level_base_[level] + data_block / span);
    }
    for (auto it = path.rbegin(); it != path.rend(); ++it) pool.access(segment_, *it);
}

void BitmapIndex::charge_span(BufferPool& pool, std::uint64_t first_byte, std::uint64_t last_byte) const {
    std::uint64_t first_block = first_byte / page_size_;
    std::uint64_t last_block = last_byte / page_size_;
    charge_directory(pool, first_block);
    for (std::uint64_t b = first_block; b <= last_block; ++b) pool.access(segment_, b);
}

void BitmapIndex::charge_insertion_point(BufferPool& pool, std::size_t key_pos) const {
    std::uint64_t byte = key_pos < placement_.size() ? placement_[key_pos].offset
                                                     : (size_bytes_ > 0 ? size_bytes_ - 1 : 0);
    charge_span(pool, byte, byte);
}

CompressedBitmap BitmapIndex::lookup_eq(BufferPool& pool, std::int64_t value) const {
    auto it = std::lower_bound(keys_.begin(), keys_.end(), value);
    auto pos = static_cast<std::size_t>(it - keys_.begin());
    if (it == keys_.end() || *it != value) {
        charge_insertion_point(pool, pos);
        return CompressedBitmap::zeros(row_count_);
    }
    const auto& p = placement_[pos];
    charge_span(pool, p.offset, p.offset + p.bytes - 1);
    return bitmaps_[pos];
}

CompressedBitmap BitmapIndex::lookup_null(BufferPool& pool) const {
    if (null_placement_.bytes == 0) {
        charge_insertion_point(pool, placement_.size());
        return CompressedBitmap::zeros(row_count_);
    }
    charge_span(pool, null_placement_.offset, null_placement_.offset + null_placement_.bytes - 1);
    return null_bitmap_;
}

CompressedBitmap BitmapIndex::lookup_range(BufferPool& pool, std::int64_t lo, std::int64_t hi,
                                           bool lo_inclusive, bool hi_inclusive) const {
    auto first = lo_inclusive ? std::lower_bound(keys_.begin(), keys_.end(), lo)
                              : std::upper_bound(keys_.begin(), keys_.end(), lo);
    auto last = hi_inclusive ? std::upper_bound(keys_.begin(), keys_.end(), hi)
                             : std::lower_bound(keys_.begin(), keys_.end(), hi);
    if (lo > hi) return CompressedBitmap::zeros(row_count_);
    auto i = static_cast<std::size_t>(first - keys_.begin());
    auto j = static_cast<std::size_t>(last - keys_.begin());
    if (i >= j) {
        charge_insertion_point(pool, i);
        return CompressedBitmap::zeros(row_count_);
    }
    charge_span(pool, placement_[i].offset, placement_[j - 1].offset + placement_[j - 1].bytes - 1);
    std::vector<const CompressedBitmap*> parts;
    parts.reserve(j - i);
    for (std::size_t k = i; k < j; ++k) parts.push_back(&bitmaps_[k]);
    return bm_or_many(row_count_, parts);
}

std::vector<RowId> BitmapIndex::to_rowids(const CompressedBitmap& bitmap) const {
    if (bitmap.length() != row_count_)
        throw UsageError("bitmap length " + std::to_string(bitmap.length()) +
                         " does not match index row count " + std::to_string(row_count_));
    std::vector<RowId> out;
    out.reserve(bitmap.popcount());
    bitmap.for_each_set_run([&](std::uint64_t start, std::uint64_t len) {
        for (std::uint64_t ord = start; ord < start + len; ++ord)
            out.push_back(RowId{ord / rows_per_block_, static_cast<std::uint32_t>(ord % rows_per_block_)});
    });
    return out;
}

} // namespace idxlab
