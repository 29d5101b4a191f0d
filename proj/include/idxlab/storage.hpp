#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <list>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace idxlab {

// ---------------------------------------------------------------------------
// Row layout
// ---------------------------------------------------------------------------

inline constexpr std::size_t kDefaultPageSize = 8192;
inline constexpr std::size_t kBlockHeaderBytes = 192;
inline constexpr std::size_t kEnameLength = 30;
// 8 empno + 30 ename + 8 sal + 1 gender tag + 3 flags/padding
inline constexpr std::size_t kRowWidth = 50;

inline constexpr std::int64_t kMinSal = 1000;
inline constexpr std::int64_t kMaxSal = 7000;

enum class Column { Empno, Ename, Sal, Gender };

std::string_view column_name(Column c);
// Throws CatalogError for unknown names. Case-insensitive.
Column parse_column(std::string_view name);

enum class Gender : std::uint8_t { Null = 0, Male = 'M', Female = 'F' };

// Gender is compared and indexed through its character code.
inline constexpr std::int64_t kMaleCode = 'M';
inline constexpr std::int64_t kFemaleCode = 'F';

struct Row {
    std::int64_t empno = 0;
    std::string ename;
    std::int64_t sal = kMinSal;
    Gender gender = Gender::Null;

    friend bool operator==(const Row&, const Row&) = default;
    friend auto operator<=>(const Row&, const Row&) = default;
};

// Throws ValidationError when the row breaks the fixed-width encoding rules.
void validate_row(const Row& row);

// Value of an integer-keyed column; std::nullopt for NULL. Ename is not
// integer-keyed and throws CatalogError.
std::optional<std::int64_t> column_value(const Row& row, Column c);

struct RowId {
    std::uint64_t block_no = 0;
    std::uint32_t slot = 0;

    friend bool operator==(const RowId&, const RowId&) = default;
    friend auto operator<=>(const RowId&, const RowId&) = default;
};

std::string to_string(const RowId& rid);

// ---------------------------------------------------------------------------
// Buffer pool
// ---------------------------------------------------------------------------

// Identifies a storage segment (a table or an index) inside the pool.
using SegmentId = std::uint32_t;

// Process-wide unique id for a freshly created segment.
SegmentId allocate_segment_id();

struct IoCounters {
    std::uint64_t consistent_gets = 0;
    std::uint64_t physical_reads = 0;
    std::uint64_t rows_processed = 0;

    friend bool operator==(const IoCounters&, const IoCounters&) = default;
};

struct SegmentIo {
    std::uint64_t consistent_gets = 0;
    std::uint64_t physical_reads = 0;

    friend bool operator==(const SegmentIo&, const SegmentIo&) = default;
};

// LRU cache of block residency. Block contents live with their owning
// segment; the pool only decides whether an access is a hit or a miss and
// meters it.
class BufferPool {
public:
    explicit BufferPool(std::size_t capacity_blocks = 2000);

    // One logical block access. Returns true on a cache hit.
    bool access(SegmentId segment, std::uint64_t block_no);

    void add_rows_processed(std::uint64_t n) { counters_.rows_processed += n; }

    IoCounters snapshot_counters() const { return counters_; }
    std::map<SegmentId, SegmentIo> segment_snapshot() const;
    SegmentIo segment_counters(SegmentId segment) const;

    void reset_counters();
    void flush_pool();

    std::size_t capacity() const { return capacity_; }
    std::size_t resident_count() const { return index_.size(); }
    bool is_resident(SegmentId segment, std::uint64_t block_no) const;

private:
    struct Key {
        SegmentId segment;
        std::uint64_t block_no;
        friend bool operator==(const Key&, const Key&) = default;
    };
    struct KeyHash {
        std::size_t operator()(const Key& k) const noexcept {
            return std::hash<std::uint64_t>{}((std::uint64_t{k.segment} << 40) ^ k.block_no);
        }
    };

    std::size_t capacity_;
    std::list<Key> lru_; // front = most recently used
    std::unordered_map<Key, std::list<Key>::iterator, KeyHash> index_;
    IoCounters counters_;
    std::map<SegmentId, SegmentIo> per_segment_;
};

// ---------------------------------------------------------------------------
// Heap table
// ---------------------------------------------------------------------------

// Read-only view of one block's payload.
class BlockView {
public:
    BlockView(std::uint64_t block_no, std::span<const std::byte> bytes, std::uint32_t rows)
        : block_no_(block_no), bytes_(bytes), rows_(rows) {}

    std::uint64_t block_no() const { return block_no_; }
    std::uint32_t row_count() const { return rows_; }
    Row row(std::uint32_t slot) const;
    std::span<const std::byte> bytes() const { return bytes_; }

private:
    std::uint64_t block_no_;
    std::span<const std::byte> bytes_;
    std::uint32_t rows_;
};

struct GenderCounts {
    std::uint64_t male = 0;
    std::uint64_t female = 0;
    std::uint64_t null = 0;

    friend bool operator==(const GenderCounts&, const GenderCounts&) = default;
};

// Append-only heap of fixed-width rows packed into fixed-size blocks.
// Movable, not copyable: the segment id names exactly one table in a pool.
class HeapTable {
public:
    explicit HeapTable(std::string name, std::size_t page_size = kDefaultPageSize);

    HeapTable(HeapTable&&) noexcept = default;
    HeapTable& operator=(HeapTable&&) noexcept = default;
    HeapTable(const HeapTable&) = delete;
    HeapTable& operator=(const HeapTable&) = delete;

    const std::string& name() const { return name_; }
    SegmentId segment() const { return segment_; }
    std::size_t page_size() const { return page_size_; }
    std::uint32_t rows_per_block() const { return rows_per_block_; }
    std::uint64_t row_count() const { return row_count_; }
    std::uint64_t block_count() const { return block_count_; }
    std::uint64_t size_bytes() const { return block_count_ * page_size_; }
    std::uint32_t rows_in_block(std::uint64_t block_no) const;

    RowId insert(const Row& row);

    // Metered access through the pool. Throws AddressError when out of range.
    BlockView read_block(BufferPool& pool, std::uint64_t block_no) const;

    // Visits every block once in block order, every row in slot order.
    void full_scan(BufferPool& pool,
                   const std::function<void(const RowId&, const Row&)>& visit) const;

    // Unmetered decode, for loaders, oracles and statistics.
    Row row_at(const RowId& rid) const;
    void for_each_row(const std::function<void(const RowId&, const Row&)>& visit) const;

    // Row ordinal <-> RowId bijection for an append-only table.
    std::uint64_t ordinal_of(const RowId& rid) const;
    RowId rowid_of(std::uint64_t ordinal) const;

    // Rewrites every row's gender from its empno: mod 6 == 0 -> NULL,
    // {1,2,3} -> M, {4,5} -> F.
    GenderCounts assign_gender();

    // <dir>/<name>.tbl holds the blocks back to back; <dir>/<name>.meta is a
    // key=value text sidecar.
    void save(const std::filesystem::path& dir) const;
    static HeapTable load(const std::filesystem::path& dir, const std::string& name);

    // Byte-wise equality of the block images (ignores name and segment).
    bool same_contents(const HeapTable& other) const;

private:
    std::byte* block_ptr(std::uint64_t block_no);
    const std::byte* block_ptr(std::uint64_t block_no) const;
    void set_block_rows(std::uint64_t block_no, std::uint32_t rows);

    std::string name_;
    SegmentId segment_;
    std::size_t page_size_;
    std::uint32_t rows_per_block_;
    std::uint64_t row_count_ = 0;
    std::uint64_t block_count_ = 0;
    std::vector<std::byte> data_;
};

// Gender implied by the mod-6 assignment rule.
Gender gender_for_empno(std::int64_t empno);

// Rows empno = 1..n with seeded uppercase names and salaries in [1000, 7000].
HeapTable generate_normal(std::uint64_t n, std::uint64_t seed,
                          std::size_t page_size = kDefaultPageSize,
                          std::string name = "TEST_NORMAL");

// Same rows as `source`, inserted in a seeded uniform random order.
HeapTable generate_random(const HeapTable& source, std::uint64_t seed,
                          std::string name = "TEST_RANDOM");

} // namespace idxlab
