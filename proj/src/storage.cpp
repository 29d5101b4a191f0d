#include "idxlab/storage.hpp"

#include "idxlab/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

namespace idxlab {

namespace {

constexpr std::uint32_t kBlockMagic = 0x48454150; // "HEAP"
constexpr int kFormatVersion = 1;

// Field offsets inside a row slot.
constexpr std::size_t kEmpnoOff = 0;
constexpr std::size_t kEnameOff = 8;
constexpr std::size_t kSalOff = 38;
constexpr std::size_t kGenderOff = 46;

// Block header fields.
constexpr std::size_t kHdrMagicOff = 0;
constexpr std::size_t kHdrBlockNoOff = 4;
constexpr std::size_t kHdrRowsOff = 12;

void put_u64(std::byte* p, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) p[i] = static_cast<std::byte>((v >> (8 * i)) & 0xff);
}

std::uint64_t get_u64(const std::byte* p) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(std::to_integer<std::uint8_t>(p[i])) << (8 * i);
    return v;
}

void put_u32(std::byte* p, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) p[i] = static_cast<std::byte>((v >> (8 * i)) & 0xff);
}

std::uint32_t get_u32(const std::byte* p) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(std::to_integer<std::uint8_t>(p[i])) << (8 * i);
    return v;
}

void encode_row(const Row& row, std::byte* slot) {
    std::memset(slot, 0, kRowWidth);
    put_u64(slot + kEmpnoOff, static_cast<std::uint64_t>(row.empno));
    std::memcpy(slot + kEnameOff, row.ename.data(), kEnameLength);
    put_u64(slot + kSalOff, static_cast<std::uint64_t>(row.sal));
    slot[kGenderOff] = static_cast<std::byte>(row.gender);
}

Row decode_row(const std::byte* slot) {
    Row row;
    row.empno = static_cast<std::int64_t>(get_u64(slot + kEmpnoOff));
    row.ename.assign(reinterpret_cast<const char*>(slot + kEnameOff), kEnameLength);
    row.sal = static_cast<std::int64_t>(get_u64(slot + kSalOff));
    row.gender = static_cast<Gender>(std::to_integer<std::uint8_t>(slot[kGenderOff]));
    return row;
}

// Unbiased-enough bounded draw (multiply-shift); portable across standard
// libraries, unlike std::uniform_int_distribution.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(rng()) * bound) >> 64);
}

} // namespace

std::string_view column_name(Column c) {
    switch (c) {
    case Column::Empno: return "empno";
    case Column::Ename: return "ename";
    case Column::Sal: return "sal";
    case Column::Gender: return "gender";
    }
    return "?";
}

Column parse_column(std::string_view name) {
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
    if (lower == "empno") return Column::Empno;
    if (lower == "ename") return Column::Ename;
    if (lower == "sal") return Column::Sal;
    if (lower == "gender") return Column::Gender;
    throw CatalogError("unknown column '" + std::string(name) + "'");
}

void validate_row(const Row& row) {
    if (row.ename.size() != kEnameLength)
        throw ValidationError("ename must be exactly 30 characters, got " +
                              std::to_string(row.ename.size()));
    for (char ch : row.ename)
        if (ch < 'A' || ch > 'Z') throw ValidationError("ename must be uppercase A-Z");
    if (row.sal < kMinSal || row.sal > kMaxSal)
        throw ValidationError("sal " + std::to_string(row.sal) + " outside [1000, 7000]");
    if (row.gender != Gender::Null && row.gender != Gender::Male && row.gender != Gender::Female)
        throw ValidationError("gender tag must be M, F or NULL");
}

std::optional<std::int64_t> column_value(const Row& row, Column c) {
    switch (c) {
    case Column::Empno: return row.empno;
    case Column::Sal: return row.sal;
    case Column::Gender:
        if (row.gender == Gender::Null) return std::nullopt;
        return static_cast<std::int64_t>(row.gender);
    case Column::Ename: break;
    }
    throw CatalogError("column ename has no integer key");
}

std::string to_string(const RowId& rid) {
    return "(" + std::to_string(rid.block_no) + "," + std::to_string(rid.slot) + ")";
}

SegmentId allocate_segment_id() {
    static std::atomic<SegmentId> next{1};
    return next.fetch_add(1, std::memory_order_relaxed);
}

// ---------------------------------------------------------------------------
// BufferPool
// ---------------------------------------------------------------------------

BufferPool::BufferPool(std::size_t capacity_blocks) : capacity_(capacity_blocks) {
    if (capacity_ == 0) throw ConfigError("buffer pool needs at least one block");
}

bool BufferPool::access(SegmentId segment, std::uint64_t block_no) {
    ++counters_.consistent_gets;
    auto& seg = per_segment_[segment];
    ++seg.consistent_gets;

    Key key{segment, block_no};
    if (auto it = index_.find(key); it != index_.end()) {
        lru_.splice(lru_.begin(), lru_, it->second);
        return true;
    }
    ++counters_.physical_reads;
    ++seg.physical_reads;
    if (index_.size() == capacity_) {
        index_.erase(lru_.back());
        lru_.pop_back();
    }
    lru_.push_front(key);
    index_.emplace(key, lru_.begin());
    return false;
}

std::map<SegmentId, SegmentIo> BufferPool::segment_snapshot() const { return per_segment_; }

SegmentIo BufferPool::segment_counters(SegmentId segment) const {
    auto it = per_segment_.find(segment);
    return it == per_segment_.end() ? SegmentIo{} : it->second;
}

void BufferPool::reset_counters() {
    counters_ = {};
    per_segment_.clear();
}

void BufferPool::flush_pool() {
    lru_.clear();
    index_.clear();
}

bool BufferPool::is_resident(SegmentId segment, std::uint64_t block_no) const {
    return index_.contains(Key{segment, block_no});
}

// ---------------------------------------------------------------------------
// BlockView / HeapTable
// ---------------------------------------------------------------------------

Row BlockView::row(std::uint32_t slot) const {
    if (slot >= rows_)
        throw AddressError("slot " + std::to_string(slot) + " beyond block row count " +
                           std::to_string(rows_));
    return decode_row(bytes_.data() + kBlockHeaderBytes + std::size_t{slot} * kRowWidth);
}

HeapTable::HeapTable(std::string name, std::size_t page_size)
    : name_(std::move(name)), segment_(allocate_segment_id()), page_size_(page_size) {
    if (page_size_ < kBlockHeaderBytes + kRowWidth)
        throw ConfigError("page size " + std::to_string(page_size_) +
                          " cannot hold a block header plus one " + std::to_string(kRowWidth) +
                          "-byte row");
    rows_per_block_ = static_cast<std::uint32_t>((page_size_ - kBlockHeaderBytes) / kRowWidth);
}

std::byte* HeapTable::block_ptr(std::uint64_t block_no) { return data_.data() + block_no * page_size_; }

const std::byte* HeapTable::block_ptr(std::uint64_t block_no) const {
    return data_.data() + block_no * page_size_;
}

void HeapTable::set_block_rows(std::uint64_t block_no, std::uint32_t rows) {
    put_u32(block_ptr(block_no) + kHdrRowsOff, rows);
}

std::uint32_t HeapTable::rows_in_block(std::uint64_t block_no) const {
    if (block_no >= block_count_)
        throw AddressError("block " + std::to_string(block_no) + " out of range (table has " +
                           std::to_string(block_count_) + " blocks)");
    return get_u32(block_ptr(block_no) + kHdrRowsOff);
}

RowId HeapTable::insert(const Row& row) {
    validate_row(row);
    RowId rid = rowid_of(row_count_);
    if (rid.block_no == block_count_) {
        data_.resize(data_.size() + page_size_);
        std::byte* hdr = block_ptr(block_count_);
        put_u32(hdr + kHdrMagicOff, kBlockMagic);
        put_u64(hdr + kHdrBlockNoOff, block_count_);
        ++block_count_;
    }
    encode_row(row, block_ptr(rid.block_no) + kBlockHeaderBytes + std::size_t{rid.slot} * kRowWidth);
    set_block_rows(rid.block_no, rid.slot + 1);
    ++row_count_;
    return rid;
}

BlockView HeapTable::read_block(BufferPool& pool, std::uint64_t block_no) const {
    std::uint32_t rows = rows_in_block(block_no);
    pool.access(segment_, block_no);
    return BlockView(block_no, std::span<const std::byte>(block_ptr(block_no), page_size_), rows);
}

void HeapTable::full_scan(BufferPool& pool,
                          const std::function<void(const RowId&, const Row&)>& visit) const {
    for (std::uint64_t b = 0; b < block_count_; ++b) {
        BlockView view = read_block(pool, b);
        for (std::uint32_t s = 0; s < view.row_count(); ++s) visit(RowId{b, s}, view.row(s));
    }
}

Row HeapTable::row_at(const RowId& rid) const {
    std::uint32_t rows = rows_in_block(rid.block_no);
    if (rid.slot >= rows)
        throw AddressError("rowid " + to_string(rid) + " beyond block row count");
    return decode_row(block_ptr(rid.block_no) + kBlockHeaderBytes + std::size_t{rid.slot} * kRowWidth);
}

void HeapTable::for_each_row(const std::function<void(const RowId&, const Row&)>& visit) const {
    for (std::uint64_t b = 0; b < block_count_; ++b) {
        std::uint32_t rows = get_u32(block_ptr(b) + kHdrRowsOff);
        for (std::uint32_t s = 0; s < rows; ++s)
            visit(RowId{b, s}, decode_row(block_ptr(b) + kBlockHeaderBytes + std::size_t{s} * kRowWidth));
    }
}

std::uint64_t HeapTable::ordinal_of(const RowId& rid) const {
    return rid.block_no * rows_per_block_ + rid.slot;
}

RowId HeapTable::rowid_of(std::uint64_t ordinal) const {
    return RowId{ordinal / rows_per_block_, static_cast<std::uint32_t>(ordinal % rows_per_block_)};
}

Gender gender_for_empno(std::int64_t empno) {
    std::int64_t r = ((empno % 6) + 6) % 6;
    if (r == 0) return Gender::Null;
    if (r <= 3) return Gender::Male;
    return Gender::Female;
}

GenderCounts HeapTable::assign_gender() {
    GenderCounts counts;
    for (std::uint64_t b = 0; b < block_count_; ++b) {
        std::uint32_t rows = get_u32(block_ptr(b) + kHdrRowsOff);
        for (std::uint32_t s = 0; s < rows; ++s) {
            std::byte* slot = block_ptr(b) + kBlockHeaderBytes + std::size_t{s} * kRowWidth;
            Gender g = gender_for_empno(static_cast<std::int64_t>(get_u64(slot + kEmpnoOff)));
            slot[kGenderOff] = static_cast<std::byte>(g);
            switch (g) {
            case Gender::Male: ++counts.male; break;
            case Gender::Female: ++counts.female; break;
            case Gender::Null: ++counts.null; break;
            }
        }
    }
    return counts;
}

bool HeapTable::same_contents(const HeapTable& other) const {
    return page_size_ == other.page_size_ && row_count_ == other.row_count_ && data_ == other.data_;
}

void HeapTable::save(const std::filesystem::path& dir) const {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());

    {
        std::ofstream out(dir / (name_ + ".tbl"), std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + (dir / (name_ + ".tbl")).string());
        out.write(reinterpret_cast<const char*>(data_.data()), static_cast<std::streamsize>(data_.size()));
        if (!out) throw IoError("short write on " + (dir / (name_ + ".tbl")).string());
    }
    std::ofstream meta(dir / (name_ + ".meta"), std::ios::trunc);
    if (!meta) throw IoError("cannot write " + (dir / (name_ + ".meta")).string());
    meta << "format_version=" << kFormatVersion << "\n"
         << "name=" << name_ << "\n"
         << "columns=empno:int64,ename:char30,sal:int64,gender:char1\n"
         << "row_width=" << kRowWidth << "\n"
         << "page_size=" << page_size_ << "\n"
         << "header_bytes=" << kBlockHeaderBytes << "\n"
         << "row_count=" << row_count_ << "\n"
         << "block_count=" << block_count_ << "\n";
}

HeapTable HeapTable::load(const std::filesystem::path& dir, const std::string& name) {
    std::ifstream meta(dir / (name + ".meta"));
    if (!meta) throw IoError("no table metadata at " + (dir / (name + ".meta")).string());
    std::map<std::string, std::string> kv;
    for (std::string line; std::getline(meta, line);) {
        if (line.empty() || line[0] == '#') continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) throw IoError("malformed metadata line: " + line);
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    auto need = [&](const std::string& key) -> const std::string& {
        auto it = kv.find(key);
        if (it == kv.end()) throw IoError("metadata missing key '" + key + "'");
        return it->second;
    };
    if (std::stoi(need("format_version")) != kFormatVersion)
        throw IoError("unsupported table format version " + need("format_version"));
    if (std::stoull(need("row_width")) != kRowWidth ||
        std::stoull(need("header_bytes")) != kBlockHeaderBytes)
        throw IoError("table " + name + " uses an incompatible row layout");

    HeapTable table(name, std::stoull(need("page_size")));
    table.row_count_ = std::stoull(need("row_count"));
    table.block_count_ = std::stoull(need("block_count"));
    table.data_.resize(table.block_count_ * table.page_size_);

    std::ifstream in(dir / (name + ".tbl"), std::ios::binary);
    if (!in) throw IoError("no table data at " + (dir / (name + ".tbl")).string());
    in.read(reinterpret_cast<char*>(table.data_.data()), static_cast<std::streamsize>(table.data_.size()));
    if (in.gcount() != static_cast<std::streamsize>(table.data_.size()))
        throw IoError("table data for " + name + " is truncated");

    std::uint64_t counted = 0;
    for (std::uint64_t b = 0; b < table.block_count_; ++b) {
        if (get_u32(table.block_ptr(b) + kHdrMagicOff) != kBlockMagic)
            throw IoError("block " + std::to_string(b) + " of " + name + " has a bad header");
        counted += get_u32(table.block_ptr(b) + kHdrRowsOff);
    }
    if (counted != table.row_count_) throw IoError("row count mismatch in " + name);
    return table;
}

// ---------------------------------------------------------------------------
// Generators
// ---------------------------------------------------------------------------

HeapTable generate_normal(std::uint64_t n, std::uint64_t seed, std::size_t page_size,
                          std::string name) {
    HeapTable table(std::move(name), page_size);
    std::mt19937_64 rng(seed);
    Row row;
    row.ename.resize(kEnameLength);
    for (std::uint64_t i = 1; i <= n; ++i) {
        row.empno = static_cast<std::int64_t>(i);
        for (char& ch : row.ename) ch = static_cast<char>('A' + uniform_below(rng, 26));
        row.sal = kMinSal + static_cast<std::int64_t>(uniform_below(rng, kMaxSal - kMinSal + 1));
        table.insert(row);
    }
    return table;
}

HeapTable generate_random(const HeapTable& source, std::uint64_t seed, std::string name) {
    std::vector<Row> rows;
    rows.reserve(source.row_count());
    source.for_each_row([&](const RowId&, const Row& r) { rows.push_back(r); });

    // Fisher-Yates with the portable bounded draw.
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    for (std::size_t i = rows.size(); i > 1; --i) {
        std::size_t j = uniform_below(rng, i);
        std::swap(rows[i - 1], rows[j]);
    }

    HeapTable table(std::move(name), source.page_size());
    for (const Row& r : rows) table.insert(r);
    return table;
}

} // namespace idxlab
