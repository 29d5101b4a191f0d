#include <doctest.h>

#include "idxlab/errors.hpp"
#include "idxlab/storage.hpp"
#include "support.hpp"

#include <fstream>
#include <set>

using namespace idxlab;
using namespace idxlab::testing;

TEST_CASE("block geometry at the default page size") {
    HeapTable t("EMP");
    // (8192 - 192) / 50
    CHECK(t.rows_per_block() == 160);
    for (int i = 1; i <= 160; ++i) CHECK(t.insert(make_row(i)) == RowId{0, static_cast<std::uint32_t>(i - 1)});
    CHECK(t.insert(make_row(161)) == RowId{1, 0});
    CHECK(t.block_count() == 2);
    CHECK(t.rows_in_block(0) == 160);
    CHECK(t.rows_in_block(1) == 1);
    CHECK(t.size_bytes() == 2 * 8192);
}

TEST_CASE("page sizes too small for one row are rejected") {
    CHECK_THROWS_AS(HeapTable("T", 40), ConfigError);
    CHECK_THROWS_AS(HeapTable("T", kBlockHeaderBytes + kRowWidth - 1), ConfigError);
    HeapTable one("T", kBlockHeaderBytes + kRowWidth);
    CHECK(one.rows_per_block() == 1);
}

TEST_CASE("row validation") {
    HeapTable t("T");
    CHECK_THROWS_AS(t.insert(make_row(1, 50000)), ValidationError);
    CHECK_THROWS_AS(t.insert(make_row(1, 999)), ValidationError);
    Row long_name = make_row(1);
    long_name.ename = std::string(kEnameLength + 1, 'B');
    CHECK_THROWS_AS(t.insert(long_name), ValidationError);
    Row lower = make_row(1);
    lower.ename[3] = 'a';
    CHECK_THROWS_AS(t.insert(lower), ValidationError);
    CHECK(t.row_count() == 0);
    CHECK_NOTHROW(t.insert(make_row(1, 7000)));
}

TEST_CASE("round trip through the block encoding") {
    std::vector<Row> rows = {make_row(1, 1000, Gender::Male), make_row(-7, 7000, Gender::Female),
                             make_row(42, 3333, Gender::Null)};
    rows[1].ename = std::string(kEnameLength - 1, 'Z') + "Q";
    HeapTable t = make_table(rows);
    auto stored = all_rows(t);
    REQUIRE(stored.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) CHECK(stored[i].second == rows[i]);
}

TEST_CASE("column parsing and values") {
    CHECK(parse_column("EMPNO") == Column::Empno);
    CHECK(parse_column("gender") == Column::Gender);
    CHECK_THROWS_AS(parse_column("salary"), CatalogError);
    Row r = make_row(5, 1500, Gender::Female);
    CHECK(*column_value(r, Column::Gender) == kFemaleCode);
    CHECK(*column_value(r, Column::Sal) == 1500);
    CHECK_FALSE(column_value(make_row(5), Column::Gender).has_value());
    CHECK_THROWS_AS(column_value(r, Column::Ename), CatalogError);
}

TEST_CASE("generate_normal is deterministic and well formed") {
    HeapTable a = generate_normal(1000, 7);
    HeapTable b = generate_normal(1000, 7);
    HeapTable c = generate_normal(1000, 8);
    CHECK(a.same_contents(b));
    CHECK_FALSE(a.same_contents(c));
    std::int64_t expect = 1;
    a.for_each_row([&](const RowId&, const Row& r) {
        CHECK(r.empno == expect++);
        CHECK(r.sal >= kMinSal);
        CHECK(r.sal <= kMaxSal);
        CHECK(r.ename.size() == kEnameLength);
        CHECK(std::all_of(r.ename.begin(), r.ename.end(), [](char ch) { return ch >= 'A' && ch <= 'Z'; }));
        CHECK(r.gender == Gender::Null);
    });
    CHECK(expect == 1001);
}

TEST_CASE("generate_random is a permutation of its source") {
    HeapTable normal = generate_normal(3000, 3);
    HeapTable random = generate_random(normal, 3);
    CHECK(random.row_count() == normal.row_count());
    std::vector<Row> a, b;
    normal.for_each_row([&](const RowId&, const Row& r) { a.push_back(r); });
    random.for_each_row([&](const RowId&, const Row& r) { b.push_back(r); });
    CHECK(a != b);
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    CHECK(a == b);
    CHECK(generate_random(normal, 3).same_contents(random));
    CHECK_FALSE(generate_random(normal, 4).same_contents(random));
}

TEST_CASE("gender assignment follows empno mod 6") {
    HeapTable t = generate_normal(6, 1);
    GenderCounts g = t.assign_gender();
    CHECK(g == GenderCounts{3, 2, 1});
    t.for_each_row([](const RowId&, const Row& r) { CHECK(r.gender == gender_for_empno(r.empno)); });
    CHECK(gender_for_empno(6) == Gender::Null);
    CHECK(gender_for_empno(1) == Gender::Male);
    CHECK(gender_for_empno(5) == Gender::Female);

    HeapTable big = generate_normal(1'000'000, 1);
    GenderCounts m = big.assign_gender();
    CHECK(m.male + m.female + m.null == 1'000'000);
    CHECK(std::abs(static_cast<double>(m.male) / 1e6 - 0.5) < 0.001);
    CHECK(std::abs(static_cast<double>(m.female) / 1e6 - 1.0 / 3) < 0.001);
    CHECK(std::abs(static_cast<double>(m.null) / 1e6 - 1.0 / 6) < 0.001);
}

TEST_CASE("cold full scan reads every block once") {
    HeapTable t = generate_normal(5000, 2);
    BufferPool pool(10'000);
    std::uint64_t rows = 0;
    t.full_scan(pool, [&](const RowId&, const Row&) { ++rows; });
    CHECK(rows == 5000);
    IoCounters c = pool.snapshot_counters();
    CHECK(c.consistent_gets == t.block_count());
    CHECK(c.physical_reads == t.block_count());
    CHECK(pool.segment_counters(t.segment()).consistent_gets == t.block_count());

    // Warm rescan is all hits.
    pool.reset_counters();
    t.full_scan(pool, [](const RowId&, const Row&) {});
    CHECK(pool.snapshot_counters().consistent_gets == t.block_count());
    CHECK(pool.snapshot_counters().physical_reads == 0);

    // A pool smaller than the table misses on every block of a rescan.
    BufferPool small(4);
    t.full_scan(small, [](const RowId&, const Row&) {});
    t.full_scan(small, [](const RowId&, const Row&) {});
    CHECK(small.snapshot_counters().physical_reads == 2 * t.block_count());
}

TEST_CASE("buffer pool evicts the least recently used block") {
    BufferPool pool(2);
    CHECK_FALSE(pool.access(1, 0));
    CHECK_FALSE(pool.access(1, 1));
    CHECK(pool.access(1, 0));
    CHECK_FALSE(pool.access(1, 2)); // evicts block 1
    CHECK(pool.is_resident(1, 0));
    CHECK_FALSE(pool.is_resident(1, 1));
    CHECK(pool.resident_count() == 2);
    CHECK(pool.snapshot_counters() == IoCounters{4, 3, 0});
    pool.flush_pool();
    CHECK(pool.resident_count() == 0);
    CHECK(pool.snapshot_counters().consistent_gets == 4); // flushing keeps counters
    pool.reset_counters();
    CHECK(pool.snapshot_counters() == IoCounters{});
    CHECK_THROWS_AS(BufferPool(0), ConfigError);
}

TEST_CASE("block reads are bounds checked") {
    HeapTable t = generate_normal(10, 1);
    BufferPool pool;
    CHECK(t.read_block(pool, 0).row_count() == 10);
    CHECK_THROWS_AS(t.read_block(pool, 1), AddressError);
}

TEST_CASE("ordinal and RowId are inverse") {
    HeapTable t = generate_normal(1000, 1);
    for (std::uint64_t i = 0; i < t.row_count(); i += 37) CHECK(t.ordinal_of(t.rowid_of(i)) == i);
    CHECK(t.rowid_of(160) == RowId{1, 0});
    CHECK(to_string(RowId{3, 7}) == "(3,7)");
}

TEST_CASE("segment ids are unique") {
    std::set<SegmentId> ids;
    for (int i = 0; i < 100; ++i) ids.insert(allocate_segment_id());
    CHECK(ids.size() == 100);
    HeapTable a("A"), b("B");
    CHECK(a.segment() != b.segment());
}

TEST_CASE("save and load round trip") {
    TempDir dir("storage");
    HeapTable t = generate_normal(777, 5, kDefaultPageSize, "EMP");
    t.assign_gender();
    t.save(dir.path());
    HeapTable back = HeapTable::load(dir.path(), "EMP");
    CHECK(back.same_contents(t));
    CHECK(back.name() == "EMP");
    CHECK(back.row_count() == 777);
    CHECK(back.block_count() == t.block_count());
    CHECK(back.segment() != t.segment());
    CHECK_THROWS_AS(HeapTable::load(dir.path(), "MISSING"), IoError);

    // Truncated data file is detected.
    std::filesystem::resize_file(dir.path() / "EMP.tbl", 100);
    CHECK_THROWS_AS(HeapTable::load(dir.path(), "EMP"), IoError);
}
