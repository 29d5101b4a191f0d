#pragma once

// Shared fixtures and brute-force oracles for the test binaries.

#include "idxlab/catalog.hpp"
#include "idxlab/planner.hpp"
#include "idxlab/storage.hpp"

#include <algorithm>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace idxlab::testing {

inline Row make_row(std::int64_t empno, std::int64_t sal = 2000, Gender g = Gender::Null) {
    return Row{empno, std::string(kEnameLength, 'A'), sal, g};
}

inline HeapTable make_table(const std::vector<Row>& rows, std::string name = "T",
                            std::size_t page_size = kDefaultPageSize) {
    HeapTable t(std::move(name), page_size);
    for (const auto& r : rows) t.insert(r);
    return t;
}

// Every row of the table with its RowId, unmetered.
inline std::vector<std::pair<RowId, Row>> all_rows(const HeapTable& t) {
    std::vector<std::pair<RowId, Row>> out;
    t.for_each_row([&](const RowId& rid, const Row& r) { out.emplace_back(rid, r); });
    return out;
}

inline std::vector<RowId> brute_rowids(const HeapTable& t, const Predicate& p) {
    std::vector<RowId> out;
    t.for_each_row([&](const RowId& rid, const Row& r) {
        if (p.matches(r)) out.push_back(rid);
    });
    return out;
}

// A small table whose columns have duplicates and NULLs: sal in a narrow band,
// gender from the mod-6 rule.
inline HeapTable dense_table(std::uint64_t n, std::uint64_t seed, bool shuffled, std::string name = "DENSE") {
    std::mt19937_64 rng(seed);
    std::vector<Row> rows;
    for (std::uint64_t i = 1; i <= n; ++i)
        rows.push_back(make_row(static_cast<std::int64_t>(i), 1000 + static_cast<std::int64_t>(rng() % 60) * 100,
                                gender_for_empno(static_cast<std::int64_t>(i))));
    if (shuffled) std::shuffle(rows.begin(), rows.end(), rng);
    return make_table(rows, std::move(name));
}

// Random predicate over empno, sal and gender, at most `depth` boolean levels.
class PredicateGen {
public:
    PredicateGen(std::uint64_t seed, std::int64_t empno_max) : rng_(seed), empno_max_(empno_max) {}

    Predicate leaf() {
        Column col = pick({Column::Empno, Column::Sal, Column::Gender});
        int kind = static_cast<int>(rng_() % 4);
        if (col == Column::Gender) {
            if (kind == 3) return Predicate::is_null(col);
            if (kind == 2) return Predicate::in_list(col, {kMaleCode, kFemaleCode});
            return Predicate::eq(col, rng_() % 2 ? kMaleCode : kFemaleCode);
        }
        auto value = [&] {
            return col == Column::Empno ? uniform(1, empno_max_) : 1000 + 100 * uniform(0, 60);
        };
        switch (kind) {
        case 0: return Predicate::eq(col, value());
        case 1: {
            std::int64_t a = value(), b = value();
            if (a > b) std::swap(a, b);
            return Predicate::range(col, a, b, rng_() % 4 != 0, rng_() % 4 != 0);
        }
        case 2: {
            std::vector<std::int64_t> vals;
            std::size_t k = 1 + rng_() % 5;
            while (vals.size() < k) {
                std::int64_t v = value();
                if (std::find(vals.begin(), vals.end(), v) == vals.end()) vals.push_back(v);
            }
            return Predicate::in_list(col, vals);
        }
        default: return Predicate::is_null(col);
        }
    }

    Predicate any(int depth = 2) {
        if (depth == 0 || rng_() % 3 == 0) return leaf();
        std::vector<Predicate> kids;
        std::size_t k = 2 + rng_() % 2;
        for (std::size_t i = 0; i < k; ++i) kids.push_back(any(depth - 1));
        return rng_() % 2 ? Predicate::all_of(std::move(kids)) : Predicate::any_of(std::move(kids));
    }

    std::mt19937_64& rng() { return rng_; }

private:
    std::int64_t uniform(std::int64_t lo, std::int64_t hi) {
        return lo + static_cast<std::int64_t>(rng_() % static_cast<std::uint64_t>(hi - lo + 1));
    }
    Column pick(std::initializer_list<Column> cols) { return *(cols.begin() + rng_() % cols.size()); }

    std::mt19937_64 rng_;
    std::int64_t empno_max_;
};

// Fresh scratch directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        path_ = std::filesystem::temp_directory_path() /
                ("idxlab_" + tag + "_" + std::to_string(std::random_device{}()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

} // namespace idxlab::testing
