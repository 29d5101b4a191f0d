#pragma once

#include "idxlab/catalog.hpp"
#include "idxlab/storage.hpp"

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace idxlab {

// Structured WHERE clause. Leaves compare one integer-keyed column; NULL
// values never satisfy Eq/Range/InList.
class Predicate {
public:
    enum class Kind { Eq, Range, InList, IsNull, And, Or };

    static Predicate eq(Column column, std::int64_t value);
    static Predicate range(Column column, std::int64_t lo, std::int64_t hi, bool lo_inclusive = true,
                           bool hi_inclusive = true);
    // Values must be distinct and non-empty.
    static Predicate in_list(Column column, std::vector<std::int64_t> values);
    static Predicate is_null(Column column);
    // Lists must be non-empty; a single child is returned unchanged.
    static Predicate all_of(std::vector<Predicate> children);
    static Predicate any_of(std::vector<Predicate> children);

    Kind kind() const { return kind_; }
    Column column() const { return column_; }
    std::int64_t value() const { return lo_; }
    std::int64_t lo() const { return lo_; }
    std::int64_t hi() const { return hi_; }
    bool lo_inclusive() const { return lo_inclusive_; }
    bool hi_inclusive() const { return hi_inclusive_; }
    const std::vector<std::int64_t>& values() const { return values_; }
    const std::vector<Predicate>& children() const { return children_; }
    bool is_leaf() const { return kind_ != Kind::And && kind_ != Kind::Or; }

    bool matches(const Row& row) const;
    std::set<Column> columns() const;
    std::string to_string() const;

    friend bool operator==(const Predicate&, const Predicate&) = default;

private:
    Predicate() = default;

    Kind kind_ = Kind::Eq;
    Column column_ = Column::Empno;
    std::int64_t lo_ = 0;
    std::int64_t hi_ = 0;
    bool lo_inclusive_ = true;
    bool hi_inclusive_ = true;
    std::vector<std::int64_t> values_;
    std::vector<Predicate> children_;
};

// Renders a column value the way predicates print it ('M' for gender).
std::string format_value(Column column, std::int64_t value);

struct Query {
    Predicate predicate;
    bool count_only = false;
};

struct CostModelConfig {
    double multiblock_divisor = 10.33;
    double bitmap_per_row_cost = 0.2;
    std::int64_t btree_probe_base = 1;

    // Throws ConfigError unless every constant is positive.
    void validate() const;
};

// Selectivity in [0, 1] under the independence assumption.
double estimate_selectivity(const Predicate& pred, const TableStats& stats);
// round(selectivity * rows), at least 1 whenever the selectivity is non-zero.
std::uint64_t estimate_cardinality(const Predicate& pred, const TableStats& stats);

std::uint64_t cost_full_scan(const TableStats& stats, const CostModelConfig& cfg);

struct BTreeCost {
    std::uint64_t index_cost = 0; // descent plus leaf walk
    std::uint64_t total = 0;      // index_cost plus table fetches by clustering factor
};
// `access` must be an Eq, Range or InList leaf on the index column.
BTreeCost cost_btree(const Predicate& access, const IndexStats& index, const TableStats& stats,
                     const CostModelConfig& cfg);

struct BitmapCost {
    std::uint64_t index_blocks = 0; // segment blocks expected for the key lookups, rounded up
    std::uint64_t total = 0;        // expected blocks plus per-row conversion and fetch, rounded up once
};
// `pred` must be answerable from `index` alone. The clustering factor does not
// take part.
BitmapCost cost_bitmap(const Predicate& pred, const IndexStats& index, const TableStats& stats,
                       const CostModelConfig& cfg);

enum class PlanKind { FullScan, BTreeAccess, BitmapPlan, BitmapCountOnly };

std::string_view plan_kind_name(PlanKind kind);

struct BitmapNode {
    enum class Op { SingleValue, NullValue, RangeScan, And, Or };

    Op op = Op::SingleValue;
    std::string index;
    Column column = Column::Empno;
    std::int64_t lo = 0; // the key for SingleValue
    std::int64_t hi = 0;
    bool lo_inclusive = true;
    bool hi_inclusive = true;
    std::vector<BitmapNode> children;

    std::uint64_t est_card = 0;
    double est_blocks = 0; // expected segment blocks, at least 1 per leaf, summed over the subtree

    bool is_leaf() const { return op != Op::And && op != Op::Or; }
    // Compact structural signature, e.g. "And(Or(Single*9),Single)".
    std::string shape() const;
};

struct Plan {
    PlanKind kind = PlanKind::FullScan;
    Query query;
    std::string table;

    // BTreeAccess only.
    std::string index;
    std::optional<Predicate> access;
    // BitmapPlan / BitmapCountOnly only.
    std::optional<BitmapNode> bitmap;

    std::uint64_t cost = 0;
    std::uint64_t card = 0;       // estimated result rows
    std::uint64_t index_cost = 0; // cost of the index step alone
    std::uint64_t fetch_card = 0; // rows the index step is expected to hand to the fetch

    std::string shape() const;
};

// Every plan the catalog can support, cheapest first; ties prefer bitmap over
// B-tree over full scan, then index name. Throws PlanningError for predicates
// over columns without statistics.
std::vector<Plan> enumerate_plans(const Query& query, std::span<const IndexStats> indexes,
                                  const TableStats& stats, const CostModelConfig& cfg);

// The preferred plan. A COUNT query that bitmap indexes resolve completely
// always becomes BitmapCountOnly.
Plan choose_plan(const Query& query, std::span<const IndexStats> indexes, const TableStats& stats,
                 const CostModelConfig& cfg);

// Indented plan tree annotated with (Cost=.. Card=..).
std::string explain(const Plan& plan);

} // namespace idxlab
