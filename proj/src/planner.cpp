#include "idxlab/planner.hpp"

#include "idxlab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <tuple>

namespace idxlab {

// ---------------------------------------------------------------------------
// Predicate
// ---------------------------------------------------------------------------

Predicate Predicate::eq(Column column, std::int64_t value) {
    Predicate p;
    p.kind_ = Kind::Eq;
    p.column_ = column;
    p.lo_ = p.hi_ = value;
    return p;
}

Predicate Predicate::range(Column column, std::int64_t lo, std::int64_t hi, bool lo_inclusive,
                           bool hi_inclusive) {
    Predicate p;
    p.kind_ = Kind::Range;
    p.column_ = column;
    p.lo_ = lo;
    p.hi_ = hi;
    p.lo_inclusive_ = lo_inclusive;
    p.hi_inclusive_ = hi_inclusive;
    return p;
}

Predicate Predicate::in_list(Column column, std::vector<std::int64_t> values) {
    if (values.empty()) throw UsageError("IN list needs at least one value");
    std::vector<std::int64_t> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw UsageError("IN list values must be distinct");
    Predicate p;
    p.kind_ = Kind::InList;
    p.column_ = column;
    p.values_ = std::move(values);
    return p;
}

Predicate Predicate::is_null(Column column) {
    Predicate p;
    p.kind_ = Kind::IsNull;
    p.column_ = column;
    return p;
}

Predicate Predicate::all_of(std::vector<Predicate> children) {
    if (children.empty()) throw UsageError("AND needs at least one operand");
    if (children.size() == 1) return std::move(children.front());
    Predicate p;
    p.kind_ = Kind::And;
    p.children_ = std::move(children);
    return p;
}

Predicate Predicate::any_of(std::vector<Predicate> children) {
    if (children.empty()) throw UsageError("OR needs at least one operand");
    if (children.size() == 1) return std::move(children.front());
    Predicate p;
    p.kind_ = Kind::Or;
    p.children_ = std::move(children);
    return p;
}

bool Predicate::matches(const Row& row) const {
    switch (kind_) {
    case Kind::And:
        return std::all_of(children_.begin(), children_.end(), [&](const Predicate& c) { return c.matches(row); });
    case Kind::Or:
        return std::any_of(children_.begin(), children_.end(), [&](const Predicate& c) { return c.matches(row); });
    case Kind::IsNull:
        return !column_value(row, column_).has_value();
    default:
        break;
    }
    auto v = column_value(row, column_);
    if (!v) return false;
    switch (kind_) {
    case Kind::Eq: return *v == lo_;
    case Kind::Range:
        return (lo_inclusive_ ? *v >= lo_ : *v > lo_) && (hi_inclusive_ ? *v <= hi_ : *v < hi_);
    case Kind::InList: return std::find(values_.begin(), values_.end(), *v) != values_.end();
    default: return false;
    }
}

std::set<Column> Predicate::columns() const {
    std::set<Column> out;
    if (is_leaf()) {
        out.insert(column_);
    } else {
        for (const auto& c : children_) out.merge(c.columns());
    }
    return out;
}

std::string format_value(Column column, std::int64_t value) {
    if (column == Column::Gender && (value == kMaleCode || value == kFemaleCode))
        return std::string("'") + static_cast<char>(value) + "'";
    return std::to_string(value);
}

std::string Predicate::to_string() const {
    std::string col(column_name(column_));
    switch (kind_) {
    case Kind::Eq: return col + "=" + format_value(column_, lo_);
    case Kind::Range:
        if (lo_inclusive_ && hi_inclusive_)
            return col + " between " + format_value(column_, lo_) + " and " + format_value(column_, hi_);
        return col + (lo_inclusive_ ? ">=" : ">") + format_value(column_, lo_) + " and " + col +
               (hi_inclusive_ ? "<=" : "<") + format_value(column_, hi_);
    case Kind::InList: {
        std::string s = col + " in (";
        for (std::size_t i = 0; i < values_.size(); ++i) {
            if (i) s += ",";
            s += format_value(column_, values_[i]);
        }
        return s + ")";
    }
    case Kind::IsNull: return col + " is null";
    case Kind::And:
    case Kind::Or: {
        const char* sep = kind_ == Kind::And ? " and " : " or ";
        std::string s;
        for (std::size_t i = 0; i < children_.size(); ++i) {
            if (i) s += sep;
            bool wrap = !children_[i].is_leaf() || (kind_ == Kind::And && children_[i].kind() == Kind::Range &&
                                                    !(children_[i].lo_inclusive() && children_[i].hi_inclusive()));
            s += wrap ? "(" + children_[i].to_string() + ")" : children_[i].to_string();
        }
        return s;
    }
    }
    return {};
}

// ---------------------------------------------------------------------------
// Estimates and costs
// ---------------------------------------------------------------------------

void CostModelConfig::validate() const {
    if (!(multiblock_divisor > 0)) throw ConfigError("multiblock_divisor must be positive");
    if (!(bitmap_per_row_cost > 0)) throw ConfigError("bitmap_per_row_cost must be positive");
    if (btree_probe_base <= 0) throw ConfigError("btree_probe_base must be positive");
}

namespace {

// Ceil that forgives floating-point noise just above an integer.
std::uint64_t ceil_u(double x) {
    if (x <= 0) return 0;
    return static_cast<std::uint64_t>(std::ceil(x - 1e-9));
}

double range_selectivity(const Predicate& p, const ColumnStats& cs) {
    if (cs.ndv == 0 || !cs.min || !cs.max) return 0.0;
    // Integer columns: exclusive bounds become the neighbouring inclusive ones.
    std::int64_t lo = p.lo_inclusive() ? p.lo() : p.lo() + 1;
    std::int64_t hi = p.hi_inclusive() ? p.hi() : p.hi() - 1;
    std::int64_t a = std::max(lo, *cs.min);
    std::int64_t b = std::min(hi, *cs.max);
    if (a > b) return 0.0;
    double floor_sel = 1.0 / static_cast<double>(cs.ndv);
    if (*cs.max == *cs.min) return floor_sel;
    double sel = static_cast<double>(b - a) / static_cast<double>(*cs.max - *cs.min);
    return std::clamp(std::max(sel, floor_sel), 0.0, 1.0);
}

} // namespace

double estimate_selectivity(const Predicate& pred, const TableStats& stats) {
    switch (pred.kind()) {
    case Predicate::Kind::And: {
        double s = 1.0;
        for (const auto& c : pred.children()) s *= estimate_selectivity(c, stats);
        return s;
    }
    case Predicate::Kind::Or: {
        double s = 0.0;
        for (const auto& c : pred.children()) {
            double t = estimate_selectivity(c, stats);
            s = s + t - s * t;
        }
        return s;
    }
    default:
        break;
    }
    const ColumnStats& cs = stats.column(pred.column());
    switch (pred.kind()) {
    case Predicate::Kind::Eq: return cs.ndv == 0 ? 0.0 : 1.0 / static_cast<double>(cs.ndv);
    case Predicate::Kind::Range: return range_selectivity(pred, cs);
    case Predicate::Kind::InList:
        return cs.ndv == 0 ? 0.0
                           : std::min(1.0, static_cast<double>(pred.values().size()) / static_cast<double>(cs.ndv));
    case Predicate::Kind::IsNull:
        return stats.row_count == 0 ? 0.0
                                    : static_cast<double>(cs.null_count) / static_cast<double>(stats.row_count);
    default: return 0.0;
    }
}

std::uint64_t estimate_cardinality(const Predicate& pred, const TableStats& stats) {
    double sel = estimate_selectivity(pred, stats);
    if (sel <= 0.0 || stats.row_count == 0) return 0;
    auto card = static_cast<std::uint64_t>(std::llround(sel * static_cast<double>(stats.row_count)));
    return std::max<std::uint64_t>(card, 1);
}

std::uint64_t cost_full_scan(const TableStats& stats, const CostModelConfig& cfg) {
    return ceil_u(static_cast<double>(stats.block_count) / cfg.multiblock_divisor);
}

BTreeCost cost_btree(const Predicate& access, const IndexStats& index, const TableStats& stats,
                     const CostModelConfig& cfg) {
    if (!access.is_leaf() || access.kind() == Predicate::Kind::IsNull || access.column() != index.column)
        throw PlanningError("predicate " + access.to_string() + " cannot drive B-tree " + index.name);
    double sel = estimate_selectivity(access, stats);
    std::uint64_t probes = access.kind() == Predicate::Kind::InList ? access.values().size() : 1;
    auto base = static_cast<std::uint64_t>(cfg.btree_probe_base);
    std::uint64_t leaf = std::max(probes * base, ceil_u(sel * static_cast<double>(index.blocks)));
    BTreeCost c;
    c.index_cost = probes * index.blevel + leaf;
    c.total = c.index_cost + ceil_u(sel * static_cast<double>(index.clustering_factor));
    return c;
}

namespace {

double bitmap_lookup_blocks(double sel, const IndexStats& index) {
    return std::max(1.0, sel * static_cast<double>(index.blocks));
}

// The fractional block estimate and the per-row term share one rounding, so a
// one-block range does not pay for two blocks at small scales.
std::uint64_t bitmap_total(double blocks, std::uint64_t card, const CostModelConfig& cfg) {
    return ceil_u(blocks + static_cast<double>(card) * cfg.bitmap_per_row_cost);
}

// Planning context for bitmap resolution.
struct BitmapResolver {
    const TableStats& stats;
    const std::map<Column, const IndexStats*>& by_column;

    std::optional<BitmapNode> leaf(const Predicate& p) const {
        auto it = by_column.find(p.column());
        if (it == by_column.end()) return std::nullopt;
        const IndexStats& ix = *it->second;
        const ColumnStats& cs = stats.column(p.column());
        double eq_sel = cs.ndv == 0 ? 0.0 : 1.0 / static_cast<double>(cs.ndv);

        BitmapNode n;
        n.index = ix.name;
        n.column = p.column();
        n.est_card = estimate_cardinality(p, stats);
        switch (p.kind()) {
        case Predicate::Kind::Eq:
            n.op = BitmapNode::Op::SingleValue;
            n.lo = n.hi = p.value();
            n.est_blocks = bitmap_lookup_blocks(eq_sel, ix);
            break;
        case Predicate::Kind::Range:
            n.op = BitmapNode::Op::RangeScan;
            n.lo = p.lo();
            n.hi = p.hi();
            n.lo_inclusive = p.lo_inclusive();
            n.hi_inclusive = p.hi_inclusive();
            n.est_blocks = bitmap_lookup_blocks(estimate_selectivity(p, stats), ix);
            break;
        case Predicate::Kind::IsNull:
            n.op = BitmapNode::Op::NullValue;
            n.est_blocks = bitmap_lookup_blocks(estimate_selectivity(p, stats), ix);
            break;
        case Predicate::Kind::InList: {
            n.op = BitmapNode::Op::Or;
            for (std::int64_t v : p.values()) {
                BitmapNode c;
                c.op = BitmapNode::Op::SingleValue;
                c.index = ix.name;
                c.column = p.column();
                c.lo = c.hi = v;
                c.est_card = estimate_cardinality(Predicate::eq(p.column(), v), stats);
                c.est_blocks = bitmap_lookup_blocks(eq_sel, ix);
                n.est_blocks += c.est_blocks;
                n.children.push_back(std::move(c));
            }
            if (n.children.size() == 1) {
                BitmapNode only = std::move(n.children.front());
                return only;
            }
            n.index.clear();
            break;
        }
        default:
            return std::nullopt;
        }
        return n;
    }

    std::optional<BitmapNode> resolve(const Predicate& p) const {
        if (p.is_leaf()) return leaf(p);
        BitmapNode n;
        n.op = p.kind() == Predicate::Kind::And ? BitmapNode::Op::And : BitmapNode::Op::Or;
        n.column = *p.columns().begin();
        for (const auto& c : p.children()) {
            auto r = resolve(c);
            if (!r) return std::nullopt;
            n.est_blocks += r->est_blocks;
            n.children.push_back(std::move(*r));
        }
        n.est_card = estimate_cardinality(p, stats);
        return n;
    }
};

int kind_rank(PlanKind k) {
    switch (k) {
    case PlanKind::BitmapCountOnly:
    case PlanKind::BitmapPlan: return 0;
    case PlanKind::BTreeAccess: return 1;
    case PlanKind::FullScan: return 2;
    }
    return 3;
}

} // namespace

BitmapCost cost_bitmap(const Predicate& pred, const IndexStats& index, const TableStats& stats,
                       const CostModelConfig& cfg) {
    if (index.kind != IndexKind::Bitmap) throw PlanningError(index.name + " is not a bitmap index");
    for (Column c : pred.columns())
        if (c != index.column)
            throw PlanningError("predicate " + pred.to_string() + " is not answerable from " + index.name);
    std::map<Column, const IndexStats*> by_column{{index.column, &index}};
    BitmapResolver resolver{stats, by_column};
    auto node = resolver.resolve(pred);
    if (!node) throw PlanningError("predicate " + pred.to_string() + " is not bitmap-resolvable");
    BitmapCost c;
    c.index_blocks = ceil_u(node->est_blocks);
    c.total = bitmap_total(node->est_blocks, node->est_card, cfg);
    return c;
}

std::string_view plan_kind_name(PlanKind kind) {
    switch (kind) {
    case PlanKind::FullScan: return "FullScan";
    case PlanKind::BTreeAccess: return "BTreeAccess";
    case PlanKind::BitmapPlan: return "BitmapPlan";
    case PlanKind::BitmapCountOnly: return "BitmapCountOnly";
    }
    return "?";
}

std::string BitmapNode::shape() const {
    switch (op) {
    case Op::SingleValue: return "Single";
    case Op::NullValue: return "Null";
    case Op::RangeScan: return "Range";
    case Op::And:
    case Op::Or: break;
    }
    std::string s = op == Op::And ? "And(" : "Or(";
    // Runs of identical children collapse to "child*k".
    for (std::size_t i = 0; i < children.size();) {
        std::string cs = children[i].shape();
        std::size_t j = i + 1;
        while (j < children.size() && children[j].shape() == cs) ++j;
        if (i) s += ",";
        s += cs;
        if (j - i > 1) s += "*" + std::to_string(j - i);
        i = j;
    }
    return s + ")";
}

std::string Plan::shape() const {
    switch (kind) {
    case PlanKind::FullScan: return "FullScan";
    case PlanKind::BTreeAccess: return "BTreeAccess(" + index + ")";
    case PlanKind::BitmapPlan:
    case PlanKind::BitmapCountOnly: return std::string(plan_kind_name(kind)) + "(" + bitmap->shape() + ")";
    }
    return {};
}

std::vector<Plan> enumerate_plans(const Query& query, std::span<const IndexStats> indexes,
                                  const TableStats& stats, const CostModelConfig& cfg) {
    cfg.validate();
    const Predicate& pred = query.predicate;
    for (Column c : pred.columns()) (void)stats.column(c);

    const std::uint64_t card = estimate_cardinality(pred, stats);
    std::vector<Plan> plans;
    auto base_plan = [&](PlanKind kind) {
        Plan p{kind, query, stats.table};
        p.card = card;
        return p;
    };

    {
        Plan p = base_plan(PlanKind::FullScan);
        p.cost = cost_full_scan(stats, cfg);
        p.fetch_card = stats.row_count;
        plans.push_back(std::move(p));
    }

    std::vector<Predicate> conjuncts;
    if (pred.kind() == Predicate::Kind::And) conjuncts = pred.children();
    else conjuncts.push_back(pred);

    std::vector<const IndexStats*> sorted;
    for (const auto& ix : indexes) sorted.push_back(&ix);
    std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->name < b->name; });

    std::map<Column, const IndexStats*> bitmap_by_column;
    for (const IndexStats* ix : sorted) {
        if (ix->kind == IndexKind::Bitmap) {
            bitmap_by_column.emplace(ix->column, ix);
            continue;
        }
        // B-tree: best sargable conjunct on its column. IS NULL never qualifies.
        std::optional<Plan> best;
        for (const auto& c : conjuncts) {
            if (!c.is_leaf() || c.kind() == Predicate::Kind::IsNull || c.column() != ix->column) continue;
            BTreeCost bc = cost_btree(c, *ix, stats, cfg);
            if (best && best->cost <= bc.total) continue;
            Plan p = base_plan(PlanKind::BTreeAccess);
            p.index = ix->name;
            p.access = c;
            p.cost = bc.total;
            p.index_cost = bc.index_cost;
            p.fetch_card = estimate_cardinality(c, stats);
            best = std::move(p);
        }
        if (best) plans.push_back(std::move(*best));
    }

    if (!bitmap_by_column.empty()) {
        BitmapResolver resolver{stats, bitmap_by_column};
        std::optional<BitmapNode> node = resolver.resolve(pred);
        const bool complete = node.has_value();
        if (!node && pred.kind() == Predicate::Kind::And) {
            // Bitmap the resolvable conjuncts; the rest filters at fetch time.
            std::vector<Predicate> parts;
            std::vector<BitmapNode> nodes;
            for (const auto& c : conjuncts) {
                if (auto r = resolver.resolve(c)) {
                    parts.push_back(c);
                    nodes.push_back(std::move(*r));
                }
            }
            if (nodes.size() == 1) {
                node = std::move(nodes.front());
            } else if (!nodes.empty()) {
                BitmapNode n;
                n.op = BitmapNode::Op::And;
                n.column = nodes.front().column;
                for (auto& c : nodes) n.est_blocks += c.est_blocks;
                n.children = std::move(nodes);
                n.est_card = estimate_cardinality(Predicate::all_of(parts), stats);
                node = std::move(n);
            }
        }
        if (node) {
            Plan p = base_plan(PlanKind::BitmapPlan);
            p.index_cost = ceil_u(node->est_blocks);
            p.fetch_card = node->est_card;
            p.cost = bitmap_total(node->est_blocks, p.fetch_card, cfg);
            p.bitmap = *node;
            plans.push_back(std::move(p));
            if (complete && query.count_only) {
                Plan c = base_plan(PlanKind::BitmapCountOnly);
                c.index_cost = ceil_u(node->est_blocks);
                c.fetch_card = node->est_card;
                c.cost = c.index_cost;
                c.bitmap = std::move(*node);
                plans.push_back(std::move(c));
            }
        }
    }

    std::stable_sort(plans.begin(), plans.end(), [](const Plan& a, const Plan& b) {
        return std::tuple(a.cost, kind_rank(a.kind), a.index) < std::tuple(b.cost, kind_rank(b.kind), b.index);
    });
    return plans;
}

Plan choose_plan(const Query& query, std::span<const IndexStats> indexes, const TableStats& stats,
                 const CostModelConfig& cfg) {
    std::vector<Plan> plans = enumerate_plans(query, indexes, stats, cfg);
    if (query.count_only) {
        for (auto& p : plans)
            if (p.kind == PlanKind::BitmapCountOnly) return std::move(p);
    }
    return std::move(plans.front());
}

// ---------------------------------------------------------------------------
// explain
// ---------------------------------------------------------------------------

namespace {

std::string annot(std::uint64_t cost, std::uint64_t card) {
    return " (Cost=" + std::to_string(cost) + " Card=" + std::to_string(card) + ")";
}

void explain_bitmap(const BitmapNode& n, int depth, std::vector<std::pair<int, std::string>>& lines) {
    std::string text;
    switch (n.op) {
    case BitmapNode::Op::SingleValue:
    case BitmapNode::Op::NullValue: text = "BITMAP INDEX (SINGLE VALUE) OF '" + n.index + "'"; break;
    case BitmapNode::Op::RangeScan: text = "BITMAP INDEX (RANGE SCAN) OF '" + n.index + "'"; break;
    case BitmapNode::Op::And: text = "BITMAP AND"; break;
    case BitmapNode::Op::Or: text = "BITMAP OR"; break;
    }
    lines.emplace_back(depth, text + annot(ceil_u(n.est_blocks), n.est_card));
    for (const auto& c : n.children) explain_bitmap(c, depth + 1, lines);
}

} // namespace

std::string explain(const Plan& plan) {
    std::vector<std::pair<int, std::string>> lines;
    const bool count = plan.query.count_only;
    const std::uint64_t top_card = count ? 1 : plan.card;
    lines.emplace_back(0, "SELECT STATEMENT" + annot(plan.cost, top_card));
    int depth = 1;
    if (count) lines.emplace_back(depth++, "SORT (AGGREGATE)" + annot(plan.cost, 1));

    const std::string table = "'" + plan.table + "'";
    switch (plan.kind) {
    case PlanKind::FullScan:
        lines.emplace_back(depth, "TABLE ACCESS (FULL) OF " + table + annot(plan.cost, plan.card));
        break;
    case PlanKind::BTreeAccess:
        lines.emplace_back(depth, "TABLE ACCESS (BY INDEX ROWID) OF " + table + annot(plan.cost, plan.card));
        lines.emplace_back(depth + 1, "INDEX (RANGE SCAN) OF '" + plan.index + "' (NON-UNIQUE)" +
                                          annot(plan.index_cost, plan.fetch_card));
        break;
    case PlanKind::BitmapPlan:
        lines.emplace_back(depth, "TABLE ACCESS (BY INDEX ROWID) OF " + table + annot(plan.cost, plan.card));
        lines.emplace_back(depth + 1, "BITMAP CONVERSION (TO ROWIDS)" + annot(plan.index_cost, plan.fetch_card));
        explain_bitmap(*plan.bitmap, depth + 2, lines);
        break;
    case PlanKind::BitmapCountOnly:
        lines.emplace_back(depth, "BITMAP CONVERSION (COUNT)" + annot(plan.index_cost, plan.fetch_card));
        explain_bitmap(*plan.bitmap, depth + 1, lines);
        break;
    }

    std::ostringstream out;
    for (std::size_t i = 0; i < lines.size(); ++i)
        out << std::string(static_cast<std::size_t>(lines[i].first) * 2, ' ') << lines[i].second << "\n";
    return out.str();
}

} // namespace idxlab
