#pragma once

#include "idxlab/catalog.hpp"
#include "idxlab/config.hpp"
#include "idxlab/planner.hpp"
#include "idxlab/storage.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

namespace idxlab {

// One executed query under one index configuration.
struct QueryMeasurement {
    std::string query_id;
    std::string predicate;
    IndexKind index_kind = IndexKind::Bitmap;
    PlanKind plan_kind = PlanKind::FullScan;
    std::string plan_shape;
    std::uint64_t cost_est = 0;
    std::uint64_t card_est = 0;
    std::uint64_t rows = 0;
    std::uint64_t consistent_gets = 0;
    std::uint64_t physical_reads = 0;
};

struct IndexReport {
    std::string name;
    std::string table;
    IndexStats stats;
};

struct Report {
    std::string scenario;
    std::uint64_t scale = 0;
    std::uint64_t seed = 0;
    std::vector<QueryMeasurement> queries;
    std::vector<IndexReport> indexes;
    std::vector<std::string> notes;
};

enum class ReportFormat { Markdown, Csv, Text };

ReportFormat parse_report_format(std::string_view name);

inline constexpr std::string_view kCsvHeader =
    "scenario,query_id,predicate,index_kind,plan_kind,cost_est,card_est,rows,consistent_gets,physical_reads";

std::string render_csv(const std::vector<Report>& reports);
std::string render_markdown(const Report& report);
std::string render_text(const Report& report);
std::string render(const std::vector<Report>& reports, ReportFormat format);

// Registered scenario names in replication order.
const std::vector<std::string>& scenario_names();
// Scenarios run by `report --all`: the paired comparisons plus the conclusion.
const std::vector<std::string>& full_suite_names();

// Maps a probe value chosen for a 1,000,000-row table onto `scale` rows,
// preserving selectivity; never below 1.
std::int64_t scale_value(std::int64_t value_at_million, std::uint64_t scale);

inline constexpr std::uint64_t kMinScenarioScale = 1000;

// Runs scenarios against generated tables, caching the tables and their
// statistics per (scale, seed). One instance per thread.
class BenchRunner {
public:
    explicit BenchRunner(EngineConfig config = {});
    ~BenchRunner();
    BenchRunner(const BenchRunner&) = delete;
    BenchRunner& operator=(const BenchRunner&) = delete;

    // Throws UsageError for unknown names or a scale below kMinScenarioScale.
    Report run(std::string_view scenario, std::uint64_t scale, std::uint64_t seed);

    const EngineConfig& config() const { return config_; }

private:
    struct Dataset;
    Dataset& dataset(std::uint64_t scale, std::uint64_t seed);

    EngineConfig config_;
    std::map<std::pair<std::uint64_t, std::uint64_t>, std::unique_ptr<Dataset>> cache_;
};

Report run_scenario(std::string_view scenario, std::uint64_t scale, std::uint64_t seed,
                    const EngineConfig& config = {});

} // namespace idxlab
