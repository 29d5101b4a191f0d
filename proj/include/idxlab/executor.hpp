#pragma once

#include "idxlab/catalog.hpp"
#include "idxlab/planner.hpp"
#include "idxlab/storage.hpp"

#include <chrono>
#include <cstdint>
#include <string>
#include <vector>

namespace idxlab {

struct SegmentUsage {
    std::string segment; // table or index name
    SegmentIo io;
};

struct ExecStats {
    std::uint64_t consistent_gets = 0;
    std::uint64_t physical_reads = 0;
    std::uint64_t rows_processed = 0;
    std::chrono::nanoseconds elapsed{0};
    std::vector<SegmentUsage> breakdown; // sorted by segment name

    // Counters charged to one segment; zero when it was never touched.
    SegmentIo segment(const std::string& name) const;
};

struct ExecResult {
    std::vector<Row> rows;     // empty for COUNT queries
    std::vector<RowId> rowids; // parallel to rows
    std::uint64_t count = 0;   // qualifying rows
    ExecStats stats;
};

// Runs any plan. Rows come back in RowId order for bitmap plans, key order for
// B-tree plans and block order for full scans. Throws ExecutionError when a
// referenced index is missing or was built over a different row count.
ExecResult execute(const Plan& plan, const HeapTable& table, const IndexCatalog& indexes, BufferPool& pool);

// Answers a BitmapCountOnly plan from the indexes alone.
struct CountResult {
    std::uint64_t count = 0;
    ExecStats stats;
};
CountResult execute_count(const Plan& plan, const IndexCatalog& indexes, BufferPool& pool);

// Statistics block, one counter per line, followed by the per-segment split.
std::string format_statistics(const ExecStats& stats);

} // namespace idxlab
