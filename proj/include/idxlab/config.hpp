#pragma once

#include "idxlab/btree.hpp"
#include "idxlab/planner.hpp"
#include "idxlab/storage.hpp"

#include <filesystem>
#include <string_view>

namespace idxlab {

struct EngineConfig {
    std::size_t page_size = kDefaultPageSize;
    std::size_t pool_blocks = 2000;
    std::size_t fanout = BTreeIndex::kDefaultFanout;
    CostModelConfig cost;

    void validate() const;
};

// Applies one key=value setting. Known keys: page_size, pool_blocks, fanout,
// multiblock_divisor, bitmap_per_row_cost, btree_probe_base.
void apply_setting(EngineConfig& cfg, std::string_view key, std::string_view value);

// Flat key=value file; blank lines and '#' comments are skipped.
EngineConfig load_config(const std::filesystem::path& file, EngineConfig base = {});

} // namespace idxlab
