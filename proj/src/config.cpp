#include "idxlab/config.hpp"

#include "idxlab/errors.hpp"

#include <charconv>
#include <fstream>
#include <string>

namespace idxlab {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
    T value{};
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size())
        throw ConfigError("bad value '" + std::string(text) + "' for " + std::string(key));
    return value;
}

double parse_double(std::string_view key, std::string_view text) {
    std::string s(text);
    std::size_t used = 0;
    double v = 0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != s.size()) throw ConfigError("bad value '" + s + "' for " + std::string(key));
    return v;
}

} // namespace

void EngineConfig::validate() const {
    if (page_size < kBlockHeaderBytes + kRowWidth) throw ConfigError("page_size too small for one row");
    if (pool_blocks == 0) throw ConfigError("pool_blocks must be positive");
    if (fanout < 4) throw ConfigError("fanout must be at least 4");
    cost.validate();
}

void apply_setting(EngineConfig& cfg, std::string_view key, std::string_view value) {
    key = trim(key);
    value = trim(value);
    if (key == "page_size") cfg.page_size = parse_number<std::size_t>(key, value);
    else if (key == "pool_blocks") cfg.pool_blocks = parse_number<std::size_t>(key, value);
    else if (key == "fanout") cfg.fanout = parse_number<std::size_t>(key, value);
    else if (key == "multiblock_divisor") cfg.cost.multiblock_divisor = parse_double(key, value);
    else if (key == "bitmap_per_row_cost") cfg.cost.bitmap_per_row_cost = parse_double(key, value);
    else if (key == "btree_probe_base") cfg.cost.btree_probe_base = parse_number<std::int64_t>(key, value);
    else throw ConfigError("unknown config key '" + std::string(key) + "'");
}

EngineConfig load_config(const std::filesystem::path& file, EngineConfig base) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot read config file " + file.string());
    int lineno = 0;
    for (std::string line; std::getline(in, line);) {
        ++lineno;
        std::string_view v = trim(line);
        if (v.empty() || v.front() == '#') continue;
        auto eq = v.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError(file.string() + ":" + std::to_string(lineno) + ": expected key=value");
        apply_setting(base, v.substr(0, eq), v.substr(eq + 1));
    }
    base.validate();
    return base;
}

} // namespace idxlab
