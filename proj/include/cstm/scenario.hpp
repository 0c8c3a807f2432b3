#pragma once

// Experiment description. Defaults: tokens every 3 min, polls every 10 min,
// a four-level hierarchy with slot sizes 3/6/9/12 min valid for
// 15/15/30/60 min, 100 st-ds per repetition addressing [a,b] with a in
// [0,5] and b in [5,10] min, sent 10-60 min after b, 32 repetitions.

#include "cstm/mobility.hpp"
#include "cstm/token.hpp"
#include "cstm/topology.hpp"

#include "json.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cstm {

// N: no hierarchy, S: spatial clusters only, T: growing slot sizes only, ST: both.
enum class AggregationMode { kNone, kSpatial, kTemporal, kSpatioTemporal };

inline constexpr AggregationMode kAllModes[] = {AggregationMode::kNone, AggregationMode::kSpatial,
                                                AggregationMode::kTemporal,
                                                AggregationMode::kSpatioTemporal};

std::string_view to_string(AggregationMode mode);
// Accepts "N", "S", "T", "ST". Throws ConfigError otherwise.
AggregationMode parse_mode(std::string_view text);

struct LevelSpec {
    Seconds slot_size_s = 0;
    Seconds validity_start_s = 0;
    Seconds validity_end_s = 0;
};

std::vector<LevelSpec> default_hierarchy();

struct Range {
    double min = 0;
    double max = 0;
};

struct SiteSource {
    std::string file;  // header-less `cell_id,x_m,y_m`; takes precedence when set
    int grid_rows = 0;
    int grid_cols = 0;
    double grid_spacing_m = 1000;
};

struct MobilitySource {
    std::string trace_file;  // when empty, random-waypoint UEs are generated
    int num_ues = 50;
    double speed_mps = 14;
    Seconds pause_s = 0;
    Seconds sample_s = 1;
};

struct ScenarioConfig {
    Seconds duration_s = 7200;
    Seconds token_interval_s = 180;
    Seconds poll_interval_s = 600;
    std::vector<LevelSpec> hierarchy = default_hierarchy();
    AggregationMode mode = AggregationMode::kSpatioTemporal;
    std::uint64_t num_rps = 16;
    int num_messages = 100;
    double message_min_a = 0;  // minutes
    double message_max_a = 5;
    double message_min_b = 5;
    double message_max_b = 10;
    Range send_delay_min{10, 60};
    Range area_side_m{500, 2000};
    int repetitions = 32;
    std::uint64_t master_seed = 1;
    SiteSource sites;
    double site_margin_m = kDefaultMarginM;
    MobilitySource mobility;
};

// Throws ConfigError naming the offending field.
void validate(const ScenarioConfig& config);

// Missing keys keep their defaults; unknown keys are rejected. Relative
// paths are resolved against base_dir. Throws ConfigError.
ScenarioConfig config_from_json(const nlohmann::json& doc, const std::string& base_dir = "");
ScenarioConfig load_config_file(const std::string& path);
// Full echo; feeding it back to config_from_json reproduces the config.
nlohmann::json config_to_json(const ScenarioConfig& config);

// The hierarchy a mode runs with:
//   N   one level, slot = token interval, valid for the configured horizon
//   S   configured windows, every slot = token interval
//   T   configured windows and slot sizes
//   ST  same as T (clusters differ, see uses_spatial_clusters)
TokenHierarchy effective_hierarchy(const ScenarioConfig& config, AggregationMode mode);
bool uses_spatial_clusters(AggregationMode mode);

}  // namespace cstm
