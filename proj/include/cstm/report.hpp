#pragma once

// Output documents.
//
// metrics.json
//   { "modes": [ { "mode": "N",
//                  "repetitions": [ { <metric>: value, ... }, ... ],
//                  "aggregate": { <metric>: { "mean": x, "stddev": s }, ... } }, ... ] }
//
// metrics.csv
//   mode,repetition,<metric>,...   one row per repetition, then a "mean"
//   and a "stddev" row per mode.
//
// report.json
//   { "config": <full config echo>, "seed_provenance": {...},
//     "metrics": <metrics.json>, "runtime_s": wall clock }
//
// Only runtime_s varies between identical runs.

#include "cstm/scenario.hpp"
#include "cstm/sim.hpp"

#include "json.hpp"

#include <string>
#include <vector>

namespace cstm {

struct SeedProvenance {
    std::uint64_t master_seed = 0;
    std::string source;  // "config" or the overriding environment variable
};

nlohmann::json metrics_to_json(const std::vector<ModeResult>& results);
std::string metrics_to_csv(const std::vector<ModeResult>& results);
nlohmann::json make_run_report(const ScenarioConfig& config, const SeedProvenance& seeds,
                               const std::vector<ModeResult>& results, double runtime_s);

// Writes report.json, metrics.json and metrics.csv into out_dir (created if needed).
void write_outputs(const std::string& out_dir, const nlohmann::json& report,
                   const std::vector<ModeResult>& results);

// Fixed-width summary table, one row per mode.
std::string summary_table(const std::vector<ModeResult>& results);

}  // namespace cstm
