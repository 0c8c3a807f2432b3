#pragma once

// Deterministic discrete-event simulation of CSTM on a mobility trace.
//
// One run replays a repetition's trace against fresh entities: eNBs tick
// at every level-0 slot start and hand a token to each UE entering their
// cell, the TPS deposits each st-d at its send time, and every UE polls
// the RPs once per poll interval (with a per-UE phase offset) for as long
// as it is attached to some cell. Events sharing a timestamp run in the
// order cell switch, eNB tick, deposit, poll.

#include "cstm/mobility.hpp"
#include "cstm/protocol.hpp"
#include "cstm/scenario.hpp"

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace cstm {

// Config plus the material it references, loaded once.
struct Scenario {
    ScenarioConfig config;
    CellMap map;
    std::optional<MobilityTrace> trace;  // set when the config names a trace file
};

// Throws LoadError / ConfigError.
Scenario load_scenario(const ScenarioConfig& config);

struct StdSpec {
    std::size_t id = 0;
    Rect area;
    TimeWindow window;
    Seconds send_time = 0;
};

// Everything random about a repetition. All modes of a sweep run on the
// same inputs.
struct RepetitionInputs {
    std::size_t repetition = 0;
    std::uint64_t seed = 0;
    MobilityTrace trace;
    std::vector<Clustering> spatial_clusterings;  // level l groups l+1 cells
    std::vector<StdSpec> messages;
    std::vector<Seconds> poll_offsets;  // per UE, in [0, poll interval)
    std::uint64_t tps_seed = 0;
};

RepetitionInputs prepare_repetition(const Scenario& scenario, std::size_t repetition);

struct RunMetrics {
    double mean_polls_per_ue = 0;  // over UEs with at least one poll round
    std::uint64_t total_polls = 0;
    std::uint64_t polling_ues = 0;
    std::uint64_t messages_received = 0;  // distinct (UE, st-d) pairs
    std::uint64_t false_positives = 0;
    double false_positive_ratio = 0;  // false_positives / max(1, messages_received)
    std::uint64_t expected_receptions = 0;  // sum of ground-truth set sizes
    double delivery_ratio = 0;  // true positives / max(1, expected_receptions)
    double deposits_per_std = 0;
    std::uint64_t ciphertexts_delivered = 0;
    std::uint64_t decrypt_failures = 0;
    std::uint64_t addressing_failures = 0;
};

struct StdOutcome {
    StdSpec spec;
    bool addressing_failed = false;
    std::size_t deposits = 0;
    std::set<UeIndex> ground_truth;  // at slot resolution
    std::set<UeIndex> receivers;
};

struct RunLog {
    AggregationMode mode = AggregationMode::kNone;
    std::size_t repetition = 0;
    std::vector<StdOutcome> messages;
    std::vector<std::vector<Seconds>> poll_times;  // per UE
    std::vector<std::uint64_t> polls_per_ue;
    RunMetrics metrics;
};

RunLog simulate(const Scenario& scenario, const RepetitionInputs& inputs, AggregationMode mode);

struct Stat {
    double mean = 0;
    double stddev = 0;  // sample standard deviation, 0 for a single repetition
};

struct ModeResult {
    AggregationMode mode = AggregationMode::kNone;
    std::vector<RunMetrics> repetitions;
};

// Named numeric view of RunMetrics used for aggregation and output.
struct MetricField {
    const char* name;
    bool is_count;
    double value;
};
std::vector<MetricField> metric_fields(const RunMetrics& m);
std::vector<std::pair<std::string, Stat>> aggregate(const std::vector<RunMetrics>& runs);

// All repetitions of config.mode.
ModeResult run(const Scenario& scenario);
// All repetitions of N, S, T and ST on identical inputs, in that order.
std::vector<ModeResult> sweep(const Scenario& scenario);

}  // namespace cstm
