#pragma once

// UE movement expressed as cell residence intervals, plus the ground-truth
// oracle that decides who was inside an addressed spatiotemporal region.

#include "cstm/token.hpp"
#include "cstm/topology.hpp"

#include <cstdint>
#include <istream>
#include <limits>
#include <ostream>
#include <set>
#include <string>
#include <vector>

namespace cstm {

using UeIndex = std::size_t;

inline constexpr Seconds kOpenEnded = std::numeric_limits<double>::infinity();

// The UE is in `cell` during [enter, leave).
struct Residence {
    Seconds enter = 0;
    Seconds leave = kOpenEnded;
    CellId cell = 0;
    friend bool operator==(const Residence&, const Residence&) = default;
};

struct UeTrack {
    std::string id;
    std::vector<Residence> residences;  // time-ordered, non-overlapping
    friend bool operator==(const UeTrack&, const UeTrack&) = default;
};

struct MobilityTrace {
    std::vector<UeTrack> ues;  // UeIndex is the position in this vector
    friend bool operator==(const MobilityTrace&, const MobilityTrace&) = default;
};

struct PositionSample {
    Seconds time = 0;
    std::string ue;
    double x = 0;
    double y = 0;
};

// CSV rows `time_s,ue_id,x_m,y_m` (positions) or `time_s,ue_id,cell_id`
// (cell switches), told apart by column count. A leading header line is
// skipped. In the cell form, cell id -1 marks the UE leaving the network.
// Position rows are mapped with assign_cell; consecutive rows in the same
// cell coalesce into one residence, and the last residence stays open.
//
// Throws LoadError for malformed rows, unknown cells, positions outside the
// map, or timestamps that do not strictly increase per UE.
MobilityTrace load_trace(std::istream& in, const CellMap& map);
MobilityTrace load_trace_file(const std::string& path, const CellMap& map);

// Cell form: one row per residence start, plus a -1 row for finite departures.
void write_trace(std::ostream& out, const MobilityTrace& trace);
void write_positions(std::ostream& out, const std::vector<PositionSample>& samples);

struct WaypointParams {
    int num_ues = 1;
    double speed_mps = 0;
    Seconds pause_s = 0;
    Seconds duration_s = 0;
    Seconds sample_s = 1;
    std::uint64_t rng_seed = 0;
};

// Random-waypoint walks inside the map bounds, sampled every sample_s
// seconds over [0, duration). Deterministic per rng_seed.
std::vector<PositionSample> generate_positions(const CellMap& map, const WaypointParams& params);
MobilityTrace generate_mobility(const CellMap& map, const WaypointParams& params);

// Coalesces position samples (any UE order, time-ordered per UE) into residences.
MobilityTrace trace_from_positions(const std::vector<PositionSample>& samples, const CellMap& map);

struct TimeWindow {
    Seconds start = 0;
    Seconds end = 0;
};

// UEs with a residence in a cell overlapping `area` that meets the closed
// window [start, end].
std::set<UeIndex> ground_truth(const MobilityTrace& trace, const CellMap& map, const Rect& area,
                               TimeWindow window);

// Same question at the resolution tokens can express: the window is widened
// to the level-0 slots it touches, [slot_start(a), slot_start(b) + slot).
std::set<UeIndex> ground_truth_at_slot_resolution(const MobilityTrace& trace, const CellMap& map,
                                                  const Rect& area, TimeWindow window,
                                                  Seconds slot_size, Seconds epoch);

}  // namespace cstm
