#include "cstm/mobility.hpp"

#include "cstm/errors.hpp"
#include "cstm/rng.hpp"
#include "csv.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>

namespace cstm {

namespace {

constexpr CellId kDepartureMarker = -1;

struct Row {
    Seconds time;
    std::string ue;
    CellId cell;  // kDepartureMarker for a departure
    std::size_t line;
};

class TraceBuilder {
public:
    void add(const Row& row) {
        auto [it, inserted] = index_.try_emplace(row.ue, trace_.ues.size());
        if (inserted) trace_.ues.push_back(UeTrack{row.ue, {}});
        UeTrack& track = trace_.ues[it->second];
        Seconds& last = last_time_[it->second];
        if (!inserted && !(row.time > last)) {
            throw LoadError("trace line " + std::to_string(row.line) + ": timestamps of UE '" +
                            row.ue + "' do not increase");
        }
        last = row.time;

        auto& res = track.residences;
        const bool present = !res.empty() && res.back().leave == kOpenEnded;
        if (row.cell == kDepartureMarker) {
            if (!present) {
                throw LoadError("trace line " + std::to_string(row.line) + ": UE '" + row.ue +
                                "' leaves without being present");
            }
            res.back().leave = row.time;
            return;
        }
        if (present && res.back().cell == row.cell) return;
        if (present) res.back().leave = row.time;
        res.push_back(Residence{row.time, kOpenEnded, row.cell});
    }

    MobilityTrace finish() { return std::move(trace_); }

private:
    MobilityTrace trace_;
    std::map<std::string, std::size_t> index_;
    std::map<std::size_t, Seconds> last_time_;
};

bool intersects_closed(const Residence& r, TimeWindow w) {
    // Some t in [r.enter, r.leave) also lies in [w.start, w.end].
    return r.enter <= w.end && r.leave > w.start && r.enter < r.leave;
}

bool intersects_half_open(const Residence& r, Seconds start, Seconds end) {
    return r.enter < end && r.leave > start && r.enter < r.leave;
}

}  // namespace

MobilityTrace load_trace(std::istream& in, const CellMap& map) {
    TraceBuilder builder;
    std::string line;
    std::size_t line_no = 0;
    std::size_t columns = 0;
    bool first_data = true;
    while (std::getline(in, line)) {
        ++line_no;
        const auto fields = csv::split_line(line);
        if (fields.empty()) continue;
        const auto time = csv::parse_double(fields[0]);
        if (first_data && !time) {
            first_data = false;  // header
            continue;
        }
        first_data = false;
        const std::string where = "trace line " + std::to_string(line_no);
        if (columns == 0) {
            if (fields.size() != 3 && fields.size() != 4) {
                throw LoadError(where + ": expected 3 or 4 fields");
            }
            columns = fields.size();
        }
        if (fields.size() != columns) throw LoadError(where + ": inconsistent column count");
        if (!time || !std::isfinite(*time)) throw LoadError(where + ": malformed time");
        if (fields[1].empty()) throw LoadError(where + ": empty UE id");

        Row row{*time, std::string(fields[1]), 0, line_no};
        if (columns == 3) {
            const auto cell = csv::parse_int(fields[2]);
            if (!cell) throw LoadError(where + ": malformed cell id");
            if (*cell != kDepartureMarker && !map.contains_cell(*cell)) {
                throw LoadError(where + ": unknown cell id " + std::to_string(*cell));
            }
            row.cell = *cell;
        } else {
            const auto x = csv::parse_double(fields[2]);
            const auto y = csv::parse_double(fields[3]);
            if (!x || !y) throw LoadError(where + ": malformed position");
            try {
                row.cell = assign_cell(map, *x, *y);
            } catch (const std::domain_error& e) {
                throw LoadError(where + ": " + e.what());
            }
        }
        builder.add(row);
    }
    return builder.finish();
}

MobilityTrace load_trace_file(const std::string& path, const CellMap& map) {
    std::ifstream in(path);
    if (!in) throw LoadError("cannot open trace file: " + path);
    try {
        return load_trace(in, map);
    } catch (const LoadError& e) {
        throw LoadError(path + ": " + e.what());
    }
}

void write_trace(std::ostream& out, const MobilityTrace& trace) {
    for (const UeTrack& ue : trace.ues) {
        for (std::size_t i = 0; i < ue.residences.size(); ++i) {
            const Residence& r = ue.residences[i];
            out << csv::format_double(r.enter) << ',' << ue.id << ',' << r.cell << '\n';
            const bool contiguous = i + 1 < ue.residences.size() && ue.residences[i + 1].enter == r.leave;
            if (r.leave != kOpenEnded && !contiguous) {
                out << csv::format_double(r.leave) << ',' << ue.id << ',' << kDepartureMarker << '\n';
            }
        }
    }
}

void write_positions(std::ostream& out, const std::vector<PositionSample>& samples) {
    for (const PositionSample& s : samples) {
        out << csv::format_double(s.time) << ',' << s.ue << ',' << csv::format_double(s.x) << ','
            << csv::format_double(s.y) << '\n';
    }
}

std::vector<PositionSample> generate_positions(const CellMap& map, const WaypointParams& p) {
    if (p.num_ues < 0) throw std::invalid_argument("num_ues must be >= 0");
    if (!(p.speed_mps >= 0) || !(p.pause_s >= 0) || !(p.duration_s > 0) || !(p.sample_s > 0)) {
        throw std::invalid_argument("waypoint parameters must be non-negative with positive duration");
    }
    const Rect& b = map.bounds();
    std::vector<PositionSample> out;
    const auto samples_per_ue = static_cast<std::size_t>(std::ceil(p.duration_s / p.sample_s));
    out.reserve(samples_per_ue * static_cast<std::size_t>(p.num_ues));

    for (int u = 0; u < p.num_ues; ++u) {
        Rng rng(derive_seed(p.rng_seed, 0x77617970 /* "wayp" */, static_cast<std::uint64_t>(u)));
        const std::string id = std::to_string(u);
        Point pos{rng.uniform(b.x_min, b.x_max), rng.uniform(b.y_min, b.y_max)};
        Point target{rng.uniform(b.x_min, b.x_max), rng.uniform(b.y_min, b.y_max)};
        Seconds pause_left = 0;

        for (std::size_t i = 0; i < samples_per_ue; ++i) {
            const Seconds t = static_cast<double>(i) * p.sample_s;
            if (i > 0 && p.speed_mps > 0) {
                Seconds dt = p.sample_s;
                while (dt > 0) {
                    if (pause_left > 0) {
                        const Seconds used = std::min(pause_left, dt);
                        pause_left -= used;
                        dt -= used;
                        continue;
                    }
                    const double dx = target.x - pos.x;
                    const double dy = target.y - pos.y;
                    const double dist = std::hypot(dx, dy);
                    const double reach = p.speed_mps * dt;
                    if (dist <= reach) {
                        pos = target;
                        dt -= dist / p.speed_mps;
                        pause_left = p.pause_s;
                        target = Point{rng.uniform(b.x_min, b.x_max), rng.uniform(b.y_min, b.y_max)};
                    } else {
                        pos.x += dx / dist * reach;
                        pos.y += dy / dist * reach;
                        dt = 0;
                    }
                }
            }
            out.push_back(PositionSample{t, id, pos.x, pos.y});
        }
    }
    return out;
}

MobilityTrace trace_from_positions(const std::vector<PositionSample>& samples, const CellMap& map) {
    TraceBuilder builder;
    std::size_t n = 0;
    for (const PositionSample& s : samples) {
        ++n;
        CellId cell;
        try {
            cell = assign_cell(map, s.x, s.y);
        } catch (const std::domain_error& e) {
            throw LoadError("sample " + std::to_string(n) + ": " + e.what());
        }
        builder.add(Row{s.time, s.ue, cell, n});
    }
    return builder.finish();
}

MobilityTrace generate_mobility(const CellMap& map, const WaypointParams& params) {
    return trace_from_positions(generate_positions(map, params), map);
}

std::set<UeIndex> ground_truth(const MobilityTrace& trace, const CellMap& map, const Rect& area,
                               TimeWindow window) {
    std::set<UeIndex> out;
    if (window.end < window.start) return out;
    const std::set<CellId> cells = cells_overlapping(map, area);
    for (UeIndex u = 0; u < trace.ues.size(); ++u) {
        for (const Residence& r : trace.ues[u].residences) {
            if (cells.contains(r.cell) && intersects_closed(r, window)) {
                out.insert(u);
                break;
            }
        }
    }
    return out;
}

std::set<UeIndex> ground_truth_at_slot_resolution(const MobilityTrace& trace, const CellMap& map,
                                                  const Rect& area, TimeWindow window,
                                                  Seconds slot_size, Seconds epoch) {
    std::set<UeIndex> out;
    if (window.end < window.start) return out;
    const Seconds start = slot_start(window.start, slot_size, epoch);
    const Seconds end = slot_start(window.end, slot_size, epoch) + slot_size;
    const std::set<CellId> cells = cells_overlapping(map, area);
    for (UeIndex u = 0; u < trace.ues.size(); ++u) {
        for (const Residence& r : trace.ues[u].residences) {
            if (cells.contains(r.cell) && intersects_half_open(r, start, end)) {
                out.insert(u);
                break;
            }
        }
    }
    return out;
}

}  // namespace cstm
