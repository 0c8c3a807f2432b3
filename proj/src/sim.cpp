#include "cstm/sim.hpp"

#include "cstm/errors.hpp"
#include "cstm/rng.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <stdexcept>
#include <unordered_map>

namespace cstm {

namespace {

// Stream tags for derive_seed.
constexpr std::uint64_t kStreamMobility = 1;
constexpr std::uint64_t kStreamClusters = 2;
constexpr std::uint64_t kStreamMessages = 3;
constexpr std::uint64_t kStreamPolls = 4;
constexpr std::uint64_t kStreamTps = 5;

enum class Phase : std::uint8_t { kSwitch = 0, kTick = 1, kDeposit = 2, kPoll = 3 };

struct Event {
    Seconds time;
    Phase phase;
    std::uint64_t seq;
    std::size_t subject;         // UE index or st-d index
    std::optional<CellId> cell;  // switch target; nullopt = leaves the network

    bool operator>(const Event& o) const {
        if (time != o.time) return time > o.time;
        if (phase != o.phase) return phase > o.phase;
        return seq > o.seq;
    }
};

class EventQueue {
public:
    void push(Seconds time, Phase phase, std::size_t subject = 0,
              std::optional<CellId> cell = std::nullopt) {
        queue_.push(Event{time, phase, next_seq_++, subject, cell});
    }
    bool empty() const { return queue_.empty(); }
    Event pop() {
        Event e = queue_.top();
        queue_.pop();
        return e;
    }

private:
    std::priority_queue<Event, std::vector<Event>, std::greater<>> queue_;
    std::uint64_t next_seq_ = 0;
};

Bytes make_payload(std::size_t id) {
    Bytes out;
    for (int shift = 56; shift >= 0; shift -= 8) {
        out.push_back(static_cast<std::uint8_t>(static_cast<std::uint64_t>(id) >> shift));
    }
    const std::string text = "st-d #" + std::to_string(id);
    out.insert(out.end(), text.begin(), text.end());
    return out;
}

std::size_t payload_id(const Bytes& payload) {
    if (payload.size() < 8) throw std::logic_error("received payload without st-d id");
    std::uint64_t id = 0;
    for (int i = 0; i < 8; ++i) id = (id << 8) | payload[static_cast<std::size_t>(i)];
    return static_cast<std::size_t>(id);
}

}  // namespace

Scenario load_scenario(const ScenarioConfig& config) {
    validate(config);
    Scenario scenario{config,
                      config.sites.file.empty()
                          ? CellMap::from_sites(grid_sites(config.sites.grid_rows,
                                                           config.sites.grid_cols,
                                                           config.sites.grid_spacing_m),
                                                config.site_margin_m)
                          : load_sites_file(config.sites.file, config.site_margin_m),
                      std::nullopt};
    if (!config.mobility.trace_file.empty()) {
        scenario.trace = load_trace_file(config.mobility.trace_file, scenario.map);
    }
    return scenario;
}

RepetitionInputs prepare_repetition(const Scenario& scenario, std::size_t repetition) {
    const ScenarioConfig& c = scenario.config;
    const CellMap& map = scenario.map;
    RepetitionInputs in;
    in.repetition = repetition;
    in.seed = derive_seed(c.master_seed, 0, repetition);

    if (scenario.trace) {
        in.trace = *scenario.trace;
    } else {
        in.trace = generate_mobility(
            map, WaypointParams{c.mobility.num_ues, c.mobility.speed_mps, c.mobility.pause_s,
                                c.duration_s, c.mobility.sample_s,
                                derive_seed(in.seed, kStreamMobility)});
    }

    in.spatial_clusterings.push_back(identity_clustering(map, 0));
    for (std::size_t l = 1; l < c.hierarchy.size(); ++l) {
        in.spatial_clusterings.push_back(random_clusters(
            map, static_cast<int>(l) + 1, derive_seed(in.seed, kStreamClusters, l),
            static_cast<int>(l)));
    }

    Rng rng(derive_seed(in.seed, kStreamMessages));
    const Rect& b = map.bounds();
    for (int i = 0; i < c.num_messages; ++i) {
        StdSpec s;
        s.id = static_cast<std::size_t>(i);
        const double w = rng.uniform(c.area_side_m.min, c.area_side_m.max);
        const double h = rng.uniform(c.area_side_m.min, c.area_side_m.max);
        const double cx = rng.uniform(b.x_min, b.x_max);
        const double cy = rng.uniform(b.y_min, b.y_max);
        s.area = Rect{std::max(cx - w / 2, b.x_min), std::max(cy - h / 2, b.y_min),
                      std::min(cx + w / 2, b.x_max), std::min(cy + h / 2, b.y_max)};
        double a = 0, e = 0;
        do {
            a = rng.uniform(c.message_min_a, c.message_max_a);
            e = rng.uniform(c.message_min_b, c.message_max_b);
        } while (!(a < e));
        s.window = TimeWindow{a * 60, e * 60};
        s.send_time = s.window.end + rng.uniform(c.send_delay_min.min, c.send_delay_min.max) * 60;
        in.messages.push_back(s);
    }

    Rng poll_rng(derive_seed(in.seed, kStreamPolls));
    for (std::size_t u = 0; u < in.trace.ues.size(); ++u) {
        in.poll_offsets.push_back(poll_rng.uniform(0, c.poll_interval_s));
    }
    in.tps_seed = derive_seed(in.seed, kStreamTps);
    return in;
}

RunLog simulate(const Scenario& scenario, const RepetitionInputs& in, AggregationMode mode) {
    const ScenarioConfig& c = scenario.config;
    const CellMap& map = scenario.map;
    const TokenHierarchy hierarchy = effective_hierarchy(c, mode);

    std::vector<Clustering> clusterings;
    if (uses_spatial_clusters(mode)) {
        clusterings = in.spatial_clusterings;
    } else {
        for (std::size_t l = 0; l < hierarchy.depth(); ++l) {
            clusterings.push_back(identity_clustering(map, static_cast<int>(l)));
        }
    }
    SeedTable seeds = tps_plan_seeds(map, hierarchy, std::move(clusterings), in.tps_seed);

    std::map<CellId, Enb> enbs;
    for (const Site& s : map.sites()) {
        enbs.emplace(s.cell_id, Enb(s.cell_id, seeds.seeds_for_cell(s.cell_id)));
    }
    Tps tps(map, hierarchy, std::move(seeds), c.num_rps);
    RpRegistry rps(c.num_rps);

    const std::size_t num_ues = in.trace.ues.size();
    std::vector<UserEquipment> ues(num_ues);
    std::vector<std::optional<CellId>> ue_cell(num_ues);
    std::map<CellId, std::set<UeIndex>> occupants;
    std::unordered_map<RegionId, std::uint64_t, RegionIdHash> deposited_at_rp;

    RunLog log;
    log.mode = mode;
    log.repetition = in.repetition;
    log.poll_times.resize(num_ues);
    for (const StdSpec& s : in.messages) log.messages.push_back(StdOutcome{s, false, 0, {}, {}});

    EventQueue events;
    for (UeIndex u = 0; u < num_ues; ++u) {
        const auto& res = in.trace.ues[u].residences;
        for (std::size_t i = 0; i < res.size(); ++i) {
            if (res[i].enter < c.duration_s) events.push(res[i].enter, Phase::kSwitch, u, res[i].cell);
            const bool contiguous = i + 1 < res.size() && res[i + 1].enter == res[i].leave;
            if (!contiguous && res[i].leave < c.duration_s) {
                events.push(res[i].leave, Phase::kSwitch, u, std::nullopt);
            }
        }
        for (std::size_t j = 0;; ++j) {
            const Seconds t = in.poll_offsets.at(u) + static_cast<double>(j) * c.poll_interval_s;
            if (t >= c.duration_s) break;
            events.push(t, Phase::kPoll, u);
        }
    }
    events.push(hierarchy.epoch(), Phase::kTick);
    for (const StdSpec& s : in.messages) {
        if (s.send_time < c.duration_s) events.push(s.send_time, Phase::kDeposit, s.id);
    }

    const Seconds s0 = hierarchy.level(0).slot_size;
    std::int64_t tick_count = 0;
    while (!events.empty()) {
        const Event ev = events.pop();
        switch (ev.phase) {
            case Phase::kSwitch: {
                const UeIndex u = ev.subject;
                if (ue_cell[u]) occupants[*ue_cell[u]].erase(u);
                ue_cell[u] = ev.cell;
                if (ev.cell) {
                    occupants[*ev.cell].insert(u);
                    ues[u].receive_token(enbs.at(*ev.cell).on_entry(ev.time, hierarchy));
                }
                break;
            }
            case Phase::kTick: {
                for (const auto& [cell, members] : occupants) {
                    if (members.empty()) continue;
                    const Token token = enbs.at(cell).tick(ev.time, hierarchy);
                    for (UeIndex u : members) ues[u].receive_token(token);
                }
                ++tick_count;
                const Seconds next = hierarchy.epoch() + static_cast<double>(tick_count) * s0;
                if (next < c.duration_s) events.push(next, Phase::kTick);
                break;
            }
            case Phase::kDeposit: {
                StdOutcome& out = log.messages.at(ev.subject);
                const DepositRequest request{out.spec.area, out.spec.window.start,
                                             out.spec.window.end, make_payload(out.spec.id),
                                             "sim-sender"};
                try {
                    for (Deposit& d : tps.deposit(request, ev.time)) {
                        deposited_at_rp[d.message.region] = d.rp_index;
                        rps.store(d.rp_index, std::move(d.message));
                        ++out.deposits;
                    }
                } catch (const AddressingFailure&) {
                    out.addressing_failed = true;
                }
                break;
            }
            case Phase::kPoll: {
                const UeIndex u = ev.subject;
                if (!ue_cell[u]) break;
                log.poll_times[u].push_back(ev.time);
                for (const OutgoingPoll& poll : ues[u].poll_round(ev.time, hierarchy, c.num_rps)) {
                    auto it = deposited_at_rp.find(poll.request.region);
                    if (it != deposited_at_rp.end() && it->second != poll.rp_index) {
                        throw std::logic_error("depositor and poller disagree on the RP of a region");
                    }
                    const PollResponse response = rps.poll(poll.rp_index, poll.request, ev.time);
                    log.metrics.ciphertexts_delivered += response.messages.size();
                    for (const Bytes& payload : ues[u].on_response(poll.request, response)) {
                        log.messages.at(payload_id(payload)).receivers.insert(u);
                    }
                }
                break;
            }
        }
    }

    RunMetrics& m = log.metrics;
    std::uint64_t true_positives = 0;
    std::uint64_t total_deposits = 0;
    for (StdOutcome& out : log.messages) {
        if (out.spec.send_time < c.duration_s) {
            out.ground_truth = ground_truth_at_slot_resolution(in.trace, map, out.spec.area,
                                                               out.spec.window, s0, hierarchy.epoch());
        }
        m.expected_receptions += out.ground_truth.size();
        m.messages_received += out.receivers.size();
        for (UeIndex u : out.receivers) {
            if (out.ground_truth.contains(u)) {
                ++true_positives;
            } else {
                ++m.false_positives;
            }
        }
        total_deposits += out.deposits;
        if (out.addressing_failed) ++m.addressing_failures;
    }
    for (const UserEquipment& ue : ues) {
        log.polls_per_ue.push_back(ue.polls_sent());
        m.total_polls += ue.polls_sent();
        if (ue.poll_rounds() > 0) ++m.polling_ues;
        m.decrypt_failures += ue.decrypt_failures();
    }
    m.mean_polls_per_ue =
        m.polling_ues == 0 ? 0.0 : static_cast<double>(m.total_polls) / static_cast<double>(m.polling_ues);
    m.false_positive_ratio = static_cast<double>(m.false_positives) /
                             static_cast<double>(std::max<std::uint64_t>(1, m.messages_received));
    m.delivery_ratio = static_cast<double>(true_positives) /
                       static_cast<double>(std::max<std::uint64_t>(1, m.expected_receptions));
    m.deposits_per_std = log.messages.empty()
                             ? 0.0
                             : static_cast<double>(total_deposits) / static_cast<double>(log.messages.size());
    return log;
}

std::vector<MetricField> metric_fields(const RunMetrics& m) {
    return {
        {"mean_polls_per_ue", false, m.mean_polls_per_ue},
        {"total_polls", true, static_cast<double>(m.total_polls)},
        {"polling_ues", true, static_cast<double>(m.polling_ues)},
        {"messages_received", true, static_cast<double>(m.messages_received)},
        {"false_positives", true, static_cast<double>(m.false_positives)},
        {"false_positive_ratio", false, m.false_positive_ratio},
        {"expected_receptions", true, static_cast<double>(m.expected_receptions)},
        {"delivery_ratio", false, m.delivery_ratio},
        {"deposits_per_std", false, m.deposits_per_std},
        {"ciphertexts_delivered", true, static_cast<double>(m.ciphertexts_delivered)},
        {"decrypt_failures", true, static_cast<double>(m.decrypt_failures)},
        {"addressing_failures", true, static_cast<double>(m.addressing_failures)},
    };
}

std::vector<std::pair<std::string, Stat>> aggregate(const std::vector<RunMetrics>& runs) {
    std::vector<std::pair<std::string, Stat>> out;
    if (runs.empty()) return out;
    const auto names = metric_fields(runs.front());
    for (std::size_t f = 0; f < names.size(); ++f) {
        double sum = 0;
        for (const RunMetrics& r : runs) sum += metric_fields(r)[f].value;
        const double mean = sum / static_cast<double>(runs.size());
        double sq = 0;
        for (const RunMetrics& r : runs) {
            const double d = metric_fields(r)[f].value - mean;
            sq += d * d;
        }
        const double sd = runs.size() > 1 ? std::sqrt(sq / static_cast<double>(runs.size() - 1)) : 0.0;
        out.emplace_back(names[f].name, Stat{mean, sd});
    }
    return out;
}

ModeResult run(const Scenario& scenario) {
    ModeResult result{scenario.config.mode, {}};
    for (int r = 0; r < scenario.config.repetitions; ++r) {
        const RepetitionInputs in = prepare_repetition(scenario, static_cast<std::size_t>(r));
        result.repetitions.push_back(simulate(scenario, in, scenario.config.mode).metrics);
    }
    return result;
}

std::vector<ModeResult> sweep(const Scenario& scenario) {
    std::vector<ModeResult> results;
    for (AggregationMode m : kAllModes) results.push_back(ModeResult{m, {}});
    for (int r = 0; r < scenario.config.repetitions; ++r) {
        const RepetitionInputs in = prepare_repetition(scenario, static_cast<std::size_t>(r));
        for (ModeResult& result : results) {
            result.repetitions.push_back(simulate(scenario, in, result.mode).metrics);
        }
    }
    return results;
}

}  // namespace cstm
