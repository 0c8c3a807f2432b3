#include "cstm/scenario.hpp"

#include "cstm/errors.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

namespace cstm {

using nlohmann::json;

std::string_view to_string(AggregationMode mode) {
    switch (mode) {
        case AggregationMode::kNone: return "N";
        case AggregationMode::kSpatial: return "S";
        case AggregationMode::kTemporal: return "T";
        case AggregationMode::kSpatioTemporal: return "ST";
    }
    return "?";
}

AggregationMode parse_mode(std::string_view text) {
    for (AggregationMode m : kAllModes) {
        if (to_string(m) == text) return m;
    }
    throw ConfigError("unknown aggregation mode '" + std::string(text) + "' (expected N, S, T or ST)");
}

std::vector<LevelSpec> default_hierarchy() {
    return {{180, 0, 900}, {360, 900, 1800}, {540, 1800, 3600}, {720, 3600, 7200}};
}

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
}

bool positive(double v) { return v > 0 && std::isfinite(v); }

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
    require(obj.is_object(), where + " must be an object");
    const std::set<std::string> keys(allowed.begin(), allowed.end());
    for (const auto& item : obj.items()) {
        require(keys.contains(item.key()), "unknown key '" + item.key() + "' in " + where);
    }
}

template <class T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(where + "." + key + " has the wrong type");
    }
}

std::string resolve(const std::string& path, const std::string& base_dir) {
    namespace fs = std::filesystem;
    if (path.empty()) return path;
    fs::path p(path);
    if (p.is_relative() && !base_dir.empty()) p = fs::path(base_dir) / p;
    return p.lexically_normal().string();
}

}  // namespace

void validate(const ScenarioConfig& c) {
    require(positive(c.duration_s), "duration_s must be > 0");
    require(positive(c.token_interval_s), "token_interval_s must be > 0");
    require(positive(c.poll_interval_s), "poll_interval_s must be > 0");
    require(c.poll_interval_s >= c.token_interval_s, "poll_interval_s must be >= token_interval_s");
    require(!c.hierarchy.empty(), "hierarchy must have at least one level");
    require(c.hierarchy.front().slot_size_s == c.token_interval_s,
            "hierarchy level 0 slot size must equal token_interval_s");
    std::vector<HierarchyLevel> levels;
    for (std::size_t i = 0; i < c.hierarchy.size(); ++i) {
        const LevelSpec& l = c.hierarchy[i];
        levels.push_back(HierarchyLevel{static_cast<int>(i), l.slot_size_s, l.validity_start_s,
                                        l.validity_end_s});
    }
    validate_hierarchy(levels);  // throws HierarchyError, a ConfigError
    require(c.num_rps >= 1, "num_rps must be >= 1");
    require(c.num_messages >= 0, "num_messages must be >= 0");
    require(c.message_min_a >= 0 && c.message_min_a <= c.message_max_a,
            "message_window_min requires 0 <= min_a <= max_a");
    require(c.message_min_b <= c.message_max_b, "message_window_min requires min_b <= max_b");
    require(c.message_min_a < c.message_max_b, "message_window_min requires min_a < max_b");
    require(c.send_delay_min.min >= 0 && c.send_delay_min.min <= c.send_delay_min.max,
            "send_delay_min requires 0 <= min <= max");
    require(positive(c.area_side_m.min) && c.area_side_m.min <= c.area_side_m.max,
            "area_side_m requires 0 < min <= max");
    require(c.repetitions >= 1, "repetitions must be >= 1");
    require(c.site_margin_m >= 0, "site_margin_m must be >= 0");
    if (c.sites.file.empty()) {
        require(c.sites.grid_rows >= 1 && c.sites.grid_cols >= 1 && positive(c.sites.grid_spacing_m),
                "sites needs a file or a grid with rows, cols >= 1 and spacing_m > 0");
    }
    if (c.mobility.trace_file.empty()) {
        require(c.mobility.num_ues >= 0, "mobility.synthetic.num_ues must be >= 0");
        require(c.mobility.speed_mps >= 0, "mobility.synthetic.speed_mps must be >= 0");
        require(c.mobility.pause_s >= 0, "mobility.synthetic.pause_s must be >= 0");
        require(positive(c.mobility.sample_s), "mobility.synthetic.sample_s must be > 0");
    }
}

ScenarioConfig config_from_json(const json& doc, const std::string& base_dir) {
    ScenarioConfig c;
    check_keys(doc, "config",
               {"duration_s", "token_interval_s", "poll_interval_s", "hierarchy", "mode", "num_rps",
                "num_messages", "message_window_min", "send_delay_min", "area_side_m",
                "repetitions", "master_seed", "sites", "site_margin_m", "mobility"});
    read(doc, "duration_s", c.duration_s, "config");
    read(doc, "token_interval_s", c.token_interval_s, "config");
    read(doc, "poll_interval_s", c.poll_interval_s, "config");
    read(doc, "num_rps", c.num_rps, "config");
    read(doc, "num_messages", c.num_messages, "config");
    read(doc, "repetitions", c.repetitions, "config");
    read(doc, "master_seed", c.master_seed, "config");
    read(doc, "site_margin_m", c.site_margin_m, "config");

    if (doc.contains("mode")) {
        std::string mode;
        read(doc, "mode", mode, "config");
        c.mode = parse_mode(mode);
    }
    if (doc.contains("hierarchy")) {
        const json& h = doc.at("hierarchy");
        require(h.is_array(), "config.hierarchy must be an array");
        c.hierarchy.clear();
        for (std::size_t i = 0; i < h.size(); ++i) {
            const std::string where = "hierarchy[" + std::to_string(i) + "]";
            check_keys(h[i], where, {"slot_size_s", "validity_start_s", "validity_end_s"});
            require(h[i].contains("slot_size_s") && h[i].contains("validity_start_s") &&
                        h[i].contains("validity_end_s"),
                    where + " needs slot_size_s, validity_start_s and validity_end_s");
            LevelSpec l;
            read(h[i], "slot_size_s", l.slot_size_s, where);
            read(h[i], "validity_start_s", l.validity_start_s, where);
            read(h[i], "validity_end_s", l.validity_end_s, where);
            c.hierarchy.push_back(l);
        }
    }
    if (doc.contains("message_window_min")) {
        const json& w = doc.at("message_window_min");
        check_keys(w, "message_window_min", {"min_a", "max_a", "min_b", "max_b"});
        read(w, "min_a", c.message_min_a, "message_window_min");
        read(w, "max_a", c.message_max_a, "message_window_min");
        read(w, "min_b", c.message_min_b, "message_window_min");
        read(w, "max_b", c.message_max_b, "message_window_min");
    }
    for (auto [key, range] : {std::pair{"send_delay_min", &c.send_delay_min},
                              std::pair{"area_side_m", &c.area_side_m}}) {
        if (!doc.contains(key)) continue;
        check_keys(doc.at(key), key, {"min", "max"});
        read(doc.at(key), "min", range->min, key);
        read(doc.at(key), "max", range->max, key);
    }
    if (doc.contains("sites")) {
        const json& s = doc.at("sites");
        if (s.is_string()) {
            c.sites.file = resolve(s.get<std::string>(), base_dir);
        } else {
            check_keys(s, "sites", {"file", "grid"});
            if (s.contains("file")) {
                std::string file;
                read(s, "file", file, "sites");
                c.sites.file = resolve(file, base_dir);
            }
            if (s.contains("grid")) {
                check_keys(s.at("grid"), "sites.grid", {"rows", "cols", "spacing_m"});
                read(s.at("grid"), "rows", c.sites.grid_rows, "sites.grid");
                read(s.at("grid"), "cols", c.sites.grid_cols, "sites.grid");
                read(s.at("grid"), "spacing_m", c.sites.grid_spacing_m, "sites.grid");
            }
        }
    }
    if (doc.contains("mobility")) {
        const json& m = doc.at("mobility");
        check_keys(m, "mobility", {"trace", "synthetic"});
        if (m.contains("trace")) {
            std::string file;
            read(m, "trace", file, "mobility");
            c.mobility.trace_file = resolve(file, base_dir);
        }
        if (m.contains("synthetic")) {
            const json& g = m.at("synthetic");
            check_keys(g, "mobility.synthetic", {"num_ues", "speed_mps", "pause_s", "sample_s"});
            read(g, "num_ues", c.mobility.num_ues, "mobility.synthetic");
            read(g, "speed_mps", c.mobility.speed_mps, "mobility.synthetic");
            read(g, "pause_s", c.mobility.pause_s, "mobility.synthetic");
            read(g, "sample_s", c.mobility.sample_s, "mobility.synthetic");
        }
    }
    validate(c);
    return c;
}

ScenarioConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
    const auto dir = std::filesystem::absolute(path).parent_path().string();
    return config_from_json(doc, dir);
}

json config_to_json(const ScenarioConfig& c) {
    json doc;
    doc["duration_s"] = c.duration_s;
    doc["token_interval_s"] = c.token_interval_s;
    doc["poll_interval_s"] = c.poll_interval_s;
    json h = json::array();
    for (const LevelSpec& l : c.hierarchy) {
        h.push_back({{"slot_size_s", l.slot_size_s},
                     {"validity_start_s", l.validity_start_s},
                     {"validity_end_s", l.validity_end_s}});
    }
    doc["hierarchy"] = h;
    doc["mode"] = std::string(to_string(c.mode));
    doc["num_rps"] = c.num_rps;
    doc["num_messages"] = c.num_messages;
    doc["message_window_min"] = {{"min_a", c.message_min_a},
                                 {"max_a", c.message_max_a},
                                 {"min_b", c.message_min_b},
                                 {"max_b", c.message_max_b}};
    doc["send_delay_min"] = {{"min", c.send_delay_min.min}, {"max", c.send_delay_min.max}};
    doc["area_side_m"] = {{"min", c.area_side_m.min}, {"max", c.area_side_m.max}};
    doc["repetitions"] = c.repetitions;
    doc["master_seed"] = c.master_seed;
    if (!c.sites.file.empty()) {
        doc["sites"] = {{"file", c.sites.file}};
    } else {
        doc["sites"] = {{"grid",
                         {{"rows", c.sites.grid_rows},
                          {"cols", c.sites.grid_cols},
                          {"spacing_m", c.sites.grid_spacing_m}}}};
    }
    doc["site_margin_m"] = c.site_margin_m;
    if (!c.mobility.trace_file.empty()) {
        doc["mobility"] = {{"trace", c.mobility.trace_file}};
    } else {
        doc["mobility"] = {{"synthetic",
                            {{"num_ues", c.mobility.num_ues},
                             {"speed_mps", c.mobility.speed_mps},
                             {"pause_s", c.mobility.pause_s},
                             {"sample_s", c.mobility.sample_s}}}};
    }
    return doc;
}

TokenHierarchy effective_hierarchy(const ScenarioConfig& c, AggregationMode mode) {
    std::vector<HierarchyLevel> levels;
    if (mode == AggregationMode::kNone) {
        levels.push_back(HierarchyLevel{0, c.token_interval_s, 0, c.hierarchy.back().validity_end_s});
        return validate_hierarchy(std::move(levels));
    }
    for (std::size_t i = 0; i < c.hierarchy.size(); ++i) {
        const LevelSpec& l = c.hierarchy[i];
        const Seconds slot =
            mode == AggregationMode::kSpatial ? c.token_interval_s : l.slot_size_s;
        levels.push_back(
            HierarchyLevel{static_cast<int>(i), slot, l.validity_start_s, l.validity_end_s});
    }
    return validate_hierarchy(std::move(levels));
}

bool uses_spatial_clusters(AggregationMode mode) {
    return mode == AggregationMode::kSpatial || mode == AggregationMode::kSpatioTemporal;
}

}  // namespace cstm
