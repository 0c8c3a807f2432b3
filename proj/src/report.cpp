#include "cstm/report.hpp"

#include "cstm/errors.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace cstm {

using nlohmann::json;

namespace {

json field_value(const MetricField& f) {
    if (f.is_count) return static_cast<std::uint64_t>(f.value);
    return f.value;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::string csv_number(double v) {
    std::ostringstream s;
    s << std::setprecision(17) << v;
    return s.str();
}

}  // namespace

json metrics_to_json(const std::vector<ModeResult>& results) {
    json modes = json::array();
    for (const ModeResult& r : results) {
        json reps = json::array();
        for (const RunMetrics& m : r.repetitions) {
            json row = json::object();
            for (const MetricField& f : metric_fields(m)) row[f.name] = field_value(f);
            reps.push_back(row);
        }
        json agg = json::object();
        for (const auto& [name, stat] : aggregate(r.repetitions)) {
            agg[name] = {{"mean", stat.mean}, {"stddev", stat.stddev}};
        }
        modes.push_back({{"mode", std::string(to_string(r.mode))},
                         {"repetitions", reps},
                         {"aggregate", agg}});
    }
    return json{{"modes", modes}};
}

std::string metrics_to_csv(const std::vector<ModeResult>& results) {
    std::ostringstream out;
    out << "mode,repetition";
    for (const MetricField& f : metric_fields(RunMetrics{})) out << ',' << f.name;
    out << '\n';
    for (const ModeResult& r : results) {
        for (std::size_t i = 0; i < r.repetitions.size(); ++i) {
            out << to_string(r.mode) << ',' << i;
            for (const MetricField& f : metric_fields(r.repetitions[i])) out << ',' << csv_number(f.value);
            out << '\n';
        }
        const auto agg = aggregate(r.repetitions);
        out << to_string(r.mode) << ",mean";
        for (const auto& [name, stat] : agg) out << ',' << csv_number(stat.mean);
        out << '\n' << to_string(r.mode) << ",stddev";
        for (const auto& [name, stat] : agg) out << ',' << csv_number(stat.stddev);
        out << '\n';
    }
    return out.str();
}

json make_run_report(const ScenarioConfig& config, const SeedProvenance& seeds,
                     const std::vector<ModeResult>& results, double runtime_s) {
    return json{{"config", config_to_json(config)},
                {"seed_provenance", {{"master_seed", seeds.master_seed}, {"source", seeds.source}}},
                {"metrics", metrics_to_json(results)},
                {"runtime_s", runtime_s}};
}

void write_outputs(const std::string& out_dir, const json& report,
                   const std::vector<ModeResult>& results) {
    namespace fs = std::filesystem;
    const fs::path dir(out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create output directory " + out_dir + ": " + ec.message());
    write_file(dir / "report.json", report.dump(2) + "\n");
    write_file(dir / "metrics.json", metrics_to_json(results).dump(2) + "\n");
    write_file(dir / "metrics.csv", metrics_to_csv(results));
}

std::string summary_table(const std::vector<ModeResult>& results) {
    std::ostringstream out;
    out << std::left << std::setw(6) << "mode" << std::right << std::setw(14) << "polls/UE"
        << std::setw(12) << "FP ratio" << std::setw(12) << "delivery" << std::setw(12)
        << "received" << '\n';
    for (const ModeResult& r : results) {
        const auto agg = aggregate(r.repetitions);
        auto mean_of = [&](const char* name) {
            for (const auto& [n, s] : agg) {
                if (n == name) return s.mean;
            }
            return 0.0;
        };
        out << std::left << std::setw(6) << to_string(r.mode) << std::right << std::fixed
            << std::setprecision(2) << std::setw(14) << mean_of("mean_polls_per_ue")
            << std::setprecision(4) << std::setw(12) << mean_of("false_positive_ratio")
            << std::setw(12) << mean_of("delivery_ratio") << std::setprecision(1) << std::setw(12)
            << mean_of("messages_received") << '\n';
    }
    return out.str();
}

}  // namespace cstm
