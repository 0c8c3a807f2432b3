// cstm: scenario runs, mode sweeps, input generation and key-chain debugging.
//
// Exit codes: 0 success, 2 configuration/input error, 3 runtime error.

#include "cstm/crypto.hpp"
#include "cstm/errors.hpp"
#include "cstm/mobility.hpp"
#include "cstm/report.hpp"
#include "cstm/scenario.hpp"
#include "cstm/sim.hpp"
#include "cstm/topology.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

constexpr const char* kSeedEnv = "CSTM_MASTER_SEED";

struct ConfigFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

cstm::SeedProvenance apply_seed_override(cstm::ScenarioConfig& config) {
    const char* env = std::getenv(kSeedEnv);
    if (env == nullptr || *env == '\0') return {config.master_seed, "config"};
    try {
        std::size_t pos = 0;
        const unsigned long long v = std::stoull(env, &pos, 10);
        if (pos != std::string(env).size()) throw std::invalid_argument("trailing characters");
        config.master_seed = v;
    } catch (const std::exception&) {
        throw ConfigFailure(std::string(kSeedEnv) + " is not an unsigned integer: " + env);
    }
    return {config.master_seed, kSeedEnv};
}

int run_scenario(const std::string& config_path, const std::string& out_dir, bool all_modes) {
    cstm::ScenarioConfig config = cstm::load_config_file(config_path);
    const cstm::SeedProvenance seeds = apply_seed_override(config);
    const cstm::Scenario scenario = cstm::load_scenario(config);

    const auto start = std::chrono::steady_clock::now();
    std::vector<cstm::ModeResult> results;
    if (all_modes) {
        results = cstm::sweep(scenario);
    } else {
        results.push_back(cstm::run(scenario));
    }
    const double runtime =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    cstm::write_outputs(out_dir, cstm::make_run_report(config, seeds, results, runtime), results);
    std::cout << cstm::summary_table(results);
    std::cout << "wrote " << out_dir << "/report.json, metrics.json, metrics.csv\n";
    return kExitOk;
}

struct GenSitesArgs {
    std::string grid;
    double spacing = 1000;
    int random = 0;
    double width = 10000;
    double height = 10000;
    std::uint64_t seed = 1;
    std::string out;
};

int gen_sites(const GenSitesArgs& a) {
    std::vector<cstm::Site> sites;
    if (!a.grid.empty()) {
        const auto x = a.grid.find('x');
        if (x == std::string::npos) throw ConfigFailure("--grid expects ROWSxCOLS, got " + a.grid);
        int rows = 0, cols = 0;
        try {
            rows = std::stoi(a.grid.substr(0, x));
            cols = std::stoi(a.grid.substr(x + 1));
        } catch (const std::exception&) {
            throw ConfigFailure("--grid expects ROWSxCOLS, got " + a.grid);
        }
        sites = cstm::grid_sites(rows, cols, a.spacing);
    } else if (a.random > 0) {
        sites = cstm::random_sites(a.random, a.width, a.height, a.seed);
    } else {
        throw ConfigFailure("gen sites needs --grid or --random");
    }
    std::ofstream out(a.out, std::ios::binary);
    if (!out) throw ConfigFailure("cannot write " + a.out);
    cstm::write_sites(out, sites);
    std::cout << "wrote " << sites.size() << " sites to " << a.out << '\n';
    return kExitOk;
}

struct GenTraceArgs {
    std::string sites;
    double margin = cstm::kDefaultMarginM;
    cstm::WaypointParams params{50, 14, 0, 7200, 1, 1};
    bool positions = false;
    std::string out;
};

int gen_trace(const GenTraceArgs& a) {
    const cstm::CellMap map = cstm::load_sites_file(a.sites, a.margin);
    std::ofstream out(a.out, std::ios::binary);
    if (!out) throw ConfigFailure("cannot write " + a.out);
    if (a.positions) {
        const auto samples = cstm::generate_positions(map, a.params);
        cstm::write_positions(out, samples);
        std::cout << "wrote " << samples.size() << " position samples to " << a.out << '\n';
    } else {
        const cstm::MobilityTrace trace = cstm::generate_mobility(map, a.params);
        cstm::write_trace(out, trace);
        std::cout << "wrote cell trace of " << trace.ues.size() << " UEs to " << a.out << '\n';
    }
    return kExitOk;
}

struct DeriveArgs {
    std::string seed_hex;
    std::uint64_t level = 0;
    std::uint64_t slot = 0;
    std::uint64_t num_rps = 16;
};

int derive(const DeriveArgs& a) {
    cstm::Bytes raw;
    try {
        raw = cstm::from_hex(a.seed_hex);
    } catch (const std::invalid_argument& e) {
        throw ConfigFailure(std::string("--seed: ") + e.what());
    }
    if (raw.size() != 32) throw ConfigFailure("--seed must be 64 hex characters (32 bytes)");
    if (a.num_rps == 0) throw ConfigFailure("--num-rps must be >= 1");
    cstm::Seed seed;
    std::copy(raw.begin(), raw.end(), seed.bytes.begin());

    const cstm::Key key = cstm::derive_key(seed, a.level, a.slot);
    const cstm::RegionId region = cstm::region_id(key);
    std::cerr << "UNSAFE DEBUG OUTPUT: the key below is raw secret material\n";
    std::cout << "key       " << key.hex() << '\n'
              << "region_id " << region.digest.hex() << '\n'
              << "rp_id     " << cstm::rp_id(region).digest.hex() << '\n'
              << "rp_index  " << cstm::rp_index(region, a.num_rps) << '\n'
              << "num_rps   " << a.num_rps << '\n';
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cellular spatiotemporal multicast: protocol simulator and tools"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    auto* run = app.add_subcommand("run", "Run all repetitions of the configured mode");
    run->add_option("--config", config_path, "Scenario config (JSON)")->required();
    run->add_option("--out", out_dir, "Output directory")->required();

    auto* sweep = app.add_subcommand("sweep", "Run modes N, S, T and ST on identical inputs");
    sweep->add_option("--config", config_path, "Scenario config (JSON)")->required();
    sweep->add_option("--out", out_dir, "Output directory")->required();

    auto* gen = app.add_subcommand("gen", "Generate site files and synthetic traces");
    gen->require_subcommand(1);

    GenSitesArgs sites_args;
    auto* gen_sites_cmd = gen->add_subcommand("sites", "Write a site CSV");
    gen_sites_cmd->add_option("--grid", sites_args.grid, "Lattice ROWSxCOLS");
    gen_sites_cmd->add_option("--spacing", sites_args.spacing, "Lattice spacing in meters");
    gen_sites_cmd->add_option("--random", sites_args.random, "Number of uniformly placed sites");
    gen_sites_cmd->add_option("--width", sites_args.width, "Width of the random placement area");
    gen_sites_cmd->add_option("--height", sites_args.height, "Height of the random placement area");
    gen_sites_cmd->add_option("--seed", sites_args.seed, "RNG seed for random placement");
    gen_sites_cmd->add_option("--out", sites_args.out, "Output file")->required();

    GenTraceArgs trace_args;
    auto* gen_trace_cmd = gen->add_subcommand("trace", "Write a random-waypoint trace");
    gen_trace_cmd->add_option("--sites", trace_args.sites, "Site CSV")->required();
    gen_trace_cmd->add_option("--margin", trace_args.margin, "Bounding-box margin in meters");
    gen_trace_cmd->add_option("--ues", trace_args.params.num_ues, "Number of UEs");
    gen_trace_cmd->add_option("--speed", trace_args.params.speed_mps, "Speed in m/s");
    gen_trace_cmd->add_option("--pause", trace_args.params.pause_s, "Pause at waypoints in s");
    gen_trace_cmd->add_option("--duration", trace_args.params.duration_s, "Duration in s");
    gen_trace_cmd->add_option("--sample", trace_args.params.sample_s, "Sample period in s");
    gen_trace_cmd->add_option("--seed", trace_args.params.rng_seed, "RNG seed");
    gen_trace_cmd->add_flag("--positions", trace_args.positions,
                            "Emit time,ue,x,y samples instead of cell switches");
    gen_trace_cmd->add_option("--out", trace_args.out, "Output file")->required();

    DeriveArgs derive_args;
    auto* derive_cmd = app.add_subcommand(
        "derive", "UNSAFE debug aid: print a derived key and its identifier chain");
    derive_cmd->add_option("--seed", derive_args.seed_hex, "32-byte seed as hex")->required();
    derive_cmd->add_option("--level", derive_args.level, "Hierarchy level")->required();
    derive_cmd->add_option("--slot", derive_args.slot, "Slot index at that level")->required();
    derive_cmd->add_option("--num-rps", derive_args.num_rps, "Number of rendezvous points");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (run->parsed()) return run_scenario(config_path, out_dir, false);
        if (sweep->parsed()) return run_scenario(config_path, out_dir, true);
        if (gen_sites_cmd->parsed()) return gen_sites(sites_args);
        if (gen_trace_cmd->parsed()) return gen_trace(trace_args);
        if (derive_cmd->parsed()) return derive(derive_args);
    } catch (const cstm::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const cstm::LoadError& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const ConfigFailure& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitRuntime;
}
