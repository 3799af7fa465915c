// ccdd-sense: config-driven experiment runner.
//
//   ccdd-sense <kind> --config <path> [--seed N] [--threads N] [--plots] [--out DIR]
//   ccdd-sense presets [--write DIR]
//   ccdd-sense verify --config <path> --dir DIR
//
// Exit codes: 0 ok, 1 runtime failure, 2 config/schema error, 3 physics/hardware validation.

#include "ccdd/cli/run.hpp"
#include "ccdd/parallel.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace ccdd;
using namespace ccdd::cli;

namespace {

int run_kind(const std::string& kind, const std::string& config_path, std::optional<std::uint64_t> seed,
             bool plots, const std::string& out_flag) {
    experiment_config cfg = load_config(config_path);
    if (!cfg.kind.empty() && cfg.kind != kind) {
        throw config_error("config kind '" + cfg.kind + "' does not match requested kind '" + kind + "'");
    }
    cfg.kind = kind;
    if (seed) cfg.seed = *seed;
    if (const char* env = std::getenv("CCDD_SENSE_OUT"); env && *env) cfg.output_dir = env;
    if (!out_flag.empty()) cfg.output_dir = out_flag;

    const auto t0 = std::chrono::steady_clock::now();
    const run_output out = run_experiment(cfg, plots);
    write_outputs(out, cfg.output_dir);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    json echo = out.summary;
    echo.erase("config");
    echo["output_dir"] = cfg.output_dir;
    echo["wall_time_s"] = wall;
    echo["threads"] = max_threads();
    std::cout << echo.dump(2) << '\n';
    return 0;
}

int run_presets(const std::string& dir) {
    const auto p = presets();
    if (dir.empty()) {
        for (const auto& [name, j] : p) std::cout << name << "  " << j.value("description", "") << '\n';
        return 0;
    }
    fs::create_directories(dir);
    for (const auto& [name, j] : p) {
        validate_schema(from_json(j));
        std::ofstream f(fs::path(dir) / (name + ".json"));
        f << j.dump(2) << '\n';
    }
    std::cout << "wrote " << p.size() << " presets to " << dir << '\n';
    return 0;
}

int run_verify(const std::string& config_path, const std::string& dir, std::optional<std::uint64_t> seed) {
    experiment_config cfg = load_config(config_path);
    if (seed) cfg.seed = *seed;
    const std::string h = config_hash(cfg);
    const auto bad = mismatched_outputs(dir, h);
    if (bad.empty()) {
        std::cout << "all outputs match config hash " << h << '\n';
        return 0;
    }
    for (const auto& b : bad) std::cerr << "hash mismatch: " << b << '\n';
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"CCDD sensing simulator"};
    app.require_subcommand(1);

    std::string config_path, out_dir, write_dir, verify_dir;
    std::optional<std::uint64_t> seed;
    std::size_t threads = 0;
    bool plots = false;

    std::vector<CLI::App*> kinds;
    for (const auto& k : experiment_kinds()) {
        auto* sub = app.add_subcommand(k, "run the " + k + " experiment");
        sub->add_option("--config", config_path, "experiment config (JSON)")->required();
        sub->add_option("--seed", seed, "override the config seed");
        sub->add_option("--threads", threads, "cap worker threads (0 = hardware)");
        sub->add_flag("--plots", plots, "also write SVG plots");
        sub->add_option("--out", out_dir, "output directory (overrides config and CCDD_SENSE_OUT)");
        kinds.push_back(sub);
    }
    auto* pre = app.add_subcommand("presets", "list presets, or write them as JSON files");
    pre->add_option("--write", write_dir, "directory to write preset configs into");
    auto* ver = app.add_subcommand("verify", "check that outputs carry the config's hash");
    ver->add_option("--config", config_path)->required();
    ver->add_option("--dir", verify_dir)->required();
    ver->add_option("--seed", seed);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (threads > 0) set_max_threads(threads);
        if (pre->parsed()) return run_presets(write_dir);
        if (ver->parsed()) return run_verify(config_path, verify_dir, seed);
        for (auto* k : kinds) {
            if (k->parsed()) return run_kind(k->get_name(), config_path, seed, plots, out_dir);
        }
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const physics_error& e) {
        std::cerr << "validation error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
