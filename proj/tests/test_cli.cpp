#include "ccdd/cli/run.hpp"

#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sys/wait.h>

using namespace ccdd;
using namespace ccdd::cli;
using Catch::Approx;
namespace fs = std::filesystem;

namespace {
fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("ccdd_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

void write_text(const fs::path& p, const std::string& s) {
    std::ofstream f(p);
    f << s;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(CCDD_SENSE_BIN) + " " + args + " > /dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

json small_rabi() {
    json j = presets().at("fig2e");
    j["experiment"] = {{"pulsewidth_end_s", 200e-9}, {"pulsewidth_step_s", 2e-9}};
    j["simulation"] = {{"n_realizations", 8}};
    return j;
}
}  // namespace

TEST_CASE("presets are complete and schema-valid") {
    const auto p = presets();
    for (const char* name : {"fig2a", "fig2e", "fig3a", "fig3d", "fig4c", "fig4d", "si-fig3", "si-fig6"}) {
        REQUIRE(p.count(name) == 1);
        REQUIRE_NOTHROW(validate_schema(from_json(p.at(name))));
        REQUIRE_NOTHROW(validate_physics(from_json(p.at(name))));
    }
}

TEST_CASE("fig4c preset encodes the heterodyne settings") {
    const auto c = from_json(presets().at("fig4c"));
    REQUIRE(c.kind == "heterodyne");
    REQUIRE(c.signal.omega_s.hz() == Approx(2310.008e6));
    REQUIRE((c.drive.omega0 - c.drive.epsilon_m).hz() == Approx(2310e6));
    REQUIRE(c.experiment.t_m == 10.0);
}

TEST_CASE("fig3d preset sweeps around 35 uT") {
    const auto c = from_json(presets().at("fig3d"));
    const double target = 35e-6 * c.constants.gamma_e;
    REQUIRE(c.experiment.amplitudes.front() < target);
    REQUIRE(c.experiment.amplitudes.back() > target);
    REQUIRE(c.drive.theta_m == Approx(std::numbers::pi / 2));
}

TEST_CASE("si-fig6 preset uses the short-pulse timing") {
    const auto c = from_json(presets().at("si-fig6"));
    const auto t = fast_mode_timing(c.drive, c.signal.g.x, c.readout);
    REQUIRE(c.timing.T_MW == Approx(t.T_MW));
    REQUIRE(c.timing.T_rep == Approx(t.T_rep));
}

TEST_CASE("schema violations are config errors") {
    json j = small_rabi();
    SECTION("unknown key") {
        j["drive"]["bogus"] = 1;
        REQUIRE_THROWS_AS(from_json(j), config_error);
    }
    SECTION("wrong type") {
        j["drive"]["Omega_hz"] = "fast";
        REQUIRE_THROWS_AS(from_json(j), config_error);
    }
    SECTION("schema version") {
        j["schema_version"] = 99;
        REQUIRE_THROWS_AS(from_json(j), config_error);
    }
    SECTION("missing section for the kind") {
        j.erase("drive");
        REQUIRE_THROWS_AS(validate_schema(from_json(j)), config_error);
    }
    SECTION("unknown kind") {
        j["kind"] = "teleport";
        REQUIRE_THROWS_AS(validate_schema(from_json(j)), config_error);
    }
    SECTION("signal vector length") {
        j["signal"]["g_hz"] = {1.0, 2.0};
        REQUIRE_THROWS_AS(from_json(j), config_error);
    }
}

TEST_CASE("config hash") {
    const auto a = from_json(small_rabi());
    auto b = a;
    REQUIRE(config_hash(a) == config_hash(b));
    REQUIRE(config_hash(a).size() == 16);
    b.output_dir = "elsewhere";
    REQUIRE(config_hash(a) == config_hash(b));
    b.seed = 2;
    REQUIRE(config_hash(a) != config_hash(b));
    // serialization round trip keeps the hash
    REQUIRE(config_hash(from_json(to_json(a))) == config_hash(a));
    REQUIRE(fnv1a("") == 0xcbf29ce484222325ULL);
    REQUIRE(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("physics validation") {
    auto c = from_json(small_rabi());
    c.drive.omega0 = frequency(2.3200004e9);
    REQUIRE_THROWS_AS(validate_physics(c), grid_error);
    c = from_json(small_rabi());
    c.drive.omega_m = frequency(90e6);
    REQUIRE_THROWS_AS(validate_physics(c), drive_resonance_error);
    c = from_json(presets().at("fig4c"));
    c.signal.omega_s = frequency(2310.060e6);
    REQUIRE_THROWS_AS(validate_physics(c), nyquist_error);
}

TEST_CASE("runs are reproducible and every output carries the hash") {
    const auto c = from_json(small_rabi());
    const auto a = run_experiment(c, true);
    const auto b = run_experiment(c, true);
    REQUIRE(a.files == b.files);
    const std::string h = config_hash(c);
    for (const char* f : {"rabi.csv", "rabi_fft.csv", "rabi.svg", "rabi_fft.svg", "manifest.json"}) {
        REQUIRE(a.files.count(f) == 1);
        REQUIRE(a.files.at(f).find(h) != std::string::npos);
    }
    REQUIRE(a.files.at("rabi.csv").rfind("# config_hash=" + h + "\npulsewidth,", 0) == 0);

    const auto dir = scratch("repro");
    write_outputs(a, dir);
    REQUIRE(mismatched_outputs(dir, h).empty());
    auto other = c;
    other.seed = 9;
    REQUIRE(mismatched_outputs(dir, config_hash(other)).size() == a.files.size());
    write_text(dir / "stray.csv", "# config_hash=0000000000000000\nx\n");
    REQUIRE(mismatched_outputs(dir, h) == std::vector<std::string>{"stray.csv"});
}

TEST_CASE("resonances and bloch kinds") {
    json r = presets().at("fig2a");
    r["kind"] = "resonances";
    const auto out = run_experiment(from_json(r), false);
    const auto j = json::parse(out.files.at("resonances.json"));
    REQUIRE(j.at("xy_hz").size() == 6);
    REQUIRE(j.at("z_hz")[0].get<double>() == Approx(90e6));

    json b = presets().at("fig2a");
    b["kind"] = "bloch";
    b["experiment"] = {{"duration_s", 100e-9}, {"sample_dt_s", 1e-9}, {"frame", "double_rotating"}, {"branch", "x"}};
    const auto ob = run_experiment(from_json(b), true);
    REQUIRE(ob.files.count("trajectory.csv") == 1);
    REQUIRE(ob.files.count("bloch_yz.svg") == 1);
}

TEST_CASE("CLI exit codes and output directory handling") {
    const auto dir = scratch("cli");
    const fs::path good = dir / "good.json";
    json j = presets().at("fig2a");
    j["kind"] = "resonances";
    write_text(good, j.dump());

    SECTION("success writes outputs") {
        REQUIRE(run_cli("resonances --config " + good.string() + " --out " + (dir / "ok").string()) == 0);
        REQUIRE(fs::exists(dir / "ok" / "resonances.json"));
        REQUIRE(fs::exists(dir / "ok" / "manifest.json"));
        REQUIRE(run_cli("verify --config " + good.string() + " --dir " + (dir / "ok").string()) == 0);
    }
    SECTION("environment override") {
        const std::string env = "CCDD_SENSE_OUT=" + (dir / "env").string() + " ";
        const int rc = std::system((env + CCDD_SENSE_BIN + " resonances --config " + good.string() + " > /dev/null").c_str());
        REQUIRE(WEXITSTATUS(rc) == 0);
        REQUIRE(fs::exists(dir / "env" / "resonances.json"));
    }
    SECTION("malformed config exits 2 with no outputs") {
        const fs::path bad = dir / "bad.json";
        write_text(bad, "{ \"schema_version\": 1, \"kind\": ");
        REQUIRE(run_cli("resonances --config " + bad.string() + " --out " + (dir / "bad_out").string()) == 2);
        REQUIRE_FALSE(fs::exists(dir / "bad_out"));
        json k = j;
        k["drive"]["typo_hz"] = 1.0;
        write_text(bad, k.dump());
        REQUIRE(run_cli("resonances --config " + bad.string() + " --out " + (dir / "bad_out").string()) == 2);
        REQUIRE_FALSE(fs::exists(dir / "bad_out"));
        REQUIRE(run_cli("rabi --config " + good.string() + " --out " + (dir / "bad_out").string()) == 2);
    }
    SECTION("physics violation exits 3 with no outputs") {
        json k = presets().at("fig4c");
        k["signal"]["omega_s_hz"] = 2310.0005e6;
        const fs::path bad = dir / "offgrid.json";
        write_text(bad, k.dump());
        REQUIRE(run_cli("heterodyne --config " + bad.string() + " --out " + (dir / "phys").string()) == 3);
        REQUIRE_FALSE(fs::exists(dir / "phys"));
    }
    SECTION("missing config file exits 2") {
        REQUIRE(run_cli("rabi --config /nonexistent.json") == 2);
    }
}

TEST_CASE("shipped preset files match the built-in presets") {
    for (const auto& [name, j] : presets()) {
        const fs::path f = fs::path(CCDD_PRESET_DIR) / (name + ".json");
        REQUIRE(fs::exists(f));
        std::ifstream in(f);
        REQUIRE(json::parse(in) == j);
    }
}

TEST_CASE("SVG renderer") {
    const auto s = render_svg({"t", "x", "y", {{{0, 1, 2}, {1, 4, 9}}}}, "config_hash=abc");
    REQUIRE(s.find("<svg") != std::string::npos);
    REQUIRE(s.find("<!-- config_hash=abc -->") != std::string::npos);
    REQUIRE(s.find("<polyline") != std::string::npos);
}
