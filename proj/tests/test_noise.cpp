#include "ccdd/noise.hpp"

#include <catch_amalgamated.hpp>

#include <atomic>
#include <cmath>

using namespace ccdd;
using Catch::Approx;

TEST_CASE("detuning spread follows T2star") {
    noise_config c;
    REQUIRE(c.detuning_sigma() == Approx(std::sqrt(2.0) / (two_pi * 60e-9)));
    REQUIRE(noise_config::noiseless().is_noiseless());
    REQUIRE_FALSE(c.is_noiseless());
}

TEST_CASE("noise validation") {
    noise_config c;
    c.T1 = 0.0;
    REQUIRE_THROWS_AS(c.validate(), config_error);
    c = {};
    c.drive_frac_sigma = 0.2;
    REQUIRE_THROWS_AS(c.validate(), config_error);
}

TEST_CASE("realizations are pure in (seed, index)") {
    noise_config c;
    const auto a = sample_realization(c, 17);
    const auto b = sample_realization(c, 17);
    REQUIRE(a.detuning == b.detuning);
    REQUIRE(a.drive_scale == b.drive_scale);
    c.seed = 2;
    REQUIRE(sample_realization(c, 17).detuning != a.detuning);
}

TEST_CASE("antithetic pairs mirror about the mean") {
    noise_config c;
    for (std::uint64_t k = 0; k < 10; ++k) {
        const auto a = sample_realization(c, 2 * k);
        const auto b = sample_realization(c, 2 * k + 1);
        REQUIRE(b.detuning == -a.detuning);
        REQUIRE(b.drive_scale - 1.0 == Approx(-(a.drive_scale - 1.0)));
    }
}

TEST_CASE("sample moments match the configured spreads") {
    noise_config c;
    c.antithetic = false;
    const int n = 40000;
    double s1 = 0, s2 = 0, d1 = 0, d2 = 0;
    for (int i = 0; i < n; ++i) {
        const auto r = sample_realization(c, static_cast<std::uint64_t>(i));
        s1 += r.detuning;
        s2 += r.detuning * r.detuning;
        d1 += r.drive_scale - 1.0;
        d2 += (r.drive_scale - 1.0) * (r.drive_scale - 1.0);
    }
    REQUIRE(std::abs(s1 / n) < 4.0 * c.detuning_sigma() / std::sqrt(n));
    REQUIRE(std::sqrt(s2 / n) == Approx(c.detuning_sigma()).epsilon(0.02));
    REQUIRE(std::sqrt(d2 / n) == Approx(c.drive_frac_sigma).epsilon(0.02));
    REQUIRE(std::abs(d1 / n) < 4.0 * c.drive_frac_sigma / std::sqrt(n));
}

TEST_CASE("ensemble dephasing follows the Gaussian free-induction decay") {
    // <cos(2 pi delta t)> over delta ~ N(0, sigma) = exp(-(t/T2*)^2)
    noise_config c;
    c.drive_frac_sigma = 0.0;
    std::vector<double> ts;
    for (int i = 0; i <= 20; ++i) ts.push_back(i * 5e-9);
    auto fid = [&](const disorder_realization& r) {
        std::vector<double> v;
        for (double t : ts) v.push_back(std::cos(two_pi * r.detuning * t));
        return v;
    };
    const auto e = ensemble_average(fid, c, 6000);
    for (std::size_t i = 0; i < ts.size(); ++i) {
        const double expect = std::exp(-std::pow(ts[i] / c.T2star, 2));
        REQUIRE(e.mean[i] == Approx(expect).margin(0.03));
    }
}

TEST_CASE("ensemble average is independent of the thread count") {
    noise_config c;
    auto fn = [](const disorder_realization& r) { return std::vector<double>{r.detuning, std::sin(r.drive_scale)}; };
    set_max_threads(1);
    const auto a = ensemble_average(fn, c, 300);
    set_max_threads(4);
    const auto b = ensemble_average(fn, c, 300);
    set_max_threads(0);
    REQUIRE(a.mean == b.mean);
    REQUIRE(a.std_error == b.std_error);
    REQUIRE(a.n_realizations == 300);
}

TEST_CASE("noiseless ensemble evaluates once") {
    std::atomic<int> calls{0};
    const auto e = ensemble_average(
        [&](const disorder_realization& r) {
            ++calls;
            return std::vector<double>{r.detuning, r.drive_scale};
        },
        noise_config::noiseless(), 50);
    REQUIRE(calls == 1);
    REQUIRE(e.mean == std::vector<double>{0.0, 1.0});
    REQUIRE(e.std_error == std::vector<double>{0.0, 0.0});
}

TEST_CASE("empty ensembles and ragged traces are errors") {
    noise_config c;
    REQUIRE_THROWS_AS(ensemble_average([](const disorder_realization&) { return std::vector<double>{}; }, c, 0),
                      config_error);
    REQUIRE_THROWS(ensemble_average(
        [](const disorder_realization& r) { return std::vector<double>(r.detuning > 0 ? 2 : 3, 0.0); }, c, 20));
}

TEST_CASE("T1 decay") {
    noise_config c;
    REQUIRE(apply_t1_decay(0.3, 0.0, c) == 0.3);
    REQUIRE(apply_t1_decay(0.3, c.T1, c) == Approx(0.3 / std::exp(1.0)));
    REQUIRE_THROWS_AS(apply_t1_decay(0.3, -1.0, c), config_error);
}

TEST_CASE("streams are well separated") {
    auto a = make_stream(1, 0);
    auto b = make_stream(1, 1);
    auto c = make_stream(2, 0);
    const auto x = a();
    REQUIRE(x != b());
    REQUIRE(x != c());
    REQUIRE(splitmix64(0) != splitmix64(1));
}
