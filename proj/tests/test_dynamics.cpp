#include "ccdd/dynamics.hpp"

#include <catch_amalgamated.hpp>

#include <random>

using namespace ccdd;
using namespace ccdd::literals;
using Catch::Approx;

namespace {
vec3 random_unit(std::mt19937_64& eng) {
    std::normal_distribution<double> n;
    vec3 v{n(eng), n(eng), n(eng)};
    return v * (1.0 / norm(v));
}
}  // namespace

TEST_CASE("static field precession matches the closed form") {
    // ds/dt = h x s with h = w z: x -> (cos wt, sin wt, 0)
    const double w = two_pi * 5e6;
    const auto grid = grid_for(1e-6, 1e-10, 1e-8);
    const auto tr = propagate_rotation([&](double) { return vec3{0.0, 0.0, w}; },
                                       bloch_vector{{1.0, 0.0, 0.0}, frame::lab}, grid);
    REQUIRE(tr.size() == 101);
    for (std::size_t i = 0; i < tr.size(); ++i) {
        const double t = tr.times[i];
        REQUIRE(tr.vectors[i].x == Approx(std::cos(w * t)).margin(1e-12));
        REQUIRE(tr.vectors[i].y == Approx(std::sin(w * t)).margin(1e-12));
    }
}

TEST_CASE("resonant Rabi flop from the rotating-frame field") {
    // field Omega along x: z -> cos(Omega t)
    drive_config d;
    d.epsilon_m = frequency(0.0);
    const auto grid = grid_for(50e-9, default_rotating_step(d), 1e-9);
    const auto tr = propagate_rotation([&](double t) { return double_rot_field(d, {}, t, resonance_branch::none).h; },
                                       bloch_vector{}, grid);
    // eps_m = 0 leaves no field in the doubly rotating frame: z stays put
    for (const auto& v : tr.vectors) REQUIRE(v.z == Approx(1.0));
    const auto tr1 = propagate_rotation([&](double t) { return single_rot_field(d, {}, t).h; },
                                        bloch_vector{{0.0, 0.0, 1.0}, frame::single_rotating}, grid);
    const double W = d.Omega.angular();
    for (std::size_t i = 0; i < tr1.size(); ++i) {
        // phase modulation is off, psi = 0: field = Omega x
        REQUIRE(tr1.vectors[i].z == Approx(std::cos(W * tr1.times[i])).margin(1e-9));
    }
}

TEST_CASE("rotation integrator agrees with the unitary oracle on random fields") {
    std::mt19937_64 eng(42);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        drive_config d;
        d.theta_m = two_pi * u(eng);
        d.epsilon_m = frequency(20e6 * u(eng));
        signal_config s;
        s.g = {3e6 * u(eng), 3e6 * u(eng), 3e6 * u(eng)};
        s.omega_s = frequency(2.2e9 + 0.2e9 * u(eng));
        s.phi_s = two_pi * u(eng);
        const disorder_realization dis{5e6 * (u(eng) - 0.5), 1.0 + 0.05 * (u(eng) - 0.5)};
        auto field = [&](double t) { return single_rot_field(d, s, t, dis).h; };
        const bloch_vector s0{random_unit(eng), frame::single_rotating};
        const auto grid = grid_for(400e-9, default_rotating_step(d), 10e-9);
        const auto a = propagate_rotation(field, s0, grid);
        const auto b = propagate_unitary_oracle(field, s0, grid);
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) REQUIRE(norm(a.vectors[i] - b.vectors[i]) < 1e-9);
    }
}

TEST_CASE("integrator preserves the Bloch vector length") {
    drive_config d;
    d.theta_m = 1.0;
    const auto grid = grid_for(2e-6, default_rotating_step(d), 1e-8);
    const auto tr = propagate_rotation([&](double t) { return single_rot_field(d, {}, t).h; },
                                       bloch_vector{{0.0, 0.0, 1.0}, frame::single_rotating}, grid);
    for (const auto& v : tr.vectors) REQUIRE(norm(v) == Approx(1.0).epsilon(1e-10));
}

TEST_CASE("too coarse a step is rejected") {
    time_grid g{0.0, 1e-6, 10, 1};
    REQUIRE_THROWS_AS(propagate_rotation([](double) { return vec3{0.0, 0.0, 1e6}; }, bloch_vector{}, g),
                      step_size_error);
    try {
        propagate_rotation([](double) { return vec3{0.0, 0.0, 1e6}; }, bloch_vector{}, g);
    } catch (const step_size_error& e) {
        REQUIRE(e.angle() == Approx(1.0));
    }
}

TEST_CASE("grid_for lands samples on the requested spacing") {
    const auto g = grid_for(1e-6, 3e-11, 1e-9);
    REQUIRE(g.steps % g.stride == 0);
    REQUIRE(g.dt <= 3e-11);
    REQUIRE(g.dt * static_cast<double>(g.stride) == Approx(1e-9));
    REQUIRE(g.end() == Approx(1e-6));
}

TEST_CASE("frame transforms invert each other") {
    drive_config d;
    std::mt19937_64 eng(3);
    for (int i = 0; i < 20; ++i) {
        const vec3 v = random_unit(eng);
        const double t = 1e-9 * i + 3.7e-8;
        const vec3 a = single_to_lab(lab_to_single(v, t, d), t, d);
        const vec3 b = double_to_single(single_to_double(v, t, d), t, d);
        REQUIRE(norm(a - v) < 1e-12);
        REQUIRE(norm(b - v) < 1e-12);
        REQUIRE(lab_z_from_double(v, t, d) == Approx(double_to_single(v, t, d).z).margin(1e-14));
    }
}

TEST_CASE("trajectory transform round trip") {
    drive_config d;
    bloch_trajectory tr;
    tr.tag = frame::lab;
    tr.times = {0.0, 1e-9, 2.5e-9};
    tr.vectors = {{1, 0, 0}, {0, 1, 0}, {0.6, 0, 0.8}};
    const auto back = transform(transform(tr, frame::double_rotating, d), frame::lab, d);
    REQUIRE(back.tag == frame::lab);
    for (std::size_t i = 0; i < tr.size(); ++i) REQUIRE(norm(back.vectors[i] - tr.vectors[i]) < 1e-12);
}

TEST_CASE("doubly rotating drive is a static eps_m field") {
    drive_config d;
    d.theta_m = 0.3;
    const auto f = double_rot_field(d, {}, 123e-9, resonance_branch::none);
    REQUIRE(f.h.x == 0.0);
    REQUIRE(f.h.y == Approx(d.epsilon_m.angular() * std::sin(0.3)));
    REQUIRE(f.h.z == Approx(d.epsilon_m.angular() * std::cos(0.3)));
}

TEST_CASE("resonant x signal adds a static g_x along x''") {
    drive_config d;
    signal_config s;
    s.g = {2e6, 0.0, 0.0};
    s.omega_s = d.omega0;
    const auto f0 = double_rot_field(d, s, 0.0, resonance_branch::x);
    const auto f1 = double_rot_field(d, s, 333e-9, resonance_branch::x);
    REQUIRE(f0.h.x == Approx(two_pi * 2e6));
    REQUIRE(f1.h.x == Approx(two_pi * 2e6));
}

TEST_CASE("branch names parse") {
    REQUIRE(parse_branch("x") == resonance_branch::x);
    REQUIRE(parse_branch("none") == resonance_branch::none);
    REQUIRE(to_string(resonance_branch::z) == "z");
    REQUIRE_THROWS_AS(parse_branch("w"), config_error);
}

TEST_CASE("single rotating model tracks the lab frame") {
    // the dropped 2 omega0 terms shrink as omega0 grows
    drive_config d;
    d.theta_m = 1.0;
    auto deviation = [&](double f0) {
        drive_config dd = d;
        dd.omega0 = frequency(f0);
        const auto lab = propagate_rotation([&](double t) { return lab_field(dd, {}, t).h; },
                                            bloch_vector{{0, 0, 1}, frame::lab},
                                            grid_for(100e-9, default_lab_step(dd, {}), 1e-9));
        const auto rot = propagate_rotation([&](double t) { return single_rot_field(dd, {}, t).h; },
                                            bloch_vector{{0, 0, 1}, frame::single_rotating},
                                            grid_for(100e-9, 1e-11, 1e-9));
        const auto lab1 = transform(lab, frame::single_rotating, dd);
        double m = 0.0;
        for (std::size_t i = 0; i < rot.size(); ++i) m = std::max(m, norm(lab1.vectors[i] - rot.vectors[i]));
        return m;
    };
    const double a = deviation(2.32e9);
    const double b = deviation(4.64e9);
    REQUIRE(a < 0.1);
    REQUIRE(b < 0.7 * a);
}

TEST_CASE("lab step keeps the rotation angle under the guard") {
    drive_config d;
    signal_config s;
    s.g = {5e6, 5e6, 5e6};
    const double dt = default_lab_step(d, s, 1.2, 10e6);
    const double bound = d.omega0.angular() + two_pi * 10e6 + 2.0 * 1.2 * d.Omega.angular() + 2.0 * two_pi * 15e6;
    REQUIRE(bound * dt < max_step_angle);
}

TEST_CASE("RWA check is small for weak modulation") {
    drive_config d;
    d.epsilon_m = 5_MHz;
    d.theta_m = 0.5;
    const auto r = lab_vs_rotating_check(d, {}, 100e-9, 1e-9);
    REQUIRE(r.max_deviation < 0.2);
    REQUIRE(r.lab_in_double.tag == frame::double_rotating);
}

TEST_CASE("resonance map lists six xy lines and two z lines") {
    drive_config d;
    const auto m = compute_resonance_map(d);
    const std::array<double, 6> xy{2.21e9, 2.23e9, 2.31e9, 2.33e9, 2.41e9, 2.43e9};
    for (std::size_t i = 0; i < 6; ++i) REQUIRE(m.xy_resonances[i].hz() == Approx(xy[i]));
    REQUIRE(m.z_resonances[0].hz() == Approx(90e6));
    REQUIRE(m.z_resonances[1].hz() == Approx(110e6));
    REQUIRE(m.distinct_xy().size() == 6);
    d.epsilon_m = frequency(0.0);
    REQUIRE(compute_resonance_map(d).distinct_xy().size() == 3);
}

TEST_CASE("trajectory CSV header") {
    bloch_trajectory tr;
    tr.times = {0.0};
    tr.vectors = {{0, 0, 1}};
    std::ostringstream os;
    write_csv(os, tr);
    REQUIRE(os.str().rfind("t_s,x,y,z,frame\n", 0) == 0);
    REQUIRE(os.str().find("double_rotating") != std::string::npos);
}
