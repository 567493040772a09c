#include <doctest.h>

#include <cmath>

#include "gridsync/errors.hpp"
#include "helpers.hpp"

using namespace gridsync;
using namespace testutil;

TEST_CASE("9-bus equilibrium with zeta pinned at zero reproduces the benchmark point") {
    const PowerSystem sys = make_9bus();
    const EquilibriumPoint ep = solve_9bus(sys);
    CHECK(ep.f_inf <= 1e-8);
    CHECK(ep.g_inf <= 1e-8);
    const Vec x = sys.full_x(ep.state);
    const double ref[8] = {0.0, 0.0, 0.0431, 0.0, 0.4756, 1.0288, 0.8500, -0.0365};
    for (int i = 0; i < 8; ++i) CHECK(std::abs(x(i) - ref[i]) <= 5e-4);
}

TEST_CASE("an inverter settles exactly on its references when they are network-consistent") {
    // construct consistency: pick the network state first, then read off the
    // references and the matching load
    const double theta1 = 0.08, v1 = 1.02, theta2 = 0.0, v2 = 1.0, x_line = 0.4;
    const double b12 = 1.0 / x_line;
    const double p1 = v1 * v2 * b12 * std::sin(theta1 - theta2);
    const double q1 = b12 * v1 * v1 - v1 * v2 * b12 * std::cos(theta1 - theta2);
    const double p2 = v2 * v1 * b12 * std::sin(theta2 - theta1);
    const double q2 = b12 * v2 * v2 - v2 * v1 * b12 * std::cos(theta2 - theta1);
    const PowerSystem sys = make_two_bus_system(
        InverterPq{10.0, 10.0, 0.1, 0.1, p1, q1, theta1, v1}, -p2, -q2, x_line);
    SystemState seed = sys.flat_start();
    const EquilibriumPoint ep = solve_equilibrium(sys, seed);
    CHECK(ep.state.x2(0) == doctest::Approx(p1).epsilon(1e-9));
    CHECK(ep.state.x2(1) == doctest::Approx(q1).epsilon(1e-9));
    CHECK(ep.state.z(0) == doctest::Approx(theta1).epsilon(1e-9));
    CHECK(ep.state.z(1) == doctest::Approx(v1).epsilon(1e-9));
}

TEST_CASE("the unpinned 9-bus solve reports the continuum") {
    const PowerSystem sys = make_9bus();
    CHECK_THROWS_AS(solve_equilibrium(sys, sys.flat_start()), RankDeficientWithoutPin);
}

TEST_CASE("continuum trace over zeta") {
    const PowerSystem sys = make_9bus();
    const EquilibriumPoint start =
        solve_equilibrium(sys, sys.flat_start(), PinSpec{"zeta", -0.1});
    EquilibriumOptions opt;
    opt.compute_spectrum = false;
    const ContinuumTrace trace =
        trace_continuum(sys, start, "zeta", ParameterRange{-0.1, 0.1, 0.01}, opt);
    REQUIRE(trace.points.size() == 21);

    const int iw1 = sys.state_index("1.omega");
    const int iw2 = sys.state_index("2.omega");
    double span[8] = {0, 0, 0, 0, 0, 0, 0, 0};
    Vec lo = sys.full_x(trace.points.front().state);
    Vec hi = lo;
    for (const EquilibriumPoint& ep : trace.points) {
        CHECK(ep.f_inf <= 1e-8);
        const Vec x = sys.full_x(ep.state);
        CHECK(std::abs(x(iw1)) <= 1e-8);
        CHECK(std::abs(x(iw2)) <= 1e-8);
        lo = lo.cwiseMin(x);
        hi = hi.cwiseMax(x);
    }
    (void)span;
    // the non-frequency channels all vary visibly along the continuum
    for (const char* name : {"1.delta", "2.delta", "Eq_prime", "3.P", "3.Q"})
        CHECK(hi(sys.state_index(name)) - lo(sys.state_index(name)) > 1e-3);

    // continuation consistency: re-solving a mid sample from a flat seed
    const EquilibriumPoint again =
        solve_equilibrium(sys, sys.flat_start(), PinSpec{"zeta", 0.05});
    const Vec a = sys.full_x(again.state);
    const Vec b = sys.full_x(trace.points[15].state);
    CHECK((a - b).lpNorm<Eigen::Infinity>() <= 1e-6);
}

TEST_CASE("the reduced jacobian has a zero eigenvalue along the continuum") {
    const PowerSystem sys = make_9bus();
    const EquilibriumPoint ep = solve_9bus(sys);
    double min_abs = 1e9;
    for (const auto& ev : ep.jacobian_spectrum) min_abs = std::min(min_abs, std::abs(ev));
    CHECK(min_abs <= 1e-6);

    // the zero eigenvector moves zeta: perturb along the continuum and confirm
    // a nearby equilibrium exists with a different zeta
    const EquilibriumPoint shifted =
        solve_equilibrium(sys, ep.state, PinSpec{"zeta", 0.001});
    CHECK(shifted.f_inf <= 1e-8);
    CHECK(std::abs(shifted.state.x1(0) - ep.state.x1(0)) == doctest::Approx(0.001));
}

TEST_CASE("a singleton range returns the start") {
    const PowerSystem sys = make_9bus();
    const EquilibriumPoint start = solve_9bus(sys);
    const ContinuumTrace trace =
        trace_continuum(sys, start, "zeta", ParameterRange{0.0, 0.0, 0.0});
    REQUIRE(trace.points.size() == 1);
    CHECK((sys.full_x(trace.points[0].state) - sys.full_x(start.state))
              .lpNorm<Eigen::Infinity>() <= 1e-9);
}

TEST_CASE("continuation over an absent parameter is a structural error") {
    const PowerSystem sys = make_two_bus_system(
        FluxDecaySg{0.02, 0.003, 1.0, 0.20, 0.896, 0.12, 0.7, 1.3}, 0.5, 0.1, 0.5);
    const EquilibriumPoint start = solve_equilibrium(sys, sys.flat_start());
    CHECK_THROWS_AS(trace_continuum(sys, start, "zeta", ParameterRange{0.0, 0.1, 0.01}),
                    StructuralError);
}

TEST_CASE("projected vector field points to the equilibria line, not to a point") {
    const PowerSystem sys = make_9bus();
    const EquilibriumPoint ep = solve_9bus(sys);
    const int n = sys.n();
    Vec s1 = Vec::Zero(n), s2 = Vec::Zero(n);
    for (int i = 0; i < n; ++i) {
        if (sys.state_names()[i].find(".omega") != std::string::npos)
            s2(i) = 1.0;
        else
            s1(i) = 1.0;
    }
    s1.normalize();
    s2.normalize();

    FieldGrid at_origin{0.0, 0.0, 0.0, 0.0, 1, 1};
    const auto center = tangent_plane_field(sys, ep, s1, s2, at_origin);
    REQUIRE(center.size() == 1);
    CHECK(center[0].ok);
    CHECK(std::abs(center[0].f_s1) <= 1e-8);
    CHECK(std::abs(center[0].f_s2) <= 1e-8);

    // moving along s1 stays (nearly) on the continuum: tiny restoring field
    FieldGrid along_s1{-0.05, 0.05, 0.0, 0.0, 5, 1};
    for (const FieldSample& fs : tangent_plane_field(sys, ep, s1, s2, along_s1)) {
        REQUIRE(fs.ok);
        CHECK(std::abs(fs.f_s2) <= 1e-3);
    }

    // moving along s2 (the frequencies) sees a restoring component
    FieldGrid along_s2{0.0, 0.0, 0.05, 0.05, 1, 1};
    const auto kicked = tangent_plane_field(sys, ep, s1, s2, along_s2);
    REQUIRE(kicked[0].ok);
    CHECK(kicked[0].f_s2 < 0.0);
}
