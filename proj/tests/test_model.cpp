#include <doctest.h>

#include <Eigen/LU>
#include <cmath>

#include "gridsync/errors.hpp"
#include "helpers.hpp"

using namespace gridsync;
using namespace testutil;

namespace {

// state-dependent g as a function of z alone (x2 frozen), for FD oracles
Vec g_of_z(const PowerSystem& sys, const Vec& x2, const Vec& z) { return eval_g(sys, x2, z); }

Vec f_full_at(const PowerSystem& sys, const Vec& x_full, const Vec& z) {
    SystemState s;
    sys.split_x(x_full, s.x1, s.x2);
    s.z = z;
    return eval_f_full(sys, s);
}

}  // namespace

TEST_CASE("9-bus equilibrium satisfies g and f to 1e-6") {
    const PowerSystem sys = make_9bus();
    const EquilibriumPoint ep = solve_9bus(sys);
    CHECK(eval_g(sys, ep.state.x2, ep.state.z).lpNorm<Eigen::Infinity>() <= 1e-6);
    Vec f1, f2;
    eval_f(sys, ep.state, f1, f2);
    CHECK(std::max(f1.lpNorm<Eigen::Infinity>(), f2.lpNorm<Eigen::Infinity>()) <= 1e-6);
}

TEST_CASE("all-zero voltages on a shunt-free lossless net with zero injections give g = 0") {
    const PowerSystem sys =
        make_two_bus_system(InverterPq{1.0, 1.0, 0.1, 0.1, 0.0, 0.0, 0.0, 1.0}, 0.0, 0.0, 0.5);
    Vec x2 = Vec::Zero(2);  // inverter P = Q = 0
    Vec z = Vec::Zero(4);   // theta = V = 0 everywhere
    CHECK(eval_g(sys, x2, z).lpNorm<Eigen::Infinity>() == doctest::Approx(0.0));
}

TEST_CASE("inverter terminal balance reproduces the two-term flow expression") {
    // infinite-bus style check: bus 2 held at theta = 0, V = 1; lossless x = 0.2
    const PowerSystem sys =
        make_two_bus_system(InverterPq{1.0, 1.0, 0.1, 0.1, 0.9, 0.2, 0.0, 1.0}, 0.3, 0.05, 0.2);
    Vec x2(2);
    x2 << 0.9, 0.2;  // P, Q
    Vec z(4);
    z << 0.3, 1.05, 0.0, 1.0;
    const Vec g = eval_g(sys, x2, z);
    // hand-substituted: P - B12 V sin(theta), Q + B11 V^2 - (-B12 V cos(theta))
    CHECK(g(0) == doctest::Approx(-0.6514810849720326).epsilon(1e-12));
    CHECK(g(1) == doctest::Approx(-0.2969834320905688).epsilon(1e-12));
}

TEST_CASE("flux-decay delta-dot equals omega") {
    const PowerSystem sys = make_two_bus_system(
        FluxDecaySg{0.02, 0.003, 1.0, 0.20, 0.896, 0.12, 0.7, 1.3}, 0.5, 0.1, 0.5);
    SystemState s = sys.flat_start();
    s.x1(0) = 0.0;
    s.x2(0) = 0.4;
    Vec f1, f2;
    eval_f(sys, s, f1, f2);
    CHECK(f2(0) == doctest::Approx(0.0));
    s.x1(0) = 0.37;
    eval_f(sys, s, f1, f2);
    CHECK(f2(0) == doctest::Approx(0.37));
}

TEST_CASE("inverter at its references has zero P velocity") {
    const InverterPq inv{10.0, 10.0, 0.1, 0.1, 0.85, -0.0365, 0.0833, 1.0};
    const PowerSystem sys = make_two_bus_system(inv, 0.5, 0.1, 0.5);
    SystemState s = sys.flat_start();
    s.x2(0) = inv.P_ref;
    s.x2(1) = inv.Q_ref;
    s.z(0) = inv.theta_ref;
    s.z(1) = inv.V_ref;
    Vec f1, f2;
    eval_f(sys, s, f1, f2);
    CHECK(f2(0) == doctest::Approx(0.0));
}

TEST_CASE("inverter dg/dx2 block is the 2x2 identity") {
    const PowerSystem sys =
        make_two_bus_system(InverterPq{10.0, 10.0, 0.1, 0.1, 0.85, -0.0365, 0.0833, 1.0}, 0.5,
                            0.1, 0.5);
    SystemState s = sys.flat_start();
    s.x2 << 0.7, -0.1;
    s.z << 0.2, 1.1, -0.1, 0.95;
    const JacobianBundle jac = eval_jacobians(sys, s);
    CHECK(jac.dg_dx2(0, 0) == doctest::Approx(1.0));
    CHECK(jac.dg_dx2(1, 1) == doctest::Approx(1.0));
    CHECK(jac.dg_dx2(0, 1) == doctest::Approx(0.0));
    CHECK(jac.dg_dx2(1, 0) == doctest::Approx(0.0));
}

TEST_CASE("analytic jacobians match central finite differences at random compatible states") {
    const PowerSystem sys = make_9bus();
    const EquilibriumPoint ep = solve_9bus(sys);
    const auto states = random_compatible_states(sys, ep.state, 20, 11);
    for (const SystemState& s : states) {
        const JacobianBundle jac = eval_jacobians(sys, s);
        const Vec x_full = sys.full_x(s);

        const Mat dg_dz_fd =
            fd_jacobian([&](const Vec& z) { return g_of_z(sys, s.x2, z); }, s.z);
        CHECK(rel_err(jac.dg_dz, dg_dz_fd) <= 1e-5);

        const Mat dg_dx2_fd =
            fd_jacobian([&](const Vec& x2) { return eval_g(sys, x2, s.z); }, s.x2);
        CHECK(rel_err(jac.dg_dx2, dg_dx2_fd) <= 1e-5);

        const Mat df_dx_fd =
            fd_jacobian([&](const Vec& x) { return f_full_at(sys, x, s.z); }, x_full);
        CHECK(rel_err(jac.df_dx, df_dx_fd) <= 1e-5);

        const Mat df_dz_fd =
            fd_jacobian([&](const Vec& z) { return f_full_at(sys, x_full, z); }, s.z);
        CHECK(rel_err(jac.df_dz, df_dz_fd) <= 1e-5);
    }
}

TEST_CASE("one-axis machine det(dg/dx2) has the closed form") {
    const FluxDecaySg sg{0.02, 0.003, 1.0, 0.20, 0.896, 0.12, 0.7, 1.3};
    const PowerSystem sys = make_two_bus_system(sg, 0.5, 0.1, 0.5);
    SystemState s = sys.flat_start();
    s.x2 << 0.5, 1.03;
    s.z << 0.12, 1.02, -0.05, 0.97;
    const JacobianBundle jac = eval_jacobians(sys, s);
    const double det_num = jac.dg_dx2.topLeftCorner(2, 2).determinant();
    const double v = s.z(1), a = s.x2(0) - s.z(0);
    const double closed = v * v / (sg.xd_prime * sg.xd_prime) *
                          ((sg.xd_prime - sg.xq) / sg.xq * v * std::cos(a) + s.x2(1));
    CHECK(det_num == doctest::Approx(closed).epsilon(1e-10));
}

TEST_CASE("h vanishes at an equilibrium") {
    const PowerSystem sys = make_9bus();
    const EquilibriumPoint ep = solve_9bus(sys);
    CHECK(eval_h(sys, ep.state).lpNorm<Eigen::Infinity>() <= 1e-10);
}

TEST_CASE("h matches an independent dense solve after a frequency kick") {
    const PowerSystem sys = make_9bus();
    EquilibriumPoint ep = solve_9bus(sys);
    SystemState s = ep.state;
    s.x1(1) += 0.01;  // omega_1
    s.z = project_algebraic(sys, s.x2, s.z);
    const Vec h = eval_h(sys, s);
    CHECK(h.norm() > 0.0);

    // independent route: finite-difference jacobians and a dense LU
    const Mat dg_dz_fd = fd_jacobian([&](const Vec& z) { return eval_g(sys, s.x2, z); }, s.z);
    const Mat dg_dx2_fd = fd_jacobian([&](const Vec& x2) { return eval_g(sys, x2, s.z); }, s.x2);
    Vec f1, f2;
    eval_f(sys, s, f1, f2);
    const Vec h_oracle = dg_dz_fd.partialPivLu().solve(-(dg_dx2_fd * f2));
    CHECK((h - h_oracle).lpNorm<Eigen::Infinity>() <= 1e-5 * std::max(1.0, h.norm()));
}

TEST_CASE("two-bus PI machine keeps z velocity col(w, 0, w, 0)") {
    const PowerSystem sys = make_smsl();
    SystemState s = sys.flat_start();
    s.x1 << 0.1, 0.2;  // zeta, omega
    s.x2 << 0.4;
    s.z = project_algebraic(sys, s.x2, s.z);
    const Vec h = eval_h(sys, s);
    CHECK(h(0) == doctest::Approx(0.2).epsilon(1e-10));
    CHECK(h(1) == doctest::Approx(0.0));
    CHECK(h(2) == doctest::Approx(0.2).epsilon(1e-10));
    CHECK(h(3) == doctest::Approx(0.0));

    // equivalently, (dg/dz)^{-1} dg/dx2 = col(-1, 0, -1, 0)
    const JacobianBundle jac = eval_jacobians(sys, s);
    const Vec col = jac.dg_dz.partialPivLu().solve(jac.dg_dx2.col(0));
    CHECK(col(0) == doctest::Approx(-1.0).epsilon(1e-10));
    CHECK(col(1) == doctest::Approx(0.0));
    CHECK(col(2) == doctest::Approx(-1.0).epsilon(1e-10));
    CHECK(col(3) == doctest::Approx(0.0));
}

TEST_CASE("reduced jacobian equals df/dx when df/dz vanishes") {
    const PowerSystem sys = make_smsl();
    SystemState s = sys.flat_start();
    s.x1 << 0.05, 0.1;
    s.x2 << 0.3;
    s.z = project_algebraic(sys, s.x2, s.z);
    JacobianBundle jac = eval_jacobians(sys, s);
    jac.df_dz.setZero();
    const Mat j = eval_reduced_jacobian(sys, jac);
    CHECK(rel_err(j, jac.df_dx) == doctest::Approx(0.0));
}

TEST_CASE("reduced jacobian matches finite differences of the constrained vector field") {
    const PowerSystem sys = make_9bus();
    const EquilibriumPoint ep = solve_9bus(sys);
    SystemState s = ep.state;
    s.x1(1) += 0.005;
    s.z = project_algebraic(sys, s.x2, s.z);
    const Mat j = eval_reduced_jacobian(sys, s);

    // oracle: differentiate x -> f(x, z(x)) where z(x) solves g = 0
    const Vec x0 = sys.full_x(s);
    const Mat j_fd = fd_jacobian(
        [&](const Vec& x) {
            SystemState t;
            sys.split_x(x, t.x1, t.x2);
            t.z = project_algebraic(sys, t.x2, s.z);
            return eval_f_full(sys, t);
        },
        x0);
    CHECK(rel_err(j, j_fd) <= 1e-4);
}

TEST_CASE("cross-device jacobian blocks vanish and g is a first integral") {
    const PowerSystem sys = make_9bus();
    const EquilibriumPoint ep = solve_9bus(sys);
    const auto states = random_compatible_states(sys, ep.state, 10, 23);
    for (const SystemState& s : states) {
        CHECK(check_modular_structure(sys, s));
        const JacobianBundle jac = eval_jacobians(sys, s);
        Vec f1, f2;
        eval_f(sys, s, f1, f2);
        const Vec h = eval_h(sys, s, jac, nullptr);
        // d/dt g = dg/dx2 f2 + dg/dz h = 0 along the embedded flow
        CHECK((jac.dg_dx2 * f2 + jac.dg_dz * h).lpNorm<Eigen::Infinity>() <= 1e-8);
    }
}

TEST_CASE("eval_h throws near the impasse surface") {
    const PowerSystem sys =
        make_two_bus_system(InverterPq{1.0, 1.0, 0.1, 0.1, 0.1, 0.0, 0.0, 1.0}, 0.0, 0.0, 0.5);
    SystemState s = sys.flat_start();
    s.x2 << 0.0, 0.0;
    s.z << 0.0, 0.0, 0.0, 0.0;  // V = 0 collapses dg/dz
    CHECK_THROWS_AS(eval_h(sys, s), SingularAlgebraicJacobian);
}
