#pragma once

#include <functional>
#include <random>
#include <string>

#include "gridsync/casefile.hpp"
#include "gridsync/equilibrium.hpp"
#include "gridsync/model.hpp"
#include "gridsync/simulate.hpp"
#include "gridsync/smsl.hpp"

namespace testutil {

using namespace gridsync;

inline std::string data_path(const std::string& name) {
    return std::string(GRIDSYNC_DATA_DIR) + "/" + name;
}

inline std::string golden_path(const std::string& name) {
    return std::string(GRIDSYNC_GOLDEN_DIR) + "/" + name;
}

inline PowerSystem make_9bus() {
    return build_system(parse_case(data_path("case9.m")),
                        parse_device_file(data_path("devices_9bus.txt")));
}

inline ClassicalSgPi table_bus1_machine() {
    return ClassicalSgPi{0.075, 0.032, 1.01, 0.061, 0.02, 0.10, 0.72};
}

inline PowerSystem make_smsl(double p_load = 0.5, double q_load = 0.1, double x_line = 0.5) {
    return make_smsl_system(table_bus1_machine(), p_load, q_load, x_line);
}

inline EquilibriumPoint solve_9bus(const PowerSystem& sys) {
    return solve_equilibrium(sys, sys.flat_start(), PinSpec{"zeta", 0.0});
}

/// Independent central-difference Jacobian of a vector function.
inline Mat fd_jacobian(const std::function<Vec(const Vec&)>& fn, const Vec& at,
                       double step = 1e-6) {
    const Vec f0 = fn(at);
    Mat J(f0.size(), at.size());
    for (int j = 0; j < at.size(); ++j) {
        Vec p = at, m = at;
        p(j) += step;
        m(j) -= step;
        J.col(j) = (fn(p) - fn(m)) / (2.0 * step);
    }
    return J;
}

inline double rel_err(const Mat& a, const Mat& b) {
    const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
    return (a - b).cwiseAbs().maxCoeff() / scale;
}

/// Random states near a reference with z re-projected (all compatible).
inline std::vector<SystemState> random_compatible_states(const PowerSystem& sys,
                                                         const SystemState& ref, int count,
                                                         unsigned seed, double spread = 0.02) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<SystemState> out;
    const Vec x0 = sys.full_x(ref);
    while (static_cast<int>(out.size()) < count) {
        Vec x = x0;
        for (int i = 0; i < x.size(); ++i) x(i) += spread * gauss(rng);
        SystemState s;
        sys.split_x(x, s.x1, s.x2);
        try {
            s.z = project_algebraic(sys, s.x2, ref.z);
        } catch (const Error&) {
            continue;
        }
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace testutil
