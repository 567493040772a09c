#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "gridsync/model.hpp"
#include "gridsync/power_system.hpp"

namespace gridsync {

struct IntegratorConfig {
    double rel_tol = 1e-8;
    double abs_tol = 1e-10;
    double max_step = 0.25;              // s
    double initial_step = 1e-3;          // s
    int reprojection_interval = 20;      // accepted steps between projections
    double g_drift_tol = 1e-9;           // inf-norm of g that forces a projection
    double t_end = 100.0;                // s
    double g_tol = 1e-10;                // projection target
};

/// Working region D: a box over the full device-ordered state and over z.
struct DomainBox {
    Vec x_lo, x_hi;  // length n
    Vec z_lo, z_hi;  // length m

    bool contains_x(const Vec& x) const;
    bool contains_z(const Vec& z) const;
};

/// Generous defaults: theta in [-pi, pi], V in [0.5, 1.5], wide state bounds
/// chosen per state kind (omega, delta, ...).
DomainBox default_domain_box(const PowerSystem& sys);

enum class Termination { reached_t_end, impasse, left_domain, diverged };
const char* to_string(Termination t);

struct Trajectory {
    std::vector<double> times;
    std::vector<SystemState> states;
    std::vector<double> zdot_norm;            // ||h|| per sample
    std::vector<double> f_norm;               // ||f|| per sample
    std::vector<double> det_sign;             // sign det(dg/dz)
    std::vector<double> det_logabs;           // log10 |det(dg/dz)|
    std::vector<double> v_value;              // optional V-function channel
    Termination termination = Termination::reached_t_end;

    int size() const { return static_cast<int>(times.size()); }
    const SystemState& back() const { return states.back(); }
};

struct ProjectionOptions {
    double g_tol = 1e-10;   // inf-norm target
    int max_iter = 50;
};

/// Solve g(x2, z) = 0 for z by damped Newton from z_guess.
/// Throws NewtonDivergence or SingularAlgebraicJacobian.
Vec project_algebraic(const PowerSystem& sys, const Vec& x2, const Vec& z_guess,
                      const ProjectionOptions& opt = {});

/// Optional per-sample scalar recorded into Trajectory::v_value.
using VHook = std::function<double(const PowerSystem&, const SystemState&)>;

/// Integrate the embedded ODE (xdot = f, zdot = h) with adaptive 4/5-order
/// Runge-Kutta steps, periodic algebraic re-projection (z only; x is never
/// touched), and domain monitoring. The initial state must be compatible.
Trajectory integrate(const PowerSystem& sys, const SystemState& initial,
                     const IntegratorConfig& cfg, const DomainBox& domain,
                     const VHook& v_hook = nullptr);

struct Property1Result {
    bool holds = false;
    double trailing_zdot_max = 0.0;
    double threshold = 0.0;
    bool z_bounded = false;
    double window = 0.0;  // s
};

/// Trailing-window surrogate for "zdot -> 0 with z bounded".
/// window <= 0 selects the default (final 20% of the trajectory span).
Property1Result check_property1(const Trajectory& traj, const DomainBox& domain,
                                double zdot_threshold, double window = -1.0);

struct Property2Result {
    bool holds = false;
    bool f_small = false;           // stage (a)
    double trailing_f_max = 0.0;
    bool near_equilibrium = false;  // stage (b)
    double distance = 0.0;
    std::string reason;
};

/// Stage (a): trailing ||f|| below threshold. Stage (b): distance from the
/// final state to the equilibrium found by Newton seeded there.
Property2Result check_property2(const Trajectory& traj, const PowerSystem& sys,
                                double f_threshold, double dist_tol = 1e-3,
                                double window = -1.0);

}  // namespace gridsync
