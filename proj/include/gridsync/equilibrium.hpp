#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gridsync/power_system.hpp"

namespace gridsync {

struct EquilibriumPoint {
    SystemState state;
    double f_inf = 0.0;
    double g_inf = 0.0;
    /// Eigenvalues of the reduced Jacobian at the point; diagnostics only,
    /// never used for stability verdicts.
    std::vector<std::complex<double>> jacobian_spectrum;
};

/// Pin one state variable to a fixed value, replacing its own vector-field
/// row in the Newton system. Needed wherever the equilibrium set is a
/// continuum (the row it replaces is redundant there).
struct PinSpec {
    std::string variable;  // state-name suffix, e.g. "zeta" or "1.zeta"
    double value = 0.0;
};

struct EquilibriumOptions {
    double tol = 1e-11;   // inf-norm of col(f, g)
    int max_iter = 80;
    bool compute_spectrum = true;
};

EquilibriumPoint solve_equilibrium(const PowerSystem& sys, const SystemState& seed,
                                   const std::optional<PinSpec>& pin = std::nullopt,
                                   const EquilibriumOptions& opt = {});

struct ContinuumTrace {
    std::vector<double> parameter;        // pinned values
    std::vector<EquilibriumPoint> points;
    std::vector<double> mean_theta;
    std::vector<double> mean_v;
};

struct ParameterRange {
    double lo = 0.0, hi = 0.0, step = 0.0;
};

/// Natural continuation over the pinned parameter: each sample re-solves with
/// the previous solution as seed.
ContinuumTrace trace_continuum(const PowerSystem& sys, const EquilibriumPoint& start,
                               const std::string& parameter, const ParameterRange& range,
                               const EquilibriumOptions& opt = {});

struct FieldGrid {
    double a_min = -0.1, a_max = 0.1;
    double b_min = -0.1, b_max = 0.1;
    int na = 11, nb = 11;
};

struct FieldSample {
    double a = 0.0, b = 0.0;
    double f_s1 = 0.0, f_s2 = 0.0;
    bool ok = false;  // projection succeeded
};

/// Projection of the vector field onto the plane x* + a s1 + b s2 (z solved
/// per point). s1, s2 must be orthonormal directions in full state order.
std::vector<FieldSample> tangent_plane_field(const PowerSystem& sys, const EquilibriumPoint& at,
                                             const Vec& s1, const Vec& s2, const FieldGrid& grid);

}  // namespace gridsync
