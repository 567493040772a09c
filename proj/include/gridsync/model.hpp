#pragma once

#include <Eigen/Dense>

#include "gridsync/power_system.hpp"

namespace gridsync {

/// All first-order derivative blocks of (f, g) at one state.
/// df_dx is n x n in the full device-ordered state; dg_dx2 has columns over
/// the gathered x2 vector. dg_dz is nonsingular exactly where the index-1
/// assumption holds.
struct JacobianBundle {
    Mat df_dx;   // n x n
    Mat df_dz;   // n x m
    Mat dg_dx2;  // m x n2
    Mat dg_dz;   // m x m
};

/// Sign and log-magnitude of det(dg/dz) plus a reciprocal condition estimate,
/// as produced by the LU factorization.
struct AlgebraicSolveInfo {
    double sign_det = 0.0;
    double logabs_det = 0.0;
    double rcond = 0.0;
};

/// Residuals of the per-bus power balance, interleaved (P_1, Q_1, P_2, Q_2, ...):
/// device injection (or load draw, or zero) minus the network flow expression.
Vec eval_g(const PowerSystem& sys, const Vec& x2, const Vec& z);

/// Device vector fields, gathered in bus order.
void eval_f(const PowerSystem& sys, const SystemState& s, Vec& f1, Vec& f2);

/// Full device-ordered vector field col over devices of (f1_i, f2_i).
Vec eval_f_full(const PowerSystem& sys, const SystemState& s);

JacobianBundle eval_jacobians(const PowerSystem& sys, const SystemState& s);

/// Reciprocal-condition threshold below which dg/dz counts as singular.
inline constexpr double kSingularRcond = 1e-10;

/// z-velocity of the embedded ODE: -(dg/dz)^{-1} (dg/dx2) f2.
/// Throws SingularAlgebraicJacobian near the impasse surface.
Vec eval_h(const PowerSystem& sys, const SystemState& s);
Vec eval_h(const PowerSystem& sys, const SystemState& s, const JacobianBundle& jac,
           AlgebraicSolveInfo* info);

/// Reduced Jacobian of the embedded x-dynamics on the constraint manifold:
/// df/dx - df/dz (dg/dz)^{-1} dg/dx, where dg/dx has zero columns at x1
/// entries.
Mat eval_reduced_jacobian(const PowerSystem& sys, const SystemState& s);
Mat eval_reduced_jacobian(const PowerSystem& sys, const JacobianBundle& jac);

/// Verifies the cross-device Jacobian blocks vanish (each device's vector
/// field depends on its own states and its own bus pair only).
bool check_modular_structure(const PowerSystem& sys, const SystemState& s, double tol = 0.0);

}  // namespace gridsync
