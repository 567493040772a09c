#include "gridsync/equilibrium.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>
#include <cmath>

#include "gridsync/errors.hpp"
#include "gridsync/model.hpp"
#include "gridsync/simulate.hpp"

namespace gridsync {

namespace {

struct Residual {
    Vec r;      // col(f_full, g), pin row substituted
    double inf; // inf-norm
};

Residual eval_residual(const PowerSystem& sys, const Vec& u, int pin_index, double pin_value) {
    const int n = sys.n(), m = sys.m();
    SystemState s;
    sys.split_x(u.head(n), s.x1, s.x2);
    s.z = u.tail(m);
    Residual res;
    res.r.resize(n + m);
    res.r.head(n) = eval_f_full(sys, s);
    res.r.tail(m) = eval_g(sys, s.x2, s.z);
    if (pin_index >= 0) res.r(pin_index) = u(pin_index) - pin_value;
    res.inf = res.r.lpNorm<Eigen::Infinity>();
    return res;
}

Mat eval_newton_matrix(const PowerSystem& sys, const Vec& u, int pin_index) {
    const int n = sys.n(), m = sys.m();
    SystemState s;
    sys.split_x(u.head(n), s.x1, s.x2);
    s.z = u.tail(m);
    const JacobianBundle jac = eval_jacobians(sys, s);
    Mat J = Mat::Zero(n + m, n + m);
    J.topLeftCorner(n, n) = jac.df_dx;
    J.topRightCorner(n, m) = jac.df_dz;
    const auto& idx = sys.x2_index();
    for (int k = 0; k < sys.n2(); ++k) J.block(n, idx[k], m, 1) = jac.dg_dx2.col(k);
    J.bottomRightCorner(m, m) = jac.dg_dz;
    if (pin_index >= 0) {
        J.row(pin_index).setZero();
        J(pin_index, pin_index) = 1.0;
    }
    return J;
}

}  // namespace

EquilibriumPoint solve_equilibrium(const PowerSystem& sys, const SystemState& seed,
                                   const std::optional<PinSpec>& pin,
                                   const EquilibriumOptions& opt) {
    const int n = sys.n(), m = sys.m();
    int pin_index = -1;
    double pin_value = 0.0;
    if (pin) {
        pin_index = sys.state_index(pin->variable);  // throws StructuralError when absent
        pin_value = pin->value;
    }

    Vec u(n + m);
    u.head(n) = sys.full_x(seed);
    u.tail(m) = seed.z;

    Residual res = eval_residual(sys, u, pin_index, pin_value);
    for (int it = 0; it < opt.max_iter && res.inf > opt.tol; ++it) {
        const Mat J = eval_newton_matrix(sys, u, pin_index);
        Eigen::PartialPivLU<Mat> lu(J);
        if (!(lu.rcond() > 1e-13)) {
            if (pin_index < 0)
                throw RankDeficientWithoutPin(
                    "equilibrium Newton matrix is singular; the equilibrium set is likely a "
                    "continuum - supply a pin");
            throw NewtonDivergence("singular Newton matrix in pinned equilibrium solve");
        }
        const Vec du = lu.solve(-res.r);
        double alpha = 1.0;
        bool moved = false;
        for (int ls = 0; ls < 50; ++ls) {
            const Residual trial = eval_residual(sys, u + alpha * du, pin_index, pin_value);
            if (std::isfinite(trial.inf) && trial.inf < res.inf) {
                u += alpha * du;
                res = trial;
                moved = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!moved)
            throw NewtonDivergence("equilibrium Newton stalled at residual " +
                                   std::to_string(res.inf));
    }
    if (res.inf > opt.tol)
        throw NewtonDivergence("equilibrium Newton did not converge (residual " +
                               std::to_string(res.inf) + ")");

    if (pin_index < 0) {
        // isolated-equilibrium sanity: the unpinned Newton matrix must be regular
        const Mat J = eval_newton_matrix(sys, u, -1);
        Eigen::JacobiSVD<Mat> svd(J);
        const auto& sv = svd.singularValues();
        if (sv(sv.size() - 1) < 1e-8 * sv(0))
            throw RankDeficientWithoutPin("equilibrium is not isolated (sigma_min/sigma_max = " +
                                          std::to_string(sv(sv.size() - 1) / sv(0)) + ")");
    }

    EquilibriumPoint ep;
    sys.split_x(u.head(n), ep.state.x1, ep.state.x2);
    ep.state.z = u.tail(m);
    Vec f1, f2;
    eval_f(sys, ep.state, f1, f2);
    ep.f_inf = std::max(f1.lpNorm<Eigen::Infinity>(), f2.lpNorm<Eigen::Infinity>());
    ep.g_inf = eval_g(sys, ep.state.x2, ep.state.z).lpNorm<Eigen::Infinity>();
    if (opt.compute_spectrum) {
        const Mat Jr = eval_reduced_jacobian(sys, ep.state);
        Eigen::EigenSolver<Mat> es(Jr, false);
        for (int i = 0; i < Jr.rows(); ++i) ep.jacobian_spectrum.push_back(es.eigenvalues()(i));
    }
    return ep;
}

ContinuumTrace trace_continuum(const PowerSystem& sys, const EquilibriumPoint& start,
                               const std::string& parameter, const ParameterRange& range,
                               const EquilibriumOptions& opt) {
    sys.state_index(parameter);  // structural guard: parameter must exist
    if (range.step <= 0.0 && range.lo != range.hi)
        throw StructuralError("continuation step must be positive");
    ContinuumTrace trace;
    SystemState seed = start.state;
    const int steps =
        range.lo == range.hi ? 0 : static_cast<int>(std::round((range.hi - range.lo) / range.step));
    for (int k = 0; k <= steps; ++k) {
        const double val = range.lo + k * range.step;
        EquilibriumPoint ep;
        try {
            ep = solve_equilibrium(sys, seed, PinSpec{parameter, val}, opt);
        } catch (const NewtonDivergence& e) {
            throw NewtonDivergence("continuation failed at " + parameter + " = " +
                                   std::to_string(val) + ": " + e.what());
        }
        seed = ep.state;
        double mth = 0.0, mv = 0.0;
        for (int i = 0; i < sys.n_bus(); ++i) {
            mth += ep.state.z(2 * i);
            mv += ep.state.z(2 * i + 1);
        }
        trace.parameter.push_back(val);
        trace.mean_theta.push_back(mth / sys.n_bus());
        trace.mean_v.push_back(mv / sys.n_bus());
        trace.points.push_back(std::move(ep));
    }
    return trace;
}

std::vector<FieldSample> tangent_plane_field(const PowerSystem& sys, const EquilibriumPoint& at,
                                             const Vec& s1, const Vec& s2, const FieldGrid& grid) {
    if (std::abs(s1.norm() - 1.0) > 1e-9 || std::abs(s2.norm() - 1.0) > 1e-9 ||
        std::abs(s1.dot(s2)) > 1e-9)
        throw StructuralError("field directions must be orthonormal");
    const Vec x0 = sys.full_x(at.state);
    std::vector<FieldSample> out;
    out.reserve(static_cast<size_t>(grid.na) * grid.nb);
    for (int ia = 0; ia < grid.na; ++ia) {
        for (int ib = 0; ib < grid.nb; ++ib) {
            FieldSample fs;
            fs.a = grid.na == 1 ? grid.a_min
                                : grid.a_min + (grid.a_max - grid.a_min) * ia / (grid.na - 1);
            fs.b = grid.nb == 1 ? grid.b_min
                                : grid.b_min + (grid.b_max - grid.b_min) * ib / (grid.nb - 1);
            SystemState s;
            sys.split_x(x0 + fs.a * s1 + fs.b * s2, s.x1, s.x2);
            try {
                s.z = project_algebraic(sys, s.x2, at.state.z);
                const Vec f = eval_f_full(sys, s);
                fs.f_s1 = f.dot(s1);
                fs.f_s2 = f.dot(s2);
                fs.ok = true;
            } catch (const Error&) {
                fs.ok = false;
            }
            out.push_back(fs);
        }
    }
    return out;
}

}  // namespace gridsync
