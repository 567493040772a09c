#include "gridsync/simulate.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>

#include "gridsync/equilibrium.hpp"
#include "gridsync/errors.hpp"

namespace gridsync {

bool DomainBox::contains_x(const Vec& x) const {
    return (x.array() >= x_lo.array()).all() && (x.array() <= x_hi.array()).all();
}

bool DomainBox::contains_z(const Vec& z) const {
    return (z.array() >= z_lo.array()).all() && (z.array() <= z_hi.array()).all();
}

DomainBox default_domain_box(const PowerSystem& sys) {
    DomainBox box;
    box.x_lo = Vec::Constant(sys.n(), -50.0);
    box.x_hi = Vec::Constant(sys.n(), 50.0);
    const auto& names = sys.state_names();
    for (int i = 0; i < sys.n(); ++i) {
        const std::string& nm = names[i];
        auto ends_with = [&](const char* suf) {
            const std::string s(suf);
            return nm.size() >= s.size() && nm.compare(nm.size() - s.size(), s.size(), s) == 0;
        };
        if (ends_with(".omega")) {
            box.x_lo(i) = -10.0;
            box.x_hi(i) = 10.0;
        } else if (ends_with(".delta")) {
            box.x_lo(i) = -2.0 * M_PI;
            box.x_hi(i) = 2.0 * M_PI;
        } else if (ends_with(".zeta")) {
            box.x_lo(i) = -5.0;
            box.x_hi(i) = 5.0;
        } else if (ends_with(".Eq_prime")) {
            box.x_lo(i) = 0.1;
            box.x_hi(i) = 3.0;
        } else if (ends_with(".P") || ends_with(".Q")) {
            box.x_lo(i) = -5.0;
            box.x_hi(i) = 5.0;
        }
    }
    box.z_lo.resize(sys.m());
    box.z_hi.resize(sys.m());
    for (int i = 0; i < sys.n_bus(); ++i) {
        box.z_lo(2 * i) = -M_PI;
        box.z_hi(2 * i) = M_PI;
        box.z_lo(2 * i + 1) = 0.5;
        box.z_hi(2 * i + 1) = 1.5;
    }
    return box;
}

const char* to_string(Termination t) {
    switch (t) {
        case Termination::reached_t_end: return "reached_t_end";
        case Termination::impasse: return "impasse";
        case Termination::left_domain: return "left_domain";
        case Termination::diverged: return "diverged";
    }
    return "?";
}

Vec project_algebraic(const PowerSystem& sys, const Vec& x2, const Vec& z_guess,
                      const ProjectionOptions& opt) {
    Vec z = z_guess;
    Vec g = eval_g(sys, x2, z);
    double gn = g.lpNorm<Eigen::Infinity>();
    for (int it = 0; it < opt.max_iter; ++it) {
        if (gn <= opt.g_tol) return z;
        SystemState s{Vec::Zero(sys.n1()), x2, z};
        const JacobianBundle jac = eval_jacobians(sys, s);
        Eigen::PartialPivLU<Mat> lu(jac.dg_dz);
        if (!(lu.rcond() > kSingularRcond))
            throw SingularAlgebraicJacobian("projection hit a singular dg/dz");
        const Vec dz = lu.solve(-g);
        double alpha = 1.0;
        for (int ls = 0; ls < 40; ++ls) {
            const Vec zt = z + alpha * dz;
            const Vec gt = eval_g(sys, x2, zt);
            const double gtn = gt.lpNorm<Eigen::Infinity>();
            if (gtn < gn || !std::isfinite(gtn)) {
                if (!std::isfinite(gtn)) break;
                z = zt;
                g = gt;
                gn = gtn;
                alpha = -1.0;
                break;
            }
            alpha *= 0.5;
        }
        if (alpha > 0.0)
            throw NewtonDivergence("algebraic projection stalled at ||g|| = " + std::to_string(gn));
    }
    if (gn <= opt.g_tol) return z;
    throw NewtonDivergence("algebraic projection did not converge (||g|| = " + std::to_string(gn) +
                           ")");
}

namespace {

// Dormand-Prince 5(4) coefficients.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

struct Rhs {
    const PowerSystem& sys;
    int n, m;

    // y = col(x_full, z)
    Vec operator()(const Vec& y) const {
        SystemState s;
        sys.split_x(y.head(n), s.x1, s.x2);
        s.z = y.tail(m);
        const JacobianBundle jac = eval_jacobians(sys, s);
        Vec f1, f2;
        eval_f(sys, s, f1, f2);
        Eigen::PartialPivLU<Mat> lu(jac.dg_dz);
        if (!(lu.rcond() > kSingularRcond))
            throw SingularAlgebraicJacobian("impasse during integration");
        Vec dy(n + m);
        Vec ffull(n);
        for (const auto& b : sys.blocks()) {
            ffull.segment(b.x_off, b.n1) = f1.segment(b.x1_off, b.n1);
            ffull.segment(b.x_off + b.n1, b.n2) = f2.segment(b.x2_off, b.n2);
        }
        dy.head(n) = ffull;
        dy.tail(m) = -lu.solve(jac.dg_dx2 * f2);
        return dy;
    }
};

}  // namespace

Trajectory integrate(const PowerSystem& sys, const SystemState& initial,
                     const IntegratorConfig& cfg, const DomainBox& domain, const VHook& v_hook) {
    const int n = sys.n(), m = sys.m();
    Trajectory traj;
    Rhs rhs{sys, n, m};

    {
        const Vec g0 = eval_g(sys, initial.x2, initial.z);
        if (g0.lpNorm<Eigen::Infinity>() > 1e3 * cfg.g_tol)
            throw StructuralError("integrate: initial state is not compatible (call "
                                  "project_algebraic first)");
    }

    Vec y(n + m);
    y.head(n) = sys.full_x(initial);
    y.tail(m) = initial.z;

    auto record = [&](double t, const Vec& yv) -> bool {
        SystemState s;
        sys.split_x(yv.head(n), s.x1, s.x2);
        s.z = yv.tail(m);
        const JacobianBundle jac = eval_jacobians(sys, s);
        AlgebraicSolveInfo info;
        Vec h;
        try {
            h = eval_h(sys, s, jac, &info);
        } catch (const SingularAlgebraicJacobian&) {
            traj.termination = Termination::impasse;
            return false;
        }
        Vec f1, f2;
        eval_f(sys, s, f1, f2);
        traj.times.push_back(t);
        traj.states.push_back(s);
        traj.zdot_norm.push_back(h.norm());
        traj.f_norm.push_back(std::sqrt(f1.squaredNorm() + f2.squaredNorm()));
        traj.det_sign.push_back(info.sign_det);
        traj.det_logabs.push_back(info.logabs_det);
        if (v_hook) traj.v_value.push_back(v_hook(sys, s));
        return true;
    };

    if (!record(0.0, y)) return traj;

    double t = 0.0;
    double dt = std::min(cfg.initial_step, cfg.max_step);
    int accepted_since_projection = 0;
    Vec k1, k2, k3, k4, k5, k6, k7;
    bool have_k1 = false;

    while (t < cfg.t_end) {
        dt = std::min(dt, cfg.t_end - t);
        bool step_ok = false;
        Vec y5;
        try {
            if (!have_k1) k1 = rhs(y);
            k2 = rhs(y + dt * (a21 * k1));
            k3 = rhs(y + dt * (a31 * k1 + a32 * k2));
            k4 = rhs(y + dt * (a41 * k1 + a42 * k2 + a43 * k3));
            k5 = rhs(y + dt * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
            k6 = rhs(y + dt * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
            y5 = y + dt * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
            k7 = rhs(y5);
            const Vec err = dt * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
            double err_norm = 0.0;
            for (int i = 0; i < n + m; ++i) {
                const double sc =
                    cfg.abs_tol + cfg.rel_tol * std::max(std::abs(y(i)), std::abs(y5(i)));
                err_norm = std::max(err_norm, std::abs(err(i)) / sc);
            }
            if (!std::isfinite(err_norm)) {
                traj.termination = Termination::diverged;
                return traj;
            }
            if (err_norm <= 1.0) {
                step_ok = true;
                t += dt;
                y = y5;
                k1 = k7;  // first-same-as-last
                have_k1 = true;
            }
            const double fac =
                std::clamp(0.9 * std::pow(std::max(err_norm, 1e-10), -0.2), 0.2, 5.0);
            dt = std::min(dt * fac, cfg.max_step);
        } catch (const SingularAlgebraicJacobian&) {
            traj.termination = Termination::impasse;
            return traj;
        }
        if (!step_ok) continue;

        // drift control: re-project z, holding x fixed
        ++accepted_since_projection;
        SystemState s;
        sys.split_x(y.head(n), s.x1, s.x2);
        s.z = y.tail(m);
        const double drift = eval_g(sys, s.x2, s.z).lpNorm<Eigen::Infinity>();
        if (drift > cfg.g_drift_tol || accepted_since_projection >= cfg.reprojection_interval) {
            try {
                ProjectionOptions popt;
                popt.g_tol = cfg.g_tol;
                y.tail(m) = project_algebraic(sys, s.x2, s.z, popt);
                have_k1 = false;
            } catch (const SingularAlgebraicJacobian&) {
                traj.termination = Termination::impasse;
                return traj;
            } catch (const NewtonDivergence&) {
                traj.termination = Termination::diverged;
                return traj;
            }
            accepted_since_projection = 0;
        }

        if (!y.allFinite()) {
            traj.termination = Termination::diverged;
            return traj;
        }
        if (!record(t, y)) return traj;
        if (!domain.contains_x(y.head(n)) || !domain.contains_z(y.tail(m))) {
            traj.termination = Termination::left_domain;
            return traj;
        }
    }
    traj.termination = Termination::reached_t_end;
    return traj;
}

namespace {

int window_start_index(const Trajectory& traj, double window) {
    const double t_end = traj.times.back();
    const double span = t_end - traj.times.front();
    if (window <= 0.0) window = 0.2 * span;
    if (window > span + 1e-12)
        throw WindowTooLong("trailing window exceeds trajectory span");
    const double t0 = t_end - window;
    int k = 0;
    while (k + 1 < traj.size() && traj.times[k] < t0) ++k;
    return k;
}

}  // namespace

Property1Result check_property1(const Trajectory& traj, const DomainBox& domain,
                                double zdot_threshold, double window) {
    if (traj.termination != Termination::reached_t_end)
        throw StructuralError("check_property1 requires a trajectory that reached t_end");
    Property1Result r;
    r.threshold = zdot_threshold;
    const int k0 = window_start_index(traj, window);
    r.window = traj.times.back() - traj.times[k0];
    r.trailing_zdot_max = 0.0;
    for (int k = k0; k < traj.size(); ++k)
        r.trailing_zdot_max = std::max(r.trailing_zdot_max, traj.zdot_norm[k]);
    r.z_bounded = true;
    for (const SystemState& s : traj.states)
        if (!domain.contains_z(s.z)) r.z_bounded = false;
    r.holds = r.z_bounded && r.trailing_zdot_max <= zdot_threshold;
    return r;
}

Property2Result check_property2(const Trajectory& traj, const PowerSystem& sys, double f_threshold,
                                double dist_tol, double window) {
    if (traj.termination != Termination::reached_t_end)
        throw StructuralError("check_property2 requires a trajectory that reached t_end");
    Property2Result r;
    const int k0 = window_start_index(traj, window);
    for (int k = k0; k < traj.size(); ++k)
        r.trailing_f_max = std::max(r.trailing_f_max, traj.f_norm[k]);
    r.f_small = r.trailing_f_max <= f_threshold;

    // stage (b): Newton from the final state; a continuum pins its tangent
    // parameter at the final value
    const SystemState& fin = traj.back();
    try {
        EquilibriumOptions eopt;
        eopt.compute_spectrum = false;
        EquilibriumPoint eq;
        try {
            eq = solve_equilibrium(sys, fin, std::nullopt, eopt);
        } catch (const RankDeficientWithoutPin&) {
            // pin the first PI integrator state at its final value
            for (const auto& b : sys.blocks()) {
                const DeviceModel& dev = sys.devices()[b.device_index].model;
                if (std::holds_alternative<ClassicalSgPi>(dev)) {
                    PinSpec pin{"zeta", fin.x1(b.x1_off)};
                    eq = solve_equilibrium(sys, fin, pin, eopt);
                    break;
                }
            }
        }
        if (eq.state.x1.size() == 0) {
            r.reason = "no equilibrium found";
        } else {
            double d2 = (eq.state.x1 - fin.x1).squaredNorm() +
                        (eq.state.x2 - fin.x2).squaredNorm() + (eq.state.z - fin.z).squaredNorm();
            r.distance = std::sqrt(d2);
            r.near_equilibrium = r.distance <= dist_tol;
        }
    } catch (const Error& e) {
        r.reason = e.what();
        r.near_equilibrium = false;
    }
    r.holds = r.f_small && r.near_equilibrium;
    return r;
}

}  // namespace gridsync
