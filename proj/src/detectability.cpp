#include "gridsync/detectability.hpp"

#include <Eigen/SVD>
#include <cmath>

#include "gridsync/errors.hpp"
#include "gridsync/model.hpp"
#include "gridsync/scan.hpp"

namespace gridsync {

const char* to_string(NonDegeneracyVerdict v) {
    switch (v) {
        case NonDegeneracyVerdict::non_degenerate: return "non_degenerate";
        case NonDegeneracyVerdict::degenerate_rank: return "degenerate_rank";
        case NonDegeneracyVerdict::degenerate_unbounded: return "degenerate_unbounded";
        case NonDegeneracyVerdict::inconclusive: return "inconclusive";
    }
    return "?";
}

const char* to_string(SystemDetectability v) {
    switch (v) {
        case SystemDetectability::as_detectable_if_nondegenerate:
            return "as_detectable_if_nondegenerate";
        case SystemDetectability::unknown: return "unknown";
    }
    return "?";
}

const char* to_string(TheoremRoute r) {
    switch (r) {
        case TheoremRoute::thm1_no_x1: return "thm1";
        case TheoremRoute::thm2_single_device: return "thm2";
        case TheoremRoute::thm3_modular: return "thm3";
    }
    return "?";
}

NonDegeneracyReport check_nondegeneracy(const PowerSystem& sys,
                                        const std::vector<SystemState>& states,
                                        const NonDegeneracyOptions& opt) {
    const RankScanResult scan = scan_rank(sys, states, opt.rank_tol);
    NonDegeneracyReport rep;
    rep.rank = scan.rank;
    rep.pinv_norm = scan.pinv_norm;
    rep.m_hat = scan.m_hat;
    rep.verdict = NonDegeneracyVerdict::non_degenerate;
    for (int k = 0; k < static_cast<int>(states.size()); ++k) {
        if (scan.numerical_failure[k]) {
            rep.verdict = NonDegeneracyVerdict::inconclusive;
            rep.first_bad_sample = k;
            break;
        }
        if (scan.rank[k] < sys.n2()) {
            rep.verdict = NonDegeneracyVerdict::degenerate_rank;
            rep.first_bad_sample = k;
            break;
        }
        if (scan.pinv_norm[k] > opt.m_cap) {
            rep.verdict = NonDegeneracyVerdict::degenerate_unbounded;
            rep.first_bad_sample = k;
            break;
        }
    }
    return rep;
}

NonDegeneracyReport check_nondegeneracy(const PowerSystem& sys, const Trajectory& traj,
                                        const NonDegeneracyOptions& opt) {
    return check_nondegeneracy(sys, traj.states, opt);
}

double verify_lemma1(const PowerSystem& sys, const std::vector<SystemState>& states) {
    double worst = 0.0;
    for (const SystemState& s : states) {
        const JacobianBundle jac = eval_jacobians(sys, s);
        Eigen::JacobiSVD<Mat> svd(jac.dg_dx2, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const auto& sv = svd.singularValues();
        if (sv(sv.size() - 1) <= 1e-12 * sv(0))
            throw RankDeficiency("dg/dx2 rank-deficient; left inverse unavailable");
        const Vec h = eval_h(sys, s, jac, nullptr);
        Vec f1, f2;
        eval_f(sys, s, f1, f2);
        // (dg/dx2)^+ (dg/dz) h  via SVD pseudo-inverse
        const Vec rhs = jac.dg_dz * h;
        const Vec pinv_apply =
            svd.matrixV() * (svd.singularValues().cwiseInverse().asDiagonal() *
                             (svd.matrixU().transpose() * rhs));
        worst = std::max(worst, (f2 + pinv_apply).norm());
    }
    return worst;
}

double verify_lemma1(const PowerSystem& sys, const Trajectory& traj) {
    return verify_lemma1(sys, traj.states);
}

DeviceCertificate certify_device(const DeviceModel& dev) {
    DeviceCertificate c;
    c.kind = device_kind_name(dev);
    if (std::holds_alternative<ClassicalSgPi>(dev)) {
        c.holds_condition1 = true;
        c.justification1 =
            "delta is the integral of omega, so bounded delta forces bounded omega; "
            "zeta(t) = zeta(0) - k2 (delta(t) - delta(0)) is then bounded too";
        c.holds_condition2 = true;
        c.justification2 =
            "on f2 = omega = 0 the only invariant motion keeps omega identically zero, "
            "hence omega-dot = 0 and zeta-dot = 0";
    } else if (std::holds_alternative<FluxDecaySg>(dev)) {
        c.holds_condition1 = true;
        c.justification1 = "delta is the integral of omega, so bounded delta forces bounded omega";
        c.holds_condition2 = true;
        c.justification2 =
            "f2 = (omega, Eq_prime-dot); omega identically zero on the invariant subset "
            "forces omega-dot = 0";
    } else if (std::holds_alternative<InverterPq>(dev)) {
        c.x1_empty = true;
        c.holds_condition1 = true;
        c.holds_condition2 = true;
        c.justification1 = "no x1 states";
        c.justification2 = "no x1 states";
    } else if (std::holds_alternative<ConstPqLoad>(dev)) {
        c.x1_empty = true;
        c.holds_condition1 = true;
        c.holds_condition2 = true;
        c.justification1 = "static device, vacuous";
        c.justification2 = "static device, vacuous";
    } else {
        throw UnknownDeviceKind("no built-in certificate for device kind");
    }
    c.assumptions = "V > 0 at the terminal bus";
    return c;
}

DetectabilityVerdict assess_detectability(const PowerSystem& sys) {
    // sparsity check at a generic state (entries exactly zero by construction,
    // but assert rather than assume)
    SystemState probe = sys.flat_start();
    for (int i = 0; i < probe.x1.size(); ++i) probe.x1(i) += 0.01 * (i + 1);
    for (int i = 0; i < probe.x2.size(); ++i) probe.x2(i) += 0.02 * (i + 1);
    for (int i = 0; i < sys.n_bus(); ++i) {
        probe.z(2 * i) += 0.005 * (i + 1);
        probe.z(2 * i + 1) += 0.001 * (i + 1);
    }
    if (!check_modular_structure(sys, probe))
        throw NotModular("cross-device Jacobian blocks are not zero");

    DetectabilityVerdict v;
    int dynamic_devices = 0;
    bool all_certified = true;
    for (const auto& ad : sys.devices()) {
        if (!is_dynamic(ad.model)) continue;
        ++dynamic_devices;
        try {
            v.certificates.push_back(certify_device(ad.model));
            v.certificate_bus.push_back(ad.bus);
        } catch (const UnknownDeviceKind&) {
            all_certified = false;
        }
    }
    if (sys.n1() == 0)
        v.route = TheoremRoute::thm1_no_x1;
    else if (dynamic_devices == 1)
        v.route = TheoremRoute::thm2_single_device;
    else
        v.route = TheoremRoute::thm3_modular;
    if (all_certified) {
        v.verdict = SystemDetectability::as_detectable_if_nondegenerate;
        v.detail = "all attached dynamic devices carry boundedness and invariant-set certificates";
    } else {
        v.verdict = SystemDetectability::unknown;
        v.detail = "at least one dynamic device has no certificate";
    }
    return v;
}

SgDegenerationDiagnostics degeneration_diagnostics_sg(const FluxDecaySg& dev, double delta,
                                                      double eq_prime, double theta, double v,
                                                      double tol) {
    if (v <= 0.0 && v != 0.0) throw StructuralError("V must be nonnegative");
    SgDegenerationDiagnostics d;
    const double a = delta - theta;
    d.bracket = (dev.xd_prime - dev.xq) / dev.xq * v * std::cos(a) + eq_prime;
    d.det_value = v * v / (dev.xd_prime * dev.xd_prime) * d.bracket;
    const double x2loc[2] = {delta, eq_prime};
    const DeviceModel dm = dev;
    const Injection inj = device_injection(dm, x2loc, theta, v);
    d.pe = inj.P;
    d.qe = inj.Q;
    d.is_degenerate = std::abs(d.bracket) <= tol;
    d.assumption1_violated = v == 0.0;
    return d;
}

}  // namespace gridsync
