#include "gridsync/roa.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <cmath>
#include <limits>

#include "gridsync/errors.hpp"
#include "gridsync/model.hpp"
#include "gridsync/scan.hpp"

namespace gridsync {

const char* to_string(EtaSelector e) {
    return e == EtaSelector::eta_is_f2 ? "f2" : "h";
}

const char* to_string(CertVerdict v) {
    switch (v) {
        case CertVerdict::certified_sampled: return "certified_sampled";
        case CertVerdict::refuted: return "refuted";
        case CertVerdict::inconclusive: return "inconclusive";
    }
    return "?";
}

Vec eval_eta(const PowerSystem& sys, const SystemState& s, EtaSelector eta) {
    if (eta == EtaSelector::eta_is_h) return eval_h(sys, s);
    Vec f1, f2;
    eval_f(sys, s, f1, f2);
    return f2;
}

double KappaFn::operator()(double s) const { return c * std::pow(s, p); }

KappaFn KrasovskiiV::alpha() const {
    Eigen::SelfAdjointEigenSolver<Mat> es(P, Eigen::EigenvaluesOnly);
    return KappaFn{es.eigenvalues().minCoeff(), 2.0};
}

KappaFn KrasovskiiV::beta() const {
    Eigen::SelfAdjointEigenSolver<Mat> es(P, Eigen::EigenvaluesOnly);
    return KappaFn{es.eigenvalues().maxCoeff(), 2.0};
}

void KrasovskiiV::validate(const PowerSystem& sys) const {
    if (P.rows() != sys.n() || P.cols() != sys.n())
        throw StructuralError("P must be n x n");
    if ((P - P.transpose()).cwiseAbs().maxCoeff() > 1e-9)
        throw StructuralError("P must be symmetric");
    Eigen::SelfAdjointEigenSolver<Mat> es(P, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() <= 0.0)
        throw StructuralError("P must be positive definite");
    if (A.rows() != sys.n() || A.cols() > sys.n())
        throw StructuralError("A must be n x n_xi with n_xi <= n");
    // f = A xi must hold identically; probe at jittered states
    SystemState s = sys.flat_start();
    for (int trial = 0; trial < 3; ++trial) {
        for (int i = 0; i < s.x1.size(); ++i) s.x1(i) += 0.01 * (trial + 1) * (i + 1);
        for (int i = 0; i < s.x2.size(); ++i) s.x2(i) += 0.005 * (trial + 1) * (i + 2);
        const Vec f = eval_f_full(sys, s);
        const Vec xi = A.colPivHouseholderQr().solve(f);
        if ((A * xi - f).lpNorm<Eigen::Infinity>() > 1e-10 * std::max(1.0, f.norm()))
            throw StructuralError("f = A xi identity fails; relaxation matrix inconsistent");
    }
}

double krasovskii_value(const PowerSystem& sys, const Mat& P, const SystemState& s) {
    const Vec f = eval_f_full(sys, s);
    return f.dot(P * f);
}

Mat krasovskii_vdot_matrix(const PowerSystem& sys, const Mat& P, const Mat& A,
                           const SystemState& s) {
    const Mat J = eval_reduced_jacobian(sys, s);
    return A.transpose() * (P * J + J.transpose() * P) * A;
}

Mat make_pi_relaxation(const PowerSystem& sys) {
    const int n = sys.n();
    std::vector<int> kept;
    std::vector<std::pair<int, std::pair<int, double>>> zeta_rows;  // row -> (delta index, k2)
    for (const auto& b : sys.blocks()) {
        const DeviceModel& dev = sys.devices()[b.device_index].model;
        if (const auto* pi = std::get_if<ClassicalSgPi>(&dev)) {
            // x layout: zeta, omega | delta
            zeta_rows.push_back({b.x_off, {b.x_off + 2, pi->k2}});
            for (int i = 1; i < b.n1 + b.n2; ++i) kept.push_back(b.x_off + i);
        } else {
            for (int i = 0; i < b.n1 + b.n2; ++i) kept.push_back(b.x_off + i);
        }
    }
    std::sort(kept.begin(), kept.end());
    Mat A = Mat::Zero(n, static_cast<int>(kept.size()));
    auto xi_pos = [&](int full_index) {
        return static_cast<int>(std::lower_bound(kept.begin(), kept.end(), full_index) -
                                kept.begin());
    };
    for (int j = 0; j < static_cast<int>(kept.size()); ++j) A(kept[j], j) = 1.0;
    for (const auto& [row, dk] : zeta_rows) A(row, xi_pos(dk.first)) = -dk.second;
    return A;
}

SampleSet sample_sublevel(const PowerSystem& sys,
                          const std::function<double(const SystemState&)>& v_of, double level,
                          const SystemState& reference, const DomainBox& domain,
                          const SamplerConfig& cfg) {
    SampleSet out;
    const int n = sys.n();
    const double slack = std::max(1e-12 * std::abs(level), 1e-24);

    SystemState cur = reference;
    {
        const double v0 = v_of(cur);
        if (v0 > level + slack)
            throw StructuralError("sampler reference lies outside the sublevel set (V = " +
                                  std::to_string(v0) + ")");
    }

    Vec scale = cfg.step_scale;
    if (scale.size() == 0) {
        // per-axis extent of the set from the reference: double until rejected
        scale = Vec::Constant(n, 1e-4);
        const Vec x0 = sys.full_x(reference);
        for (int i = 0; i < n; ++i) {
            double s = 1e-4;
            for (int k = 0; k < 24; ++k) {
                SystemState trial;
                Vec x = x0;
                x(i) += s * 2.0;
                sys.split_x(x, trial.x1, trial.x2);
                bool ok = true;
                try {
                    trial.z = project_algebraic(sys, trial.x2, cur.z);
                } catch (const Error&) {
                    ok = false;
                }
                if (!ok || v_of(trial) > level + slack || !domain.contains_x(x) ||
                    !domain.contains_z(trial.z))
                    break;
                s *= 2.0;
            }
            scale(i) = s;
        }
    }

    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const Vec x_ref = sys.full_x(reference);
    Vec x_cur = x_ref;
    int accepted = 0;
    const long proposal_budget = 60L * (cfg.n_samples + cfg.burn_in);
    long proposals = 0;
    out.states.reserve(cfg.n_samples);
    while (accepted < cfg.n_samples + cfg.burn_in && proposals < proposal_budget) {
        ++proposals;
        Vec dir(n);
        for (int i = 0; i < n; ++i) dir(i) = gauss(rng) * scale(i);
        const double lam = 0.5 * std::abs(gauss(rng));
        const Vec x_new = x_cur + lam * dir;
        if (!domain.contains_x(x_new)) {
            ++out.boundary_contacts;
            continue;
        }
        SystemState trial;
        sys.split_x(x_new, trial.x1, trial.x2);
        try {
            trial.z = project_algebraic(sys, trial.x2, cur.z);
        } catch (const Error&) {
            ++out.projection_failures;
            continue;
        }
        if (!domain.contains_z(trial.z)) {
            ++out.boundary_contacts;
            continue;
        }
        if (v_of(trial) > level + slack) continue;
        x_cur = x_new;
        cur = trial;
        ++accepted;
        if (accepted > cfg.burn_in) out.states.push_back(cur);
    }
    if (out.states.empty()) out.states.push_back(reference);
    return out;
}

RoaCertificate certify_type1(const PowerSystem& sys, const KrasovskiiV& v,
                             const SystemState& reference, const DomainBox& domain,
                             const SamplerConfig& cfg) {
    v.validate(sys);
    RoaCertificate cert;
    cert.v_kind = "krasovskii";
    cert.level = v.level;

    auto v_of = [&](const SystemState& s) { return krasovskii_value(sys, v.P, s); };
    const SampleSet samples = sample_sublevel(sys, v_of, v.level, reference, domain, cfg);
    cert.samples = static_cast<int>(samples.states.size());
    cert.boundary_contacts = samples.boundary_contacts;

    const LmiScanResult scan = scan_lmi(sys, samples.states, v.P, v.A);
    cert.lmi_margin = scan.worst_lmi;
    cert.min_det_rcond = scan.min_rcond;
    cert.z_within_box = true;  // walk enforces the box; contacts are reported

    if (scan.first_violation >= 0) {
        cert.verdict = CertVerdict::refuted;
        cert.counterexample = samples.states[scan.first_violation];
        cert.detail = scan.lmi_max[scan.first_violation] >= 0.0
                          ? "matrix inequality fails at a sampled state (lambda_max = " +
                                std::to_string(scan.lmi_max[scan.first_violation]) + ")"
                          : "dg/dz condition collapses at a sampled state";
        return cert;
    }
    if (cert.samples < cfg.n_samples) {
        cert.verdict = CertVerdict::inconclusive;
        cert.detail = "sampler produced " + std::to_string(cert.samples) + " of " +
                      std::to_string(cfg.n_samples) + " requested samples";
        return cert;
    }
    cert.verdict = CertVerdict::certified_sampled;
    cert.detail = "all sampled states satisfy the decrease inequality and stay clear of the "
                  "impasse surface";
    return cert;
}

RoaCertificate certify_type2(const PowerSystem& sys, const TypeIIV& v,
                             const SystemState& reference, const DomainBox& domain,
                             const SamplerConfig& cfg) {
    RoaCertificate cert;
    cert.v_kind = "type2";
    cert.level = v.level;
    auto v_of = [&](const SystemState& s) { return v.value(sys, s); };
    const SampleSet samples = sample_sublevel(sys, v_of, v.level, reference, domain, cfg);
    cert.samples = static_cast<int>(samples.states.size());
    cert.boundary_contacts = samples.boundary_contacts;
    cert.z_within_box = true;

    constexpr double kSlack = 1e-10;
    cert.max_vdot = -std::numeric_limits<double>::infinity();
    cert.max_vddot = 0.0;
    double min_rcond = 1.0;
    for (const SystemState& s : samples.states) {
        const double val = v.value(sys, s);
        if (val < v.lower_bound - 1e-9) {
            cert.verdict = CertVerdict::refuted;
            cert.counterexample = s;
            cert.detail = "V drops below its declared lower bound";
            return cert;
        }
        const double vd = v.vdot(sys, s);
        const double eta_norm = eval_eta(sys, s, v.eta).norm();
        const double gap = vd + v.gamma(eta_norm);
        cert.max_vdot = std::max(cert.max_vdot, gap);
        if (gap > kSlack) {
            cert.verdict = CertVerdict::refuted;
            cert.counterexample = s;
            cert.detail = "V-dot + gamma(||eta||) = " + std::to_string(gap) + " > 0 at a sample";
            return cert;
        }
        if (v.vddot) {
            const double vdd = std::abs(v.vddot(sys, s));
            cert.max_vddot = std::max(cert.max_vddot, vdd);
            if (vdd > v.vddot_bound) {
                cert.verdict = CertVerdict::refuted;
                cert.counterexample = s;
                cert.detail = "|V-ddot| exceeds the declared bound (uniform continuity surrogate)";
                return cert;
            }
        }
        SystemState tmp = s;
        const JacobianBundle jac = eval_jacobians(sys, tmp);
        min_rcond = std::min(min_rcond, Eigen::PartialPivLU<Mat>(jac.dg_dz).rcond());
    }
    cert.min_det_rcond = min_rcond;
    if (cert.samples < cfg.n_samples) {
        cert.verdict = CertVerdict::inconclusive;
        cert.detail = "sampler produced " + std::to_string(cert.samples) + " of " +
                      std::to_string(cfg.n_samples) + " requested samples";
        return cert;
    }
    cert.verdict = CertVerdict::certified_sampled;
    cert.detail = "V bounded below, V-dot <= -gamma(||eta||), and V-ddot bounded on all samples";
    return cert;
}

RoaCertificate certify_type3(const PowerSystem& sys, const TypeIIIV& v,
                             const SystemState& reference, const DomainBox& domain,
                             const SamplerConfig& cfg) {
    RoaCertificate cert;
    cert.v_kind = "type3";
    cert.level = v.level;
    auto v_of = [&](const SystemState& s) { return v.value(sys, s); };
    const SampleSet samples = sample_sublevel(sys, v_of, v.level, reference, domain, cfg);
    cert.samples = static_cast<int>(samples.states.size());
    cert.boundary_contacts = samples.boundary_contacts;
    cert.z_within_box = true;

    constexpr double kSlack = 1e-10;
    constexpr double kZeroTol = 1e-7;
    cert.max_vdot = -std::numeric_limits<double>::infinity();
    bool linked = true;
    for (const SystemState& s : samples.states) {
        const double vd = v.vdot(sys, s);
        cert.max_vdot = std::max(cert.max_vdot, vd);
        if (vd > kSlack) {
            cert.verdict = CertVerdict::refuted;
            cert.counterexample = s;
            cert.detail = "V-dot = " + std::to_string(vd) + " > 0 inside the region";
            return cert;
        }
        if (std::abs(vd) <= kZeroTol) {
            if (!v.zero_set_implies_eta_zero || !v.zero_set_implies_eta_zero(sys, s))
                linked = false;
        }
    }
    if (cert.samples < cfg.n_samples) {
        cert.verdict = CertVerdict::inconclusive;
        cert.detail = "sampler produced " + std::to_string(cert.samples) + " of " +
                      std::to_string(cfg.n_samples) + " requested samples";
        return cert;
    }
    if (!linked) {
        cert.verdict = CertVerdict::inconclusive;
        cert.detail = "no certificate links the {V-dot = 0} samples to eta = 0";
        return cert;
    }
    cert.verdict = CertVerdict::certified_sampled;
    cert.detail = "V-dot <= 0 on the region; zero-derivative samples are pinned to eta = 0 by "
                  "the invariant-set certificate (" + v.certificate_note + ")";
    return cert;
}

namespace {

// Solve P M + M' P = -Q for symmetric P via the Kronecker linear system
// (sizes here are tiny).
Mat solve_lyapunov(const Mat& M, const Mat& Q) {
    const int n = static_cast<int>(M.rows());
    Mat K = Mat::Zero(n * n, n * n);
    // vec(P M) = (M' kron I) vec(P); vec(M' P) = (I kron M') vec(P)
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                K(i + j * n, i + k * n) += M(k, j);  // (M' kron I)
                K(i + j * n, k + j * n) += M(k, i);  // (I kron M')
            }
    Vec q(n * n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) q(i + j * n) = -Q(i, j);
    const Vec p = K.fullPivLu().solve(q);
    Mat P(n, n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) P(i, j) = p(i + j * n);
    return 0.5 * (P + P.transpose());
}

// Feasible starting metric built from the reference Jacobian: solve a
// Lyapunov equation on the stable invariant subspace (the zero mode of an
// equilibria continuum is projected out; it lies outside range(A)).
Mat lyapunov_seed(const Mat& J) {
    const int n = static_cast<int>(J.rows());
    Eigen::EigenSolver<Mat> es(J);
    int i0 = 0;
    double amin = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        const double a = std::abs(es.eigenvalues()(i));
        if (a < amin) {
            amin = a;
            i0 = i;
        }
    }
    if (amin > 1e-6) {
        // no zero mode: plain Lyapunov solve
        return solve_lyapunov(J, Mat::Identity(n, n));
    }
    Vec v0 = es.eigenvectors().col(i0).real();
    v0.normalize();
    Eigen::EigenSolver<Mat> est(J.transpose());
    int j0 = 0;
    amin = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        const double a = std::abs(est.eigenvalues()(i));
        if (a < amin) {
            amin = a;
            j0 = i;
        }
    }
    Vec w0 = est.eigenvectors().col(j0).real();
    w0 /= w0.dot(v0);
    const Mat Pi = Mat::Identity(n, n) - v0 * w0.transpose();
    Eigen::JacobiSVD<Mat> svd(Pi, Eigen::ComputeFullU);
    const Mat U = svd.matrixU().leftCols(n - 1);
    const Mat Jr = U.transpose() * J * U;
    const Mat Pr = solve_lyapunov(Jr, Mat::Identity(n - 1, n - 1));
    const Mat K = U.transpose() * Pi;
    Mat P = K.transpose() * Pr * K + w0 * w0.transpose();
    return 0.5 * (P + P.transpose());
}

Mat project_psd_floor(const Mat& P, double eps) {
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (P + P.transpose()));
    Vec ev = es.eigenvalues();
    for (int i = 0; i < ev.size(); ++i) ev(i) = std::max(ev(i), eps);
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

FitPResult fit_P(const PowerSystem& sys, const std::vector<SystemState>& sample_states,
                 const Mat& A, const FitPOptions& opt) {
    if (sample_states.empty()) throw StructuralError("fit_P needs at least one sample state");
    const int n = sys.n();
    std::vector<Mat> Js, JAs;
    Js.reserve(sample_states.size());
    JAs.reserve(sample_states.size());
    for (const SystemState& s : sample_states) {
        Js.push_back(eval_reduced_jacobian(sys, s));
        JAs.push_back(Js.back() * A);
    }

    Mat P = opt.lyapunov_seed ? lyapunov_seed(Js.front()) : Mat::Identity(n, n);
    P = project_psd_floor(P, opt.epsilon);

    FitPResult best;
    best.P = P;
    best.objective = std::numeric_limits<double>::infinity();

    for (int it = 0; it < opt.max_iter; ++it) {
        const LmiObjective obj = lmi_objective(JAs, P, A);
        if (obj.value < best.objective) {
            best.objective = obj.value;
            best.P = P;
        }
        if (best.objective < -opt.delta) {
            best.iterations = it;
            best.feasible = true;
            return best;
        }
        const Vec v = obj.top_eigvec;
        const Vec u = A * v;
        const Vec w = JAs[obj.argmax] * v;
        Mat G = u * w.transpose() + w * u.transpose();
        const double gn = G.norm();
        if (gn < 1e-14) break;
        const double step = opt.step0 / std::sqrt(static_cast<double>(it) + 1.0) / gn;
        P = project_psd_floor(P - step * G, opt.epsilon);
    }
    best.iterations = opt.max_iter;
    // the objective is homogeneous of degree one in P: any strictly negative
    // value scales to the requested margin
    if (best.objective < 0.0) {
        const double scale = std::max(1.0, 2.0 * opt.delta / -best.objective);
        best.P *= scale;
        best.objective *= scale;
        best.feasible = best.objective < -opt.delta;
    }
    return best;
}

CombinedVerdict theorem4_verdict(const PowerSystem& sys, const RoaCertificate& cert,
                                 const DetectabilityVerdict& detect) {
    (void)sys;
    if (cert.verdict != CertVerdict::certified_sampled)
        throw ClaimUnavailable("region certificate is not certified (" +
                               std::string(to_string(cert.verdict)) + ")");
    CombinedVerdict out;
    out.property1_claim = true;
    out.caveats.push_back("sampling evidence only: set membership and matrix inequalities were "
                          "checked at sampled states, not proved over the continuum");
    if (cert.boundary_contacts > 0)
        out.caveats.push_back("the sublevel component touches the working-region boundary (" +
                              std::to_string(cert.boundary_contacts) + " sampler contacts)");
    if (detect.verdict == SystemDetectability::as_detectable_if_nondegenerate) {
        out.convergence_claim = true;
        out.statement =
            "solutions from the certified set reach augmented synchronization (bounded voltages, "
            "vanishing z-velocity) and converge to the equilibrium set, provided the solution "
            "stays non-degenerate";
    } else {
        out.convergence_claim = false;
        out.statement =
            "solutions from the certified set reach augmented synchronization; convergence to "
            "the equilibrium set is not claimed (detectability unknown)";
        out.caveats.push_back("a dynamic device lacks a boundedness/invariant-set certificate");
    }
    return out;
}

}  // namespace gridsync
