#pragma once

#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "gridsync/detectability.hpp"
#include "gridsync/power_system.hpp"
#include "gridsync/simulate.hpp"

namespace gridsync {

/// Output function whose convergence to zero defines the region of
/// attraction: the device residual f2 (default) or the algebraic velocity h.
/// f2 -> 0 implies h -> 0 wherever dg/dz is regular, which is why f2 is a
/// valid stand-in.
enum class EtaSelector { eta_is_f2, eta_is_h };
const char* to_string(EtaSelector e);

Vec eval_eta(const PowerSystem& sys, const SystemState& s, EtaSelector eta);

/// Class-K comparison function c * s^p (strictly increasing, zero at zero).
struct KappaFn {
    double c = 1.0;
    double p = 2.0;
    double operator()(double s) const;
};

/// Quadratic certificate V = f' P f with the constant relaxation f = A xi.
struct KrasovskiiV {
    Mat P;             // n x n symmetric positive definite
    Mat A;             // n x n_xi
    double level = 0.0;
    EtaSelector eta = EtaSelector::eta_is_f2;

    KappaFn alpha() const;  // lambda_min(P) s^2
    KappaFn beta() const;   // lambda_max(P) s^2

    /// Throws StructuralError when P is not symmetric positive definite or
    /// the identity f = A xi fails at probe states.
    void validate(const PowerSystem& sys) const;
};

double krasovskii_value(const PowerSystem& sys, const Mat& P, const SystemState& s);

/// A'(PJ + J'P)A at the state; the caller checks lambda_max < 0.
Mat krasovskii_vdot_matrix(const PowerSystem& sys, const Mat& P, const Mat& A,
                           const SystemState& s);

/// The relaxation matrix that drops each PI integrator row from xi
/// (zeta-dot = -k2 delta-dot); identity when the system has no PI device.
Mat make_pi_relaxation(const PowerSystem& sys);

/// User-supplied certificate checked sample-wise against the Barbalat route:
/// V bounded below, V-dot <= -gamma(||eta||), |V-ddot| bounded.
struct TypeIIV {
    std::function<double(const PowerSystem&, const SystemState&)> value;
    std::function<double(const PowerSystem&, const SystemState&)> vdot;
    std::function<double(const PowerSystem&, const SystemState&)> vddot;  // may be null
    double lower_bound = 0.0;
    KappaFn gamma;
    double vddot_bound = 0.0;  // uniform-continuity surrogate
    EtaSelector eta = EtaSelector::eta_is_f2;
    double level = 0.0;
};

/// Certificate with a sign-constant derivative on a compact region; the link
/// from {V-dot = 0} to {eta = 0} is discharged by a predicate justified by the
/// device certificates.
struct TypeIIIV {
    std::function<double(const PowerSystem&, const SystemState&)> value;
    std::function<double(const PowerSystem&, const SystemState&)> vdot;
    /// True when the state's V-dot-zero witness pins eta = 0 (e.g. omega = 0).
    std::function<bool(const PowerSystem&, const SystemState&)> zero_set_implies_eta_zero;
    std::string certificate_note;
    double level = 0.0;  // sublevel set used as the compact region R
};

enum class CertVerdict { certified_sampled, refuted, inconclusive };
const char* to_string(CertVerdict v);

struct RoaCertificate {
    std::string v_kind;  // "krasovskii" | "type2" | "type3"
    double level = 0.0;
    int samples = 0;
    double lmi_margin = 0.0;       // max over samples of lambda_max (< 0 when certified)
    double min_det_rcond = 0.0;
    double max_vdot = 0.0;         // type 2/3: max of V-dot + gamma(||eta||) (resp. V-dot)
    double max_vddot = 0.0;        // type 2
    bool z_within_box = false;
    int boundary_contacts = 0;     // sampler proposals rejected by the domain box
    CertVerdict verdict = CertVerdict::inconclusive;
    std::optional<SystemState> counterexample;
    std::string detail;
    const bool sampling_only = true;
};

struct SamplerConfig {
    int n_samples = 1000;
    unsigned seed = 2024;
    int burn_in = 32;
    /// Per-coordinate step scale in x; empty selects an automatic scale from
    /// the curvature of V at the reference state.
    Vec step_scale;
};

/// Hit-and-run walk over one connected component of {V <= l} within the
/// domain box, with z re-projected after every x move. Returns the chain of
/// accepted states (which all satisfy V <= l) and counts rejected
/// out-of-domain proposals.
struct SampleSet {
    std::vector<SystemState> states;
    int boundary_contacts = 0;
    int projection_failures = 0;
};

SampleSet sample_sublevel(const PowerSystem& sys,
                          const std::function<double(const SystemState&)>& v_of, double level,
                          const SystemState& reference, const DomainBox& domain,
                          const SamplerConfig& cfg);

RoaCertificate certify_type1(const PowerSystem& sys, const KrasovskiiV& v,
                             const SystemState& reference, const DomainBox& domain,
                             const SamplerConfig& cfg);

RoaCertificate certify_type2(const PowerSystem& sys, const TypeIIV& v,
                             const SystemState& reference, const DomainBox& domain,
                             const SamplerConfig& cfg);

RoaCertificate certify_type3(const PowerSystem& sys, const TypeIIIV& v,
                             const SystemState& reference, const DomainBox& domain,
                             const SamplerConfig& cfg);

struct FitPOptions {
    double epsilon = 1e-4;   // P >= epsilon I
    double delta = 1e-3;     // accept when objective < -delta
    int max_iter = 20000;
    double step0 = 0.1;
    bool lyapunov_seed = true;  // seed from a stable-subspace Lyapunov solve
};

struct FitPResult {
    bool feasible = false;
    Mat P;
    double objective = 0.0;  // max over samples of lambda_max(A'(PJ+J'P)A)
    int iterations = 0;
};

/// LMI feasibility by projected subgradient descent on the max-eigenvalue
/// objective over the sample Jacobians (projection = symmetrize + eigenvalue
/// clipping at epsilon).
FitPResult fit_P(const PowerSystem& sys, const std::vector<SystemState>& sample_states,
                 const Mat& A, const FitPOptions& opt = {});

struct CombinedVerdict {
    bool property1_claim = false;
    bool convergence_claim = false;
    std::string statement;
    std::vector<std::string> caveats;
};

/// Chains a certified region with a detectability verdict: solutions from the
/// certified set reach augmented synchronization, and converge to the
/// equilibrium set when the system is AS-detectable. Throws ClaimUnavailable
/// when the certificate is not certified.
CombinedVerdict theorem4_verdict(const PowerSystem& sys, const RoaCertificate& cert,
                                 const DetectabilityVerdict& detect);

}  // namespace gridsync
