#pragma once

#include <string>
#include <vector>

#include "gridsync/power_system.hpp"
#include "gridsync/simulate.hpp"

namespace gridsync {

enum class NonDegeneracyVerdict { non_degenerate, degenerate_rank, degenerate_unbounded, inconclusive };
const char* to_string(NonDegeneracyVerdict v);

/// Sample-wise evidence that dg/dx2 keeps full column rank and that the left
/// inverse composed with dg/dz stays bounded along a trajectory.
struct NonDegeneracyReport {
    std::vector<int> rank;          // per sample
    std::vector<double> pinv_norm;  // ||(dg/dx2)^+ dg/dz|| per sample
    double m_hat = 0.0;             // observed supremum
    int first_bad_sample = -1;
    NonDegeneracyVerdict verdict = NonDegeneracyVerdict::inconclusive;
};

struct NonDegeneracyOptions {
    double rank_tol = 1e-8;  // relative: sigma_min > rank_tol * sigma_max
    double m_cap = 1e6;
};

NonDegeneracyReport check_nondegeneracy(const PowerSystem& sys, const Trajectory& traj,
                                        const NonDegeneracyOptions& opt = {});
/// Same checks over an arbitrary batch of states.
NonDegeneracyReport check_nondegeneracy(const PowerSystem& sys,
                                        const std::vector<SystemState>& states,
                                        const NonDegeneracyOptions& opt = {});

/// Max over samples of || f2 + (dg/dx2)^+ (dg/dz) h ||; throws RankDeficiency
/// when the left inverse cannot be formed at a sample.
double verify_lemma1(const PowerSystem& sys, const Trajectory& traj);
double verify_lemma1(const PowerSystem& sys, const std::vector<SystemState>& states);

/// Hard-wired per-device-kind boundedness / invariant-set facts.
struct DeviceCertificate {
    std::string kind;
    bool x1_empty = false;
    bool holds_condition1 = false;  // bounded z_i, x2_i imply bounded x1_i
    bool holds_condition2 = false;  // only f1 == 0 solutions stay in M_i
    std::string justification1;
    std::string justification2;
    std::string assumptions;
};

/// Throws UnknownDeviceKind for kinds without a built-in certificate.
DeviceCertificate certify_device(const DeviceModel& dev);

enum class SystemDetectability { as_detectable_if_nondegenerate, unknown };
enum class TheoremRoute { thm1_no_x1, thm2_single_device, thm3_modular };
const char* to_string(SystemDetectability v);
const char* to_string(TheoremRoute r);

struct DetectabilityVerdict {
    std::vector<DeviceCertificate> certificates;  // one per attached dynamic device
    std::vector<int> certificate_bus;
    SystemDetectability verdict = SystemDetectability::unknown;
    TheoremRoute route = TheoremRoute::thm3_modular;
    std::string detail;
};

/// Compose per-device certificates; requires the modular-structure sparsity
/// check to pass (NotModular otherwise).
DetectabilityVerdict assess_detectability(const PowerSystem& sys);

/// Closed-form degeneration diagnostics for the one-axis generator block.
struct SgDegenerationDiagnostics {
    double det_value = 0.0;  // det of the 2x2 dg/dx2 block
    double bracket = 0.0;    // (x'_d - x_q)/x_q V cos(delta-theta) + E'_q
    double pe = 0.0;
    double qe = 0.0;
    bool is_degenerate = false;      // |bracket| <= tol
    bool assumption1_violated = false;  // V = 0 also makes dg/dz singular
};

SgDegenerationDiagnostics degeneration_diagnostics_sg(const FluxDecaySg& dev, double delta,
                                                      double eq_prime, double theta, double v,
                                                      double tol = 1e-9);

}  // namespace gridsync
