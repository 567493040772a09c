#pragma once

#include <vector>

#include "gridsync/model.hpp"
#include "gridsync/power_system.hpp"

namespace gridsync {

/// Parallelism control for the sample-scan kernels (0 = library default).
void set_scan_threads(int n);
int scan_threads();

/// Per-sample rank / boundedness metrics of dg/dx2 (SVD based).
struct RankScanResult {
    std::vector<int> rank;
    std::vector<double> pinv_norm;          // ||(dg/dx2)^+ dg/dz||_2
    std::vector<char> numerical_failure;
    double m_hat = 0.0;                     // max over samples
};

RankScanResult scan_rank(const PowerSystem& sys, const std::vector<SystemState>& states,
                         double rank_tol);
RankScanResult scan_rank_serial(const PowerSystem& sys, const std::vector<SystemState>& states,
                                double rank_tol);

/// Per-sample certificate metrics: relaxed matrix-inequality eigenvalue,
/// algebraic-Jacobian condition, and sublevel value.
struct LmiScanResult {
    std::vector<double> lmi_max;    // lambda_max(A'(PJ + J'P)A)
    std::vector<double> det_rcond;  // rcond of dg/dz
    std::vector<double> v_value;    // f' P f
    double worst_lmi = 0.0;         // max over samples
    double min_rcond = 1.0;
    int first_violation = -1;       // lowest index with lmi_max >= 0 or rcond at threshold
};

LmiScanResult scan_lmi(const PowerSystem& sys, const std::vector<SystemState>& states,
                       const Mat& P, const Mat& A);
LmiScanResult scan_lmi_serial(const PowerSystem& sys, const std::vector<SystemState>& states,
                              const Mat& P, const Mat& A);

/// Inner kernel of the LMI fitting loop: with JA_k = J_k A precomputed,
/// evaluates lambda_max(A'P (J_k A) + (J_k A)' P A) per sample and reports the
/// worst sample and its top eigenvector.
struct LmiObjective {
    double value = 0.0;
    int argmax = -1;
    Vec top_eigvec;  // of the worst sample's symmetric matrix (size n_xi)
};

LmiObjective lmi_objective(const std::vector<Mat>& JA, const Mat& P, const Mat& A);
LmiObjective lmi_objective_serial(const std::vector<Mat>& JA, const Mat& P, const Mat& A);

}  // namespace gridsync
