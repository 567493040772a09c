#include "gridsync/scan.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>
#include <cmath>
#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace gridsync {

namespace {
int g_threads = 0;
}

void set_scan_threads(int n) { g_threads = n < 0 ? 0 : n; }

int scan_threads() {
#ifdef _OPENMP
    return g_threads > 0 ? g_threads : omp_get_max_threads();
#else
    return 1;
#endif
}

namespace {

struct RankSample {
    int rank = 0;
    double pinv_norm = 0.0;
    char failure = 0;
};

RankSample rank_one(const PowerSystem& sys, const SystemState& s, double rank_tol) {
    RankSample out;
    try {
        const JacobianBundle jac = eval_jacobians(sys, s);
        Eigen::JacobiSVD<Mat> svd(jac.dg_dx2, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const auto& sv = svd.singularValues();
        const double smax = sv(0);
        int rank = 0;
        for (int i = 0; i < sv.size(); ++i)
            if (sv(i) > rank_tol * smax) ++rank;
        out.rank = rank;
        if (rank == sys.n2()) {
            const Mat pinv = svd.matrixV() * sv.cwiseInverse().asDiagonal() *
                             svd.matrixU().transpose();
            out.pinv_norm = (pinv * jac.dg_dz).operatorNorm();
        } else {
            out.pinv_norm = std::numeric_limits<double>::infinity();
        }
    } catch (...) {
        out.failure = 1;
    }
    return out;
}

RankScanResult rank_reduce(std::vector<RankSample>&& samples) {
    RankScanResult r;
    r.rank.reserve(samples.size());
    r.pinv_norm.reserve(samples.size());
    r.numerical_failure.reserve(samples.size());
    for (const RankSample& s : samples) {
        r.rank.push_back(s.rank);
        r.pinv_norm.push_back(s.pinv_norm);
        r.numerical_failure.push_back(s.failure);
        if (!s.failure && std::isfinite(s.pinv_norm)) r.m_hat = std::max(r.m_hat, s.pinv_norm);
    }
    return r;
}

struct LmiSample {
    double lmi_max = 0.0;
    double rcond = 0.0;
    double v_value = 0.0;
};

LmiSample lmi_one(const PowerSystem& sys, const SystemState& s, const Mat& P, const Mat& A) {
    LmiSample out;
    const JacobianBundle jac = eval_jacobians(sys, s);
    Eigen::PartialPivLU<Mat> lu(jac.dg_dz);
    out.rcond = lu.rcond();
    Mat dg_dx = Mat::Zero(sys.m(), sys.n());
    const auto& idx = sys.x2_index();
    for (int k = 0; k < sys.n2(); ++k) dg_dx.col(idx[k]) = jac.dg_dx2.col(k);
    const Mat J = jac.df_dx - jac.df_dz * lu.solve(dg_dx);
    const Mat S = A.transpose() * (P * J + J.transpose() * P) * A;
    Eigen::SelfAdjointEigenSolver<Mat> es(S, Eigen::EigenvaluesOnly);
    out.lmi_max = es.eigenvalues().maxCoeff();
    const Vec f = eval_f_full(sys, s);
    out.v_value = f.dot(P * f);
    return out;
}

LmiScanResult lmi_reduce(std::vector<LmiSample>&& samples) {
    LmiScanResult r;
    r.worst_lmi = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < static_cast<int>(samples.size()); ++k) {
        const LmiSample& s = samples[k];
        r.lmi_max.push_back(s.lmi_max);
        r.det_rcond.push_back(s.rcond);
        r.v_value.push_back(s.v_value);
        r.worst_lmi = std::max(r.worst_lmi, s.lmi_max);
        r.min_rcond = std::min(r.min_rcond, s.rcond);
        if (r.first_violation < 0 && (s.lmi_max >= 0.0 || !(s.rcond > kSingularRcond)))
            r.first_violation = k;
    }
    return r;
}

}  // namespace

RankScanResult scan_rank_serial(const PowerSystem& sys, const std::vector<SystemState>& states,
                                double rank_tol) {
    std::vector<RankSample> samples(states.size());
    for (int k = 0; k < static_cast<int>(states.size()); ++k)
        samples[k] = rank_one(sys, states[k], rank_tol);
    return rank_reduce(std::move(samples));
}

RankScanResult scan_rank(const PowerSystem& sys, const std::vector<SystemState>& states,
                         double rank_tol) {
    std::vector<RankSample> samples(states.size());
    const int nk = static_cast<int>(states.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 8) num_threads(scan_threads())
#endif
    for (int k = 0; k < nk; ++k) samples[k] = rank_one(sys, states[k], rank_tol);
    return rank_reduce(std::move(samples));
}

LmiScanResult scan_lmi_serial(const PowerSystem& sys, const std::vector<SystemState>& states,
                              const Mat& P, const Mat& A) {
    std::vector<LmiSample> samples(states.size());
    for (int k = 0; k < static_cast<int>(states.size()); ++k)
        samples[k] = lmi_one(sys, states[k], P, A);
    return lmi_reduce(std::move(samples));
}

LmiScanResult scan_lmi(const PowerSystem& sys, const std::vector<SystemState>& states,
                       const Mat& P, const Mat& A) {
    std::vector<LmiSample> samples(states.size());
    const int nk = static_cast<int>(states.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 8) num_threads(scan_threads())
#endif
    for (int k = 0; k < nk; ++k) samples[k] = lmi_one(sys, states[k], P, A);
    return lmi_reduce(std::move(samples));
}

namespace {

LmiObjective lmi_objective_reduce(const std::vector<double>& vals, const std::vector<Mat>& JA,
                                  const Mat& P, const Mat& A) {
    LmiObjective obj;
    obj.value = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < static_cast<int>(vals.size()); ++k) {
        if (vals[k] > obj.value) {
            obj.value = vals[k];
            obj.argmax = k;
        }
    }
    if (obj.argmax >= 0) {
        const Mat W = A.transpose() * P;
        const Mat S = W * JA[obj.argmax] + (W * JA[obj.argmax]).transpose();
        Eigen::SelfAdjointEigenSolver<Mat> es(S);
        const int last = static_cast<int>(es.eigenvalues().size()) - 1;
        obj.top_eigvec = es.eigenvectors().col(last);
    }
    return obj;
}

double lmi_objective_one(const Mat& JAk, const Mat& W) {
    const Mat S = W * JAk + (W * JAk).transpose();
    Eigen::SelfAdjointEigenSolver<Mat> es(S, Eigen::EigenvaluesOnly);
    return es.eigenvalues().maxCoeff();
}

}  // namespace

LmiObjective lmi_objective_serial(const std::vector<Mat>& JA, const Mat& P, const Mat& A) {
    const Mat W = A.transpose() * P;
    std::vector<double> vals(JA.size());
    for (int k = 0; k < static_cast<int>(JA.size()); ++k) vals[k] = lmi_objective_one(JA[k], W);
    return lmi_objective_reduce(vals, JA, P, A);
}

LmiObjective lmi_objective(const std::vector<Mat>& JA, const Mat& P, const Mat& A) {
    const Mat W = A.transpose() * P;
    std::vector<double> vals(JA.size());
    const int nk = static_cast<int>(JA.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(scan_threads())
#endif
    for (int k = 0; k < nk; ++k) vals[k] = lmi_objective_one(JA[k], W);
    return lmi_objective_reduce(vals, JA, P, A);
}

}  // namespace gridsync
