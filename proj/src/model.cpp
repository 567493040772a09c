#include "gridsync/model.hpp"

#include <Eigen/LU>
#include <cmath>
#include <limits>

#include "gridsync/errors.hpp"

namespace gridsync {

namespace {

// Network flow expressions and their z-derivatives at bus i:
//   FP_i = G_ii V_i^2 + sum_j V_i V_j (B_ij sin th_ij + G_ij cos th_ij)
//   FQ_i = -B_ii V_i^2 - sum_j V_i V_j (B_ij cos th_ij - G_ij sin th_ij)
struct Flows {
    double P = 0.0, Q = 0.0;
};

Flows network_flows(const AdmittanceMatrix& y, const Vec& z, int i) {
    const int nb = y.n_bus();
    const double thi = z(2 * i), vi = z(2 * i + 1);
    Flows f;
    f.P = y.G(i, i) * vi * vi;
    f.Q = -y.B(i, i) * vi * vi;
    for (int j = 0; j < nb; ++j) {
        if (j == i) continue;
        const double gij = y.G(i, j), bij = y.B(i, j);
        if (gij == 0.0 && bij == 0.0) continue;
        const double tij = thi - z(2 * j);
        const double vj = z(2 * j + 1);
        const double st = std::sin(tij), ct = std::cos(tij);
        f.P += vi * vj * (bij * st + gij * ct);
        f.Q -= vi * vj * (bij * ct - gij * st);
    }
    return f;
}

}  // namespace

Vec eval_g(const PowerSystem& sys, const Vec& x2, const Vec& z) {
    const int nb = sys.n_bus();
    if (x2.size() != sys.n2() || z.size() != sys.m())
        throw StructuralError("eval_g: dimension mismatch");
    Vec g(sys.m());
    for (int i = 0; i < nb; ++i) {
        const Flows fl = network_flows(sys.admittance(), z, i);
        double pinj = 0.0, qinj = 0.0;
        if (const PowerSystem::Block* b = sys.block_at(i + 1)) {
            const DeviceModel& dev = sys.devices()[b->device_index].model;
            const Injection inj =
                device_injection(dev, x2.data() + b->x2_off, z(2 * i), z(2 * i + 1));
            pinj = inj.P;
            qinj = inj.Q;
        }
        g(2 * i) = pinj - fl.P;
        g(2 * i + 1) = qinj - fl.Q;
    }
    return g;
}

void eval_f(const PowerSystem& sys, const SystemState& s, Vec& f1, Vec& f2) {
    f1.resize(sys.n1());
    f2.resize(sys.n2());
    for (const auto& b : sys.blocks()) {
        const DeviceModel& dev = sys.devices()[b.device_index].model;
        const int i = b.bus - 1;
        device_f(dev, s.x1.data() + b.x1_off, s.x2.data() + b.x2_off, s.z(2 * i), s.z(2 * i + 1),
                 f1.data() + b.x1_off, f2.data() + b.x2_off);
    }
}

Vec eval_f_full(const PowerSystem& sys, const SystemState& s) {
    Vec f1, f2;
    eval_f(sys, s, f1, f2);
    Vec f(sys.n());
    for (const auto& b : sys.blocks()) {
        f.segment(b.x_off, b.n1) = f1.segment(b.x1_off, b.n1);
        f.segment(b.x_off + b.n1, b.n2) = f2.segment(b.x2_off, b.n2);
    }
    return f;
}

JacobianBundle eval_jacobians(const PowerSystem& sys, const SystemState& s) {
    const int nb = sys.n_bus();
    const int n = sys.n(), m = sys.m(), n2 = sys.n2();
    const AdmittanceMatrix& y = sys.admittance();
    JacobianBundle jac;
    jac.df_dx = Mat::Zero(n, n);
    jac.df_dz = Mat::Zero(n, m);
    jac.dg_dx2 = Mat::Zero(m, n2);
    jac.dg_dz = Mat::Zero(m, m);

    // network part of dg/dz (note the residual is injection minus flow)
    for (int i = 0; i < nb; ++i) {
        const double thi = s.z(2 * i), vi = s.z(2 * i + 1);
        double dP_dthi = 0.0, dP_dvi = 2.0 * y.G(i, i) * vi;
        double dQ_dthi = 0.0, dQ_dvi = -2.0 * y.B(i, i) * vi;
        for (int j = 0; j < nb; ++j) {
            if (j == i) continue;
            const double gij = y.G(i, j), bij = y.B(i, j);
            if (gij == 0.0 && bij == 0.0) continue;
            const double tij = thi - s.z(2 * j);
            const double vj = s.z(2 * j + 1);
            const double st = std::sin(tij), ct = std::cos(tij);
            const double pa = vi * vj * (bij * ct - gij * st);   // dFP_i/dth_i contribution
            const double pb = vi * vj * (bij * st + gij * ct);   // dFQ_i/dth_i contribution
            dP_dthi += pa;
            dQ_dthi += pb;
            dP_dvi += vj * (bij * st + gij * ct);
            dQ_dvi -= vj * (bij * ct - gij * st);
            jac.dg_dz(2 * i, 2 * j) -= -pa;            // -dFP_i/dth_j
            jac.dg_dz(2 * i, 2 * j + 1) -= vi * (bij * st + gij * ct);
            jac.dg_dz(2 * i + 1, 2 * j) -= -pb;        // -dFQ_i/dth_j
            jac.dg_dz(2 * i + 1, 2 * j + 1) -= -vi * (bij * ct - gij * st);
        }
        jac.dg_dz(2 * i, 2 * i) -= dP_dthi;
        jac.dg_dz(2 * i, 2 * i + 1) -= dP_dvi;
        jac.dg_dz(2 * i + 1, 2 * i) -= dQ_dthi;
        jac.dg_dz(2 * i + 1, 2 * i + 1) -= dQ_dvi;
    }

    // device parts
    for (const auto& b : sys.blocks()) {
        const DeviceModel& dev = sys.devices()[b.device_index].model;
        const int i = b.bus - 1;
        const double th = s.z(2 * i), v = s.z(2 * i + 1);
        const double* x2loc = s.x2.data() + b.x2_off;

        // injection derivatives enter g rows of this bus
        const InjectionPartials ip = device_injection_partials(dev, x2loc, th, v);
        for (int k = 0; k < b.n2; ++k) {
            jac.dg_dx2(2 * i, b.x2_off + k) += ip.dP_dx2[k];
            jac.dg_dx2(2 * i + 1, b.x2_off + k) += ip.dQ_dx2[k];
        }
        jac.dg_dz(2 * i, 2 * i) += ip.dP_dtheta;
        jac.dg_dz(2 * i, 2 * i + 1) += ip.dP_dV;
        jac.dg_dz(2 * i + 1, 2 * i) += ip.dQ_dtheta;
        jac.dg_dz(2 * i + 1, 2 * i + 1) += ip.dQ_dV;

        // vector-field derivatives; device rows touch only local columns
        const int nr = b.n1 + b.n2;
        if (nr == 0) continue;
        double buf[5 * 7];
        device_f_partials(dev, s.x1.data() + b.x1_off, x2loc, th, v, buf);
        const int nc = nr + 2;
        for (int r = 0; r < nr; ++r) {
            for (int c = 0; c < nr; ++c) jac.df_dx(b.x_off + r, b.x_off + c) = buf[r * nc + c];
            jac.df_dz(b.x_off + r, 2 * i) = buf[r * nc + nr];
            jac.df_dz(b.x_off + r, 2 * i + 1) = buf[r * nc + nr + 1];
        }
    }
    return jac;
}

namespace {

Eigen::PartialPivLU<Mat> factor_dgdz(const Mat& dg_dz, AlgebraicSolveInfo* info) {
    Eigen::PartialPivLU<Mat> lu(dg_dz);
    const double rc = lu.rcond();
    if (info) {
        info->rcond = rc;
        double logabs = 0.0;
        double sign = lu.permutationP().determinant() > 0 ? 1.0 : -1.0;
        const auto& u = lu.matrixLU();
        for (int i = 0; i < u.rows(); ++i) {
            const double d = u(i, i);
            if (d == 0.0) {
                sign = 0.0;
                logabs = -std::numeric_limits<double>::infinity();
                break;
            }
            logabs += std::log10(std::abs(d));
            if (d < 0) sign = -sign;
        }
        info->sign_det = sign;
        info->logabs_det = logabs;
    }
    if (!(rc > kSingularRcond))
        throw SingularAlgebraicJacobian("dg/dz numerically singular (rcond = " +
                                        std::to_string(rc) + "): impasse surface proximity");
    return lu;
}

}  // namespace

Vec eval_h(const PowerSystem& sys, const SystemState& s, const JacobianBundle& jac,
           AlgebraicSolveInfo* info) {
    Vec f1, f2;
    eval_f(sys, s, f1, f2);
    const auto lu = factor_dgdz(jac.dg_dz, info);
    return -lu.solve(jac.dg_dx2 * f2);
}

Vec eval_h(const PowerSystem& sys, const SystemState& s) {
    const JacobianBundle jac = eval_jacobians(sys, s);
    return eval_h(sys, s, jac, nullptr);
}

Mat eval_reduced_jacobian(const PowerSystem& sys, const JacobianBundle& jac) {
    const int n = sys.n(), m = sys.m();
    // dg/dx has zero columns at x1 entries; scatter the compact dg/dx2 blocks
    Mat dg_dx = Mat::Zero(m, n);
    const auto& idx = sys.x2_index();
    for (int k = 0; k < sys.n2(); ++k) dg_dx.col(idx[k]) = jac.dg_dx2.col(k);
    const auto lu = factor_dgdz(jac.dg_dz, nullptr);
    return jac.df_dx - jac.df_dz * lu.solve(dg_dx);
}

Mat eval_reduced_jacobian(const PowerSystem& sys, const SystemState& s) {
    return eval_reduced_jacobian(sys, eval_jacobians(sys, s));
}

bool check_modular_structure(const PowerSystem& sys, const SystemState& s, double tol) {
    const JacobianBundle jac = eval_jacobians(sys, s);
    for (const auto& bi : sys.blocks()) {
        const int nri = bi.n1 + bi.n2;
        if (nri == 0) continue;
        for (const auto& bj : sys.blocks()) {
            if (bi.device_index == bj.device_index) continue;
            const int ncj = bj.n1 + bj.n2;
            if (ncj == 0) continue;
            if (jac.df_dx.block(bi.x_off, bj.x_off, nri, ncj).cwiseAbs().maxCoeff() > tol)
                return false;
        }
        for (int j = 0; j < sys.n_bus(); ++j) {
            if (j == bi.bus - 1) continue;
            if (jac.df_dz.block(bi.x_off, 2 * j, nri, 2).cwiseAbs().maxCoeff() > tol) return false;
        }
    }
    return true;
}

}  // namespace gridsync
