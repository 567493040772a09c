#include "gridsync/smsl.hpp"

#include <cmath>

#include "gridsync/errors.hpp"
#include "gridsync/model.hpp"

namespace gridsync {

PowerSystem make_two_bus_system(const DeviceModel& dev, double p_load, double q_load,
                                double x_line, double r_line) {
    std::vector<Bus> buses{{1, BusKind::device}, {2, BusKind::load}};
    std::vector<Branch> branches{Branch::from_impedance(1, 2, r_line, x_line)};
    std::vector<AttachedDevice> devices{{1, dev}, {2, ConstPqLoad{p_load, q_load}}};
    return PowerSystem(std::move(buses), std::move(branches), std::move(devices));
}

PowerSystem make_smsl_system(const ClassicalSgPi& gen, double p_load, double q_load,
                             double x_line) {
    return make_two_bus_system(gen, p_load, q_load, x_line);
}

namespace {

struct SmslPieces {
    ClassicalSgPi gen;
    double p_load = 0.0;
    double b12 = 0.0;  // off-diagonal susceptance of the lossless line (> 0)
};

SmslPieces dissect(const PowerSystem& sys) {
    if (sys.n_bus() != 2) throw StructuralError("single-machine certificate needs two buses");
    const DeviceModel* d1 = sys.device_at(1);
    const DeviceModel* d2 = sys.device_at(2);
    if (!d1 || !std::holds_alternative<ClassicalSgPi>(*d1))
        throw StructuralError("bus 1 must carry the PI-regulated machine");
    if (!d2 || !std::holds_alternative<ConstPqLoad>(*d2))
        throw StructuralError("bus 2 must carry a constant-PQ load");
    if (sys.admittance().G.cwiseAbs().maxCoeff() > 0.0)
        throw StructuralError("the certificate is derived for a lossless line");
    SmslPieces p;
    p.gen = std::get<ClassicalSgPi>(*d1);
    p.p_load = std::get<ConstPqLoad>(*d2).P_d;
    p.b12 = sys.admittance().B(0, 1);
    if (p.b12 <= 0.0) throw StructuralError("expected B12 > 0 for the line");
    return p;
}

// gradient of V against (x = (zeta, w, delta), z = (th1, V1, th2, V2))
struct VGrad {
    double value = 0.0;
    Vec gx{3};
    Vec gz{4};
};

VGrad storage_gradient(const SmslPieces& p, const SystemState& s, bool with_pi_term,
                       bool with_delta_term) {
    const double zeta = s.x1(0), w = s.x1(1), delta = s.x2(0);
    const double th1 = s.z(0), v1 = s.z(1), th2 = s.z(2), v2 = s.z(3);
    const ClassicalSgPi& g = p.gen;
    const double a = delta - th1;
    const double t12 = th1 - th2;
    const double sa = std::sin(a), ca = std::cos(a);
    const double s12 = std::sin(t12), c12 = std::cos(t12);
    const double pe = g.E * v1 * sa / g.xd_prime;

    VGrad out;
    out.value = 0.5 * g.M * w * w + g.E * v1 * (1.0 - ca) / g.xd_prime +
                p.b12 * v1 * v2 * (1.0 - c12);
    out.gx.setZero();
    out.gz.setZero();
    out.gx(1) = g.M * w;
    out.gx(2) = pe;
    out.gz(0) = -pe + p.b12 * v1 * v2 * s12;
    out.gz(1) = g.E * (1.0 - ca) / g.xd_prime + p.b12 * v2 * (1.0 - c12);
    out.gz(2) = -p.b12 * v1 * v2 * s12;
    out.gz(3) = p.b12 * v1 * (1.0 - c12);
    if (with_pi_term) {
        const double resid = zeta - p.p_load + g.P_g0;
        out.value += resid * resid / (2.0 * g.k2);
        out.gx(0) = resid / g.k2;
    }
    if (with_delta_term) {
        out.value += (p.p_load - g.P_g0) * delta;
        out.gx(2) += p.p_load - g.P_g0;
    }
    return out;
}

double directional_vdot(const PowerSystem& sys, const VGrad& grad, const SystemState& s) {
    Vec f1, f2;
    eval_f(sys, s, f1, f2);
    const Vec h = eval_h(sys, s);
    // x order: (zeta, w | delta)
    return grad.gx(0) * f1(0) + grad.gx(1) * f1(1) + grad.gx(2) * f2(0) + grad.gz.dot(h);
}

}  // namespace

TypeIIV make_smsl_typeii_v(const PowerSystem& sys, double level) {
    const SmslPieces p = dissect(sys);
    if (p.gen.k2 <= 0.0)
        throw StructuralError("the storage function needs k2 > 0; use the energy certificate "
                              "for the pure swing case");
    TypeIIV v;
    v.level = level;
    v.lower_bound = 0.0;
    v.gamma = KappaFn{p.gen.D + p.gen.k1, 2.0};
    v.eta = EtaSelector::eta_is_f2;
    v.value = [p](const PowerSystem& sys2, const SystemState& s) {
        (void)sys2;
        return storage_gradient(p, s, true, false).value;
    };
    v.vdot = [p](const PowerSystem& sys2, const SystemState& s) {
        return directional_vdot(sys2, storage_gradient(p, s, true, false), s);
    };
    v.vddot = [p](const PowerSystem& sys2, const SystemState& s) {
        Vec f1, f2;
        eval_f(sys2, s, f1, f2);
        return -2.0 * (p.gen.D + p.gen.k1) * s.x1(1) * f1(1);
    };
    v.vddot_bound = 100.0;
    return v;
}

TypeIIIV make_smsl_energy_v(const PowerSystem& sys, double level) {
    const SmslPieces p = dissect(sys);
    TypeIIIV v;
    v.level = level;
    v.value = [p](const PowerSystem& sys2, const SystemState& s) {
        (void)sys2;
        return storage_gradient(p, s, false, true).value;
    };
    v.vdot = [p](const PowerSystem& sys2, const SystemState& s) {
        return directional_vdot(sys2, storage_gradient(p, s, false, true), s);
    };
    v.zero_set_implies_eta_zero = [](const PowerSystem& sys2, const SystemState& s) {
        (void)sys2;
        return std::abs(s.x1(1)) <= 1e-5;  // V-dot = -D w^2 vanishes only at w = 0
    };
    v.certificate_note =
        "on {w = 0} the machine keeps w identically zero only where w-dot = 0, so the largest "
        "invariant subset satisfies f2 = w = 0";
    return v;
}

}  // namespace gridsync
