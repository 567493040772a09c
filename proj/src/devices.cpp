#include "gridsync/devices.hpp"

#include <cmath>

#include "gridsync/errors.hpp"

namespace gridsync {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require(bool ok, const char* what) {
    if (!ok) throw StructuralError(std::string("device parameter out of range: ") + what);
}

}  // namespace

int x1_dim(const DeviceModel& dev) {
    return std::visit(overloaded{[](const ClassicalSgPi&) { return 2; },
                                 [](const FluxDecaySg&) { return 1; },
                                 [](const InverterPq&) { return 0; },
                                 [](const ConstPqLoad&) { return 0; }},
                      dev);
}

int x2_dim(const DeviceModel& dev) {
    return std::visit(overloaded{[](const ClassicalSgPi&) { return 1; },
                                 [](const FluxDecaySg&) { return 2; },
                                 [](const InverterPq&) { return 2; },
                                 [](const ConstPqLoad&) { return 0; }},
                      dev);
}

bool is_dynamic(const DeviceModel& dev) { return x1_dim(dev) + x2_dim(dev) > 0; }

std::string device_kind_name(const DeviceModel& dev) {
    return std::visit(overloaded{[](const ClassicalSgPi&) { return std::string("classical_sg_pi"); },
                                 [](const FluxDecaySg&) { return std::string("flux_decay_sg"); },
                                 [](const InverterPq&) { return std::string("inverter_pq"); },
                                 [](const ConstPqLoad&) { return std::string("const_pq_load"); }},
                      dev);
}

std::vector<std::string> device_state_names(const DeviceModel& dev) {
    return std::visit(
        overloaded{[](const ClassicalSgPi&) {
                       return std::vector<std::string>{"zeta", "omega", "delta"};
                   },
                   [](const FluxDecaySg&) {
                       return std::vector<std::string>{"omega", "delta", "Eq_prime"};
                   },
                   [](const InverterPq&) { return std::vector<std::string>{"P", "Q"}; },
                   [](const ConstPqLoad&) { return std::vector<std::string>{}; }},
        dev);
}

void validate(const DeviceModel& dev) {
    std::visit(overloaded{[](const ClassicalSgPi& d) {
                              require(d.M > 0, "M > 0");
                              require(d.D >= 0, "D >= 0");
                              require(d.E > 0, "E > 0");
                              require(d.xd_prime > 0, "x_d_prime > 0");
                              require(d.k1 >= 0, "k1 >= 0");
                              require(d.k2 >= 0, "k2 >= 0");
                          },
                          [](const FluxDecaySg& d) {
                              require(d.M > 0, "M > 0");
                              require(d.D >= 0, "D >= 0");
                              require(d.Td0_prime > 0, "T_d0_prime > 0");
                              require(d.xd_prime > 0, "x_d_prime > 0");
                              require(d.xd > d.xd_prime, "x_d > x_d_prime");
                              require(d.xq > 0, "x_q > 0");
                          },
                          [](const InverterPq& d) {
                              require(d.tau1 > 0, "tau1 > 0");
                              require(d.tau2 > 0, "tau2 > 0");
                              require(d.d1 > 0, "d1 > 0");
                              require(d.d2 > 0, "d2 > 0");
                          },
                          [](const ConstPqLoad&) {}},
               dev);
}

Injection device_injection(const DeviceModel& dev, const double* x2, double theta, double V) {
    return std::visit(
        overloaded{
            [&](const ClassicalSgPi& d) {
                const double a = x2[0] - theta;
                Injection inj;
                inj.P = d.E * V * std::sin(a) / d.xd_prime;
                inj.Q = d.E * V * std::cos(a) / d.xd_prime - V * V / d.xd_prime;
                return inj;
            },
            [&](const FluxDecaySg& d) {
                const double a = x2[0] - theta;
                const double eq = x2[1];
                const double kpe = (d.xd_prime - d.xq) / (2.0 * d.xq * d.xd_prime);
                Injection inj;
                inj.P = V * V * std::sin(2 * a) * kpe + eq * V * std::sin(a) / d.xd_prime;
                inj.Q = V * V * std::cos(2 * a) * kpe + eq * V * std::cos(a) / d.xd_prime -
                        (d.xd_prime + d.xq) / (2.0 * d.xq * d.xd_prime) * V * V;
                return inj;
            },
            [&](const InverterPq&) {
                return Injection{x2[0], x2[1]};
            },
            [&](const ConstPqLoad& d) {
                return Injection{-d.P_d, -d.Q_d};
            }},
        dev);
}

InjectionPartials device_injection_partials(const DeviceModel& dev, const double* x2, double theta,
                                            double V) {
    InjectionPartials p;
    std::visit(
        overloaded{
            [&](const ClassicalSgPi& d) {
                const double a = x2[0] - theta;
                const double s = std::sin(a), c = std::cos(a);
                p.dP_dx2[0] = d.E * V * c / d.xd_prime;
                p.dP_dtheta = -p.dP_dx2[0];
                p.dP_dV = d.E * s / d.xd_prime;
                p.dQ_dx2[0] = -d.E * V * s / d.xd_prime;
                p.dQ_dtheta = -p.dQ_dx2[0];
                p.dQ_dV = d.E * c / d.xd_prime - 2.0 * V / d.xd_prime;
            },
            [&](const FluxDecaySg& d) {
                const double a = x2[0] - theta;
                const double eq = x2[1];
                const double s = std::sin(a), c = std::cos(a);
                const double s2 = std::sin(2 * a), c2 = std::cos(2 * a);
                const double kpe = (d.xd_prime - d.xq) / (2.0 * d.xq * d.xd_prime);
                p.dP_dx2[0] = 2.0 * V * V * c2 * kpe + eq * V * c / d.xd_prime;
                p.dP_dx2[1] = V * s / d.xd_prime;
                p.dP_dtheta = -p.dP_dx2[0];
                p.dP_dV = 2.0 * V * s2 * kpe + eq * s / d.xd_prime;
                p.dQ_dx2[0] = -2.0 * V * V * s2 * kpe - eq * V * s / d.xd_prime;
                p.dQ_dx2[1] = V * c / d.xd_prime;
                p.dQ_dtheta = -p.dQ_dx2[0];
                p.dQ_dV = 2.0 * V * c2 * kpe + eq * c / d.xd_prime -
                          (d.xd_prime + d.xq) / (d.xq * d.xd_prime) * V;
            },
            [&](const InverterPq&) {
                p.dP_dx2[0] = 1.0;
                p.dQ_dx2[1] = 1.0;
            },
            [&](const ConstPqLoad&) {}},
        dev);
    return p;
}

void device_f(const DeviceModel& dev, const double* x1, const double* x2, double theta, double V,
              double* f1, double* f2) {
    std::visit(
        overloaded{
            [&](const ClassicalSgPi& d) {
                const double zeta = x1[0], w = x1[1];
                const double pe = device_injection(dev, x2, theta, V).P;
                const double u = -d.k1 * w + zeta;
                f1[0] = -d.k2 * w;
                f1[1] = (-d.D * w - pe + d.P_g0 + u) / d.M;
                f2[0] = w;
            },
            [&](const FluxDecaySg& d) {
                const double w = x1[0];
                const double a = x2[0] - theta;
                const double pe = device_injection(dev, x2, theta, V).P;
                f1[0] = (-d.D * w - pe + d.P_g) / d.M;
                f2[0] = w;
                f2[1] = (-(d.xd / d.xd_prime) * x2[1] +
                         (d.xd - d.xd_prime) * V * std::cos(a) / d.xd_prime + d.E_f) /
                        d.Td0_prime;
            },
            [&](const InverterPq& d) {
                f2[0] = (-x2[0] + d.P_ref - d.d1 * (theta - d.theta_ref)) / d.tau1;
                f2[1] = (-x2[1] + d.Q_ref - d.d2 * (V - d.V_ref)) / d.tau2;
            },
            [&](const ConstPqLoad&) {}},
        dev);
}

void device_f_partials(const DeviceModel& dev, const double* x1, const double* x2, double theta,
                       double V, double* out) {
    const int nr = x1_dim(dev) + x2_dim(dev);
    const int nc = nr + 2;
    for (int i = 0; i < nr * nc; ++i) out[i] = 0.0;
    auto at = [&](int r, int c) -> double& { return out[r * nc + c]; };
    std::visit(
        overloaded{
            [&](const ClassicalSgPi& d) {
                (void)x1;
                const InjectionPartials ip = device_injection_partials(dev, x2, theta, V);
                // rows: zeta., omega., delta. ; cols: zeta, omega, delta, theta, V
                at(0, 1) = -d.k2;
                at(1, 0) = 1.0 / d.M;
                at(1, 1) = -(d.D + d.k1) / d.M;
                at(1, 2) = -ip.dP_dx2[0] / d.M;
                at(1, 3) = -ip.dP_dtheta / d.M;
                at(1, 4) = -ip.dP_dV / d.M;
                at(2, 1) = 1.0;
            },
            [&](const FluxDecaySg& d) {
                (void)x1;
                const InjectionPartials ip = device_injection_partials(dev, x2, theta, V);
                const double a = x2[0] - theta;
                const double s = std::sin(a), c = std::cos(a);
                const double kd = (d.xd - d.xd_prime) / (d.xd_prime * d.Td0_prime);
                // rows: omega., delta., Eq_prime. ; cols: omega, delta, Eq_prime, theta, V
                at(0, 0) = -d.D / d.M;
                at(0, 1) = -ip.dP_dx2[0] / d.M;
                at(0, 2) = -ip.dP_dx2[1] / d.M;
                at(0, 3) = -ip.dP_dtheta / d.M;
                at(0, 4) = -ip.dP_dV / d.M;
                at(1, 0) = 1.0;
                at(2, 1) = -kd * V * s;
                at(2, 2) = -(d.xd / d.xd_prime) / d.Td0_prime;
                at(2, 3) = kd * V * s;
                at(2, 4) = kd * c;
            },
            [&](const InverterPq& d) {
                (void)x1;
                (void)x2;
                // rows: P., Q. ; cols: P, Q, theta, V
                at(0, 0) = -1.0 / d.tau1;
                at(0, 2) = -d.d1 / d.tau1;
                at(1, 1) = -1.0 / d.tau2;
                at(1, 3) = -d.d2 / d.tau2;
            },
            [&](const ConstPqLoad&) {}},
        dev);
}

}  // namespace gridsync
