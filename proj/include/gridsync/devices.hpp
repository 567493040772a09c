#pragma once

#include <string>
#include <variant>
#include <vector>

namespace gridsync {

/// Classical synchronous machine (constant internal voltage E behind x'_d)
/// with a proportional-integral frequency regulator.
/// States: x1 = (zeta, omega), x2 = (delta).
struct ClassicalSgPi {
    double M = 0.0;        // inertia, s^2/rad
    double D = 0.0;        // damping, pu
    double E = 0.0;        // internal voltage, pu
    double xd_prime = 0.0; // transient reactance, pu
    double P_g0 = 0.0;     // fixed mechanical power, pu
    double k1 = 0.0;       // proportional gain
    double k2 = 0.0;       // integral gain
};

/// One-axis (flux-decay) synchronous generator.
/// States: x1 = (omega), x2 = (delta, Eq_prime).
struct FluxDecaySg {
    double M = 0.0;
    double D = 0.0;
    double Td0_prime = 0.0; // d-axis open-circuit transient time constant, s
    double xq = 0.0;
    double xd = 0.0;
    double xd_prime = 0.0;
    double P_g = 0.0;       // mechanical power, pu
    double E_f = 0.0;       // excitation voltage, pu
};

/// Inverter-interfaced source regulating its power output toward droop-shifted
/// references through first-order lags.
/// States: x1 = (), x2 = (P, Q).
struct InverterPq {
    double tau1 = 0.0;
    double tau2 = 0.0;
    double d1 = 0.0;
    double d2 = 0.0;
    double P_ref = 0.0;
    double Q_ref = 0.0;
    double theta_ref = 0.0;
    double V_ref = 0.0;
};

/// Constant-power load; consumes (P_d, Q_d), i.e. injects (-P_d, -Q_d).
struct ConstPqLoad {
    double P_d = 0.0;
    double Q_d = 0.0;
};

using DeviceModel = std::variant<ClassicalSgPi, FluxDecaySg, InverterPq, ConstPqLoad>;

int x1_dim(const DeviceModel& dev);
int x2_dim(const DeviceModel& dev);
bool is_dynamic(const DeviceModel& dev);

std::string device_kind_name(const DeviceModel& dev);

/// State names in device order: x1 entries first, then x2 entries.
std::vector<std::string> device_state_names(const DeviceModel& dev);

/// Throws StructuralError if a parameter violates its admissible range.
/// Gains and droops may be zero (a zero-gain regulator degenerates to the
/// plain swing model); masses and time constants must be positive.
void validate(const DeviceModel& dev);

/// Active/reactive power injected into the terminal bus, as a function of the
/// device's x2 states and its local algebraic pair (theta, V).
struct Injection {
    double P = 0.0;
    double Q = 0.0;
};

/// First derivatives of the injection with respect to (x2..., theta, V).
struct InjectionPartials {
    double dP_dx2[2] = {0, 0};
    double dQ_dx2[2] = {0, 0};
    double dP_dtheta = 0.0, dP_dV = 0.0;
    double dQ_dtheta = 0.0, dQ_dV = 0.0;
};

Injection device_injection(const DeviceModel& dev, const double* x2, double theta, double V);
InjectionPartials device_injection_partials(const DeviceModel& dev, const double* x2, double theta,
                                            double V);

/// Evaluate the device vector field into f1 (x1_dim entries) and f2 (x2_dim).
void device_f(const DeviceModel& dev, const double* x1, const double* x2, double theta, double V,
              double* f1, double* f2);

/// Dense derivatives of col(f1, f2) with respect to (x1..., x2..., theta, V).
/// `rows` = x1_dim + x2_dim ordered f1 first; columns ordered x1, x2, theta, V.
/// `out` must hold rows x (rows + 2) doubles, row-major.
void device_f_partials(const DeviceModel& dev, const double* x1, const double* x2, double theta,
                       double V, double* out);

}  // namespace gridsync
