#pragma once

#include "gridsync/power_system.hpp"
#include "gridsync/roa.hpp"

namespace gridsync {

/// Single machine feeding a constant-PQ load over one lossless line of
/// reactance x_line (two buses; no shunts).
PowerSystem make_smsl_system(const ClassicalSgPi& gen, double p_load, double q_load,
                             double x_line);

/// Generic two-bus builder: `dev` at bus 1, constant-PQ load at bus 2.
PowerSystem make_two_bus_system(const DeviceModel& dev, double p_load, double q_load,
                                double x_line, double r_line = 0.0);

/// Storage-function certificate for the PI-regulated single-machine system:
///   V = 1/2 M w^2 + E V1 (1 - cos(delta - theta1)) / x'_d
///       + B12 V1 V2 (1 - cos theta12) + (zeta - P_d + P_g0)^2 / (2 k2),
/// whose derivative along the constrained flow is -(D + k1) w^2.
/// V and V-dot evaluate through analytic gradients against (f, h).
TypeIIV make_smsl_typeii_v(const PowerSystem& sys, double level);

/// Energy-function certificate for the pure swing case (k1 = k2 = 0):
/// V-dot = -D w^2; the zero set {w = 0} pins eta = f2 = w to zero.
TypeIIIV make_smsl_energy_v(const PowerSystem& sys, double level);

}  // namespace gridsync
