#pragma once

#include <optional>
#include <string>

#include "gridsync/detectability.hpp"
#include "gridsync/equilibrium.hpp"
#include "gridsync/roa.hpp"
#include "gridsync/simulate.hpp"

#include <json.hpp>

namespace gridsync {

using Json = nlohmann::ordered_json;
inline constexpr const char* kReportSchema = "gridsync-report/1";

/// 17 significant digits: round-trip exact for IEEE doubles.
std::string fmt17(double v);

/// Trajectory CSV schema (fixed order):
///   t, <state names>, theta_1..theta_n, V_1..V_n, zdot_norm, f_norm,
///   [v_value,] det_sign_logabs
/// where det_sign_logabs packs sign(det) * log10|det(dg/dz)|.
void write_trajectory_csv(const std::string& path, const PowerSystem& sys, const Trajectory& traj);
Trajectory read_trajectory_csv(const std::string& path, const PowerSystem& sys);

/// A state file is a single-row trajectory CSV (t is ignored on read).
void write_state_csv(const std::string& path, const PowerSystem& sys, const SystemState& s);
SystemState read_state_csv(const std::string& path, const PowerSystem& sys);

/// Dense matrices as plain text: "rows cols" header then row-major decimal.
void write_matrix(const std::string& path, const Mat& m);
Mat read_matrix(const std::string& path);

Json equilibrium_report(const PowerSystem& sys, const EquilibriumPoint& ep,
                        const std::optional<PinSpec>& pin);
Json detectability_report(const DetectabilityVerdict& v);
Json nondegeneracy_report(const NonDegeneracyReport& rep);
Json certificate_report(const PowerSystem& sys, const RoaCertificate& cert, unsigned seed);
Json combined_verdict_report(const CombinedVerdict& verdict);

void write_report(const std::string& path, const Json& j);

}  // namespace gridsync
