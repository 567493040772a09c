#pragma once

#include <map>
#include <string>
#include <vector>

#include "gridsync/power_system.hpp"

namespace gridsync {

/// Subset of the MATPOWER plain-text case format: baseMVA plus the bus,
/// branch and gen tables. Unknown mpc.* sections are skipped with a warning.
struct CaseFile {
    double base_mva = 100.0;
    struct BusRow {
        int id = 0;
        int type = 1;       // 1 PQ, 2 PV, 3 slack (informational)
        double pd = 0.0;    // MW
        double qd = 0.0;    // MVAr
        double gs = 0.0;    // MW at V = 1
        double bs = 0.0;    // MVAr at V = 1
        double vm = 1.0;
        double va = 0.0;    // degrees
    };
    struct BranchRow {
        int from = 0, to = 0;
        double r = 0.0, x = 0.0, b = 0.0;
        double ratio = 0.0, angle = 0.0;  // transformer (0 ratio = line)
        int status = 1;
    };
    struct GenRow {
        int bus = 0;
        double pg = 0.0, qg = 0.0;  // MW / MVAr
        double vg = 1.0;
    };
    std::vector<BusRow> buses;
    std::vector<BranchRow> branches;
    std::vector<GenRow> gens;
    std::vector<std::string> warnings;
};

CaseFile parse_case(const std::string& path);

/// One device block of the parameter file.
struct DeviceSpec {
    int bus = 0;
    std::string kind;
    std::map<std::string, double> params;
    int line = 0;  // where the block starts (for error messages)
};

std::vector<DeviceSpec> parse_device_file(const std::string& path);

DeviceModel instantiate_device(const DeviceSpec& spec);

/// Assemble the dynamic system: network and default loads from the case file
/// (per-unit on its MVA base), devices from the parameter file. A device
/// declared at a bus replaces that bus's case-file load.
PowerSystem build_system(const CaseFile& cf, const std::vector<DeviceSpec>& devices);

}  // namespace gridsync
