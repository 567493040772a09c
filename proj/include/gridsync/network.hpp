#pragma once

#include <Eigen/Dense>
#include <vector>

namespace gridsync {

enum class BusKind { device, load, passive };

struct Bus {
    int id = 0;  // 1-based, contiguous
    BusKind kind = BusKind::passive;
};

/// One series branch of the network. `g` + j`b` is the series admittance,
/// `b_shunt` the total line-charging susceptance (half is placed at each end).
struct Branch {
    int from = 0;
    int to = 0;
    double g = 0.0;
    double b = 0.0;
    double b_shunt = 0.0;

    /// Build from impedance data r + jx and total charging b.
    static Branch from_impedance(int from, int to, double r, double x, double b_charging = 0.0);
};

/// Real and imaginary parts of the bus admittance matrix, Y = G + jB.
struct AdmittanceMatrix {
    Eigen::MatrixXd G;
    Eigen::MatrixXd B;

    int n_bus() const { return static_cast<int>(G.rows()); }
};

/// Assemble the bus admittance matrix. Parallel branches accumulate;
/// an out-of-range bus id raises StructuralError.
AdmittanceMatrix build_admittance(const std::vector<Branch>& branches, int n_bus);

}  // namespace gridsync
