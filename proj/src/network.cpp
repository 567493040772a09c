#include "gridsync/network.hpp"

#include "gridsync/errors.hpp"

namespace gridsync {

Branch Branch::from_impedance(int from, int to, double r, double x, double b_charging) {
    const double mag2 = r * r + x * x;
    if (mag2 <= 0.0) throw StructuralError("branch impedance must be nonzero");
    Branch br;
    br.from = from;
    br.to = to;
    br.g = r / mag2;
    br.b = -x / mag2;
    br.b_shunt = b_charging;
    return br;
}

AdmittanceMatrix build_admittance(const std::vector<Branch>& branches, int n_bus) {
    if (n_bus < 1) throw StructuralError("need at least one bus");
    AdmittanceMatrix y;
    y.G = Eigen::MatrixXd::Zero(n_bus, n_bus);
    y.B = Eigen::MatrixXd::Zero(n_bus, n_bus);
    for (const Branch& br : branches) {
        if (br.from < 1 || br.from > n_bus || br.to < 1 || br.to > n_bus)
            throw StructuralError("branch references bus id outside 1.." + std::to_string(n_bus));
        if (br.from == br.to) throw StructuralError("branch from_bus equals to_bus");
        const int i = br.from - 1;
        const int j = br.to - 1;
        y.G(i, i) += br.g;
        y.G(j, j) += br.g;
        y.B(i, i) += br.b + br.b_shunt / 2.0;
        y.B(j, j) += br.b + br.b_shunt / 2.0;
        y.G(i, j) -= br.g;
        y.G(j, i) -= br.g;
        y.B(i, j) -= br.b;
        y.B(j, i) -= br.b;
    }
    return y;
}

}  // namespace gridsync
