#include "gridsync/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "gridsync/errors.hpp"
#include "gridsync/model.hpp"

namespace gridsync {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

std::vector<std::string> trajectory_header(const PowerSystem& sys, bool with_v) {
    std::vector<std::string> cols;
    cols.push_back("t");
    for (const auto& nm : sys.state_names()) cols.push_back(nm);
    for (int i = 1; i <= sys.n_bus(); ++i) cols.push_back("theta_" + std::to_string(i));
    for (int i = 1; i <= sys.n_bus(); ++i) cols.push_back("V_" + std::to_string(i));
    cols.push_back("zdot_norm");
    cols.push_back("f_norm");
    if (with_v) cols.push_back("v_value");
    cols.push_back("det_sign_logabs");
    return cols;
}

void write_row(std::ostream& os, const PowerSystem& sys, double t, const SystemState& s,
               double zdot, double fn, const double* v_value, double det_packed) {
    os << fmt17(t);
    const Vec x = sys.full_x(s);
    for (int i = 0; i < x.size(); ++i) os << ',' << fmt17(x(i));
    for (int i = 0; i < sys.n_bus(); ++i) os << ',' << fmt17(s.z(2 * i));
    for (int i = 0; i < sys.n_bus(); ++i) os << ',' << fmt17(s.z(2 * i + 1));
    os << ',' << fmt17(zdot) << ',' << fmt17(fn);
    if (v_value) os << ',' << fmt17(*v_value);
    os << ',' << fmt17(det_packed) << '\n';
}

}  // namespace

void write_trajectory_csv(const std::string& path, const PowerSystem& sys,
                          const Trajectory& traj) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot write " + path);
    const bool with_v = !traj.v_value.empty();
    const auto cols = trajectory_header(sys, with_v);
    for (size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
    os << '\n';
    for (int k = 0; k < traj.size(); ++k) {
        const double packed = traj.det_sign[k] * traj.det_logabs[k];
        write_row(os, sys, traj.times[k], traj.states[k], traj.zdot_norm[k], traj.f_norm[k],
                  with_v ? &traj.v_value[k] : nullptr, packed);
    }
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace

Trajectory read_trajectory_csv(const std::string& path, const PowerSystem& sys) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty trajectory file", 1);
    const auto header = split_csv(line);
    const auto expect_no_v = trajectory_header(sys, false);
    const auto expect_v = trajectory_header(sys, true);
    bool with_v;
    if (header == expect_no_v)
        with_v = false;
    else if (header == expect_v)
        with_v = true;
    else
        throw ParseError("trajectory header does not match this system", 1);

    Trajectory traj;
    const int n = sys.n(), nb = sys.n_bus();
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto cells = split_csv(line);
        if (cells.size() != header.size())
            throw ParseError("row has " + std::to_string(cells.size()) + " cells, expected " +
                                 std::to_string(header.size()),
                             line_no);
        int c = 0;
        auto next = [&]() { return std::stod(cells[c++]); };
        traj.times.push_back(next());
        Vec x(n);
        for (int i = 0; i < n; ++i) x(i) = next();
        SystemState s;
        sys.split_x(x, s.x1, s.x2);
        s.z.resize(2 * nb);
        for (int i = 0; i < nb; ++i) s.z(2 * i) = next();
        for (int i = 0; i < nb; ++i) s.z(2 * i + 1) = next();
        traj.states.push_back(std::move(s));
        traj.zdot_norm.push_back(next());
        traj.f_norm.push_back(next());
        if (with_v) traj.v_value.push_back(next());
        const double packed = next();
        traj.det_sign.push_back(packed >= 0 ? 1.0 : -1.0);
        traj.det_logabs.push_back(std::abs(packed));
    }
    if (traj.times.empty()) throw ParseError("trajectory has no rows", line_no);
    traj.termination = Termination::reached_t_end;
    return traj;
}

void write_state_csv(const std::string& path, const PowerSystem& sys, const SystemState& s) {
    Trajectory traj;
    traj.times.push_back(0.0);
    traj.states.push_back(s);
    Vec f1, f2;
    eval_f(sys, s, f1, f2);
    AlgebraicSolveInfo info;
    const JacobianBundle jac = eval_jacobians(sys, s);
    double zdot = 0.0;
    try {
        zdot = eval_h(sys, s, jac, &info).norm();
    } catch (const SingularAlgebraicJacobian&) {
        info.sign_det = 0.0;
        info.logabs_det = 0.0;
    }
    traj.zdot_norm.push_back(zdot);
    traj.f_norm.push_back(std::sqrt(f1.squaredNorm() + f2.squaredNorm()));
    traj.det_sign.push_back(info.sign_det);
    traj.det_logabs.push_back(info.logabs_det);
    write_trajectory_csv(path, sys, traj);
}

SystemState read_state_csv(const std::string& path, const PowerSystem& sys) {
    const Trajectory traj = read_trajectory_csv(path, sys);
    return traj.states.front();
}

void write_matrix(const std::string& path, const Mat& m) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot write " + path);
    os << m.rows() << ' ' << m.cols() << '\n';
    for (int i = 0; i < m.rows(); ++i) {
        for (int j = 0; j < m.cols(); ++j) os << (j ? " " : "") << fmt17(m(i, j));
        os << '\n';
    }
}

Mat read_matrix(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read " + path);
    int rows = 0, cols = 0;
    if (!(in >> rows >> cols) || rows <= 0 || cols <= 0)
        throw ParseError("matrix file must start with 'rows cols'", 1);
    Mat m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j)
            if (!(in >> m(i, j))) throw ParseError("matrix file truncated", i + 2);
    return m;
}

Json equilibrium_report(const PowerSystem& sys, const EquilibriumPoint& ep,
                        const std::optional<PinSpec>& pin) {
    Json j;
    j["schema"] = kReportSchema;
    j["kind"] = "equilibrium";
    if (pin) {
        j["pin"]["variable"] = pin->variable;
        j["pin"]["value"] = pin->value;
    }
    j["residual_f_inf"] = ep.f_inf;
    j["residual_g_inf"] = ep.g_inf;
    Json xs = Json::object();
    const Vec x = sys.full_x(ep.state);
    for (int i = 0; i < x.size(); ++i) xs[sys.state_names()[i]] = x(i);
    j["x"] = xs;
    Json theta = Json::array(), vm = Json::array();
    for (int i = 0; i < sys.n_bus(); ++i) {
        theta.push_back(ep.state.z(2 * i));
        vm.push_back(ep.state.z(2 * i + 1));
    }
    j["theta"] = theta;
    j["V"] = vm;
    Json spec = Json::array();
    for (const auto& ev : ep.jacobian_spectrum)
        spec.push_back(Json{{"re", ev.real()}, {"im", ev.imag()}});
    j["reduced_jacobian_spectrum"] = spec;
    return j;
}

Json detectability_report(const DetectabilityVerdict& v) {
    Json j;
    j["schema"] = kReportSchema;
    j["kind"] = "detectability";
    j["verdict"] = to_string(v.verdict);
    j["route"] = to_string(v.route);
    j["detail"] = v.detail;
    Json certs = Json::array();
    for (size_t i = 0; i < v.certificates.size(); ++i) {
        const DeviceCertificate& c = v.certificates[i];
        certs.push_back(Json{{"bus", v.certificate_bus[i]},
                             {"kind", c.kind},
                             {"x1_empty", c.x1_empty},
                             {"condition1", c.holds_condition1},
                             {"condition2", c.holds_condition2},
                             {"justification1", c.justification1},
                             {"justification2", c.justification2},
                             {"assumptions", c.assumptions}});
    }
    j["device_certificates"] = certs;
    return j;
}

Json nondegeneracy_report(const NonDegeneracyReport& rep) {
    Json j;
    j["schema"] = kReportSchema;
    j["kind"] = "nondegeneracy";
    j["verdict"] = to_string(rep.verdict);
    j["m_hat"] = rep.m_hat;
    j["samples"] = rep.rank.size();
    j["first_bad_sample"] = rep.first_bad_sample;
    return j;
}

Json certificate_report(const PowerSystem& sys, const RoaCertificate& cert, unsigned seed) {
    Json j;
    j["schema"] = kReportSchema;
    j["kind"] = "roa_certificate";
    j["v_kind"] = cert.v_kind;
    j["level"] = cert.level;
    j["verdict"] = to_string(cert.verdict);
    j["samples"] = cert.samples;
    j["seed"] = seed;
    j["sampling_only"] = cert.sampling_only;
    j["lmi_margin"] = cert.lmi_margin;
    j["min_det_rcond"] = cert.min_det_rcond;
    j["max_vdot"] = cert.max_vdot;
    j["max_vddot"] = cert.max_vddot;
    j["z_within_box"] = cert.z_within_box;
    j["boundary_contacts"] = cert.boundary_contacts;
    j["detail"] = cert.detail;
    if (cert.counterexample) {
        Json cx = Json::object();
        const Vec x = sys.full_x(*cert.counterexample);
        for (int i = 0; i < x.size(); ++i) cx[sys.state_names()[i]] = x(i);
        Json zv = Json::array();
        for (int i = 0; i < cert.counterexample->z.size(); ++i)
            zv.push_back(cert.counterexample->z(i));
        j["counterexample"] = Json{{"x", cx}, {"z", zv}};
    }
    return j;
}

Json combined_verdict_report(const CombinedVerdict& verdict) {
    Json j;
    j["schema"] = kReportSchema;
    j["kind"] = "combined_verdict";
    j["property1_claim"] = verdict.property1_claim;
    j["convergence_claim"] = verdict.convergence_claim;
    j["statement"] = verdict.statement;
    j["caveats"] = verdict.caveats;
    return j;
}

void write_report(const std::string& path, const Json& j) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot write " + path);
    os << j.dump(2) << '\n';
}

}  // namespace gridsync
