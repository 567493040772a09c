#include "gridsync/casefile.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "gridsync/errors.hpp"

namespace gridsync {

namespace {

std::string strip(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string drop_comment(const std::string& s, char marker) {
    const auto pos = s.find(marker);
    return pos == std::string::npos ? s : s.substr(0, pos);
}

std::vector<double> parse_row(const std::string& line, int line_no) {
    std::string body = line;
    for (char& c : body)
        if (c == ';' || c == ',') c = ' ';
    std::istringstream is(body);
    std::vector<double> vals;
    double v;
    while (is >> v) vals.push_back(v);
    if (!is.eof()) {
        std::string tok;
        is.clear();
        is >> tok;
        throw ParseError("unexpected token '" + tok + "' in numeric row", line_no);
    }
    return vals;
}

}  // namespace

CaseFile parse_case(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open case file: " + path);
    CaseFile cf;
    bool saw_base = false, saw_bus = false, saw_branch = false;

    std::string line;
    int line_no = 0;
    std::string section;  // active mpc.<name> matrix, empty otherwise
    std::vector<std::vector<double>> rows;

    auto close_section = [&]() {
        if (section == "bus") {
            for (const auto& r : rows) {
                if (r.size() < 6) throw ParseError("bus row needs at least 6 columns", line_no);
                CaseFile::BusRow b;
                b.id = static_cast<int>(r[0]);
                b.type = static_cast<int>(r[1]);
                b.pd = r[2];
                b.qd = r[3];
                b.gs = r[4];
                b.bs = r[5];
                if (r.size() > 8) {
                    b.vm = r[7];
                    b.va = r[8];
                }
                cf.buses.push_back(b);
            }
            saw_bus = true;
        } else if (section == "branch") {
            for (const auto& r : rows) {
                if (r.size() < 5) throw ParseError("branch row needs at least 5 columns", line_no);
                CaseFile::BranchRow b;
                b.from = static_cast<int>(r[0]);
                b.to = static_cast<int>(r[1]);
                b.r = r[2];
                b.x = r[3];
                b.b = r[4];
                if (r.size() > 9) {
                    b.ratio = r[8];
                    b.angle = r[9];
                }
                if (r.size() > 10) b.status = static_cast<int>(r[10]);
                cf.branches.push_back(b);
            }
            saw_branch = true;
        } else if (section == "gen") {
            for (const auto& r : rows) {
                if (r.size() < 2) throw ParseError("gen row needs at least 2 columns", line_no);
                CaseFile::GenRow g;
                g.bus = static_cast<int>(r[0]);
                g.pg = r[1];
                if (r.size() > 2) g.qg = r[2];
                if (r.size() > 5) g.vg = r[5];
                cf.gens.push_back(g);
            }
        } else if (!section.empty()) {
            cf.warnings.push_back("ignored unknown section mpc." + section);
        }
        section.clear();
        rows.clear();
    };

    while (std::getline(in, line)) {
        ++line_no;
        std::string s = strip(drop_comment(line, '%'));
        if (s.empty()) continue;
        if (section.empty()) {
            if (s.rfind("mpc.baseMVA", 0) == 0) {
                const auto eq = s.find('=');
                if (eq == std::string::npos) throw ParseError("malformed baseMVA line", line_no);
                std::string rhs = s.substr(eq + 1);
                for (char& c : rhs)
                    if (c == ';') c = ' ';
                try {
                    cf.base_mva = std::stod(rhs);
                } catch (...) {
                    throw ParseError("malformed baseMVA value", line_no);
                }
                saw_base = true;
            } else if (s.rfind("mpc.", 0) == 0 && s.find('[') != std::string::npos) {
                const auto eq = s.find('=');
                section = strip(s.substr(4, eq - 4));
                std::string tail = strip(s.substr(s.find('[') + 1));
                if (!tail.empty() && tail.find(']') != std::string::npos) {
                    // single-line matrix
                    const std::string body = tail.substr(0, tail.find(']'));
                    std::istringstream rs(body);
                    std::string rowtxt;
                    while (std::getline(rs, rowtxt, ';')) {
                        const auto vals = parse_row(rowtxt, line_no);
                        if (!vals.empty()) rows.push_back(vals);
                    }
                    close_section();
                } else if (!tail.empty()) {
                    const auto vals = parse_row(tail, line_no);
                    if (!vals.empty()) rows.push_back(vals);
                }
            }
            // other lines (function header, mpc.version, etc.) are ignored
        } else {
            if (s.find(']') != std::string::npos) {
                const std::string body = strip(s.substr(0, s.find(']')));
                if (!body.empty()) {
                    const auto vals = parse_row(body, line_no);
                    if (!vals.empty()) rows.push_back(vals);
                }
                close_section();
            } else {
                const auto vals = parse_row(s, line_no);
                if (!vals.empty()) rows.push_back(vals);
            }
        }
    }
    if (!saw_bus) throw MissingSection("case file has no mpc.bus section: " + path);
    if (!saw_branch) throw MissingSection("case file has no mpc.branch section: " + path);
    if (!saw_base) cf.warnings.push_back("baseMVA missing; assuming 100");
    return cf;
}

std::vector<DeviceSpec> parse_device_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open device file: " + path);
    std::vector<DeviceSpec> specs;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string s = strip(drop_comment(line, '#'));
        if (s.empty()) continue;
        if (s.rfind("device", 0) == 0) {
            DeviceSpec spec;
            spec.line = line_no;
            std::istringstream is(s.substr(6));
            std::string tok;
            while (is >> tok) {
                const auto eq = tok.find('=');
                if (eq == std::string::npos)
                    throw ParseError("expected key=value after 'device'", line_no);
                const std::string key = tok.substr(0, eq);
                const std::string val = tok.substr(eq + 1);
                if (key == "bus") {
                    try {
                        spec.bus = std::stoi(val);
                    } catch (...) {
                        throw ParseError("bad bus id '" + val + "'", line_no);
                    }
                } else if (key == "kind") {
                    spec.kind = val;
                } else {
                    throw ParseError("unknown device attribute '" + key + "'", line_no);
                }
            }
            if (spec.bus <= 0 || spec.kind.empty())
                throw ParseError("device line needs bus=<id> kind=<name>", line_no);
            specs.push_back(spec);
        } else {
            if (specs.empty()) throw ParseError("parameter before any device line", line_no);
            const auto eq = s.find('=');
            if (eq == std::string::npos) throw ParseError("expected key = value", line_no);
            const std::string key = strip(s.substr(0, eq));
            const std::string val = strip(s.substr(eq + 1));
            try {
                specs.back().params[key] = std::stod(val);
            } catch (...) {
                throw ParseError("bad numeric value '" + val + "' for " + key, line_no);
            }
        }
    }
    return specs;
}

namespace {

double take(const DeviceSpec& spec, const char* key) {
    const auto it = spec.params.find(key);
    if (it == spec.params.end())
        throw StructuralError("device at bus " + std::to_string(spec.bus) + " (" + spec.kind +
                              ") is missing parameter '" + key + "'");
    return it->second;
}

}  // namespace

DeviceModel instantiate_device(const DeviceSpec& spec) {
    DeviceModel dev;
    if (spec.kind == "classical_sg_pi") {
        dev = ClassicalSgPi{take(spec, "M"),   take(spec, "D"),  take(spec, "E"),
                            take(spec, "x_d_prime"), take(spec, "P_g0"), take(spec, "k1"),
                            take(spec, "k2")};
    } else if (spec.kind == "flux_decay_sg") {
        dev = FluxDecaySg{take(spec, "M"),         take(spec, "D"),   take(spec, "T_d0_prime"),
                          take(spec, "x_q"),       take(spec, "x_d"), take(spec, "x_d_prime"),
                          take(spec, "P_g"),       take(spec, "E_f")};
    } else if (spec.kind == "inverter_pq") {
        dev = InverterPq{take(spec, "tau1"),     take(spec, "tau2"),  take(spec, "d1"),
                         take(spec, "d2"),       take(spec, "P_ref"), take(spec, "Q_ref"),
                         take(spec, "theta_ref"), take(spec, "V_ref")};
    } else if (spec.kind == "const_pq_load") {
        dev = ConstPqLoad{take(spec, "P_d"), take(spec, "Q_d")};
    } else {
        throw UnknownDeviceKind("unknown device kind '" + spec.kind + "'");
    }
    validate(dev);
    return dev;
}

PowerSystem build_system(const CaseFile& cf, const std::vector<DeviceSpec>& devices) {
    const int nb = static_cast<int>(cf.buses.size());
    std::vector<Bus> buses(nb);
    std::vector<Branch> branches;
    std::vector<AttachedDevice> attached;

    std::vector<bool> overridden(nb + 1, false);
    for (const DeviceSpec& spec : devices) {
        if (spec.bus < 1 || spec.bus > nb)
            throw StructuralError("device file references unknown bus " + std::to_string(spec.bus));
        attached.push_back({spec.bus, instantiate_device(spec)});
        overridden[spec.bus] = true;
    }

    for (int i = 0; i < nb; ++i) {
        const CaseFile::BusRow& row = cf.buses[i];
        buses[i].id = row.id;
        buses[i].kind = BusKind::passive;
        if (!overridden[row.id] && (row.pd != 0.0 || row.qd != 0.0)) {
            attached.push_back(
                {row.id, ConstPqLoad{row.pd / cf.base_mva, row.qd / cf.base_mva}});
            buses[i].kind = BusKind::load;
        }
    }
    for (const AttachedDevice& ad : attached) {
        Bus& b = buses[ad.bus - 1];
        b.kind = std::holds_alternative<ConstPqLoad>(ad.model) ? BusKind::load : BusKind::device;
    }

    for (const CaseFile::BranchRow& row : cf.branches) {
        if (row.status == 0) continue;
        if (row.ratio != 0.0 && row.ratio != 1.0)
            throw StructuralError("off-nominal transformer ratios are not supported");
        if (row.angle != 0.0)
            throw StructuralError("phase-shifting transformers are not supported");
        branches.push_back(Branch::from_impedance(row.from, row.to, row.r, row.x, row.b));
    }

    // bus shunts fold into the admittance diagonal
    for (const CaseFile::BusRow& row : cf.buses) {
        if (row.gs == 0.0 && row.bs == 0.0) continue;
        throw StructuralError("bus shunt elements are not supported by this model subset");
    }

    return PowerSystem(std::move(buses), std::move(branches), std::move(attached));
}

}  // namespace gridsync
