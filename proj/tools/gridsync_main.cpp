// Command-line front end: case ingestion, analysis dispatch, CSV/report
// emission. Exit codes: 0 success, 1 analysis refutation, 2 input error.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include "gridsync/casefile.hpp"
#include "gridsync/errors.hpp"
#include "gridsync/io.hpp"
#include "gridsync/scan.hpp"
#include "gridsync/smsl.hpp"

using namespace gridsync;

namespace {

struct CommonArgs {
    std::string case_path;
    std::string devices_path;
    std::string config_path;
    std::string out_path = "report.json";
    int threads = 0;
    unsigned seed = 2024;
};

struct RunSetup {
    CaseFile cf;
    PowerSystem sys;
    IntegratorConfig integ;
    DomainBox domain;
    SamplerConfig sampler;
    double zdot_threshold = 1e-4;
    double f_threshold = 1e-3;
    double dist_tol = 1e-3;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--case", args.case_path, "MATPOWER-style case file")->required();
    cmd->add_option("--devices", args.devices_path, "device parameter file")->required();
    cmd->add_option("--config", args.config_path, "run configuration (JSON)");
    cmd->add_option("--out", args.out_path, "output path");
    cmd->add_option("--threads", args.threads, "sampling threads (0 = all)");
    cmd->add_option("--seed", args.seed, "sampler seed");
}

RunSetup load_setup(const CommonArgs& args) {
    CaseFile cf = parse_case(args.case_path);
    for (const std::string& w : cf.warnings) std::cerr << "warning: " << w << "\n";
    PowerSystem sys = build_system(cf, parse_device_file(args.devices_path));
    DomainBox domain = default_domain_box(sys);
    RunSetup setup{std::move(cf),        std::move(sys), IntegratorConfig{}, std::move(domain),
                   SamplerConfig{},      1e-4,           1e-3,               1e-3};

    setup.sampler.seed = args.seed;
    if (!args.config_path.empty()) {
        std::ifstream in(args.config_path);
        if (!in) throw Error("cannot open config: " + args.config_path);
        Json cfg = Json::parse(in);
        auto num = [&](const char* key, double& slot) {
            if (cfg.contains(key)) slot = cfg[key].get<double>();
        };
        num("rel_tol", setup.integ.rel_tol);
        num("abs_tol", setup.integ.abs_tol);
        num("max_step", setup.integ.max_step);
        num("t_end", setup.integ.t_end);
        num("g_drift_tol", setup.integ.g_drift_tol);
        num("zdot_threshold", setup.zdot_threshold);
        num("f_threshold", setup.f_threshold);
        num("dist_tol", setup.dist_tol);
        if (cfg.contains("samples")) setup.sampler.n_samples = cfg["samples"].get<int>();
        if (cfg.contains("seed")) setup.sampler.seed = cfg["seed"].get<unsigned>();
        auto box = [&](const char* key, Vec& lo_slot, Vec& hi_slot) {
            if (!cfg.contains(key)) return;
            for (const auto& entry : cfg[key].items()) {
                const int idx = setup.sys.state_index(entry.key());
                lo_slot(idx) = entry.value()[0].get<double>();
                hi_slot(idx) = entry.value()[1].get<double>();
            }
        };
        box("x_box", setup.domain.x_lo, setup.domain.x_hi);
    }
    set_scan_threads(args.threads);
    return setup;
}

SystemState seeded_equilibrium_state(const RunSetup& setup) {
    return setup.sys.flat_start();
}

int cmd_equilibrium(const CommonArgs& args, const std::string& pin_arg,
                    const std::string& state_out) {
    RunSetup setup = load_setup(args);
    std::optional<PinSpec> pin;
    if (!pin_arg.empty()) {
        const auto eq = pin_arg.find('=');
        if (eq == std::string::npos) throw Error("--pin expects name=value");
        pin = PinSpec{pin_arg.substr(0, eq), std::stod(pin_arg.substr(eq + 1))};
    }
    const EquilibriumPoint ep =
        solve_equilibrium(setup.sys, seeded_equilibrium_state(setup), pin);
    write_report(args.out_path, equilibrium_report(setup.sys, ep, pin));
    if (!state_out.empty()) write_state_csv(state_out, setup.sys, ep.state);
    std::cout << "equilibrium: ||f||_inf = " << ep.f_inf << ", ||g||_inf = " << ep.g_inf
              << " -> " << args.out_path << "\n";
    return 0;
}

int cmd_continuum(const CommonArgs& args, const std::string& param, const std::string& range_arg) {
    RunSetup setup = load_setup(args);
    ParameterRange range;
    {
        std::istringstream is(range_arg);
        std::string a, b, c;
        std::getline(is, a, ':');
        std::getline(is, b, ':');
        std::getline(is, c, ':');
        if (a.empty() || b.empty() || c.empty()) throw Error("--range expects lo:hi:step");
        range.lo = std::stod(a);
        range.hi = std::stod(b);
        range.step = std::stod(c);
    }
    const EquilibriumPoint start = solve_equilibrium(setup.sys, seeded_equilibrium_state(setup),
                                                     PinSpec{param, range.lo});
    const ContinuumTrace trace = trace_continuum(setup.sys, start, param, range);

    std::ofstream os(args.out_path, std::ios::binary);
    if (!os) throw Error("cannot write " + args.out_path);
    os << param;
    std::vector<int> x2cols;
    for (int k = 0; k < setup.sys.n2(); ++k) {
        const int full = setup.sys.x2_index()[k];
        x2cols.push_back(full);
        // short channel names: <state>_<bus>
        const std::string& nm = setup.sys.state_names()[full];
        const auto p1 = nm.find('.');
        const auto p2 = nm.find('.', p1 + 1);
        os << ',' << nm.substr(p2 + 1) << '_' << nm.substr(p1 + 1, p2 - p1 - 1);
    }
    os << ",mean_theta,mean_V\n";
    for (size_t k = 0; k < trace.points.size(); ++k) {
        os << fmt17(trace.parameter[k]);
        const Vec x = setup.sys.full_x(trace.points[k].state);
        for (int c : x2cols) os << ',' << fmt17(x(c));
        os << ',' << fmt17(trace.mean_theta[k]) << ',' << fmt17(trace.mean_v[k]) << '\n';
    }
    std::cout << "continuum: " << trace.points.size() << " equilibria -> " << args.out_path
              << "\n";
    return 0;
}

int cmd_simulate(const CommonArgs& args, const std::string& from_path, double t_end,
                 const std::vector<std::string>& kicks) {
    RunSetup setup = load_setup(args);
    if (t_end > 0) setup.integ.t_end = t_end;
    SystemState init = read_state_csv(from_path, setup.sys);
    Vec x = setup.sys.full_x(init);
    for (const std::string& kick : kicks) {
        const auto eq = kick.find('=');
        if (eq == std::string::npos) throw Error("--kick expects name=value");
        x(setup.sys.state_index(kick.substr(0, eq))) += std::stod(kick.substr(eq + 1));
    }
    setup.sys.split_x(x, init.x1, init.x2);
    if (!setup.domain.contains_x(x) || !setup.domain.contains_z(init.z))
        throw Error("initial state lies outside the domain box");
    init.z = project_algebraic(setup.sys, init.x2, init.z);
    const Trajectory traj = integrate(setup.sys, init, setup.integ, setup.domain);
    write_trajectory_csv(args.out_path, setup.sys, traj);
    std::cout << "simulate: " << traj.size() << " samples, termination "
              << to_string(traj.termination) << " -> " << args.out_path << "\n";
    return 0;
}

int cmd_detectability(const CommonArgs& args, const std::string& traj_path) {
    RunSetup setup = load_setup(args);
    const DetectabilityVerdict verdict = assess_detectability(setup.sys);
    Json j = detectability_report(verdict);
    if (!traj_path.empty()) {
        const Trajectory traj = read_trajectory_csv(traj_path, setup.sys);
        const NonDegeneracyReport rep = check_nondegeneracy(setup.sys, traj);
        j["nondegeneracy"] = nondegeneracy_report(rep);
        j["lemma1_max_residual"] = verify_lemma1(setup.sys, traj);
    }
    write_report(args.out_path, j);
    std::cout << "detectability: " << to_string(verdict.verdict) << " via "
              << to_string(verdict.route) << " -> " << args.out_path << "\n";
    return 0;
}

int cmd_roa_fit_p(const CommonArgs& args, int n_samples, const std::string& p_out) {
    RunSetup setup = load_setup(args);
    EquilibriumPoint ep;
    try {
        ep = solve_equilibrium(setup.sys, seeded_equilibrium_state(setup));
    } catch (const RankDeficientWithoutPin&) {
        ep = solve_equilibrium(setup.sys, seeded_equilibrium_state(setup), PinSpec{"zeta", 0.0});
    }
    // sample a small box around the equilibrium, z re-projected
    std::mt19937_64 rng(setup.sampler.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<SystemState> samples{ep.state};
    const Vec x0 = setup.sys.full_x(ep.state);
    while (static_cast<int>(samples.size()) < n_samples) {
        Vec x = x0;
        for (int i = 0; i < x.size(); ++i) x(i) += 2e-3 * gauss(rng);
        SystemState s;
        setup.sys.split_x(x, s.x1, s.x2);
        try {
            s.z = project_algebraic(setup.sys, s.x2, ep.state.z);
        } catch (const Error&) {
            continue;
        }
        samples.push_back(std::move(s));
    }
    const Mat A = make_pi_relaxation(setup.sys);
    const FitPResult fit = fit_P(setup.sys, samples, A);
    Json j;
    j["schema"] = kReportSchema;
    j["kind"] = "fit_p";
    j["feasible"] = fit.feasible;
    j["objective"] = fit.objective;
    j["iterations"] = fit.iterations;
    j["samples"] = samples.size();
    j["p_file"] = p_out;
    write_report(args.out_path, j);
    if (fit.feasible) write_matrix(p_out, fit.P);
    std::cout << "fit-p: objective " << fit.objective << (fit.feasible ? " (feasible)" : " (infeasible)")
              << " -> " << p_out << "\n";
    return fit.feasible ? 0 : 1;
}

int cmd_roa_certify(const CommonArgs& args, const std::string& p_path, double level) {
    RunSetup setup = load_setup(args);
    EquilibriumPoint ep;
    try {
        ep = solve_equilibrium(setup.sys, seeded_equilibrium_state(setup));
    } catch (const RankDeficientWithoutPin&) {
        ep = solve_equilibrium(setup.sys, seeded_equilibrium_state(setup), PinSpec{"zeta", 0.0});
    }
    KrasovskiiV v;
    v.P = read_matrix(p_path);
    v.A = make_pi_relaxation(setup.sys);
    v.level = level;
    const RoaCertificate cert = certify_type1(setup.sys, v, ep.state, setup.domain, setup.sampler);
    write_report(args.out_path, certificate_report(setup.sys, cert, setup.sampler.seed));
    std::cout << "certify: " << to_string(cert.verdict) << " (lmi margin " << cert.lmi_margin
              << ") -> " << args.out_path << "\n";
    return cert.verdict == CertVerdict::certified_sampled ? 0 : 1;
}

int cmd_verdict(const CommonArgs& args, const std::string& p_path, double level) {
    RunSetup setup = load_setup(args);
    EquilibriumPoint ep;
    try {
        ep = solve_equilibrium(setup.sys, seeded_equilibrium_state(setup));
    } catch (const RankDeficientWithoutPin&) {
        ep = solve_equilibrium(setup.sys, seeded_equilibrium_state(setup), PinSpec{"zeta", 0.0});
    }
    KrasovskiiV v;
    v.P = read_matrix(p_path);
    v.A = make_pi_relaxation(setup.sys);
    v.level = level;
    const RoaCertificate cert = certify_type1(setup.sys, v, ep.state, setup.domain, setup.sampler);
    const DetectabilityVerdict detect = assess_detectability(setup.sys);
    Json j;
    j["schema"] = kReportSchema;
    j["kind"] = "pipeline_verdict";
    j["certificate"] = certificate_report(setup.sys, cert, setup.sampler.seed);
    j["detectability"] = detectability_report(detect);
    int rc = 0;
    try {
        const CombinedVerdict combined = theorem4_verdict(setup.sys, cert, detect);
        j["combined"] = combined_verdict_report(combined);
    } catch (const ClaimUnavailable& e) {
        j["combined"] = Json{{"error", e.what()}};
        rc = 1;
    }
    write_report(args.out_path, j);
    std::cout << "verdict -> " << args.out_path << "\n";
    return rc;
}

int cmd_field(const CommonArgs& args, const std::string& plane, int grid_n, double extent_a,
              double extent_b) {
    RunSetup setup = load_setup(args);
    EquilibriumPoint ep;
    try {
        ep = solve_equilibrium(setup.sys, seeded_equilibrium_state(setup));
    } catch (const RankDeficientWithoutPin&) {
        ep = solve_equilibrium(setup.sys, seeded_equilibrium_state(setup), PinSpec{"zeta", 0.0});
    }
    const int n = setup.sys.n();
    Vec s1 = Vec::Zero(n), s2 = Vec::Zero(n);
    if (plane == "s1,s2") {
        // span: s1 over the non-omega states, s2 over the omegas
        for (int i = 0; i < n; ++i) {
            const std::string& nm = setup.sys.state_names()[i];
            if (nm.find(".omega") != std::string::npos)
                s2(i) = 1.0;
            else
                s1(i) = 1.0;
        }
        s1.normalize();
        s2.normalize();
    } else {
        throw Error("unsupported --plane (only the built-in s1,s2 plane is available)");
    }
    FieldGrid grid;
    grid.na = grid.nb = grid_n;
    grid.a_min = -extent_a;
    grid.a_max = extent_a;
    grid.b_min = -extent_b;
    grid.b_max = extent_b;
    const auto samples = tangent_plane_field(setup.sys, ep, s1, s2, grid);
    std::ofstream os(args.out_path, std::ios::binary);
    if (!os) throw Error("cannot write " + args.out_path);
    os << "a,b,f_s1,f_s2,ok\n";
    for (const FieldSample& fs : samples)
        os << fmt17(fs.a) << ',' << fmt17(fs.b) << ',' << fmt17(fs.f_s1) << ',' << fmt17(fs.f_s2)
           << ',' << (fs.ok ? 1 : 0) << '\n';
    std::cout << "field: " << samples.size() << " grid points -> " << args.out_path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"structure-preserving power-system DAE simulation and "
                 "synchronization-based stability certification"};
    app.require_subcommand(1);

    CommonArgs args;
    std::string pin_arg, param = "zeta", range_arg = "-0.1:0.1:0.01";
    std::string from_path, traj_path, p_path = "P.txt", p_out = "P_fitted.txt", state_out;
    std::vector<std::string> kicks;
    std::string plane = "s1,s2";
    double t_end = -1.0, level = 4.0, extent_a = 0.1, extent_b = 0.1;
    int fit_samples = 500, grid_n = 11;

    auto* eq = app.add_subcommand("equilibrium", "solve f = 0, g = 0");
    add_common(eq, args);
    eq->add_option("--pin", pin_arg, "pin a state, e.g. zeta=0");
    eq->add_option("--state-out", state_out, "also write the solved state as a state file");

    auto* cont = app.add_subcommand("continuum", "trace the equilibria continuum");
    add_common(cont, args);
    cont->add_option("--param", param, "continuation parameter (state name)");
    cont->add_option("--range", range_arg, "lo:hi:step");

    auto* sim = app.add_subcommand("simulate", "integrate the embedded ODE");
    add_common(sim, args);
    sim->add_option("--from", from_path, "initial state file (single-row CSV)")->required();
    sim->add_option("--t-end", t_end, "integration horizon (s)");
    sim->add_option("--kick", kicks, "additive state perturbation name=value (repeatable)");

    auto* det = app.add_subcommand("detectability", "device certificates and system verdict");
    add_common(det, args);
    det->add_option("--trajectory", traj_path, "also analyze a trajectory CSV");

    auto* roa = app.add_subcommand("roa", "region-of-attraction analyses");
    roa->require_subcommand(1);
    auto* fitp = roa->add_subcommand("fit-p", "fit a certificate metric by subgradient descent");
    add_common(fitp, args);
    fitp->add_option("--samples", fit_samples, "sample count");
    fitp->add_option("--p-out", p_out, "output matrix file");
    auto* certify = roa->add_subcommand("certify", "sample-check a quadratic certificate");
    add_common(certify, args);
    certify->add_option("--p", p_path, "P matrix file")->required();
    certify->add_option("--level", level, "sublevel value l");

    auto* verdict = app.add_subcommand("verdict", "end-to-end certification pipeline");
    add_common(verdict, args);
    verdict->add_option("--p", p_path, "P matrix file")->required();
    verdict->add_option("--level", level, "sublevel value l");

    auto* field = app.add_subcommand("field", "projected vector field around the equilibrium");
    add_common(field, args);
    field->add_option("--plane", plane, "projection plane (built-in: s1,s2)");
    field->add_option("--grid", grid_n, "grid points per axis");
    field->add_option("--extent-a", extent_a, "half-extent along s1");
    field->add_option("--extent-b", extent_b, "half-extent along s2");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(eq)) return cmd_equilibrium(args, pin_arg, state_out);
        if (app.got_subcommand(cont)) return cmd_continuum(args, param, range_arg);
        if (app.got_subcommand(sim)) return cmd_simulate(args, from_path, t_end, kicks);
        if (app.got_subcommand(det)) return cmd_detectability(args, traj_path);
        if (app.got_subcommand(roa)) {
            if (roa->got_subcommand(fitp)) return cmd_roa_fit_p(args, fit_samples, p_out);
            return cmd_roa_certify(args, p_path, level);
        }
        if (app.got_subcommand(verdict)) return cmd_verdict(args, p_path, level);
        if (app.got_subcommand(field)) return cmd_field(args, plane, grid_n, extent_a, extent_b);
    } catch (const ParseError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const MissingSection& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const StructuralError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
