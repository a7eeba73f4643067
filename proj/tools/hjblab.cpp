// hjblab: verification laboratory for candidate value functions of the
// one-sector optimal growth model.
//
// Subcommands: audit | residual | certify | viscosity | dp | reproduce.
// Exit codes: 0 success / ACCEPT, 2 usage or input error, 3 verification
// failure.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "hjblab/candidates.hpp"
#include "hjblab/dp_oracle.hpp"
#include "hjblab/errors.hpp"
#include "hjblab/hamiltonian.hpp"
#include "hjblab/io.hpp"
#include "hjblab/model.hpp"
#include "hjblab/rollout.hpp"
#include "hjblab/viscosity.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace hjblab;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitVerification = 3;

// Echoed into every run report; the pipelines themselves are deterministic.
long g_seed = 42;

struct RunReport {
    std::string command;
    json model_echo;
    json inputs = json::object();
    std::vector<std::string> outputs;
    json summary = json::array();
    long seed = g_seed;
    bool all_pass = true;

    void check(const std::string& name, bool pass, const std::string& detail) {
        summary.push_back({{"criterion", name}, {"pass", pass}, {"detail", detail}});
        if (!pass) all_pass = false;
    }
    json to_json() const {
        return json{{"command", command}, {"model", model_echo},   {"inputs", inputs},
                    {"outputs", outputs}, {"summary", summary},    {"seed", seed},
                    {"pass", all_pass}};
    }
};

std::string out_dir_default() {
    if (const char* env = std::getenv("HJBLAB_OUT")) return env;
    return "out";
}

void emit(RunReport& report, const std::string& dir, const std::string& name,
          const std::string& contents) {
    fs::create_directories(dir);
    const std::string path = (fs::path(dir) / name).string();
    write_text_file(path, contents);
    report.outputs.push_back(path);
}

void write_report(const RunReport& report, const std::string& dir) {
    fs::create_directories(dir);
    const std::string path = (fs::path(dir) / "run_report.json").string();
    write_text_file(path, report.to_json().dump(2) + "\n");
    std::cout << (report.all_pass ? "PASS " : "FAIL ") << report.command << " -> " << path
              << "\n";
}

ModelSpec builtin_model(const std::string& name) {
    if (name == "prop1") return {1.0, UtilitySpec::linear(), ProductionSpec::sqrt_prod()};
    if (name == "prop2") return {1.0, UtilitySpec::sqrt_shift(), ProductionSpec::linear_prod()};
    if (name == "theorem2")
        return {1.0, UtilitySpec::scaled_sqrt(2.0), ProductionSpec::sqrt_prod()};
    throw ParseError("unknown builtin model '" + name + "'", name);
}

// --model accepts a path to a JSON file or one of the builtin names.
ModelSpec load_model(const std::string& spec) {
    if (spec == "prop1" || spec == "prop2" || spec == "theorem2") return builtin_model(spec);
    return model_from_file(spec);
}

json audit_to_json(const AuditReport& audit) {
    json arr = json::array();
    for (const AuditCondition& c : audit.conditions)
        arr.push_back({{"name", c.name}, {"pass", c.pass}, {"witness", c.witness}});
    return arr;
}

// ---------------------------------------------------------------------------
// Subcommand bodies
// ---------------------------------------------------------------------------

int cmd_audit(const std::string& model_spec, const std::string& out) {
    RunReport report;
    report.command = "audit";
    const ModelSpec model = load_model(model_spec);
    report.model_echo = model_to_json(model);
    const AuditReport audit = audit_assumptions(model);
    emit(report, out, "audit.json", audit_to_json(audit).dump(2) + "\n");
    for (const AuditCondition& c : audit.conditions)
        std::cout << "  " << c.name << ": " << (c.pass ? "PASS" : "FAIL") << " (" << c.witness
                  << ")\n";
    report.check("audit completed", true, "see audit.json");
    write_report(report, out);
    return kExitOk;
}

int cmd_residual(const std::string& model_spec, const std::string& candidate_desc,
                 const std::string& grid_spec, double tol, const std::string& out) {
    RunReport report;
    report.command = "residual";
    const ModelSpec model = load_model(model_spec);
    report.model_echo = model_to_json(model);
    report.inputs = {{"candidate", candidate_desc}, {"grid", grid_spec}, {"tol", tol}};
    const CandidateValueFn candidate = parse_candidate(candidate_desc, model);
    report.inputs["candidate_parsed"] = candidate.describe();
    const ResidualProfile profile =
        residual_profile(model, candidate, parse_grid_spec(grid_spec).build());
    emit(report, out, "residual.csv", residual_profile_csv(profile));
    report.check("sup norm <= tol",
                 profile.sup_norm_finite <= tol && profile.count_infinite == 0,
                 "sup=" + fmt_double(profile.sup_norm_finite) +
                     ", infinite=" + std::to_string(profile.count_infinite));
    write_report(report, out);
    return report.all_pass ? kExitOk : kExitVerification;
}

int cmd_certify(const std::string& model_spec, const std::string& candidate_desc, double k0,
                double horizon, double dt, const CertifyTolerances& tol,
                const std::string& out) {
    RunReport report;
    report.command = "certify";
    const ModelSpec model = load_model(model_spec);
    report.model_echo = model_to_json(model);
    IntegratorConfig cfg;
    cfg.dt = dt;
    cfg.T = horizon > 0 ? horizon : 30.0 / model.rho;
    report.inputs = {{"candidate", candidate_desc}, {"k0", k0}, {"T", cfg.T}, {"dt", cfg.dt}};
    const CandidateValueFn candidate = parse_candidate(candidate_desc, model);
    report.inputs["candidate_parsed"] = candidate.describe();
    const CertificationReport cert = certify(model, candidate, k0, cfg, tol);
    emit(report, out, "trajectory.csv", cert.trajectory.to_csv());
    emit(report, out, "certification.json", cert.to_json().dump(2) + "\n");
    report.check("certified", cert.accepted(), cert.reason);
    write_report(report, out);
    return cert.accepted() ? kExitOk : kExitVerification;
}

int cmd_viscosity(const std::string& model_spec, const std::string& candidate_desc,
                  const std::string& grid_spec, double tol, const std::string& out) {
    RunReport report;
    report.command = "viscosity";
    const ModelSpec model = load_model(model_spec);
    report.model_echo = model_to_json(model);
    report.inputs = {{"candidate", candidate_desc}, {"grid", grid_spec}, {"tol", tol}};
    const CandidateValueFn candidate = parse_candidate(candidate_desc, model);
    report.inputs["candidate_parsed"] = candidate.describe();
    ViscosityOptions opts;
    opts.tol = tol;
    const ViscosityReport visc =
        viscosity_report(model, candidate, parse_grid_spec(grid_spec).build(), opts);
    emit(report, out, "viscosity.csv", viscosity_report_csv(visc));
    report.check("no violation found on grid", visc.consistent_on_grid,
                 std::to_string(visc.violations) + " violation(s), " +
                     std::to_string(visc.vacuous) + " vacuous kink point(s)");
    write_report(report, out);
    return visc.consistent_on_grid ? kExitOk : kExitVerification;
}

int cmd_dp(const std::string& model_spec, const std::string& grid_spec, double dt,
           double horizon, double c_max, int c_grid, const std::string& terminal,
           double c_floor, const std::string& out) {
    RunReport report;
    report.command = "dp";
    const ModelSpec model = load_model(model_spec);
    report.model_echo = model_to_json(model);
    DPConfig cfg;
    cfg.k_grid = parse_grid_spec(grid_spec).build();
    cfg.dt = dt;
    cfg.T = horizon > 0 ? horizon : 30.0 / model.rho;
    cfg.c_max = c_max;
    cfg.c_grid_size = c_grid;
    cfg.c_floor = c_floor;
    if (terminal == "zero") cfg.terminal = DPConfig::Terminal::Zero;
    else if (terminal == "bound") cfg.terminal = DPConfig::Terminal::Bound;
    else throw ParseError("terminal must be zero|bound", terminal);
    report.inputs = cfg.to_json();
    const ValueTable table = dp_solve(model, cfg);
    emit(report, out, "dp_value.csv", table.to_csv());
    report.check("monotone in k", table.diagnostics.monotone_in_k, "");
    report.check("concave on grid", table.diagnostics.concave_on_grid, "");
    write_report(report, out);
    return report.all_pass ? kExitOk : kExitVerification;
}

// ---------------------------------------------------------------------------
// reproduce
// ---------------------------------------------------------------------------

int reproduce_prop1(const std::string& out) {
    RunReport report;
    report.command = "reproduce prop1";
    const ModelSpec model = builtin_model("prop1");
    report.model_echo = model_to_json(model);

    // Every member of the exponential family with a big enough coefficient
    // solves the optimality equation exactly.
    const std::vector<double> grid = log_grid(0.05, 20.0, 200);
    for (double A : {1.5, 2.0, 4.0}) {
        const CandidateValueFn fam{Prop1Family{A, model.rho}};
        const ResidualProfile profile = residual_profile(model, fam, grid);
        emit(report, out, "residual_A" + fmt_double(A) + ".csv",
             residual_profile_csv(profile));
        report.check("family A=" + fmt_double(A) + " solves the equation",
                     profile.sup_norm_finite <= 1e-9 && profile.count_infinite == 0,
                     "sup=" + fmt_double(profile.sup_norm_finite));
    }

    const double a_min = prop1_min_A(model.rho);
    report.check("slope threshold", std::fabs(a_min - std::exp(1.0) / 2) <= 1e-3,
                 "A_min=" + fmt_double(a_min));
    {
        const CandidateValueFn fam{Prop1Family{a_min * 1.01, model.rho}};
        double min_slope = std::numeric_limits<double>::infinity();
        for (double k : log_grid(1e-6, 1e6, 4001))
            min_slope = std::min(min_slope, fam.deriv(k));
        report.check("A just above threshold keeps slope > 1", min_slope > 1.0,
                     "min V' = " + fmt_double(min_slope));
    }

    const DivergenceReport divergence = divergence_check(Prop1Family{2.0, model.rho});
    report.check("slope diverges at both ends, family not concave", divergence.all_pass(),
                 "thresholds up to 1000 with chord gap " + fmt_double(divergence.chord_gap));

    // Independent discretized estimate: it obeys the hard bounds, while every
    // admissible family member sits strictly above it. No classical solution
    // is the value function here.
    DPConfig cfg;
    cfg.k_grid = linear_grid(0.01, 4.0, 400);
    const ValueTable table = dp_solve(model, cfg);
    emit(report, out, "dp_value.csv", table.to_csv());
    const double v_dp = table.value_at(1.0);
    report.check("estimate within the hard bounds", v_dp >= 1.0 && v_dp <= 1.25,
                 "V_dp(1)=" + fmt_double(v_dp));
    report.check("family separated from the estimate at k=1", a_min - v_dp >= 0.1,
                 "A_min - V_dp(1) = " + fmt_double(a_min - v_dp));

    const CandidateValueFn estimate = table_to_candidate(table);
    std::vector<double> hunt_grid;
    for (double k : table.k_grid)
        if (k >= 0.05 && k <= 3.9) hunt_grid.push_back(k);
    ViscosityOptions opts;
    opts.tol = 1e-3;
    const ViscosityReport visc = viscosity_report(model, estimate, hunt_grid, opts);
    emit(report, out, "viscosity_dp_estimate.csv", viscosity_report_csv(visc));
    report.check("weak-solution test fails on the concave estimate", visc.violations >= 1,
                 std::to_string(visc.violations) + " violation(s) found");

    write_report(report, out);
    return report.all_pass ? kExitOk : kExitVerification;
}

int reproduce_prop2(const std::string& out) {
    RunReport report;
    report.command = "reproduce prop2";
    const ModelSpec model = builtin_model("prop2");
    report.model_echo = model_to_json(model);

    const std::vector<double> grid = log_grid(0.1, 10.0, 200);
    const CandidateValueFn singular{Prop2Singular{}};
    {
        const ResidualProfile profile = residual_profile(model, singular, grid);
        emit(report, out, "residual_singular.csv", residual_profile_csv(profile));
        report.check("envelope solves the equation",
                     profile.sup_norm_finite <= 1e-9 && profile.count_infinite == 0,
                     "sup=" + fmt_double(profile.sup_norm_finite));
    }
    for (double A : {1.5, 2.0, 3.0}) {
        const CandidateValueFn line{ClairautGeneral{A}};
        const ResidualProfile profile = residual_profile(model, line, grid);
        emit(report, out, "residual_clairaut_A" + fmt_double(A) + ".csv",
             residual_profile_csv(profile));
        report.check("line A=" + fmt_double(A) + " solves the equation",
                     profile.sup_norm_finite <= 1e-9 && profile.count_infinite == 0,
                     "sup=" + fmt_double(profile.sup_norm_finite));
    }

    IntegratorConfig cfg;
    cfg.T = 30.0;
    {
        const CertificationReport cert = certify(model, singular, 1.0, cfg);
        emit(report, out, "certify_singular.json", cert.to_json().dump(2) + "\n");
        emit(report, out, "trajectory_singular.csv", cert.trajectory.to_csv());
        report.check("envelope accepted at k0=1", cert.accepted(), cert.reason);
    }
    // Each line of the family touches the envelope at one tangency point
    // (k = 1/(4(A-1)^2)), where its value and its induced path coincide with
    // the optimum. Certify away from the tangency to expose the impostors.
    for (double A : {1.5, 2.0, 3.0}) {
        const CandidateValueFn line{ClairautGeneral{A}};
        const CertificationReport cert = certify(model, line, 2.0, cfg);
        emit(report, out, "certify_clairaut_A" + fmt_double(A) + ".json",
             cert.to_json().dump(2) + "\n");
        report.check("line A=" + fmt_double(A) + " rejected at k0=2", !cert.accepted(),
                     cert.reason);
    }
    {
        const CertificationReport cert =
            certify(model, CandidateValueFn{ClairautGeneral{2.0}}, 1.0, cfg);
        emit(report, out, "certify_clairaut_A2_k1.json", cert.to_json().dump(2) + "\n");
        report.check("line A=2 rejected at k0=1", !cert.accepted(), cert.reason);
    }
    {
        // At its own tangency point the A=1.5 line carries the true value and
        // the certificate accepts; the k0=2 rejection above is what shows it
        // is not the value function.
        const CertificationReport cert =
            certify(model, CandidateValueFn{ClairautGeneral{1.5}}, 1.0, cfg);
        emit(report, out, "certify_clairaut_A1.5_tangency.json",
             cert.to_json().dump(2) + "\n");
        report.check("line A=1.5 certifies only its tangency point k0=1", cert.accepted(),
                     cert.reason);
    }
    {
        const CandidateValueFn line{ClairautGeneral{2.0}};
        const CertificationReport cert = certify(model, line, 0.2, cfg);
        emit(report, out, "certify_clairaut_A2_low.json", cert.to_json().dump(2) + "\n");
        const bool floor_hit =
            cert.trajectory.terminated == Trajectory::End::HitFloor &&
            std::fabs(cert.trajectory.t_stop - std::log(5.0)) <= 0.01;
        report.check("line A=2 exhausts capital from k0=0.2 at t=ln 5",
                     !cert.accepted() && floor_hit,
                     "t_stop=" + fmt_double(cert.trajectory.t_stop));
    }

    write_report(report, out);
    return report.all_pass ? kExitOk : kExitVerification;
}

int reproduce_theorem2(const std::string& out) {
    RunReport report;
    report.command = "reproduce theorem2-demo";
    const ModelSpec model = builtin_model("theorem2");
    report.model_echo = model_to_json(model);

    const AuditReport audit = audit_assumptions(model);
    emit(report, out, "audit.json", audit_to_json(audit).dump(2) + "\n");
    report.check("assumptions hold", audit.all_pass(), "");

    const SteadyStateResult ss = find_steady_state(model, {0.01, 4.0});
    report.check("steady state at 0.25",
                 ss.found() && std::fabs(ss.k_star - 0.25) <= 1e-10,
                 "k*=" + fmt_double(ss.k_star));

    const HjbSolveResult solved = solve_hjb_from_steady_state(model, {0.1, 2.0});
    emit(report, out, "value_ode.csv", solved.grid_fn.to_csv());
    report.check("anchor value sqrt(2)",
                 std::fabs(solved.v_star - std::sqrt(2.0)) <= 1e-6,
                 "V(k*)=" + fmt_double(solved.v_star));
    report.check("on-knot residual small", solved.residual_sup <= 1e-6,
                 "sup=" + fmt_double(solved.residual_sup));

    const CandidateValueFn candidate{solved.grid_fn};
    IntegratorConfig cfg;
    cfg.T = 30.0;
    for (double k0 : {0.5, 1.0}) {
        const CertificationReport cert = certify(model, candidate, k0, cfg);
        emit(report, out, "certify_k0_" + fmt_double(k0) + ".json",
             cert.to_json().dump(2) + "\n");
        report.check("accepted at k0=" + fmt_double(k0),
                     cert.accepted() && std::fabs(cert.payoff_gap) <= 1e-3, cert.reason);
    }

    DPConfig dp_cfg;
    dp_cfg.k_grid = linear_grid(0.01, 4.0, 400);
    const ValueTable table = dp_solve(model, dp_cfg);
    emit(report, out, "dp_value.csv", table.to_csv());
    for (double probe : {0.25, 0.5, 1.0}) {
        const double gap = std::fabs(table.value_at(probe) - candidate.eval(probe));
        report.check("estimate agrees at k=" + fmt_double(probe), gap <= 0.05,
                     "|V_dp - V_ode| = " + fmt_double(gap));
    }

    write_report(report, out);
    return report.all_pass ? kExitOk : kExitVerification;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hjblab: verification laboratory for growth-model value functions"};
    app.require_subcommand(1);

    std::string model_spec, candidate_desc, grid_spec, out_dir = out_dir_default();
    std::string dp_grid = "0.01:4:400", terminal = "zero", reproduce_name;
    double k0 = 1.0, horizon = -1.0, dt = 0.01, c_max = 8.0, c_floor = 0.0;
    double tol_residual = 1e-6, tol_gap = 1e-4, tol_tail = 1e-4, tol_visc = 1e-7;
    int c_grid = 801;
    long seed = 42;

    auto add_common = [&](CLI::App* cmd, bool needs_model) {
        if (needs_model)
            cmd->add_option("--model", model_spec, "model JSON file or builtin name")
                ->required();
        cmd->add_option("--out", out_dir, "output directory");
        cmd->add_option("--seed", seed, "seed echoed into the run report");
    };

    CLI::App* audit = app.add_subcommand("audit", "check the model assumptions");
    add_common(audit, true);

    CLI::App* residual = app.add_subcommand("residual", "equation residual of a candidate");
    add_common(residual, true);
    residual->add_option("--candidate", candidate_desc, "candidate descriptor")->required();
    residual->add_option("--grid", grid_spec = "0.1:10:200:log", "k grid MIN:MAX:N[:log]");
    residual->add_option("--tol-residual", tol_residual, "sup-norm tolerance");

    CLI::App* certify_cmd = app.add_subcommand("certify", "rollout certification");
    add_common(certify_cmd, true);
    certify_cmd->add_option("--candidate", candidate_desc, "candidate descriptor")->required();
    certify_cmd->add_option("--k0", k0, "initial capital");
    certify_cmd->add_option("--horizon", horizon, "truncation horizon (default 30/rho)");
    certify_cmd->add_option("--dt", dt, "integrator step");
    certify_cmd->add_option("--tol-residual", tol_residual, "path residual tolerance");
    certify_cmd->add_option("--tol-gap", tol_gap, "payoff gap tolerance (relative)");
    certify_cmd->add_option("--tol-tail", tol_tail, "transversality tail tolerance");

    CLI::App* viscosity_cmd = app.add_subcommand("viscosity", "weak-solution checks");
    add_common(viscosity_cmd, true);
    viscosity_cmd->add_option("--candidate", candidate_desc, "candidate descriptor")
        ->required();
    viscosity_cmd->add_option("--grid", grid_spec = "0.5:1.5:11", "k grid MIN:MAX:N[:log]");
    viscosity_cmd->add_option("--tol-viscosity", tol_visc, "holds/violated tolerance");

    CLI::App* dp = app.add_subcommand("dp", "discretized value estimate");
    add_common(dp, true);
    dp->add_option("--grid", dp_grid, "k grid MIN:MAX:N[:log]");
    dp->add_option("--dt", dt, "time step");
    dp->add_option("--horizon", horizon, "horizon (default 30/rho)");
    dp->add_option("--c-max", c_max, "consumption cap");
    dp->add_option("--c-grid", c_grid, "consumption grid size");
    dp->add_option("--terminal", terminal, "terminal slice: zero|bound");
    dp->add_option("--c-floor", c_floor, "consumption floor (for u(0) = -inf)");

    CLI::App* reproduce = app.add_subcommand("reproduce", "scripted reproductions");
    reproduce->add_option("name", reproduce_name, "prop1 | prop2 | theorem2-demo")->required();
    add_common(reproduce, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return kExitUsage;
    }
    g_seed = seed;

    try {
        if (*audit) return cmd_audit(model_spec, out_dir);
        if (*residual)
            return cmd_residual(model_spec, candidate_desc, grid_spec, tol_residual, out_dir);
        if (*certify_cmd) {
            CertifyTolerances tol{tol_residual, tol_gap, tol_tail};
            return cmd_certify(model_spec, candidate_desc, k0, horizon, dt, tol, out_dir);
        }
        if (*viscosity_cmd)
            return cmd_viscosity(model_spec, candidate_desc, grid_spec, tol_visc, out_dir);
        if (*dp)
            return cmd_dp(model_spec, dp_grid, dt, horizon, c_max, c_grid, terminal, c_floor,
                          out_dir);
        if (*reproduce) {
            const std::string sub = (fs::path(out_dir) / reproduce_name).string();
            if (reproduce_name == "prop1") return reproduce_prop1(sub);
            if (reproduce_name == "prop2") return reproduce_prop2(sub);
            if (reproduce_name == "theorem2-demo") return reproduce_theorem2(sub);
            std::cerr << "unknown reproduction '" << reproduce_name << "'\n";
            return kExitUsage;
        }
    } catch (const ParseError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitVerification;
    }
    return kExitUsage;
}
