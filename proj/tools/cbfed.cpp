// Command-line driver: state solves, optimization runs, convergence tables,
// condition checks, the numerical verification suite and perturbation
// studies.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "cbfed/conditions.hpp"
#include "cbfed/config.hpp"
#include "cbfed/experiment.hpp"
#include "cbfed/io.hpp"
#include "cbfed/verify.hpp"

namespace fs = std::filesystem;
using namespace cbfed;

namespace {

constexpr int exit_config = 2;
constexpr int exit_solver = 3;
constexpr int exit_verify = 4;

struct Options {
    std::string config;
    int example = 0;
    std::vector<int> meshes;
    std::string out;
    std::optional<unsigned long long> seed;
};

ExperimentConfig resolve(const Options& opt, bool required = true)
{
    if (!opt.config.empty() && opt.example != 0)
        throw ConfigurationError("--config and --example are mutually exclusive");
    ExperimentConfig cfg;
    if (!opt.config.empty())
        cfg = load_config(opt.config);
    else if (opt.example != 0)
        cfg = example_config(opt.example);
    else if (required)
        throw ConfigurationError("one of --config or --example is required");
    if (!opt.out.empty())
        cfg.out_dir = opt.out;
    if (opt.seed)
        cfg.seed = *opt.seed;
    return cfg;
}

// Single mesh for the one-mesh subcommands: first --mesh-n entry or n = 16.
int single_mesh(const Options& opt)
{
    if (opt.meshes.size() > 1)
        throw ConfigurationError("this subcommand takes a single --mesh-n value");
    const int n = opt.meshes.empty() ? 16 : opt.meshes.front();
    if (n < 1)
        throw ConfigurationError("--mesh-n must be positive");
    return n;
}

std::ofstream open_out(const fs::path& dir, const std::string& name)
{
    fs::create_directories(dir);
    std::ofstream os(dir / name);
    if (!os)
        throw ConfigurationError("cannot write " + (dir / name).string());
    return os;
}

int solve_state_cmd(const Options& opt)
{
    const ExperimentConfig cfg = resolve(opt);
    cfg.validate();
    const int n = single_mesh(opt);
    const FeSpace space(build_unit_square(n));
    const StateSolver solver(space, cfg.params, cfg.law, cfg.solver);
    const Vector f = interpolate_control(space, vector_field(cfg.f0));
    const StateSolution s = solver.solve(f);

    const fs::path out(cfg.out_dir);
    auto csv = open_out(out, "residual_history_n" + std::to_string(n) + ".csv");
    write_residual_csv(s.residual_history, csv);
    auto vtk = open_out(out, "state_n" + std::to_string(n) + ".vtk");
    write_solution_vtk(space, s.u, s.p, f, vtk);

    const ResidualRecord& last = s.residual_history.back();
    std::printf("n=%d iterations=%d linear_solves=%d residual=%.3e |u|_V=%.6e |p|_L2=%.6e\n", n, s.iterations,
                s.linear_solves, last.combined(), velocity_v_norm(space, s.u), pressure_l2_norm(space, s.p));
    return 0;
}

int optimize_cmd(const Options& opt)
{
    ExperimentConfig cfg = resolve(opt);
    if (!opt.meshes.empty())
        cfg.meshes = opt.meshes;
    cfg.reference = std::max(cfg.reference, cfg.meshes.back() + 1);
    cfg.validate();
    const fs::path out(cfg.out_dir);
    for (int n : cfg.meshes) {
        const MeshRun run = run_on_mesh(cfg, n);
        auto csv = open_out(out, "cost_history_n" + std::to_string(n) + ".csv");
        write_cost_history_csv(run.result.history, csv);
        auto vtk = open_out(out, "fields_n" + std::to_string(n) + ".vtk");
        write_solution_vtk(*run.space, run.result.state.u, run.result.state.p, run.result.control, vtk);
        std::printf("n=%d iterations=%d converged=%d cost %.6e -> %.6e worst_energy_ratio=%.3e\n", n,
                    run.result.iterations, run.result.converged ? 1 : 0, run.result.history.front().cost.total(),
                    run.result.history.back().cost.total(), run.result.worst_energy_ratio.value_or(0.0));
    }
    return 0;
}

int convergence_cmd(const Options& opt)
{
    ExperimentConfig cfg = resolve(opt);
    if (!opt.meshes.empty()) {
        // The last entry is the reference mesh.
        if (opt.meshes.size() < 2)
            throw ConfigurationError("--mesh-n needs coarse meshes followed by the reference mesh");
        cfg.meshes.assign(opt.meshes.begin(), opt.meshes.end() - 1);
        cfg.reference = opt.meshes.back();
    }
    cfg.validate();
    const ConvergenceTable table = run_example(cfg);
    std::printf("reference n=%d\n", table.reference);
    std::printf("%4s %12s %12s %12s %12s %12s %6s\n", "n", "h", "u_L2", "u_V", "p_L2", "f_L2", "iters");
    for (const ErrorRow& r : table.rows)
        std::printf("%4d %12.4e %12.4e %12.4e %12.4e %12.4e %6d\n", r.n, r.h, r.absolute.u_l2, r.absolute.u_v,
                    r.absolute.p_l2, r.absolute.f_l2, r.iterations);
    return 0;
}

int conditions_cmd(const Options& opt)
{
    const ExperimentConfig cfg = resolve(opt);
    cfg.validate();
    const int n = single_mesh(opt);
    const FeSpace space(build_unit_square(n));
    const SpectralConstants spec = estimate_lambda0(space);
    const Delta1Estimate d1 = estimate_delta1(cfg.law);
    const ExistenceReport ex = check_existence_condition(cfg.params, cfg.law, spec);
    const Vector F = assemble_load(space, interpolate_control(space, vector_field(cfg.f0)));
    const double f_dual = dual_norm(space, F);
    const EnergyBound eb = energy_bound(cfg.params, cfg.law, f_dual, spec);
    const UniquenessReport ur = check_uniqueness_conditions(cfg.params, spec, d1.delta1, cfg.constants, eb.k_tilde);

    auto opt_json = [](const auto& v) { return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr); };
    nlohmann::ordered_json j = {
        {"mesh_n", n},
        {"lambda0", spec.lambda0},
        {"delta1", d1.delta1},
        {"k0", cfg.law.k0()},
        {"k1", cfg.law.k1()},
        {"existence", {{"holds", ex.holds}, {"margin", ex.margin}}},
        {"f_dual_norm", f_dual},
        {"energy_bound", {{"k_f", eb.k_f}, {"k_tilde", eb.k_tilde}, {"beta_branch", eb.beta_branch}}},
        {"uniqueness",
         {{"rho1", ur.rho1},
          {"rho2", ur.rho2},
          {"rho3", opt_json(ur.rho3)},
          {"rho3_hat", opt_json(ur.rho3_hat)},
          {"rho4_hat", opt_json(ur.rho4_hat)},
          {"mu_condition", ur.mu_condition},
          {"mu_margin", ur.mu_margin},
          {"branch_a", opt_json(ur.branch_a)},
          {"margin_a", opt_json(ur.margin_a)},
          {"branch_b", opt_json(ur.branch_b)},
          {"margin_b", opt_json(ur.margin_b)},
          {"branch_low", opt_json(ur.branch_low)},
          {"margin_low", opt_json(ur.margin_low)},
          {"unevaluated", ur.unevaluated},
          {"holds", ur.holds()},
          {"conditional_on_constants", true}}},
    };
    auto os = open_out(cfg.out_dir, "conditions.json");
    os << j.dump(2) << '\n';
    std::cout << j.dump(2) << '\n';
    return 0;
}

int verify_cmd(const Options& opt)
{
    const ExperimentConfig cfg = resolve(opt, false);
    const SlipLaw law = opt.config.empty() && opt.example == 0 ? example_config(1).law : cfg.law;
    const auto reports = run_all_checks(law, opt.seed.value_or(default_verify_seed));
    for (const CheckReport& r : reports)
        std::printf("%-36s %s samples=%lld worst_margin=%.3e  %s\n", r.name.c_str(), r.pass ? "PASS" : "FAIL",
                    r.samples, r.worst_margin, r.location.c_str());
    auto os = open_out(cfg.out_dir, "verify.json");
    write_reports_json(reports, os);
    return all_passed(reports) ? 0 : exit_verify;
}

int perturbation_cmd(const Options& opt)
{
    const ExperimentConfig cfg = resolve(opt);
    cfg.validate();
    const int n = single_mesh(opt);
    const FeSpace space(build_unit_square(n));
    const StateSolver solver(space, cfg.params, cfg.law, cfg.solver);
    const Vector f = interpolate_control(space, vector_field(cfg.f0));
    const StateSolution base = solver.solve_coupled(solver.load(f), nullptr, 1e-12, cfg.solver.max_newton);
    Vector g = interpolate_control(space, vector_field("bump_x"));
    g /= control_l2_norm(space, g);
    const PerturbationStudy study = perturbation_study(solver, f, base, g, {0.1, 0.05, 0.025, 0.0125});

    auto os = open_out(cfg.out_dir, "perturbation_n" + std::to_string(n) + ".csv");
    os << "t,u_error_v,p_error_l2,load_dual_norm\n";
    char buf[160];
    std::printf("|u|_V=%.6e |p|_L2=%.6e\n", study.u_norm_v, study.p_norm_l2);
    for (const PerturbationRow& r : study.rows) {
        std::snprintf(buf, sizeof buf, "%.6e,%.10e,%.10e,%.10e\n", r.t, r.u_error_v, r.p_error_l2, r.load_dual_norm);
        os << buf;
        std::printf("t=%.4e |u_t-u|_V=%.4e |p_t-p|_L2=%.4e\n", r.t, r.u_error_v, r.p_error_l2);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Optimal control of stationary Brinkman-Forchheimer flow with nonmonotone slip"};
    app.require_subcommand(1);
    Options opt;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opt.config, "experiment configuration file")->check(CLI::ExistingFile);
        sub->add_option("--example", opt.example, "catalog example")->check(CLI::IsMember({1, 2, 3}));
        sub->add_option("--mesh-n", opt.meshes, "mesh subdivisions, comma separated")->delimiter(',');
        sub->add_option("--out", opt.out, "output directory");
        sub->add_option("--seed", opt.seed, "random seed");
    };

    struct Command {
        const char* name;
        const char* help;
        int (*run)(const Options&);
    };
    const Command commands[] = {
        {"solve-state", "solve the state equations for the initial control", solve_state_cmd},
        {"optimize", "run the projected subgradient method on each mesh", optimize_cmd},
        {"convergence-study", "optimize on every mesh and tabulate errors against the finest", convergence_cmd},
        {"check-conditions", "evaluate existence, energy and uniqueness conditions", conditions_cmd},
        {"verify", "run the numerical verification suite", verify_cmd},
        {"perturbation-study", "state sensitivity to load perturbations", perturbation_cmd},
    };
    std::vector<std::pair<CLI::App*, int (*)(const Options&)>> subs;
    for (const Command& c : commands) {
        CLI::App* sub = app.add_subcommand(c.name, c.help);
        add_common(sub);
        subs.emplace_back(sub, c.run);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_config;
    }

    try {
        for (const auto& [sub, run] : subs)
            if (sub->parsed())
                return run(opt);
    } catch (const ConfigurationError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return exit_config;
    } catch (const std::exception& e) {
        std::cerr << "solver failure: " << e.what() << '\n';
        return exit_solver;
    }
    return exit_config;
}
