#include "cbfed/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <ostream>

#include "cbfed/io.hpp"
#include "json.hpp"

namespace cbfed {

namespace {

constexpr double pi = std::numbers::pi;

} // namespace

VectorFunction vector_field(const std::string& name)
{
    if (name == "zero")
        return [](const Point&) { return Eigen::Vector2d::Zero(); };
    if (name == "ex1_u_d")
        return [](const Point& p) {
            const double x = p.x(), y = p.y();
            return Eigen::Vector2d(-x * x * (x - 1.0) * y * (3.0 * y - 2.0), x * (3.0 * x - 2.0) * y * y * (y - 1.0));
        };
    if (name == "ex1_f0")
        return [](const Point& p) { return Eigen::Vector2d(p.x() - 1.0, p.y() - 1.0); };
    if (name == "ex2_u_d")
        return [](const Point& p) {
            return Eigen::Vector2d(std::sin(pi * p.x()) * std::sin(pi * p.y()),
                                   std::cos(pi * p.x()) * std::cos(pi * p.y()));
        };
    if (name == "ex2_f0")
        return [](const Point& p) { return Eigen::Vector2d(std::sin(pi * p.x()), std::cos(pi * p.y())); };
    if (name == "ex3_u_d")
        return [](const Point& p) {
            const double x = 2.0 * pi * p.x(), y = 2.0 * pi * p.y();
            return Eigen::Vector2d(-std::cos(x) * std::sin(y) + std::sin(y), std::sin(x) * std::cos(y) - std::sin(x));
        };
    if (name == "ex3_f0")
        return [](const Point& p) {
            return Eigen::Vector2d(std::sin(2.0 * pi * p.y()), -std::sin(2.0 * pi * p.x()));
        };
    if (name == "bump_x")
        return [](const Point& p) { return Eigen::Vector2d(std::sin(pi * p.x()) * std::sin(pi * p.y()), 0.0); };
    throw ConfigurationError("unknown vector field '" + name + "'");
}

ScalarFunction scalar_field(const std::string& name)
{
    if (name == "zero")
        return [](const Point&) { return 0.0; };
    if (name == "ex1_p_d")
        return [](const Point& p) { return (2.0 * p.x() - 1.0) * (2.0 * p.y() - 1.0); };
    if (name == "ex2_p_d")
        return [](const Point& p) { return std::sin(pi * p.x()) * std::cos(pi * p.y()); };
    if (name == "ex3_p_d")
        return [](const Point& p) { return 2.0 * pi * (std::cos(2.0 * pi * p.y()) - std::cos(2.0 * pi * p.x())); };
    throw ConfigurationError("unknown scalar field '" + name + "'");
}

void ExperimentConfig::validate() const
{
    params.validate();
    law.validate();
    weights.validate();
    solver.validate();
    opt.validate();
    vector_field(u_d);
    vector_field(f0);
    scalar_field(p_d);
    if (meshes.empty())
        throw ConfigurationError("mesh list is empty");
    if (!std::is_sorted(meshes.begin(), meshes.end()) ||
        std::adjacent_find(meshes.begin(), meshes.end()) != meshes.end())
        throw ConfigurationError("mesh list must be strictly ascending");
    if (meshes.front() < 1)
        throw ConfigurationError("mesh sizes must be positive");
    if (reference <= meshes.back())
        throw ConfigurationError("reference mesh must be finer than every mesh in the list");
}

ExperimentConfig example_config(int id)
{
    ExperimentConfig cfg;
    cfg.example = id;
    cfg.solver.eps_hvi = 1e-5;
    cfg.opt.tau = 1e-2;
    cfg.opt.eps_opt = 1e-5;
    switch (id) {
    case 1:
        cfg.params = {1.2, 0.0, 0.0, 0.0, 3.0, 1.0};
        cfg.law = {1.55, 1.53, 3.0, 1e-6};
        cfg.solver.eta = 1.0;
        cfg.weights = {1.0, 1.2, 0.2};
        break;
    case 2:
        cfg.params = {1.0, 1.5, 1.0, 0.0, 3.0, 1.0};
        cfg.law = {4.01, 4.00, 1.5, 1e-6};
        cfg.solver.eta = 2.0;
        cfg.weights = {1.0, 1.0, 0.5};
        break;
    case 3:
        cfg.params = {1.0, 0.5, 1.0, -0.5, 3.0, 1.5};
        cfg.law = {3.25, 3.20, 0.5, 1e-6};
        cfg.solver.eta = 0.1;
        cfg.weights = {1.0, 0.5, 0.1};
        break;
    default:
        throw ConfigurationError("example id must be 1, 2 or 3");
    }
    const std::string prefix = "ex" + std::to_string(id) + "_";
    cfg.u_d = prefix + "u_d";
    cfg.p_d = prefix + "p_d";
    cfg.f0 = prefix + "f0";
    cfg.out_dir = "out/example" + std::to_string(id);
    return cfg;
}

MeshRun run_on_mesh(const ExperimentConfig& cfg, int n)
{
    MeshRun run;
    run.n = n;
    run.space = std::make_unique<FeSpace>(build_unit_square(n));
    const FeSpace& space = *run.space;
    run.h = mesh_size(space.mesh());
    run.spectral = estimate_lambda0(space);

    StateSolver solver(space, cfg.params, cfg.law, cfg.solver);
    Targets targets{interpolate_velocity(space, vector_field(cfg.u_d)), interpolate_pressure(space, scalar_field(cfg.p_d))};
    CostEvaluator cost(space, cfg.opt.cost, std::move(targets), cfg.weights);
    OptConfig opt = cfg.opt;
    opt.seed = cfg.seed;
    run.result = optimize(solver, interpolate_control(space, vector_field(cfg.f0)), cost, AdmissibleBox{}, opt,
                          &run.spectral);
    return run;
}

FieldErrors cross_mesh_errors(const FeSpace& coarse, const Vector& u, const Vector& p, const Vector& f,
                              const FeSpace& fine, const Vector& u_ref, const Vector& p_ref, const Vector& f_ref)
{
    double eu = 0.0, ev = 0.0, ep = 0.0, ef = 0.0;
    for (int t = 0; t < fine.mesh().num_triangles(); ++t) {
        for (int q = 0; q < fine.num_quadrature_points(); ++q) {
            // Points on coarse edges take the gradient of one neighbour.
            const Point x = fine.quadrature_point(t, q);
            const double w = fine.jxw(t, q);
            const VelocitySample a = evaluate_velocity(coarse, u, x);
            const VelocitySample b = evaluate_velocity(fine, u_ref, x);
            eu += w * (a.value - b.value).squaredNorm();
            const Eigen::Matrix2d g = a.gradient - b.gradient;
            ev += w * (0.5 * (g + g.transpose())).squaredNorm();
            const double dp = evaluate_pressure(coarse, p, x) - evaluate_pressure(fine, p_ref, x);
            ep += w * dp * dp;
            ef += w * (evaluate_control(coarse, f, x) - evaluate_control(fine, f_ref, x)).squaredNorm();
        }
    }
    return {std::sqrt(eu), std::sqrt(ev), std::sqrt(ep), std::sqrt(ef)};
}

ConvergenceTable convergence_study(const ExperimentConfig& cfg, std::vector<MeshRun>* runs)
{
    cfg.validate();
    std::vector<MeshRun> all;
    for (int n : cfg.meshes)
        all.push_back(run_on_mesh(cfg, n));
    all.push_back(run_on_mesh(cfg, cfg.reference));
    const MeshRun& ref = all.back();
    const FeSpace& fine = *ref.space;

    ConvergenceTable table;
    table.reference = cfg.reference;
    table.reference_norms = {velocity_l2_norm(fine, ref.result.state.u), velocity_v_norm(fine, ref.result.state.u),
                             pressure_l2_norm(fine, ref.result.state.p), control_l2_norm(fine, ref.result.control)};
    auto rel = [](double e, double norm) { return norm > 0.0 ? e / norm : 0.0; };
    for (std::size_t k = 0; k + 1 < all.size(); ++k) {
        const MeshRun& run = all[k];
        ErrorRow row;
        row.n = run.n;
        row.h = run.h;
        row.absolute = cross_mesh_errors(*run.space, run.result.state.u, run.result.state.p, run.result.control, fine,
                                         ref.result.state.u, ref.result.state.p, ref.result.control);
        const FieldErrors& nr = table.reference_norms;
        row.relative = {rel(row.absolute.u_l2, nr.u_l2), rel(row.absolute.u_v, nr.u_v), rel(row.absolute.p_l2, nr.p_l2),
                        rel(row.absolute.f_l2, nr.f_l2)};
        row.iterations = run.result.iterations;
        row.converged = run.result.converged;
        table.rows.push_back(row);
    }
    if (runs)
        *runs = std::move(all);
    return table;
}

void write_convergence_csv(const ConvergenceTable& table, std::ostream& os)
{
    os << "n,h,u_l2,u_v,p_l2,f_l2,u_l2_rel,u_v_rel,p_l2_rel,f_l2_rel,iterations,converged\n";
    char buf[320];
    for (const auto& r : table.rows) {
        std::snprintf(buf, sizeof buf, "%d,%.6e,%.10e,%.10e,%.10e,%.10e,%.10e,%.10e,%.10e,%.10e,%d,%d\n", r.n, r.h,
                      r.absolute.u_l2, r.absolute.u_v, r.absolute.p_l2, r.absolute.f_l2, r.relative.u_l2,
                      r.relative.u_v, r.relative.p_l2, r.relative.f_l2, r.iterations, r.converged ? 1 : 0);
        os << buf;
    }
}

ConvergenceTable run_example(const ExperimentConfig& cfg)
{
    std::vector<MeshRun> runs;
    ConvergenceTable table = convergence_study(cfg, &runs);
    namespace fs = std::filesystem;
    const fs::path out(cfg.out_dir);
    fs::create_directories(out);
    {
        std::ofstream os(out / "convergence.csv");
        write_convergence_csv(table, os);
    }
    for (const MeshRun& run : runs) {
        std::ofstream os(out / ("cost_history_n" + std::to_string(run.n) + ".csv"));
        write_cost_history_csv(run.result.history, os);
    }
    nlohmann::ordered_json summary = nlohmann::ordered_json::array();
    for (const MeshRun& run : runs) {
        summary.push_back({{"n", run.n},
                           {"h", run.h},
                           {"lambda0", run.spectral.lambda0},
                           {"iterations", run.result.iterations},
                           {"converged", run.result.converged},
                           {"initial_cost", run.result.history.front().cost.total()},
                           {"final_cost", run.result.history.back().cost.total()},
                           {"worst_energy_ratio", run.result.worst_energy_ratio.value_or(0.0)}});
    }
    {
        std::ofstream os(out / "summary.json");
        os << summary.dump(2) << '\n';
    }
    const MeshRun& ref = runs.back();
    std::ofstream os(out / ("fields_n" + std::to_string(ref.n) + ".vtk"));
    write_solution_vtk(*ref.space, ref.result.state.u, ref.result.state.p, ref.result.control, os);
    return table;
}

} // namespace cbfed
