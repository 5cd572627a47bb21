#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>
#include <sstream>

#include "cbfed/conditions.hpp"
#include "cbfed/experiment.hpp"
#include "cbfed/state_solver.hpp"

using namespace cbfed;

namespace {

struct Setup {
    ExperimentConfig cfg;
    FeSpace space;
    Vector f;

    Setup(int example, int n)
        : cfg(example_config(example)), space(build_unit_square(n)),
          f(interpolate_control(space, vector_field(cfg.f0)))
    {}
};

void check_invariants(const Setup& s, const StateSolution& sol)
{
    CHECK(sol.converged);
    const auto& mask = s.space.velocity_constraints();
    for (int i = 0; i < sol.u.size(); ++i)
        if (mask[i])
            CHECK(sol.u[i] == 0.0);
    CHECK(std::abs(pressure_mean(s.space, sol.p)) <= 1e-12);
    REQUIRE(!sol.residual_history.empty());
    CHECK(sol.residual_history.back().combined() < s.cfg.solver.eps_hvi);
    CHECK(sol.residual_history.back().divergence_residual <= s.cfg.solver.eps_hvi);
    CHECK(boundary_dissipation(s.space, s.cfg.law, sol.u) >= 0.0);
}

} // namespace

TEST_CASE("solver configuration is validated")
{
    SolverConfig c;
    CHECK_NOTHROW(c.validate());
    c.eps_hvi = 0.0;
    CHECK_THROWS_AS(c.validate(), ConfigurationError);
    c = {};
    c.eta = -1.0;
    CHECK_THROWS_AS(c.validate(), ConfigurationError);
    c = {};
    c.max_outer = 0;
    CHECK_THROWS_AS(c.validate(), ConfigurationError);
}

TEST_CASE("zero load gives the zero state")
{
    for (SolverMethod m : {SolverMethod::uzawa_newton, SolverMethod::coupled_newton}) {
        Setup s(2, 6);
        s.cfg.solver.method = m;
        const StateSolver solver(s.space, s.cfg.params, s.cfg.law, s.cfg.solver);
        const StateSolution sol = solver.solve(Vector(Vector::Zero(s.space.num_control_dofs())));
        CHECK(sol.converged);
        CHECK(sol.iterations <= 2);
        CHECK(sol.u.norm() == 0.0);
        CHECK(sol.p.norm() == 0.0);
    }
}

TEST_CASE("converged states satisfy the discrete system")
{
    for (int ex : {1, 2, 3}) {
        CAPTURE(ex);
        Setup s(ex, 8);
        const StateSolver solver(s.space, s.cfg.params, s.cfg.law, s.cfg.solver);
        const StateSolution sol = solver.solve(s.f);
        check_invariants(s, sol);
        const ResidualRecord r = solver.residual(sol.u, sol.p, solver.load(s.f));
        CHECK(r.combined() < s.cfg.solver.eps_hvi);
    }
}

TEST_CASE("Uzawa and coupled Newton agree")
{
    Setup s(3, 8);
    const StateSolver uzawa(s.space, s.cfg.params, s.cfg.law, s.cfg.solver);
    SolverConfig cc = s.cfg.solver;
    cc.method = SolverMethod::coupled_newton;
    const StateSolver coupled(s.space, s.cfg.params, s.cfg.law, cc);
    const StateSolution a = uzawa.solve(s.f), b = coupled.solve(s.f);
    check_invariants(s, b);
    const double un = velocity_v_norm(s.space, b.u);
    MESSAGE("relative velocity difference " << velocity_v_norm(s.space, a.u - b.u) / un);
    CHECK(velocity_v_norm(s.space, a.u - b.u) <= 1e-3 * un);
    CHECK(pressure_l2_norm(s.space, a.p - b.p) <= 1e-3 * pressure_l2_norm(s.space, b.p));

    const StateSolution tight = uzawa.solve_coupled(uzawa.load(s.f), &a, 1e-12, 50);
    CHECK(tight.converged);
    CHECK(tight.residual_history.back().combined() < 1e-12);
}

TEST_CASE("reruns are bitwise identical")
{
    Setup s(2, 6);
    const StateSolver solver(s.space, s.cfg.params, s.cfg.law, s.cfg.solver);
    const StateSolution a = solver.solve(s.f), b = solver.solve(s.f);
    REQUIRE(a.residual_history.size() == b.residual_history.size());
    for (std::size_t k = 0; k < a.residual_history.size(); ++k) {
        CHECK(a.residual_history[k].velocity_residual == b.residual_history[k].velocity_residual);
        CHECK(a.residual_history[k].divergence_residual == b.residual_history[k].divergence_residual);
    }
    CHECK(a.u == b.u);
    CHECK(a.p == b.p);
}

TEST_CASE("iteration caps raise a diagnostic error")
{
    Setup s(3, 6);
    s.cfg.solver.max_outer = 3;
    const StateSolver solver(s.space, s.cfg.params, s.cfg.law, s.cfg.solver);
    try {
        solver.solve(s.f);
        FAIL("expected ConvergenceError");
    } catch (const ConvergenceError& e) {
        CHECK(e.history().size() >= 3);
    }
}

TEST_CASE("energy bound holds for computed states")
{
    // Example 3 with its initial control.
    {
        Setup s(3, 8);
        const StateSolver solver(s.space, s.cfg.params, s.cfg.law, s.cfg.solver);
        const StateSolution sol = solver.solve(s.f);
        const SpectralConstants spec = estimate_lambda0(s.space);
        const EnergyBound eb = energy_bound(s.cfg.params, s.cfg.law, dual_norm(s.space, solver.load(s.f)), spec);
        CHECK(energy_norm(s.space, s.cfg.params, sol.u) < eb.k_tilde);
    }
    // Example 1 with a control after a few optimization steps.
    {
        ExperimentConfig cfg = example_config(1);
        cfg.opt.max_iter = 3;
        const MeshRun run = run_on_mesh(cfg, 4);
        const FeSpace& space = *run.space;
        const StateSolver solver(space, cfg.params, cfg.law, cfg.solver);
        const StateSolution sol = solver.solve(run.result.control);
        const EnergyBound eb =
            energy_bound(cfg.params, cfg.law, dual_norm(space, solver.load(run.result.control)), run.spectral);
        CHECK(velocity_v_norm(space, sol.u) * velocity_v_norm(space, sol.u) <= eb.k_tilde);
    }
}

TEST_CASE("dual norm")
{
    Setup s(1, 5);
    CHECK(dual_norm(s.space, Vector(Vector::Zero(s.space.num_velocity_dofs()))) == 0.0);
    const StateSolver solver(s.space, s.cfg.params, s.cfg.law, s.cfg.solver);
    const Vector F = solver.load(s.f);
    const double dn = dual_norm(s.space, F);
    CHECK(dn > 0.0);
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    for (int k = 0; k < 50; ++k) {
        Vector v(s.space.num_velocity_dofs());
        for (int i = 0; i < v.size(); ++i)
            v[i] = d(rng);
        s.space.apply_constraints(v);
        CHECK(std::abs(F.dot(v)) <= dn * velocity_v_norm(s.space, v) * (1.0 + 1e-12));
    }
}

TEST_CASE("residual history CSV")
{
    std::ostringstream os;
    write_residual_csv({{1, 0.5, 0.25}, {2, 1e-6, 2e-7}}, os);
    CHECK(os.str() ==
          "iteration,velocity_residual,divergence_residual\n"
          "1,5.0000000000e-01,2.5000000000e-01\n"
          "2,1.0000000000e-06,2.0000000000e-07\n");
}

TEST_CASE("mesh refinement is Cauchy")
{
    const ExperimentConfig cfg = example_config(2);
    struct Run {
        FeSpace space;
        StateSolution sol;
    };
    auto run = [&](int n) {
        FeSpace space(build_unit_square(n));
        SolverConfig sc = cfg.solver;
        sc.method = SolverMethod::coupled_newton;
        const StateSolver solver(space, cfg.params, cfg.law, sc);
        StateSolution sol = solver.solve(interpolate_control(space, vector_field(cfg.f0)));
        return Run{std::move(space), std::move(sol)};
    };
    const Run r8 = run(8), r16 = run(16), r25 = run(25);
    const Vector zc = Vector::Zero(r8.space.num_control_dofs());
    const Vector zf = Vector::Zero(r16.space.num_control_dofs());
    const Vector zr = Vector::Zero(r25.space.num_control_dofs());
    const double e8 = cross_mesh_errors(r8.space, r8.sol.u, r8.sol.p, zc, r16.space, r16.sol.u, r16.sol.p, zf).u_l2;
    const double e16 = cross_mesh_errors(r16.space, r16.sol.u, r16.sol.p, zf, r25.space, r25.sol.u, r25.sol.p, zr).u_l2;
    MESSAGE("||u8 - u16|| = " << e8 << ", ||u16 - u25|| = " << e16);
    CHECK(e8 > e16);
}
