#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <Eigen/SparseCholesky>

#include "cbfed/experiment.hpp"
#include "cbfed/optimize.hpp"

using namespace cbfed;

namespace {

constexpr double pi = std::numbers::pi;

Vector random_vector(int n, std::mt19937_64& rng, double scale = 1.0)
{
    std::uniform_real_distribution<double> d(-scale, scale);
    Vector v(n);
    for (int i = 0; i < n; ++i)
        v[i] = d(rng);
    return v;
}

// Integrates over a mesh of 2n subdivisions, whose triangles lie inside the
// triangles of the n-mesh, so piecewise polynomials are integrated exactly.
double refined_integral(const FeSpace& coarse, const std::function<double(const Point&)>& g)
{
    const FeSpace fine(build_unit_square(2 * coarse.mesh().subdivisions()), 1);
    double s = 0.0;
    for (int t = 0; t < fine.mesh().num_triangles(); ++t)
        for (int q = 0; q < fine.num_quadrature_points(); ++q)
            s += fine.jxw(t, q) * g(fine.quadrature_point(t, q));
    return s;
}

struct Problem {
    ExperimentConfig cfg;
    FeSpace space;
    StateSolver solver;
    CostEvaluator cost;
    Vector f0;

    Problem(ExperimentConfig c, int n)
        : cfg(std::move(c)), space(build_unit_square(n)), solver(space, cfg.params, cfg.law, cfg.solver),
          cost(space, cfg.opt.cost,
               {interpolate_velocity(space, vector_field(cfg.u_d)), interpolate_pressure(space, scalar_field(cfg.p_d))},
               cfg.weights),
          f0(interpolate_control(space, vector_field(cfg.f0)))
    {}

    StateSolution base(const Vector& f) const { return solver.solve_coupled(solver.load(f), nullptr, 1e-12, 50); }
};

} // namespace

TEST_CASE("configuration checks")
{
    CHECK_THROWS_AS(CostWeights({1.0, 1.0, 0.0}).validate(), ConfigurationError);
    CHECK_THROWS_AS(CostWeights({-1.0, 1.0, 1.0}).validate(), ConfigurationError);
    OptConfig o;
    CHECK_NOTHROW(o.validate());
    o.tau = 0.0;
    CHECK_THROWS_AS(o.validate(), ConfigurationError);
    o = {};
    o.max_iter = 0;
    CHECK_THROWS_AS(o.validate(), ConfigurationError);

    AdmissibleBox box;
    box.lower = Vector::Constant(3, 1.0);
    box.upper = Vector::Constant(3, 0.0);
    CHECK_THROWS_AS(box.validate(), ConfigurationError);
}

TEST_CASE("projection")
{
    AdmissibleBox box;
    box.lower = Vector::Constant(4, -1.0);
    box.upper = Vector::Constant(4, 1.0);
    Vector f(4);
    f << 5.0, 0.3, -7.0, -1.0;
    Vector expect(4);
    expect << 1.0, 0.3, -1.0, -1.0;
    CHECK(project(f, box) == expect);
    CHECK(project(project(f, box), box) == project(f, box));
    CHECK(project(f, AdmissibleBox{}) == f);
    CHECK(box.contains(project(f, box)));
    CHECK_FALSE(box.contains(f));

    const FeSpace s(build_unit_square(4));
    const SparseMatrix& m = assemble_control_mass(s).matrix;
    AdmissibleBox b2;
    b2.lower = Vector::Constant(s.num_control_dofs(), -0.3);
    b2.upper = Vector::Constant(s.num_control_dofs(), 0.4);
    std::mt19937_64 rng(1);
    for (int k = 0; k < 100; ++k) {
        const Vector x = random_vector(s.num_control_dofs(), rng), y = random_vector(s.num_control_dofs(), rng);
        const Vector dp = project(x, b2) - project(y, b2), d = x - y;
        CHECK(dp.lpNorm<Eigen::Infinity>() <= d.lpNorm<Eigen::Infinity>());
        CHECK(dp.dot(m * dp) <= d.dot(m * d) * (1.0 + 1e-14));
    }
}

TEST_CASE("tracking cost R1")
{
    const FeSpace s(build_unit_square(4));
    const CostWeights w{1.0, 1.0, 0.2};
    std::mt19937_64 rng(2);
    const Vector ud = random_vector(s.num_velocity_dofs(), rng);
    Vector pd = random_vector(s.num_pressure_dofs(), rng);
    remove_pressure_mean(s, pd);
    const Vector zf = Vector::Zero(s.num_control_dofs());

    CHECK(cost_R1(s, ud, pd, zf, ud, pd, w).total() == 0.0);
    const Vector e1 = interpolate_control(s, [](const Point&) { return Eigen::Vector2d(1.0, 0.0); });
    CHECK(cost_R1(s, ud, pd, e1, ud, pd, w).total() == doctest::Approx(0.1).epsilon(1e-14));
    const Vector shift = interpolate_velocity(s, [](const Point&) { return Eigen::Vector2d(1.0, 0.0); });
    const CostBreakdown c = cost_R1(s, ud + shift, pd, zf, ud, pd, CostWeights{1.0, 0.0, 1.0});
    CHECK(c.tracking_u == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(c.total() == doctest::Approx(0.5).epsilon(1e-14));

    // Random fields against the refined quadrature.
    const Vector u = random_vector(s.num_velocity_dofs(), rng);
    const Vector p = random_vector(s.num_pressure_dofs(), rng);
    const Vector f = random_vector(s.num_control_dofs(), rng);
    const CostWeights w2{0.7, 1.3, 0.4};
    const double ou = refined_integral(s, [&](const Point& x) {
        return (evaluate_velocity(s, u, x).value - evaluate_velocity(s, ud, x).value).squaredNorm();
    });
    const double op = refined_integral(s, [&](const Point& x) {
        const double d = evaluate_pressure(s, p, x) - evaluate_pressure(s, pd, x);
        return d * d;
    });
    const double of = refined_integral(s, [&](const Point& x) { return evaluate_control(s, f, x).squaredNorm(); });
    const CostBreakdown r = cost_R1(s, u, p, f, ud, pd, w2);
    CHECK(std::abs(r.tracking_u - 0.35 * ou) < 1e-10);
    CHECK(std::abs(r.tracking_p - 0.65 * op) < 1e-10);
    CHECK(std::abs(r.regularization - 0.2 * of) < 1e-10);
}

TEST_CASE("tracking cost R2")
{
    const FeSpace s(build_unit_square(4));
    const CostWeights w{1.5, 0.0, 1.0};
    const Vector zp = Vector::Zero(s.num_pressure_dofs()), zf = Vector::Zero(s.num_control_dofs());
    const Vector grad = interpolate_velocity(s, [](const Point& x) { return Eigen::Vector2d(2 * x.x(), 2 * x.y()); });
    CHECK(std::abs(cost_R2(s, grad, zp, zf, zp, w).tracking_u) < 1e-13);
    const Vector rot = interpolate_velocity(s, [](const Point& x) { return Eigen::Vector2d(-x.y(), x.x()); });
    CHECK(cost_R2(s, rot, zp, zf, zp, w).tracking_u == doctest::Approx(0.75 * 4.0).epsilon(1e-13));

    std::mt19937_64 rng(4);
    const Vector u = random_vector(s.num_velocity_dofs(), rng);
    const double oracle = refined_integral(s, [&](const Point& x) {
        const Eigen::Matrix2d g = evaluate_velocity(s, u, x).gradient;
        const double c = g(1, 0) - g(0, 1);
        return c * c;
    });
    CHECK(std::abs(cost_R2(s, u, zp, zf, zp, w).tracking_u - 0.75 * oracle) < 1e-10);
}

TEST_CASE("subgradient with tracking switched off")
{
    ExperimentConfig cfg = example_config(1);
    cfg.weights = {0.0, 0.0, 0.2};
    const Problem pb(cfg, 4);
    const StateSolution base = pb.base(pb.f0);
    OptConfig o = cfg.opt;
    o.exact_regularization = false;
    const Subgradient g = fd_subgradient(pb.solver, pb.cost, pb.f0, base, o);
    CHECK(g.tracking.norm() == 0.0);
    const Vector exact = pb.cost.regularization_gradient(pb.f0);
    // Forward differences of a quadratic: error is (a3/2) M_ii delta.
    const double err = (g.total - exact).lpNorm<Eigen::Infinity>();
    CHECK(err <= 0.1 * pb.cost.control_mass().diagonal().maxCoeff() * o.delta_fd * (1.0 + 1e-3));
    CHECK(err > 0.0);
}

TEST_CASE("subgradient inherits mirror symmetry under refinement")
{
    // x -> 1 - x maps the domain, Gamma1 and the data onto themselves when
    // f0 = (0, sin(pi x)) and the targets vanish, so g_x is odd and g_y even
    // under the mirror. The one-directional diagonals of the mesh are not
    // mirror symmetric, so the defect is a discretization error and must
    // shrink with h.
    ExperimentConfig cfg = example_config(1);
    cfg.u_d = "zero";
    cfg.p_d = "zero";
    cfg.weights = {1.0, 1.0, 0.2};
    auto defect = [&](int n) {
        Problem pb(cfg, n);
        pb.f0 = interpolate_control(pb.space, [](const Point& x) { return Eigen::Vector2d(0.0, std::sin(pi * x.x())); });
        const StateSolution base = pb.base(pb.f0);
        const Subgradient g = fd_subgradient(pb.solver, pb.cost, pb.f0, base, cfg.opt);
        // Compare L2 representers: nodal patches at x and 1 - x differ in area.
        const Eigen::SparseMatrix<double> m = pb.cost.control_mass();
        const Vector t = Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>(m).solve(g.tracking);
        const double scale = t.lpNorm<Eigen::Infinity>();
        REQUIRE(scale > 0.0);
        double worst = 0.0;
        for (int j = 0; j <= n; ++j)
            for (int i = 0; i <= n; ++i) {
                const int a = j * (n + 1) + i, b = j * (n + 1) + (n - i);
                REQUIRE(std::abs(pb.space.mesh().node(a).x() + pb.space.mesh().node(b).x() - 1.0) < 1e-14);
                worst = std::max(worst, std::abs(t[pb.space.control_dof(a, 0)] + t[pb.space.control_dof(b, 0)]));
                worst = std::max(worst, std::abs(t[pb.space.control_dof(a, 1)] - t[pb.space.control_dof(b, 1)]));
            }
        return worst / scale;
    };
    const double d4 = defect(4), d8 = defect(8), d16 = defect(16);
    MESSAGE("relative mirror defect: n=4 " << d4 << ", n=8 " << d8 << ", n=16 " << d16);
    // At least first-order decay.
    CHECK(d4 / d8 >= 1.5);
    CHECK(d8 / d16 >= 1.5);
}

TEST_CASE("subgradient is robust to the difference step")
{
    const Problem pb(example_config(1), 4);
    const StateSolution base = pb.base(pb.f0);
    OptConfig o = pb.cfg.opt;
    o.delta_fd = 1e-5;
    const Vector g5 = fd_subgradient(pb.solver, pb.cost, pb.f0, base, o).total;
    o.delta_fd = 1e-6;
    const Vector g6 = fd_subgradient(pb.solver, pb.cost, pb.f0, base, o).total;
    MESSAGE("relative difference " << (g5 - g6).norm() / g6.norm());
    CHECK((g5 - g6).norm() <= 1e-3 * g6.norm());
}

TEST_CASE("subset mode differences only the drawn coordinates")
{
    const Problem pb(example_config(1), 3);
    const StateSolution base = pb.base(pb.f0);
    OptConfig o = pb.cfg.opt;
    o.fd_subset = 5;
    const Subgradient a = fd_subgradient(pb.solver, pb.cost, pb.f0, base, o, 1);
    const Subgradient b = fd_subgradient(pb.solver, pb.cost, pb.f0, base, o, 1);
    CHECK(a.total == b.total);
    int nonzero = 0;
    for (int i = 0; i < a.tracking.size(); ++i)
        nonzero += a.tracking[i] != 0.0;
    CHECK(nonzero <= 5);
}

TEST_CASE("pure regularization contracts geometrically")
{
    ExperimentConfig cfg = example_config(2);
    cfg.weights = {0.0, 0.0, 0.5};
    cfg.opt.max_iter = 6;
    cfg.opt.tau = 1.0;
    const Problem pb(cfg, 4);
    const OptResult r = optimize(pb.solver, pb.f0, pb.cost, AdmissibleBox{}, cfg.opt);
    CHECK(r.iterations == 6);
    CHECK_FALSE(r.converged);

    // Closed form f_k = (I - tau a3 M)^k f0.
    const SparseMatrix& m = pb.cost.control_mass();
    Vector f = pb.f0;
    for (int k = 0; k < 6; ++k)
        f -= cfg.opt.tau * 0.5 * (m * f);
    CHECK((r.control - f).norm() < 1e-12 * f.norm());
    for (std::size_t k = 1; k < r.history.size(); ++k) {
        CHECK(r.history[k].cost.regularization < r.history[k - 1].cost.regularization);
        if (k > 1)
            CHECK(r.history[k].control_change < r.history[k - 1].control_change);
    }
}

TEST_CASE("box constraints hold for every iterate")
{
    ExperimentConfig cfg = example_config(1);
    cfg.opt.max_iter = 4;
    cfg.opt.tau = 50.0;
    const Problem pb(cfg, 3);
    AdmissibleBox box;
    box.lower = Vector::Constant(pb.space.num_control_dofs(), -1.0);
    box.upper = Vector::Constant(pb.space.num_control_dofs(), 0.0);
    CHECK(box.contains(pb.f0));
    Vector f = pb.f0;
    for (int k = 0; k < 4; ++k) {
        OptConfig one = cfg.opt;
        one.max_iter = 1;
        const OptResult r = optimize(pb.solver, f, pb.cost, box, one);
        CHECK(box.contains(r.control));
        f = r.control;
    }

    AdmissibleBox tight;
    tight.lower = Vector::Constant(pb.space.num_control_dofs(), 0.0);
    CHECK_THROWS_AS(optimize(pb.solver, pb.f0, pb.cost, tight, cfg.opt), ConfigurationError);
}

TEST_CASE("cost decreases on Example 1")
{
    ExperimentConfig cfg = example_config(1);
    cfg.opt.max_iter = 10;
    const Problem pb(cfg, 4);
    const SpectralConstants spec = estimate_lambda0(pb.space);
    const OptResult r = optimize(pb.solver, pb.f0, pb.cost, AdmissibleBox{}, cfg.opt, &spec);
    REQUIRE(r.history.size() == 11);
    CHECK(r.history.back().cost.total() <= r.history.front().cost.total());
    CHECK(r.history.front().control_change == 0.0);
    REQUIRE(r.worst_energy_ratio.has_value());
    CHECK(*r.worst_energy_ratio <= 1.0);
}

TEST_CASE("failed state solves abort with the history so far")
{
    ExperimentConfig cfg = example_config(3);
    cfg.opt.state_tol = 1e-30;
    const Problem pb(cfg, 3);
    try {
        optimize(pb.solver, pb.f0, pb.cost, AdmissibleBox{}, cfg.opt);
        FAIL("expected OptimizationAborted");
    } catch (const OptimizationAborted& e) {
        CHECK(e.history().empty());
    }
}

TEST_CASE("cost history CSV")
{
    std::ostringstream os;
    write_cost_history_csv({{0, {1.0, 0.5, 0.25}, 0.0}, {1, {0.5, 0.25, 0.125}, 1e-3}}, os);
    CHECK(os.str() ==
          "iter,cost,tracking_u,tracking_p,regularization,control_change_L2\n"
          "0,1.7500000000e+00,1.0000000000e+00,5.0000000000e-01,2.5000000000e-01,0.0000000000e+00\n"
          "1,8.7500000000e-01,5.0000000000e-01,2.5000000000e-01,1.2500000000e-01,1.0000000000e-03\n");
}
