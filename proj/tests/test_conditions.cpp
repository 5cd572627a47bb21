#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>

#include "cbfed/conditions.hpp"
#include "cbfed/experiment.hpp"

using namespace cbfed;

namespace {

SpectralConstants spectral(double lambda0)
{
    SpectralConstants s;
    s.lambda0 = lambda0;
    return s;
}

} // namespace

TEST_CASE("existence condition")
{
    const ExperimentConfig cfg = example_config(1);
    const SpectralConstants spec = spectral(2.0);
    const ExistenceReport ok = check_existence_condition(cfg.params, cfg.law, spec);
    CHECK(ok.holds);
    CHECK(ok.margin == doctest::Approx(2.0 * 1.2 * 2.0));

    const double mu = 0.7, l0 = 2.5;
    CHECK_FALSE(check_existence_condition(mu, 2.0 * mu * l0, l0).holds);
    const ExistenceReport half = check_existence_condition(mu, mu * l0, l0);
    CHECK(half.holds);
    CHECK(half.margin == doctest::Approx(mu * l0));
}

TEST_CASE("energy bound")
{
    ModelParams p;
    p.mu = 1.5;
    const double a = 3.0, l0 = 2.0;
    // kappa = 0, f = 0, k1 = 0: K_f = a^2 / (2 mu lambda0), K~ = K_f / mu.
    const EnergyBound e = energy_bound(p, a, 0.0, l0, 0.0);
    CHECK(e.k_f == doctest::Approx(a * a / (2.0 * p.mu * l0)).epsilon(1e-14));
    CHECK(e.k_tilde == doctest::Approx(e.k_f / p.mu).epsilon(1e-14));
    CHECK_FALSE(e.beta_branch);

    CHECK(energy_bound(p, 0.0, 0.0, l0, 0.0).k_tilde == 0.0);
    CHECK_THROWS_AS(energy_bound(p, a, 2.0 * p.mu * l0, l0, 0.0), ConditionViolated);

    // f contributes ||f||_{V*} inside the square.
    const EnergyBound ef = energy_bound(p, a, 0.0, l0, 0.5);
    CHECK(ef.k_f == doctest::Approx(std::pow(0.5 + a / std::sqrt(l0), 2) / (2.0 * p.mu)).epsilon(1e-14));

    // beta branch and the kappa term.
    p.beta = 0.1;
    p.kappa = -0.5;
    p.r = 3.0;
    p.q = 1.5;
    const EnergyBound eb = energy_bound(p, a, 0.0, l0, 0.0);
    const double kf = a * a / (2.0 * p.mu * l0) + std::pow(0.5, 4.0 / 1.5);
    CHECK(eb.k_f == doctest::Approx(kf).epsilon(1e-14));
    CHECK(eb.beta_branch);
    CHECK(eb.k_tilde == doctest::Approx(2.0 * kf / p.beta).epsilon(1e-14));

    // With f = 0 and k0 = 0 the zero state attains the bound.
    const FeSpace space(build_unit_square(4));
    ModelParams q;
    CHECK(energy_norm(space, q, Vector(Vector::Zero(space.num_velocity_dofs()))) <=
          energy_bound(q, 0.0, 0.0, l0, 0.0).k_tilde);
}

TEST_CASE("uniqueness conditions")
{
    SUBCASE("kappa = 0 removes rho1 and rho2")
    {
        ModelParams p;
        p.beta = 1.0;
        CHECK(rho_i(p, 1) == 0.0);
        CHECK(rho_i(p, 2) == 0.0);
    }
    SUBCASE("Example 3 coefficients")
    {
        const ExperimentConfig cfg = example_config(3);
        CHECK(rho_i(cfg.params, 1) == doctest::Approx(0.6439017614362494).epsilon(1e-14));
        CHECK(rho_i(cfg.params, 2) == doctest::Approx(0.8112653832979174).epsilon(1e-14));
    }
    SUBCASE("r > 3 with delta1 = 0 and large alpha, beta")
    {
        ModelParams p;
        p.r = 5.0;
        p.alpha = 1e6;
        p.beta = 2.0;
        AnalyticConstants c;
        c.c_k = 1.0;
        const UniquenessReport u = check_uniqueness_conditions(p, spectral(2.0), 0.0, c);
        CHECK(u.mu_condition);
        CHECK(*u.rho3_hat == doctest::Approx(0.25));
        CHECK(*u.rho3 == doctest::Approx(0.03125).epsilon(1e-14));
        CHECK(*u.branch_a);
        CHECK(*u.branch_b);
        CHECK(u.holds());

        const UniquenessReport missing = check_uniqueness_conditions(p, spectral(2.0), 0.0, {});
        CHECK_FALSE(missing.unevaluated.empty());
        CHECK_FALSE(missing.branch_a.has_value());
        CHECK_FALSE(missing.holds());
    }
    SUBCASE("mu condition")
    {
        ModelParams p;
        p.mu = 0.1;
        AnalyticConstants c;
        c.c_k = 1.0;
        c.c_g = 1.0;
        const UniquenessReport u = check_uniqueness_conditions(p, spectral(2.0), 1.0, c, 1.0);
        CHECK_FALSE(u.mu_condition);
        CHECK(u.mu_margin == doctest::Approx(0.1 - 0.25));
        CHECK_FALSE(u.holds());
    }
    SUBCASE("r in [1,3] plug-in")
    {
        ExperimentConfig cfg = example_config(3);
        AnalyticConstants c;
        c.c_k = 1.0;
        c.c_g = 0.5;
        const double l0 = 2.0, d1 = 0.025, kt = 0.3;
        CHECK_FALSE(check_uniqueness_conditions(cfg.params, spectral(l0), d1, c).branch_low.has_value());
        const UniquenessReport u = check_uniqueness_conditions(cfg.params, spectral(l0), d1, c, kt);
        const double coerc = 2.0 * cfg.params.mu - d1 / l0;
        const double r4 = std::pow(0.5, 4) * 4.0 * std::pow(6.0 / (2.0 * coerc), 3);
        CHECK(*u.rho4_hat == doctest::Approx(r4).epsilon(1e-14));
        const double margin = cfg.params.alpha - (r4 * std::pow(0.5, 4) * kt * kt + 0.6439017614362494 + 0.8112653832979174);
        CHECK(*u.margin_low == doctest::Approx(margin).epsilon(1e-12));
        CHECK(*u.branch_low == (margin > 0.0));
    }
}

TEST_CASE("perturbation study")
{
    const ExperimentConfig cfg = example_config(3);
    const FeSpace space(build_unit_square(6));
    const StateSolver solver(space, cfg.params, cfg.law, cfg.solver);
    const Vector f = interpolate_control(space, vector_field(cfg.f0));
    const StateSolution base = solver.solve_coupled(solver.load(f), nullptr, 1e-12, 50);
    Vector g = interpolate_control(space, vector_field("bump_x"));
    g /= control_l2_norm(space, g);

    const PerturbationStudy zero = perturbation_study(solver, f, base, g, {0.0});
    CHECK(zero.rows.at(0).u_error_v < 1e-12);
    CHECK(zero.rows.at(0).p_error_l2 < 1e-12);

    const PerturbationStudy st = perturbation_study(solver, f, base, g, {0.1, 0.05, 0.025, 0.0125});
    REQUIRE(st.rows.size() == 4);
    for (std::size_t k = 1; k < st.rows.size(); ++k) {
        CHECK(st.rows[k].u_error_v < st.rows[k - 1].u_error_v);
        CHECK(st.rows[k].p_error_l2 < st.rows[k - 1].p_error_l2);
        CHECK(st.rows[k - 1].u_error_v / st.rows[k].u_error_v >= 1.5);
        CHECK(st.rows[k - 1].p_error_l2 / st.rows[k].p_error_l2 >= 1.5);
    }
}
