#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>
#include <stdexcept>

#include "cbfed/errors.hpp"
#include "cbfed/experiment.hpp"
#include "cbfed/friction.hpp"

using namespace cbfed;

namespace {

const SlipLaw ex1{1.55, 1.53, 3.0, 1e-6};
const SlipLaw ex2{4.01, 4.00, 1.5, 1e-6};
const SlipLaw ex3{3.25, 3.20, 0.5, 1e-6};

Vector random_velocity(const FeSpace& s, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    Vector v(s.num_velocity_dofs());
    for (int i = 0; i < v.size(); ++i)
        v[i] = d(rng);
    s.apply_constraints(v);
    return v;
}

} // namespace

TEST_CASE("slip law validation")
{
    CHECK_NOTHROW(ex1.validate());
    CHECK_NOTHROW(SlipLaw{2.0, 2.0, 1.0, 1e-6}.validate());
    CHECK_THROWS_AS(SlipLaw({1.0, 2.0, 1.0, 1e-6}).validate(), ConfigurationError);
    CHECK_THROWS_AS(SlipLaw({2.0, 0.0, 1.0, 1e-6}).validate(), ConfigurationError);
    CHECK_THROWS_AS(SlipLaw({2.0, 1.0, 0.0, 1e-6}).validate(), ConfigurationError);
    CHECK_THROWS_AS(SlipLaw({2.0, 1.0, 1.0, 0.0}).validate(), ConfigurationError);
    CHECK(ex3.k0() == 3.25);
    CHECK(ex3.k1() == 0.0);
}

TEST_CASE("omega")
{
    CHECK(omega(ex1, 0.0) == doctest::Approx(1.55).epsilon(1e-15));
    CHECK(omega(ex3, 0.0) == doctest::Approx(3.25).epsilon(1e-15));
    CHECK_THROWS_AS(omega(ex1, -1e-3), std::invalid_argument);
    for (const SlipLaw& law : {ex1, ex2, ex3}) {
        CHECK(omega(law, 10.0 / law.rho) - law.b <= (law.a - law.b) * std::exp(-10.0) + 1e-15);
        CHECK(std::abs(omega(law, 1e4) - law.b) < 1e-14);
        double prev = omega(law, 0.0);
        for (double t = 0.01; t < 5.0 / law.rho; t += 0.01) {
            const double w = omega(law, t);
            CHECK(w < prev);
            prev = w;
        }
        const double t = 0.7, h = 1e-6;
        CHECK(std::abs((omega(law, t + h) - omega(law, t - h)) / (2 * h) - omega_derivative(law, t)) < 1e-8);
    }
}

TEST_CASE("regularized traction")
{
    CHECK(regularized_traction(ex2, 0.0) == 0.0);
    CHECK(std::abs(regularized_traction(ex2, 1e6) - ex2.b) < 1e-12);
    CHECK(std::abs(regularized_traction(ex2, -1e6) + ex2.b) < 1e-12);

    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> d(-5.0, 5.0);
    for (const SlipLaw& law : {ex1, ex2, ex3}) {
        for (int k = 0; k < 100; ++k) {
            const double z = d(rng);
            CHECK(regularized_traction(law, -z) == -regularized_traction(law, z));
            CHECK(std::abs(regularized_traction(law, z)) <= law.a);
            // Fourth-order stencil. T is close to +-b away from 0, so its
            // slope is resolved relative to the scale rho (a - b).
            const double h = 1e-4 * std::min(1.0, std::abs(z));
            auto T = [&](double x) { return regularized_traction(law, x); };
            const double fd = (T(z - 2 * h) - 8 * T(z - h) + 8 * T(z + h) - T(z + 2 * h)) / (12 * h);
            const double exact = regularized_traction_derivative(law, z);
            CHECK(std::abs(fd - exact) <= 1e-7 * std::max(std::abs(exact), law.rho * (law.a - law.b)));
        }
    }
}

TEST_CASE("traction derivative is bounded away from zero")
{
    // On |z| >= d0 the slope is at most rho (a - b) + a eps^2 / d0^3. Near 0
    // the slope is a / eps, so no eps-independent bound exists there.
    const double d0 = 1e-3;
    for (const SlipLaw& law : {ex1, ex2, ex3}) {
        const double bound = law.rho * (law.a - law.b) + law.a * law.eps_reg * law.eps_reg / (d0 * d0 * d0);
        for (double z = d0; z < 50.0; z *= 1.01) {
            CHECK(std::abs(regularized_traction_derivative(law, z)) <= bound);
            CHECK(std::abs(regularized_traction_derivative(law, -z)) <= bound);
        }
        CHECK(regularized_traction_derivative(law, 0.0) ==
              doctest::Approx(omega(law, law.eps_reg) / law.eps_reg).epsilon(1e-12));
    }
}

TEST_CASE("relaxed monotonicity constant")
{
    CHECK_THROWS_AS(estimate_delta1(ex1, 9999), std::invalid_argument);
    CHECK(estimate_delta1(SlipLaw{2.0, 2.0, 1.0, 1e-6}).delta1 == 0.0);

    for (const SlipLaw& law : {ex1, ex2, ex3}) {
        // Dense oracle: -inf g' over s > 0, where g(s) = omega(s).
        double oracle = 0.0;
        for (double s = 1e-9; s < 100.0; s *= 1.001)
            oracle = std::max(oracle, -omega_derivative(law, s));
        const Delta1Estimate est = estimate_delta1(law);
        const double envelope = law.rho * (law.a - law.b);
        // Difference quotients near 0 carry roundoff of relative size ~1e-9.
        CHECK(est.delta1 <= envelope * (1.0 + 1e-6));
        CHECK(est.delta1 >= 0.95 * oracle);
        CHECK(est.s != est.t);

        std::mt19937_64 rng(5);
        std::uniform_real_distribution<double> d(-10.0, 10.0);
        for (int k = 0; k < 10000; ++k) {
            const double s = d(rng), t = d(rng);
            const double lhs = (slip_subgradient(law, s) - slip_subgradient(law, t)) * (s - t);
            CHECK(lhs >= -envelope * (s - t) * (s - t) - 1e-14);
        }
    }
    CHECK(estimate_delta1(ex2).delta1 <= 0.015 * (1.0 + 1e-6));
    CHECK(estimate_delta1(ex1).delta1 <= 0.06 * (1.0 + 1e-6));
}

TEST_CASE("friction residual")
{
    const FeSpace s(build_unit_square(6));
    std::mt19937_64 rng(9);

    // Zero tangential trace: no boundary traction at all.
    Vector u = random_velocity(s, rng);
    for (int i : s.slip_tangential_dofs())
        u[i] = 0.0;
    CHECK(assemble_friction_residual(s, ex1, u).norm() == 0.0);
    CHECK(assemble_friction_residual(s, ex1, Vector(Vector::Zero(u.size()))).norm() == 0.0);

    // Constant slip s on Gamma1 paired with v_tau = 1 gives T(s) |Gamma1|.
    for (double slip : {-2.0, 0.3, 1.0}) {
        Vector c = Vector::Zero(s.num_velocity_dofs());
        Vector one = Vector::Zero(s.num_velocity_dofs());
        for (int i = 0; i < s.num_scalar_velocity_dofs(); ++i)
            if (std::abs(s.scalar_dof_point(i).y() - 1.0) < 1e-14) {
                c[s.velocity_dof(i, 0)] = slip;
                one[s.velocity_dof(i, 0)] = 1.0;
            }
        CHECK(std::abs(one.dot(assemble_friction_residual(s, ex3, c)) - regularized_traction(ex3, slip)) < 1e-13);
    }

    // Growth bound with k0 = a, k1 = 0 and |Gamma1| = 1.
    for (int k = 0; k < 20; ++k) {
        const Vector a = 3.0 * random_velocity(s, rng), v = random_velocity(s, rng);
        CHECK(std::abs(v.dot(assemble_friction_residual(s, ex2, a))) <= ex2.a * tangential_trace_norm(s, v) + 1e-14);
        CHECK(boundary_dissipation(s, ex2, a) >= 0.0);
        CHECK(slip_potential(s, ex2, a) >= 0.0);
    }

    // Jacobian against central differences.
    const Vector a = random_velocity(s, rng), du = random_velocity(s, rng);
    const FrictionAssembly fa = assemble_friction(s, ex1, a);
    CHECK((fa.residual - assemble_friction_residual(s, ex1, a)).norm() == 0.0);
    const double t = 1e-7;
    const Vector fd = (assemble_friction_residual(s, ex1, a + t * du) - assemble_friction_residual(s, ex1, a - t * du)) / (2 * t);
    const Vector jd = fa.jacobian.matrix * du;
    CHECK((fd - jd).norm() <= 1e-6 * jd.norm());
    CHECK(fa.jacobian.is_symmetric(1e-14));
}

TEST_CASE("boundary mass and trace norm")
{
    const FeSpace s(build_unit_square(4));
    Vector u = Vector::Zero(s.num_velocity_dofs());
    for (int i = 0; i < s.num_scalar_velocity_dofs(); ++i) {
        const Point x = s.scalar_dof_point(i);
        if (std::abs(x.y() - 1.0) < 1e-14)
            u[s.velocity_dof(i, 0)] = x.x();
    }
    // int_0^1 x^2 dx = 1/3
    CHECK(std::abs(tangential_trace_norm(s, u) - std::sqrt(1.0 / 3.0)) < 1e-14);
    CHECK(std::abs(u.dot(assemble_boundary_mass(s).matrix * u) - 1.0 / 3.0) < 1e-14);
}

TEST_CASE("spectral constant")
{
    const FeSpace s8(build_unit_square(8)), s16(build_unit_square(16));
    const SpectralConstants l8 = estimate_lambda0(s8), l16 = estimate_lambda0(s16);
    CHECK(l8.lambda0 > 0.0);
    CHECK(l16.lambda0 > 0.0);
    CHECK(l8.mesh_n == 8);
    CHECK(std::abs(l8.lambda0 - l16.lambda0) <= 0.05 * l16.lambda0);
    MESSAGE("lambda0: n=8 " << l8.lambda0 << ", n=16 " << l16.lambda0);

    CHECK(std::abs(tangential_trace_norm(s8, l8.eigenfunction) - 1.0) < 1e-10);
    CHECK(std::abs(std::pow(velocity_v_norm(s8, l8.eigenfunction), 2) - l8.lambda0) < 1e-8 * l8.lambda0);

    std::mt19937_64 rng(13);
    for (int k = 0; k < 100; ++k) {
        const Vector v = random_velocity(s8, rng);
        const double tr = tangential_trace_norm(s8, v), vn = velocity_v_norm(s8, v);
        CHECK(tr * tr <= vn * vn / l8.lambda0 * (1.0 + 1e-12));
    }
}
