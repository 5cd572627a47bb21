#pragma once

#include "cbfed/fem.hpp"
#include "cbfed/forms.hpp"

namespace cbfed {

/// Slip coefficient omega(t) = (a - b) exp(-rho t) + b with the smoothing
/// length used for the tangential traction.
struct SlipLaw {
    double a = 1.0;
    double b = 1.0;
    double rho = 1.0;
    double eps_reg = 1e-6;

    /// Throws ConfigurationError unless a >= b > 0, rho > 0, eps_reg > 0.
    /// a == b is accepted (monotone law).
    void validate() const;

    /// Growth constants of the Clarke subgradient: |g(s)| <= k0 + k1 |s|.
    double k0() const { return a; }
    double k1() const { return 0.0; }
};

/// omega(t); throws std::invalid_argument for t < 0.
double omega(const SlipLaw& law, double t);
double omega_derivative(const SlipLaw& law, double t);

/// Single-valued selection of the subdifferential of j(z) = int_0^|z| omega:
/// g(s) = omega(|s|) sign(s), with g(0) = 0.
double slip_subgradient(const SlipLaw& law, double s);

/// T(z) = omega(m) z / m with m = sqrt(z^2 + eps^2).
double regularized_traction(const SlipLaw& law, double z);
/// dT/dz = omega'(m) z^2 / m^2 + omega(m) eps^2 / m^3.
double regularized_traction_derivative(const SlipLaw& law, double z);

struct Delta1Estimate {
    double delta1 = 0.0;
    /// Pair realizing the sampled infimum of the difference quotient of g.
    double s = 0.0;
    double t = 0.0;
};

/// Relaxed-monotonicity constant of g by sampling difference quotients.
/// Throws std::invalid_argument for fewer than 10^4 samples.
Delta1Estimate estimate_delta1(const SlipLaw& law, int samples = 100000);

struct FrictionAssembly {
    Vector residual;
    AssembledOperator jacobian;
};

/// int_{Gamma1} T(u_x) phi_i dS and its Jacobian on the velocity pattern.
FrictionAssembly assemble_friction(const FeSpace& space, const SlipLaw& law, const Vector& u);
Vector assemble_friction_residual(const FeSpace& space, const SlipLaw& law, const Vector& u);

/// Tangential boundary mass: int_{Gamma1} u_x v_x dS.
AssembledOperator assemble_boundary_mass(const FeSpace& space);
/// ||u_tau||_{L2(Gamma1)}
double tangential_trace_norm(const FeSpace& space, const Vector& u);
/// int_{Gamma1} T(u_tau) u_tau dS
double boundary_dissipation(const FeSpace& space, const SlipLaw& law, const Vector& u);
/// int_{Gamma1} j(u_tau) dS with j(z) = b|z| + (a - b)(1 - exp(-rho|z|))/rho.
double slip_potential(const FeSpace& space, const SlipLaw& law, const Vector& u);

struct SpectralConstants {
    double lambda0 = 0.0;
    /// Subdivision count of the mesh the constant was computed on.
    int mesh_n = 0;
    /// Minimizing velocity field, scaled to unit tangential trace norm.
    Vector eigenfunction;
};

/// Smallest eigenvalue of int eps(u):eps(v) = lambda int_{Gamma1} u_tau v_tau
/// over the discrete space V, via the Schur complement onto the free
/// tangential dofs of Gamma1. Throws ConfigurationError if the interior
/// block is singular.
SpectralConstants estimate_lambda0(const FeSpace& space);

} // namespace cbfed
