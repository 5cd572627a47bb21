#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cbfed/fem.hpp"
#include "cbfed/forms.hpp"
#include "cbfed/friction.hpp"
#include "cbfed/state_solver.hpp"

namespace cbfed {

/// Smallness condition k1 < 2 mu lambda0.
struct ExistenceReport {
    bool holds = false;
    /// 2 mu lambda0 - k1
    double margin = 0.0;
};

ExistenceReport check_existence_condition(const ModelParams& params, const SlipLaw& law,
                                          const SpectralConstants& spec);
ExistenceReport check_existence_condition(double mu, double k1, double lambda0);

struct EnergyBound {
    double k_f = 0.0;
    double k_tilde = 0.0;
    /// True when the 1/beta branch of the max is active (beta > 0).
    bool beta_branch = false;
};

/// A priori bound on ||u||_V^2 + ||u||_{L^{r+1}}^{r+1}:
///   K_f = (2mu - k1/lambda0)^{-1} (||f||_{V*} + k0 |Gamma1|^{1/2} lambda0^{-1/2})^2
///         + |kappa|^{(r+1)/(r-q)},
///   K~ = 2 max{(2mu - k1/lambda0)^{-1}, 1/beta} K_f,
/// with the 1/beta term dropped when beta = 0. Throws ConditionViolated when
/// 2 mu <= k1 / lambda0.
EnergyBound energy_bound(const ModelParams& params, double k0, double k1, double lambda0, double f_dual_norm,
                         double gamma1_measure = 1.0);
EnergyBound energy_bound(const ModelParams& params, const SlipLaw& law, double f_dual_norm,
                         const SpectralConstants& spec);

/// ||u||_V^2 plus ||u||_{L^{r+1}}^{r+1} when beta > 0: the quantity the
/// energy bound controls.
double energy_norm(const FeSpace& space, const ModelParams& params, const Vector& u);

/// Korn, Gagliardo-Nirenberg, Sobolev and combined constants; none has a
/// known value on the unit square, so each is a configuration input.
struct AnalyticConstants {
    std::optional<double> c_k;
    std::optional<double> c_g;
    std::optional<double> c_s;
    std::optional<double> c_b;
};

struct UniquenessReport {
    double rho1 = 0.0;
    double rho2 = 0.0;
    std::optional<double> rho3;
    std::optional<double> rho3_hat;
    std::optional<double> rho4_hat;

    /// mu > delta1 / (2 lambda0)
    bool mu_condition = false;
    double mu_margin = 0.0;

    /// r > 3: alpha >= rho1 + rho2 + rho3.
    std::optional<bool> branch_a;
    std::optional<double> margin_a;
    /// r > 3: alpha >= rho1 + rho2 + rho3_hat and beta >= 4 rho3_hat.
    std::optional<bool> branch_b;
    std::optional<double> margin_b;
    /// r in [1,3]: alpha > rho4_hat (C_g C_k)^4 K~^2 + rho1 + rho2.
    std::optional<bool> branch_low;
    std::optional<double> margin_low;

    /// Branches that could not be evaluated and the missing inputs.
    std::vector<std::string> unevaluated;
    /// The conditions hold as evaluated. The Korn and Gagliardo-Nirenberg
    /// constants are user inputs, so this verdict is conditional on them.
    bool holds() const;
};

/// rho_{i,r} for i = 1, 2; zero when kappa = 0.
double rho_i(const ModelParams& params, int i);

/// Evaluates the uniqueness conditions. `k_tilde` is required for r <= 3.
UniquenessReport check_uniqueness_conditions(const ModelParams& params, const SpectralConstants& spec,
                                             double delta1, const AnalyticConstants& constants,
                                             std::optional<double> k_tilde = std::nullopt);

struct PerturbationRow {
    double t = 0.0;
    double u_error_v = 0.0;
    double p_error_l2 = 0.0;
    double load_dual_norm = 0.0;
};

struct PerturbationStudy {
    double u_norm_v = 0.0;
    double p_norm_l2 = 0.0;
    std::vector<PerturbationRow> rows;
};

/// Solves with f + t g for each t and reports ||u_t - u||_V, ||p_t - p||.
/// `baseline` must be the converged solution for f.
PerturbationStudy perturbation_study(const StateSolver& solver, const Vector& control, const StateSolution& baseline,
                                     const Vector& perturbation, const std::vector<double>& sizes);

} // namespace cbfed
