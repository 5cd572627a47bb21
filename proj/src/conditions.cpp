#include "cbfed/conditions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cbfed {

ExistenceReport check_existence_condition(double mu, double k1, double lambda0)
{
    ExistenceReport rep;
    rep.margin = 2.0 * mu * lambda0 - k1;
    rep.holds = rep.margin > 0.0;
    return rep;
}

ExistenceReport check_existence_condition(const ModelParams& params, const SlipLaw& law,
                                          const SpectralConstants& spec)
{
    return check_existence_condition(params.mu, law.k1(), spec.lambda0);
}

EnergyBound energy_bound(const ModelParams& params, double k0, double k1, double lambda0, double f_dual_norm,
                         double gamma1_measure)
{
    const double coercivity = 2.0 * params.mu - k1 / lambda0;
    if (!(coercivity > 0.0))
        throw ConditionViolated("energy bound requires 2 mu > k1 / lambda0");
    EnergyBound out;
    const double s = f_dual_norm + k0 * std::sqrt(gamma1_measure) / std::sqrt(lambda0);
    out.k_f = s * s / coercivity;
    if (params.kappa != 0.0)
        out.k_f += std::pow(std::abs(params.kappa), (params.r + 1.0) / (params.r - params.q));
    double factor = 1.0 / coercivity;
    if (params.beta > 0.0) {
        out.beta_branch = true;
        factor = std::max(factor, 1.0 / params.beta);
    }
    out.k_tilde = 2.0 * factor * out.k_f;
    return out;
}

EnergyBound energy_bound(const ModelParams& params, const SlipLaw& law, double f_dual_norm,
                         const SpectralConstants& spec)
{
    return energy_bound(params, law.k0(), law.k1(), spec.lambda0, f_dual_norm, 1.0);
}

double energy_norm(const FeSpace& space, const ModelParams& params, const Vector& u)
{
    const double v = velocity_v_norm(space, u);
    double e = v * v;
    if (params.beta > 0.0)
        e += velocity_power_integral(space, u, params.r + 1.0);
    return e;
}

bool UniquenessReport::holds() const
{
    if (!mu_condition)
        return false;
    return branch_a.value_or(false) || branch_b.value_or(false) || branch_low.value_or(false);
}

double rho_i(const ModelParams& params, int i)
{
    if (params.kappa == 0.0)
        return 0.0;
    if (!(params.beta > 0.0))
        return std::numeric_limits<double>::infinity();
    const double r = params.r, q = params.q;
    return ((r - q) / (r - 1.0)) * std::pow(2.0 * i * (q - 1.0) / (params.beta * (r - 1.0)), (q - 1.0) / (r - q)) *
           std::pow(std::abs(params.kappa) * q * std::pow(2.0, q - 1.0), (r - 1.0) / (r - q));
}

UniquenessReport check_uniqueness_conditions(const ModelParams& params, const SpectralConstants& spec,
                                             double delta1, const AnalyticConstants& constants,
                                             std::optional<double> k_tilde)
{
    UniquenessReport rep;
    rep.rho1 = rho_i(params, 1);
    rep.rho2 = rho_i(params, 2);
    const double coercivity = 2.0 * params.mu - delta1 / spec.lambda0;
    rep.mu_margin = params.mu - delta1 / (2.0 * spec.lambda0);
    rep.mu_condition = rep.mu_margin > 0.0;
    const double r = params.r;

    if (r > 3.0) {
        if (!constants.c_k) {
            rep.unevaluated.push_back("r > 3 branches: Korn constant C_k missing");
            return rep;
        }
        if (!rep.mu_condition) {
            rep.unevaluated.push_back("r > 3 branches: mu <= delta1 / (2 lambda0)");
            return rep;
        }
        const double ck2 = *constants.c_k * *constants.c_k;
        rep.rho3_hat = ck2 / (2.0 * coercivity);
        if (params.beta > 0.0)
            rep.rho3 = std::pow(*rep.rho3_hat, (r - 1.0) / (r - 3.0)) * ((r - 3.0) / (r - 1.0)) *
                       std::pow(8.0 / (params.beta * (r - 1.0)), 2.0 / (r - 3.0));
        else
            rep.rho3 = std::numeric_limits<double>::infinity();
        rep.margin_a = params.alpha - (rep.rho1 + rep.rho2 + *rep.rho3);
        rep.branch_a = *rep.margin_a >= 0.0;
        rep.margin_b = std::min(params.alpha - (rep.rho1 + rep.rho2 + *rep.rho3_hat),
                                params.beta - 4.0 * *rep.rho3_hat);
        rep.branch_b = *rep.margin_b >= 0.0;
        return rep;
    }

    if (!constants.c_k || !constants.c_g) {
        rep.unevaluated.push_back("r <= 3 branch: Korn constant C_k or Gagliardo-Nirenberg constant C_g missing");
        return rep;
    }
    if (!k_tilde) {
        rep.unevaluated.push_back("r <= 3 branch: energy bound K~ missing");
        return rep;
    }
    if (!rep.mu_condition) {
        rep.unevaluated.push_back("r <= 3 branch: mu <= delta1 / (2 lambda0)");
        return rep;
    }
    // d = 2: 8/(4-d) = 4, 4/(4-d) = 2, (4+d)/(4-d) = 3.
    const double cgck = *constants.c_g * *constants.c_k;
    rep.rho4_hat = std::pow(cgck, 4.0) * 4.0 * std::pow(6.0 / (2.0 * coercivity), 3.0);
    rep.margin_low = params.alpha - (*rep.rho4_hat * std::pow(cgck, 4.0) * (*k_tilde) * (*k_tilde) + rep.rho1 + rep.rho2);
    rep.branch_low = *rep.margin_low > 0.0;
    return rep;
}

PerturbationStudy perturbation_study(const StateSolver& solver, const Vector& control, const StateSolution& baseline,
                                     const Vector& perturbation, const std::vector<double>& sizes)
{
    const FeSpace& space = solver.space();
    PerturbationStudy out;
    out.u_norm_v = velocity_v_norm(space, baseline.u);
    out.p_norm_l2 = pressure_l2_norm(space, baseline.p);
    const Vector dF = solver.load(perturbation);
    const double dual = dual_norm(space, dF);
    for (double t : sizes) {
        PerturbationRow row;
        row.t = t;
        row.load_dual_norm = std::abs(t) * dual;
        if (t != 0.0) {
            const StateSolution s = solver.solve(control + t * perturbation, &baseline);
            row.u_error_v = velocity_v_norm(space, s.u - baseline.u);
            row.p_error_l2 = pressure_l2_norm(space, s.p - baseline.p);
        }
        out.rows.push_back(row);
    }
    return out;
}

} // namespace cbfed
