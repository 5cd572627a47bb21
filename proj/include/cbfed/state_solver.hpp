#pragma once

#include <iosfwd>
#include <memory>
#include <vector>

#include "cbfed/errors.hpp"
#include "cbfed/fem.hpp"
#include "cbfed/forms.hpp"
#include "cbfed/friction.hpp"

namespace cbfed {

enum class SolverMethod {
    /// Outer Uzawa sweeps on the pressure, damped Newton on the velocity.
    uzawa_newton,
    /// Damped Newton on the full velocity-pressure system, zero pressure
    /// mean imposed by a Lagrange multiplier.
    coupled_newton,
};

struct SolverConfig {
    double eps_hvi = 1e-5;
    double eta = 1.0;
    int max_outer = 5000;
    int max_newton = 50;
    /// Inner Newton tolerance of the Uzawa sweeps, relative to eps_hvi.
    double inner_ratio = 0.1;
    SolverMethod method = SolverMethod::uzawa_newton;

    /// Throws ConfigurationError unless eps_hvi > 0, eta > 0 and the caps
    /// are positive.
    void validate() const;
};

struct StateSolution {
    Vector u;
    Vector p;
    std::vector<ResidualRecord> residual_history;
    bool converged = false;
    /// Outer iterations (Uzawa sweeps or coupled Newton steps).
    int iterations = 0;
    /// Linear solves performed.
    int linear_solves = 0;
};

/// Solver for the regularized discrete problem
///   mu a(u,v) + b(u,u,v) + alpha a0(u,v) + beta c_r(u,v) + kappa c_q(u,v)
///     + int_{Gamma1} T(u_x) v_x + d(v,p) = (f,v),   d(u,q) = 0,
/// with u in V_h and p of zero mean. Holds the operators that do not depend
/// on the state; solve() is const and reentrant.
class StateSolver {
public:
    StateSolver(const FeSpace& space, ModelParams params, SlipLaw law, SolverConfig cfg);
    ~StateSolver();
    StateSolver(const StateSolver&) = delete;
    StateSolver& operator=(const StateSolver&) = delete;

    const FeSpace& space() const { return space_; }
    const ModelParams& params() const { return params_; }
    const SlipLaw& law() const { return law_; }
    const SolverConfig& config() const { return cfg_; }

    /// Load vector of a P1 control.
    Vector load(const Vector& control) const;
    /// Velocity x control load operator.
    const SparseMatrix& load_operator() const { return load_op_; }
    const SparseMatrix& divergence() const { return d_; }
    const SparseMatrix& velocity_mass() const { return mass_; }
    const SparseMatrix& pressure_mass() const { return mass_p_; }

    /// Solves for the load vector F (already assembled). `start` gives a
    /// warm start. Throws ConvergenceError on hitting the caps and
    /// LinearSolverError on a singular Newton matrix.
    StateSolution solve_load(const Vector& F, const StateSolution* start = nullptr) const;
    StateSolution solve(const Vector& control, const StateSolution* start = nullptr) const;

    /// Damped coupled Newton to an explicit tolerance, whatever the
    /// configured method.
    StateSolution solve_coupled(const Vector& F, const StateSolution* start, double tol, int max_iter) const;

    /// Momentum residual with constrained rows zeroed.
    Vector momentum_residual(const Vector& u, const Vector& p, const Vector& F) const;
    /// (Du)^T M_p^{-1} (Du), the squared L2 norm of the projected divergence.
    double divergence_residual(const Vector& u) const;
    /// Velocity and divergence residual norms.
    ResidualRecord residual(const Vector& u, const Vector& p, const Vector& F) const;

    /// Factorized coupled Jacobian at a fixed state, reused by chord solves.
    class Linearization;
    std::shared_ptr<const Linearization> linearize(const Vector& u, const Vector& p) const;

    /// Chord iteration with a frozen Jacobian, starting from `start`;
    /// converged when the combined residual falls below tol. Returns
    /// converged = false (no throw) after max_iter steps. `start_residual`,
    /// when given, is coupled_residual(start.u, start.p, F) and saves one
    /// evaluation.
    StateSolution solve_chord(const Linearization& lin, const Vector& F, const StateSolution& start, double tol,
                              int max_iter, const Vector* start_residual = nullptr) const;

    /// Stacked residual [momentum; D u; 0] of the coupled system.
    Vector coupled_residual(const Vector& u, const Vector& p, const Vector& F) const;

private:
    struct Impl;
    const FeSpace& space_;
    ModelParams params_;
    SlipLaw law_;
    SolverConfig cfg_;
    SparseMatrix k0_;
    SparseMatrix mass_;
    SparseMatrix d_;
    SparseMatrix load_op_;
    SparseMatrix mass_p_;
    std::unique_ptr<Impl> impl_;

    SparseMatrix jacobian(const Vector& u) const;
    StateSolution solve_uzawa(const Vector& F, StateSolution state) const;
    StateSolution coupled_newton(const Vector& F, StateSolution state, double tol, int max_iter) const;
    double newton_velocity(const Vector& F, const Vector& p, Vector& u, double tol, int& solves) const;
};

/// One-shot convenience wrapper.
StateSolution solve_state(const FeSpace& space, const ModelParams& params, const SlipLaw& law,
                          const Vector& control, const SolverConfig& cfg);

/// Residual history as CSV: iteration,velocity_residual,divergence_residual.
void write_residual_csv(const std::vector<ResidualRecord>& history, std::ostream& os);

/// ||F||_{V*} = sup F(v) / ||eps(v)|| over the discrete space V.
double dual_norm(const FeSpace& space, const Vector& F);

} // namespace cbfed
