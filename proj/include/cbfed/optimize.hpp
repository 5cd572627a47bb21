#pragma once

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <vector>

#include "cbfed/conditions.hpp"
#include "cbfed/state_solver.hpp"

namespace cbfed {

struct CostWeights {
    double alpha1 = 1.0;
    double alpha2 = 1.0;
    double alpha3 = 1.0;

    /// Throws ConfigurationError unless alpha1, alpha2 >= 0 and alpha3 > 0.
    void validate() const;
};

/// Nodal bounds g1 <= f <= g2 on the control dofs; absent bounds mean no
/// constraint on that side.
struct AdmissibleBox {
    std::optional<Vector> lower;
    std::optional<Vector> upper;

    void validate() const;
    bool contains(const Vector& f) const;
};

/// Componentwise clamp onto the box; identity when both bounds are absent.
Vector project(const Vector& f, const AdmissibleBox& box);

enum class CostKind { r1, r2 };

struct OptConfig {
    double tau = 1e-2;
    double delta_fd = 1e-5;
    double eps_opt = 1e-5;
    int max_iter = 100;
    CostKind cost = CostKind::r1;
    /// Use the exact derivative of the alpha3 term and differences only for
    /// the tracking part; false gives the pure forward-difference gradient.
    bool exact_regularization = true;
    /// Combined residual tolerance for every state solve in the loop.
    double state_tol = 1e-10;
    int chord_max = 8;
    /// Number of randomly drawn coordinates differenced per iteration
    /// (0 = all coordinates).
    int fd_subset = 0;
    unsigned long long seed = 1;

    void validate() const;
};

/// Discrete targets: velocity and (zero-mean) pressure interpolants.
struct Targets {
    Vector u_d;
    Vector p_d;
};

struct CostBreakdown {
    double tracking_u = 0.0;
    double tracking_p = 0.0;
    double regularization = 0.0;
    double total() const { return tracking_u + tracking_p + regularization; }
};

/// (a1/2)||u - u_d||^2 + (a2/2)||p - p_d||^2 + (a3/2)||f||^2.
CostBreakdown cost_R1(const FeSpace& space, const Vector& u, const Vector& p, const Vector& f, const Vector& u_d,
                      const Vector& p_d, const CostWeights& w);
/// (a1/2)||curl u||^2 + (a2/2)||p - p_d||^2 + (a3/2)||f||^2 with the scalar
/// curl d_x u_2 - d_y u_1.
CostBreakdown cost_R2(const FeSpace& space, const Vector& u, const Vector& p, const Vector& f, const Vector& p_d,
                      const CostWeights& w);

/// Precomputed mass and curl matrices for repeated cost evaluation.
class CostEvaluator {
public:
    CostEvaluator(const FeSpace& space, CostKind kind, Targets targets, CostWeights weights);

    CostBreakdown operator()(const Vector& u, const Vector& p, const Vector& f) const;
    /// Tracking part only.
    double tracking(const Vector& u, const Vector& p) const;
    /// Gradient of (a3/2) f^T M f.
    Vector regularization_gradient(const Vector& f) const;
    double regularization(const Vector& f) const;
    const SparseMatrix& control_mass() const { return mass_c_; }

private:
    CostKind kind_;
    Targets targets_;
    CostWeights w_;
    SparseMatrix mass_u_;
    SparseMatrix mass_p_;
    SparseMatrix mass_c_;
    SparseMatrix curl_;
};

struct Subgradient {
    Vector tracking;
    Vector regularization;
    Vector total;
};

/// Forward-difference subgradient over the nodal control coordinates.
/// `base` is the converged state for f. Throws std::runtime_error naming
/// the control dof whose perturbed solve failed.
Subgradient fd_subgradient(const StateSolver& solver, const CostEvaluator& cost, const Vector& f,
                           const StateSolution& base, const OptConfig& cfg, unsigned long long iteration = 0);

struct CostRecord {
    int iteration = 0;
    CostBreakdown cost;
    /// ||f^k - f^{k-1}||_{L2}; zero for the initial record.
    double control_change = 0.0;
};

/// Cost history CSV with columns
/// iter,cost,tracking_u,tracking_p,regularization,control_change_L2.
void write_cost_history_csv(const std::vector<CostRecord>& history, std::ostream& os);

struct OptResult {
    Vector control;
    StateSolution state;
    std::vector<CostRecord> history;
    bool converged = false;
    int iterations = 0;
    /// max over all states of energy_norm / K~ (only when a spectral
    /// constant was supplied).
    std::optional<double> worst_energy_ratio;
};

/// A state solve failed mid-loop; carries the history so far.
class OptimizationAborted : public std::runtime_error {
public:
    OptimizationAborted(const std::string& what, std::vector<CostRecord> history)
        : std::runtime_error(what), history_(std::move(history))
    {}
    const std::vector<CostRecord>& history() const { return history_; }

private:
    std::vector<CostRecord> history_;
};

/// Projected subgradient loop f <- P(f - tau g). With `spec`, the energy
/// bound is evaluated for every state and a ConditionViolated is thrown
/// if it fails.
OptResult optimize(const StateSolver& solver, const Vector& f0, const CostEvaluator& cost, const AdmissibleBox& box,
                   const OptConfig& cfg, const SpectralConstants* spec = nullptr);

} // namespace cbfed
