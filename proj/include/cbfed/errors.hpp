#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace cbfed {

/// A sampled field returned a non-finite value.
class EvaluationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid or inconsistent configuration (bad parameters, missing data).
class ConfigurationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An analytic solvability condition required by a formula does not hold.
class ConditionViolated : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Sparse factorization or dense eigensolve failed.
class LinearSolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// One entry of a nonlinear solver residual history.
struct ResidualRecord {
    int iteration = 0;
    double velocity_residual = 0.0;
    double divergence_residual = 0.0;
    double combined() const { return velocity_residual + divergence_residual; }
};

/// The state solver hit its iteration caps; carries the residual history.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, std::vector<ResidualRecord> history)
        : std::runtime_error(what), history_(std::move(history))
    {}
    const std::vector<ResidualRecord>& history() const { return history_; }

private:
    std::vector<ResidualRecord> history_;
};

} // namespace cbfed
