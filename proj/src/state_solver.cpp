#include "cbfed/state_solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include <Eigen/SparseCholesky>

#include "cbfed/linalg.hpp"

namespace cbfed {

void SolverConfig::validate() const
{
    if (!(eps_hvi > 0.0))
        throw ConfigurationError("eps_hvi must be positive");
    if (!(eta > 0.0))
        throw ConfigurationError("eta must be positive");
    if (max_outer < 1 || max_newton < 1)
        throw ConfigurationError("iteration caps must be positive");
    if (!(inner_ratio > 0.0))
        throw ConfigurationError("inner_ratio must be positive");
}

using Ldlt = Eigen::SimplicialLDLT<ColMatrix>;

struct StateSolver::Impl {
    std::vector<char> mask;
    Ldlt mass_p_solver;
    // Coupled matrix [J D^T 0; D 0 m; 0 m^T 0] with the velocity block
    // left to be filled per Newton step.
    ColMatrix coupled_template;
    std::vector<int> velocity_to_coupled;
};

class StateSolver::Linearization {
public:
    SparseLu lu;
};

StateSolver::StateSolver(const FeSpace& space, ModelParams params, SlipLaw law, SolverConfig cfg)
    : space_(space), params_(params), law_(law), cfg_(cfg), impl_(std::make_unique<Impl>())
{
    params_.validate();
    law_.validate();
    cfg_.validate();

    k0_ = assemble_a(space_).matrix * params_.mu;
    mass_ = assemble_a0(space_).matrix;
    if (params_.alpha != 0.0)
        k0_ += params_.alpha * mass_;
    d_ = assemble_d(space_).matrix;
    load_op_ = assemble_load_operator(space_).matrix;
    mass_p_ = assemble_pressure_mass(space_).matrix;

    impl_->mask = space_.velocity_constraints();
    impl_->mass_p_solver.compute(ColMatrix(mass_p_));
    if (impl_->mass_p_solver.info() != Eigen::Success)
        throw LinearSolverError("pressure mass matrix factorization failed");

    // Coupled template.
    const int nv = space_.num_velocity_dofs();
    const int np = space_.num_pressure_dofs();
    const int n = nv + np + 1;
    const SparseMatrix& pat = space_.velocity_pattern();
    const Vector& m = space_.pressure_basis_integrals();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(pat.nonZeros() + 2 * d_.nonZeros() + 2 * np);
    for (int row = 0; row < nv; ++row)
        for (SparseMatrix::InnerIterator it(pat, row); it; ++it)
            trip.emplace_back(row, it.col(), 0.0);
    for (int k = 0; k < np; ++k) {
        for (SparseMatrix::InnerIterator it(d_, k); it; ++it) {
            if (impl_->mask[it.col()])
                continue;
            trip.emplace_back(nv + k, it.col(), it.value());
            trip.emplace_back(it.col(), nv + k, it.value());
        }
        trip.emplace_back(nv + k, n - 1, m[k]);
        trip.emplace_back(n - 1, nv + k, m[k]);
    }
    ColMatrix& C = impl_->coupled_template;
    C.resize(n, n);
    C.setFromTriplets(trip.begin(), trip.end());
    C.makeCompressed();

    impl_->velocity_to_coupled.resize(pat.nonZeros());
    const int* outer = C.outerIndexPtr();
    const int* inner = C.innerIndexPtr();
    for (int row = 0; row < nv; ++row) {
        for (SparseMatrix::InnerIterator it(pat, row); it; ++it) {
            const int col = it.col();
            const int* pos = std::lower_bound(inner + outer[col], inner + outer[col + 1], row);
            impl_->velocity_to_coupled[&it.valueRef() - pat.valuePtr()] = static_cast<int>(pos - inner);
        }
    }
}

StateSolver::~StateSolver() = default;

Vector StateSolver::load(const Vector& control) const
{
    return load_op_ * control;
}

SparseMatrix StateSolver::jacobian(const Vector& u) const
{
    SparseMatrix J = k0_;
    const int nnz = static_cast<int>(J.nonZeros());
    auto add = [&](const SparseMatrix& other, double scale) {
        Eigen::Map<Vector>(J.valuePtr(), nnz) += scale * Eigen::Map<const Vector>(other.valuePtr(), nnz);
    };
    add(assemble_convection_jacobian(space_, u).matrix, 1.0);
    if (params_.beta != 0.0)
        add(assemble_c_jacobian(space_, u, params_.r).matrix, params_.beta);
    if (params_.kappa != 0.0)
        add(assemble_c_jacobian(space_, u, params_.q).matrix, params_.kappa);
    add(assemble_friction(space_, law_, u).jacobian.matrix, 1.0);
    apply_dirichlet(J, impl_->mask);
    return J;
}

Vector StateSolver::momentum_residual(const Vector& u, const Vector& p, const Vector& F) const
{
    Vector r = k0_ * u + assemble_convection_residual(space_, u) + assemble_friction_residual(space_, law_, u) +
               d_.transpose() * p - F;
    if (params_.beta != 0.0)
        r += params_.beta * assemble_c_residual(space_, u, params_.r);
    if (params_.kappa != 0.0)
        r += params_.kappa * assemble_c_residual(space_, u, params_.q);
    for (int i = 0; i < r.size(); ++i)
        if (impl_->mask[i])
            r[i] = 0.0;
    return r;
}

double StateSolver::divergence_residual(const Vector& u) const
{
    const Vector du = d_ * u;
    const Vector w = impl_->mass_p_solver.solve(du);
    return std::max(0.0, du.dot(w));
}

ResidualRecord StateSolver::residual(const Vector& u, const Vector& p, const Vector& F) const
{
    ResidualRecord rec;
    rec.velocity_residual = momentum_residual(u, p, F).norm();
    rec.divergence_residual = std::sqrt(divergence_residual(u));
    return rec;
}

namespace {

StateSolution initial_state(const FeSpace& space, const StateSolution* start)
{
    StateSolution s;
    if (start) {
        s.u = start->u;
        s.p = start->p;
    } else {
        s.u = Vector::Zero(space.num_velocity_dofs());
        s.p = Vector::Zero(space.num_pressure_dofs());
    }
    space.apply_constraints(s.u);
    return s;
}

} // namespace

StateSolution StateSolver::solve_load(const Vector& F, const StateSolution* start) const
{
    StateSolution state = initial_state(space_, start);
    if (cfg_.method == SolverMethod::coupled_newton)
        return coupled_newton(F, std::move(state), cfg_.eps_hvi, cfg_.max_newton);
    return solve_uzawa(F, std::move(state));
}

StateSolution StateSolver::solve(const Vector& control, const StateSolution* start) const
{
    return solve_load(load(control), start);
}

double StateSolver::newton_velocity(const Vector& F, const Vector& p, Vector& u, double tol, int& solves) const
{
    Vector r = momentum_residual(u, p, F);
    double norm = r.norm();
    for (int it = 0; it < cfg_.max_newton && norm >= tol; ++it) {
        SparseLu lu;
        factorize(lu, ColMatrix(jacobian(u)), "Newton velocity step");
        const Vector du = lu.solve(r);
        ++solves;
        double step = 1.0;
        Vector trial;
        Vector r_trial;
        double n_trial = 0.0;
        for (int half = 0; half <= 8; ++half, step *= 0.5) {
            trial = u - step * du;
            r_trial = momentum_residual(trial, p, F);
            n_trial = r_trial.norm();
            if (n_trial < norm)
                break;
        }
        u = std::move(trial);
        r = std::move(r_trial);
        norm = n_trial;
    }
    return norm;
}

StateSolution StateSolver::solve_uzawa(const Vector& F, StateSolution state) const
{
    const double inner_tol = cfg_.inner_ratio * cfg_.eps_hvi;
    for (int k = 1; k <= cfg_.max_outer; ++k) {
        ResidualRecord rec;
        rec.iteration = k;
        rec.velocity_residual = newton_velocity(F, state.p, state.u, inner_tol, state.linear_solves);
        const Vector du = d_ * state.u;
        const Vector w = impl_->mass_p_solver.solve(du);
        rec.divergence_residual = std::sqrt(std::max(0.0, du.dot(w)));
        state.residual_history.push_back(rec);
        state.iterations = k;
        if (!std::isfinite(rec.combined()))
            throw ConvergenceError("Uzawa-Newton iteration produced a non-finite residual", state.residual_history);
        if (rec.combined() < cfg_.eps_hvi) {
            state.converged = true;
            return state;
        }
        state.p += cfg_.eta * w;
        remove_pressure_mean(space_, state.p);
    }
    throw ConvergenceError("Uzawa-Newton iteration did not converge within max_outer sweeps",
                           state.residual_history);
}

namespace {

ColMatrix fill_coupled(const ColMatrix& tmpl, const std::vector<int>& map, const SparseMatrix& J)
{
    ColMatrix C = tmpl;
    double* values = C.valuePtr();
    const double* jv = J.valuePtr();
    for (std::size_t k = 0; k < map.size(); ++k)
        values[map[k]] = jv[k];
    return C;
}

} // namespace

StateSolution StateSolver::solve_coupled(const Vector& F, const StateSolution* start, double tol, int max_iter) const
{
    return coupled_newton(F, initial_state(space_, start), tol, max_iter);
}

StateSolution StateSolver::coupled_newton(const Vector& F, StateSolution state, double tol, int max_iter) const
{
    const int nv = space_.num_velocity_dofs();
    const int np = space_.num_pressure_dofs();
    remove_pressure_mean(space_, state.p);

    auto eval = [&](const Vector& u, const Vector& p, Vector& rhs) {
        ResidualRecord rec;
        const Vector ru = momentum_residual(u, p, F);
        const Vector du = d_ * u;
        rhs.resize(nv + np + 1);
        rhs.head(nv) = ru;
        rhs.segment(nv, np) = du;
        rhs[nv + np] = 0.0;
        rec.velocity_residual = ru.norm();
        rec.divergence_residual = std::sqrt(std::max(0.0, du.dot(impl_->mass_p_solver.solve(du))));
        return rec;
    };

    Vector rhs;
    ResidualRecord rec = eval(state.u, state.p, rhs);
    rec.iteration = 0;
    state.residual_history.push_back(rec);
    for (int k = 1; rec.combined() >= tol; ++k) {
        if (k > max_iter)
            throw ConvergenceError("coupled Newton iteration did not converge within max_newton steps",
                                   state.residual_history);
        SparseLu lu;
        factorize(lu, fill_coupled(impl_->coupled_template, impl_->velocity_to_coupled, jacobian(state.u)),
                  "coupled Newton step");
        const Vector dx = lu.solve(rhs);
        ++state.linear_solves;

        double step = 1.0;
        Vector u_trial, p_trial, rhs_trial;
        ResidualRecord trial;
        for (int half = 0; half <= 8; ++half, step *= 0.5) {
            u_trial = state.u - step * dx.head(nv);
            p_trial = state.p - step * dx.segment(nv, np);
            trial = eval(u_trial, p_trial, rhs_trial);
            if (trial.combined() < rec.combined())
                break;
        }
        if (!std::isfinite(trial.combined()))
            throw ConvergenceError("coupled Newton iteration produced a non-finite residual", state.residual_history);
        state.u = std::move(u_trial);
        state.p = std::move(p_trial);
        rhs = std::move(rhs_trial);
        rec = trial;
        rec.iteration = k;
        state.residual_history.push_back(rec);
        state.iterations = k;
    }
    state.converged = true;
    return state;
}

std::shared_ptr<const StateSolver::Linearization> StateSolver::linearize(const Vector& u, const Vector&) const
{
    auto lin = std::make_shared<Linearization>();
    factorize(lin->lu, fill_coupled(impl_->coupled_template, impl_->velocity_to_coupled, jacobian(u)),
              "linearization");
    return lin;
}

Vector StateSolver::coupled_residual(const Vector& u, const Vector& p, const Vector& F) const
{
    const int nv = space_.num_velocity_dofs();
    const int np = space_.num_pressure_dofs();
    Vector rhs(nv + np + 1);
    rhs.head(nv) = momentum_residual(u, p, F);
    rhs.segment(nv, np) = d_ * u;
    rhs[nv + np] = 0.0;
    return rhs;
}

StateSolution StateSolver::solve_chord(const Linearization& lin, const Vector& F, const StateSolution& start,
                                       double tol, int max_iter, const Vector* start_residual) const
{
    const int nv = space_.num_velocity_dofs();
    const int np = space_.num_pressure_dofs();
    StateSolution state = initial_state(space_, &start);
    Vector rhs = start_residual ? *start_residual : coupled_residual(state.u, state.p, F);
    for (int k = 0;; ++k) {
        if (k > 0)
            rhs = coupled_residual(state.u, state.p, F);
        const Vector du = rhs.segment(nv, np);
        ResidualRecord rec;
        rec.iteration = k;
        rec.velocity_residual = rhs.head(nv).norm();
        rec.divergence_residual = std::sqrt(std::max(0.0, du.dot(impl_->mass_p_solver.solve(du))));
        state.residual_history.push_back(rec);
        state.iterations = k;
        if (rec.combined() < tol) {
            state.converged = true;
            return state;
        }
        if (k == max_iter || !std::isfinite(rec.combined()))
            return state;
        const Vector dx = lin.lu.solve(rhs);
        ++state.linear_solves;
        state.u -= dx.head(nv);
        state.p -= dx.segment(nv, np);
    }
}

StateSolution solve_state(const FeSpace& space, const ModelParams& params, const SlipLaw& law,
                          const Vector& control, const SolverConfig& cfg)
{
    StateSolver solver(space, params, law, cfg);
    return solver.solve(control);
}

void write_residual_csv(const std::vector<ResidualRecord>& history, std::ostream& os)
{
    os << "iteration,velocity_residual,divergence_residual\n";
    char buf[96];
    for (const auto& r : history) {
        std::snprintf(buf, sizeof buf, "%d,%.10e,%.10e\n", r.iteration, r.velocity_residual, r.divergence_residual);
        os << buf;
    }
}

double dual_norm(const FeSpace& space, const Vector& F)
{
    const std::vector<int> free = free_indices(space.velocity_constraints());
    const SparseMatrix A = assemble_a(space).matrix * 0.5;
    const ColMatrix Af = restrict_matrix(A, free, free);
    Ldlt solver(Af);
    if (solver.info() != Eigen::Success)
        throw LinearSolverError("dual_norm: factorization failed");
    Vector Ff(free.size());
    for (std::size_t k = 0; k < free.size(); ++k)
        Ff[k] = F[free[k]];
    return std::sqrt(std::max(0.0, Ff.dot(solver.solve(Ff))));
}

} // namespace cbfed
