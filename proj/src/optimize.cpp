#include "cbfed/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <random>
#include <string>

namespace cbfed {

void CostWeights::validate() const
{
    if (alpha1 < 0.0 || alpha2 < 0.0)
        throw ConfigurationError("tracking weights must be nonnegative");
    if (!(alpha3 > 0.0))
        throw ConfigurationError("alpha3 must be positive");
}

void AdmissibleBox::validate() const
{
    if (lower && upper) {
        if (lower->size() != upper->size())
            throw ConfigurationError("box bounds differ in size");
        if ((lower->array() > upper->array()).any())
            throw ConfigurationError("box lower bound exceeds upper bound");
    }
}

bool AdmissibleBox::contains(const Vector& f) const
{
    if (lower && (f.array() < lower->array()).any())
        return false;
    if (upper && (f.array() > upper->array()).any())
        return false;
    return true;
}

Vector project(const Vector& f, const AdmissibleBox& box)
{
    Vector out = f;
    if (box.lower)
        out = out.cwiseMax(*box.lower);
    if (box.upper)
        out = out.cwiseMin(*box.upper);
    return out;
}

void OptConfig::validate() const
{
    if (!(tau > 0.0) || !(delta_fd > 0.0) || !(eps_opt > 0.0) || !(state_tol > 0.0))
        throw ConfigurationError("tau, delta_fd, eps_opt and state_tol must be positive");
    if (max_iter < 1 || chord_max < 1 || fd_subset < 0)
        throw ConfigurationError("invalid optimizer iteration settings");
}

namespace {

SparseMatrix assemble_curl_curl(const FeSpace& space)
{
    const int nloc = space.local_velocity_size();
    std::vector<Eigen::Triplet<double>> trip;
    for (int t = 0; t < space.mesh().num_triangles(); ++t) {
        const auto& dofs = space.element_dofs(t);
        double local[12][12] = {};
        for (int q = 0; q < space.num_quadrature_points(); ++q) {
            // curl of phi e_0 is -d_y phi, of phi e_1 is d_x phi.
            double c[12];
            for (int i = 0; i < nloc; ++i) {
                const Eigen::Vector2d g = space.shape_gradient(t, q, i);
                c[i] = -g.y();
                c[nloc + i] = g.x();
            }
            const double w = space.jxw(t, q);
            for (int a = 0; a < 2 * nloc; ++a)
                for (int b = 0; b < 2 * nloc; ++b)
                    local[a][b] += w * c[a] * c[b];
        }
        for (int a = 0; a < 2 * nloc; ++a)
            for (int b = 0; b < 2 * nloc; ++b)
                trip.emplace_back(space.velocity_dof(dofs[a % nloc], a / nloc),
                                  space.velocity_dof(dofs[b % nloc], b / nloc), local[a][b]);
    }
    SparseMatrix m(space.num_velocity_dofs(), space.num_velocity_dofs());
    m.setFromTriplets(trip.begin(), trip.end());
    return m;
}

double quad_form(const SparseMatrix& m, const Vector& x)
{
    return x.dot(m * x);
}

} // namespace

CostEvaluator::CostEvaluator(const FeSpace& space, CostKind kind, Targets targets, CostWeights weights)
    : kind_(kind), targets_(std::move(targets)), w_(weights)
{
    w_.validate();
    mass_p_ = assemble_pressure_mass(space).matrix;
    mass_c_ = assemble_control_mass(space).matrix;
    if (kind_ == CostKind::r1)
        mass_u_ = assemble_a0(space).matrix;
    else
        curl_ = assemble_curl_curl(space);
    if (targets_.p_d.size() == 0)
        targets_.p_d = Vector::Zero(space.num_pressure_dofs());
    if (kind_ == CostKind::r1 && targets_.u_d.size() == 0)
        targets_.u_d = Vector::Zero(space.num_velocity_dofs());
}

double CostEvaluator::tracking(const Vector& u, const Vector& p) const
{
    const double tu = kind_ == CostKind::r1 ? quad_form(mass_u_, u - targets_.u_d) : quad_form(curl_, u);
    return 0.5 * w_.alpha1 * tu + 0.5 * w_.alpha2 * quad_form(mass_p_, p - targets_.p_d);
}

double CostEvaluator::regularization(const Vector& f) const
{
    return 0.5 * w_.alpha3 * quad_form(mass_c_, f);
}

Vector CostEvaluator::regularization_gradient(const Vector& f) const
{
    return w_.alpha3 * (mass_c_ * f);
}

CostBreakdown CostEvaluator::operator()(const Vector& u, const Vector& p, const Vector& f) const
{
    CostBreakdown c;
    c.tracking_u = 0.5 * w_.alpha1 *
                   (kind_ == CostKind::r1 ? quad_form(mass_u_, u - targets_.u_d) : quad_form(curl_, u));
    c.tracking_p = 0.5 * w_.alpha2 * quad_form(mass_p_, p - targets_.p_d);
    c.regularization = regularization(f);
    return c;
}

CostBreakdown cost_R1(const FeSpace& space, const Vector& u, const Vector& p, const Vector& f, const Vector& u_d,
                      const Vector& p_d, const CostWeights& w)
{
    return CostEvaluator(space, CostKind::r1, {u_d, p_d}, w)(u, p, f);
}

CostBreakdown cost_R2(const FeSpace& space, const Vector& u, const Vector& p, const Vector& f, const Vector& p_d,
                      const CostWeights& w)
{
    return CostEvaluator(space, CostKind::r2, {Vector(), p_d}, w)(u, p, f);
}

Subgradient fd_subgradient(const StateSolver& solver, const CostEvaluator& cost, const Vector& f,
                           const StateSolution& base, const OptConfig& cfg, unsigned long long iteration)
{
    const int nc = static_cast<int>(f.size());
    const double delta = cfg.delta_fd;
    Subgradient g;
    g.tracking = Vector::Zero(nc);

    std::vector<int> coords(nc);
    std::iota(coords.begin(), coords.end(), 0);
    if (cfg.fd_subset > 0 && cfg.fd_subset < nc) {
        std::mt19937_64 rng(cfg.seed + iteration);
        std::shuffle(coords.begin(), coords.end(), rng);
        coords.resize(cfg.fd_subset);
        std::sort(coords.begin(), coords.end());
    }

    const double tracking_base = cost.tracking(base.u, base.p);
    const Vector F = solver.load(f);
    const auto lin = solver.linearize(base.u, base.p);
    const SparseMatrix& B = solver.load_operator();
    // Column access on a row-major matrix: transpose once.
    const SparseMatrix Bt = B.transpose();
    const Vector r0 = solver.coupled_residual(base.u, base.p, F);
    const std::vector<char>& mask = solver.space().velocity_constraints();

    for (int i : coords) {
        Vector Fi = F;
        Vector ri = r0;
        for (SparseMatrix::InnerIterator it(Bt, i); it; ++it) {
            Fi[it.col()] += delta * it.value();
            if (!mask[it.col()])
                ri[it.col()] -= delta * it.value();
        }
        StateSolution s = solver.solve_chord(*lin, Fi, base, cfg.state_tol, cfg.chord_max, &ri);
        if (!s.converged) {
            try {
                s = solver.solve_coupled(Fi, &base, cfg.state_tol, solver.config().max_newton);
            } catch (const std::exception& e) {
                throw std::runtime_error("state solve failed for perturbed control dof " + std::to_string(i) + ": " +
                                         e.what());
            }
        }
        g.tracking[i] = (cost.tracking(s.u, s.p) - tracking_base) / delta;
    }

    if (cfg.exact_regularization) {
        g.regularization = cost.regularization_gradient(f);
    } else {
        g.regularization = Vector::Zero(nc);
        const double reg0 = cost.regularization(f);
        Vector fi = f;
        for (int i : coords) {
            fi[i] += delta;
            g.regularization[i] = (cost.regularization(fi) - reg0) / delta;
            fi[i] = f[i];
        }
    }
    g.total = g.tracking + g.regularization;
    return g;
}

void write_cost_history_csv(const std::vector<CostRecord>& history, std::ostream& os)
{
    os << "iter,cost,tracking_u,tracking_p,regularization,control_change_L2\n";
    char buf[192];
    for (const auto& r : history) {
        std::snprintf(buf, sizeof buf, "%d,%.10e,%.10e,%.10e,%.10e,%.10e\n", r.iteration, r.cost.total(),
                      r.cost.tracking_u, r.cost.tracking_p, r.cost.regularization, r.control_change);
        os << buf;
    }
}

OptResult optimize(const StateSolver& solver, const Vector& f0, const CostEvaluator& cost, const AdmissibleBox& box,
                   const OptConfig& cfg, const SpectralConstants* spec)
{
    cfg.validate();
    box.validate();
    if (!box.contains(f0))
        throw ConfigurationError("initial control is not admissible");
    const FeSpace& space = solver.space();

    OptResult res;
    res.control = f0;

    auto solve = [&](const Vector& f, const StateSolution* start) {
        try {
            return solver.solve_coupled(solver.load(f), start, cfg.state_tol, solver.config().max_newton);
        } catch (const std::exception& e) {
            throw OptimizationAborted(std::string("state solve failed: ") + e.what(), res.history);
        }
    };
    auto check_energy = [&](const Vector& f, const StateSolution& s) {
        if (!spec)
            return;
        const double bound = energy_bound(solver.params(), solver.law(), dual_norm(space, solver.load(f)), *spec).k_tilde;
        const double ratio = energy_norm(space, solver.params(), s.u) / bound;
        res.worst_energy_ratio = std::max(res.worst_energy_ratio.value_or(0.0), ratio);
        if (!(ratio <= 1.0))
            throw ConditionViolated("energy bound violated by a converged state");
    };

    res.state = solve(res.control, nullptr);
    check_energy(res.control, res.state);
    res.history.push_back({0, cost(res.state.u, res.state.p, res.control), 0.0});

    for (int k = 1; k <= cfg.max_iter; ++k) {
        Subgradient g;
        try {
            g = fd_subgradient(solver, cost, res.control, res.state, cfg, static_cast<unsigned long long>(k));
        } catch (const std::exception& e) {
            throw OptimizationAborted(e.what(), res.history);
        }
        const Vector next = project(res.control - cfg.tau * g.total, box);
        const double change = control_l2_norm(space, next - res.control);
        res.control = next;
        res.state = solve(res.control, &res.state);
        check_energy(res.control, res.state);
        res.history.push_back({k, cost(res.state.u, res.state.p, res.control), change});
        res.iterations = k;
        if (change < cfg.eps_opt) {
            res.converged = true;
            break;
        }
    }
    return res;
}

} // namespace cbfed
