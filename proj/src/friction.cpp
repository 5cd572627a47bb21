#include "cbfed/friction.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "cbfed/errors.hpp"
#include "cbfed/linalg.hpp"

namespace cbfed {

void SlipLaw::validate() const
{
    if (!(b > 0.0) || !(a >= b))
        throw ConfigurationError("slip law requires a >= b > 0");
    if (!(rho > 0.0))
        throw ConfigurationError("slip law requires rho > 0");
    if (!(eps_reg > 0.0))
        throw ConfigurationError("slip law requires eps_reg > 0");
}

double omega(const SlipLaw& law, double t)
{
    if (t < 0.0)
        throw std::invalid_argument("omega: negative speed");
    return (law.a - law.b) * std::exp(-law.rho * t) + law.b;
}

double omega_derivative(const SlipLaw& law, double t)
{
    if (t < 0.0)
        throw std::invalid_argument("omega: negative speed");
    return -law.rho * (law.a - law.b) * std::exp(-law.rho * t);
}

double slip_subgradient(const SlipLaw& law, double s)
{
    if (s == 0.0)
        return 0.0;
    return std::copysign(omega(law, std::abs(s)), s);
}

double regularized_traction(const SlipLaw& law, double z)
{
    const double m = std::hypot(z, law.eps_reg);
    return omega(law, m) * z / m;
}

double regularized_traction_derivative(const SlipLaw& law, double z)
{
    const double m = std::hypot(z, law.eps_reg);
    const double e2 = law.eps_reg * law.eps_reg;
    return omega_derivative(law, m) * z * z / (m * m) + omega(law, m) * e2 / (m * m * m);
}

Delta1Estimate estimate_delta1(const SlipLaw& law, int samples)
{
    if (samples < 10000)
        throw std::invalid_argument("estimate_delta1: at least 10^4 samples required");

    // Half the budget on consecutive points of a grid clustered at 0, where
    // |omega'| peaks; the rest on random pairs over the same range.
    const double range = 20.0 / law.rho;
    Delta1Estimate best;
    double worst = 0.0;
    auto consider = [&](double s, double t) {
        if (s == t)
            return;
        const double quotient = (slip_subgradient(law, s) - slip_subgradient(law, t)) / (s - t);
        if (quotient < worst) {
            worst = quotient;
            best.s = s;
            best.t = t;
        }
    };

    const int grid = samples / 2;
    const int half = grid / 2;
    std::vector<double> pts;
    pts.reserve(2 * half);
    for (int i = 1; i <= half; ++i) {
        const double x = static_cast<double>(i) / half;
        pts.push_back(range * x * x);
    }
    for (int i = 0; i + 1 < half; ++i) {
        consider(pts[i], pts[i + 1]);
        consider(-pts[i], -pts[i + 1]);
    }

    std::mt19937_64 rng(12345);
    std::uniform_real_distribution<double> dist(-range, range);
    for (int k = grid; k < samples; ++k)
        consider(dist(rng), dist(rng));

    best.delta1 = std::max(0.0, -worst);
    return best;
}

namespace {

double edge_shape(int num_dofs, int k, double t)
{
    if (num_dofs == 2)
        return k == 0 ? 1.0 - t : t;
    switch (k) {
    case 0:
        return (1.0 - t) * (1.0 - 2.0 * t);
    case 1:
        return t * (2.0 * t - 1.0);
    default:
        return 4.0 * t * (1.0 - t);
    }
}

// Calls fn(edge, quadrature weight * length, shape values, u_tau) for every
// quadrature point on Gamma1.
template <class Fn>
void for_each_slip_point(const FeSpace& space, const Vector& u, Fn&& fn)
{
    const auto& rule = edge_rule_degree9();
    for (const auto& edge : space.slip_edges()) {
        for (int q = 0; q < rule.size(); ++q) {
            double phi[3] = {0.0, 0.0, 0.0};
            double ut = 0.0;
            for (int k = 0; k < edge.num_dofs; ++k) {
                phi[k] = edge_shape(edge.num_dofs, k, rule.points[q]);
                ut += phi[k] * u[space.velocity_dof(edge.dofs[k], 0)];
            }
            fn(edge, rule.weights[q] * edge.length, phi, ut);
        }
    }
}

} // namespace

FrictionAssembly assemble_friction(const FeSpace& space, const SlipLaw& law, const Vector& u)
{
    FrictionAssembly out;
    out.residual = Vector::Zero(space.num_velocity_dofs());
    out.jacobian.matrix = space.velocity_pattern();
    SparseMatrix& J = out.jacobian.matrix;
    for_each_slip_point(space, u, [&](const SlipEdge& e, double w, const double* phi, double ut) {
        const double tr = regularized_traction(law, ut);
        const double dtr = regularized_traction_derivative(law, ut);
        for (int i = 0; i < e.num_dofs; ++i) {
            const int row = space.velocity_dof(e.dofs[i], 0);
            out.residual[row] += w * tr * phi[i];
            for (int j = 0; j < e.num_dofs; ++j)
                J.coeffRef(row, space.velocity_dof(e.dofs[j], 0)) += w * dtr * phi[i] * phi[j];
        }
    });
    return out;
}

Vector assemble_friction_residual(const FeSpace& space, const SlipLaw& law, const Vector& u)
{
    Vector r = Vector::Zero(space.num_velocity_dofs());
    for_each_slip_point(space, u, [&](const SlipEdge& e, double w, const double* phi, double ut) {
        const double tr = regularized_traction(law, ut);
        for (int i = 0; i < e.num_dofs; ++i)
            r[space.velocity_dof(e.dofs[i], 0)] += w * tr * phi[i];
    });
    return r;
}

AssembledOperator assemble_boundary_mass(const FeSpace& space)
{
    AssembledOperator op;
    op.matrix = space.velocity_pattern();
    Vector zero = Vector::Zero(space.num_velocity_dofs());
    for_each_slip_point(space, zero, [&](const SlipEdge& e, double w, const double* phi, double) {
        for (int i = 0; i < e.num_dofs; ++i)
            for (int j = 0; j < e.num_dofs; ++j)
                op.matrix.coeffRef(space.velocity_dof(e.dofs[i], 0), space.velocity_dof(e.dofs[j], 0)) +=
                    w * phi[i] * phi[j];
    });
    return op;
}

double tangential_trace_norm(const FeSpace& space, const Vector& u)
{
    double total = 0.0;
    for_each_slip_point(space, u, [&](const SlipEdge&, double w, const double*, double ut) { total += w * ut * ut; });
    return std::sqrt(total);
}

double boundary_dissipation(const FeSpace& space, const SlipLaw& law, const Vector& u)
{
    double total = 0.0;
    for_each_slip_point(space, u, [&](const SlipEdge&, double w, const double*, double ut) {
        total += w * regularized_traction(law, ut) * ut;
    });
    return total;
}

double slip_potential(const FeSpace& space, const SlipLaw& law, const Vector& u)
{
    double total = 0.0;
    for_each_slip_point(space, u, [&](const SlipEdge&, double w, const double*, double ut) {
        const double z = std::abs(ut);
        total += w * (law.b * z + (law.a - law.b) * (-std::expm1(-law.rho * z)) / law.rho);
    });
    return total;
}

SpectralConstants estimate_lambda0(const FeSpace& space)
{
    const std::vector<int>& boundary = space.slip_tangential_dofs();
    if (boundary.empty())
        throw ConfigurationError("estimate_lambda0: no free tangential dofs on Gamma1");
    std::vector<char> mask = space.velocity_constraints();
    for (int i : boundary)
        mask[i] = 1;
    const std::vector<int> interior = free_indices(mask);

    // int eps:eps is half of a.
    SparseMatrix A = assemble_a(space).matrix * 0.5;
    const SparseMatrix Mg = assemble_boundary_mass(space).matrix;

    const ColMatrix Aii = restrict_matrix(A, interior, interior);
    const ColMatrix Aib = restrict_matrix(A, interior, boundary);
    const ColMatrix Abb = restrict_matrix(A, boundary, boundary);
    const ColMatrix Mbb = restrict_matrix(Mg, boundary, boundary);

    SparseLu lu;
    try {
        factorize(lu, Aii, "estimate_lambda0");
    } catch (const LinearSolverError& e) {
        throw ConfigurationError(std::string("singular interior block: ") + e.what());
    }
    const Eigen::MatrixXd X = lu.solve(Eigen::MatrixXd(Aib));
    const Eigen::MatrixXd S = Eigen::MatrixXd(Abb) - Eigen::MatrixXd(Aib.transpose()) * X;
    const Eigen::MatrixXd Ssym = 0.5 * (S + S.transpose());

    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> eig(Ssym, Eigen::MatrixXd(Mbb));
    if (eig.info() != Eigen::Success)
        throw LinearSolverError("estimate_lambda0: dense eigensolve failed");

    SpectralConstants out;
    out.lambda0 = eig.eigenvalues()[0];
    out.mesh_n = space.mesh().subdivisions();
    if (!(out.lambda0 > 0.0))
        throw ConfigurationError("estimate_lambda0: nonpositive eigenvalue");

    const Eigen::VectorXd xb = eig.eigenvectors().col(0);
    const Eigen::VectorXd xi = -X * xb;
    out.eigenfunction = Vector::Zero(space.num_velocity_dofs());
    for (std::size_t k = 0; k < boundary.size(); ++k)
        out.eigenfunction[boundary[k]] = xb[k];
    for (std::size_t k = 0; k < interior.size(); ++k)
        out.eigenfunction[interior[k]] = xi[k];
    out.eigenfunction /= tangential_trace_norm(space, out.eigenfunction);
    return out;
}

} // namespace cbfed
