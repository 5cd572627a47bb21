#include "cbfed/forms.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "cbfed/errors.hpp"

namespace cbfed {

void ModelParams::validate() const
{
    if (!(mu > 0.0))
        throw ConfigurationError("mu must be positive");
    if (alpha < 0.0 || beta < 0.0)
        throw ConfigurationError("alpha and beta must be nonnegative");
    if (kappa > 0.0)
        throw ConfigurationError("kappa must be nonpositive");
    if (r < 1.0 || q < 1.0)
        throw ConfigurationError("exponents r and q must be at least 1");
    if ((beta > 0.0 || kappa != 0.0) && !(r > q))
        throw ConfigurationError("r > q is required when beta > 0 or kappa != 0");
}

bool AssembledOperator::is_symmetric(double tol) const
{
    if (matrix.rows() != matrix.cols())
        return false;
    SparseMatrix t = matrix.transpose();
    SparseMatrix diff = matrix - t;
    for (int k = 0; k < diff.nonZeros(); ++k)
        if (std::abs(diff.valuePtr()[k]) > tol)
            return false;
    return true;
}

Eigen::Vector2d power_map(const Eigen::Vector2d& u, double s)
{
    if (s == 1.0)
        return u;
    const double n2 = u.squaredNorm();
    if (n2 < 1e-300)
        return Eigen::Vector2d::Zero();
    if (s == 3.0)
        return n2 * u;
    return std::pow(n2, 0.5 * (s - 1.0)) * u;
}

Eigen::Matrix2d power_map_derivative(const Eigen::Vector2d& u, double s)
{
    if (s == 1.0)
        return Eigen::Matrix2d::Identity();
    const double n2 = u.squaredNorm();
    if (n2 < 1e-300)
        return Eigen::Matrix2d::Zero();
    const double ns1 = s == 3.0 ? n2 : std::pow(n2, 0.5 * (s - 1.0));
    return ns1 * Eigen::Matrix2d::Identity() + (s - 1.0) * (ns1 / n2) * u * u.transpose();
}

namespace {

using LocalMatrix = Eigen::Matrix<double, 12, 12>;

// Velocity values and gradients of a discrete field at every quadrature
// point of triangle t.
struct LocalField {
    Eigen::Vector2d value[16];
    Eigen::Matrix2d grad[16];
};

void gather(const FeSpace& space, const Vector& u, int t, LocalField& out)
{
    const int nloc = space.local_velocity_size();
    const auto& dofs = space.element_dofs(t);
    double coef[2][6];
    for (int c = 0; c < 2; ++c)
        for (int i = 0; i < nloc; ++i)
            coef[c][i] = u[space.velocity_dof(dofs[i], c)];
    for (int q = 0; q < space.num_quadrature_points(); ++q) {
        Eigen::Vector2d v = Eigen::Vector2d::Zero();
        Eigen::Matrix2d g = Eigen::Matrix2d::Zero();
        for (int i = 0; i < nloc; ++i) {
            const double phi = space.shape(q, i);
            const Eigen::Vector2d dphi = space.shape_gradient(t, q, i);
            for (int c = 0; c < 2; ++c) {
                v[c] += coef[c][i] * phi;
                g.row(c) += coef[c][i] * dphi.transpose();
            }
        }
        out.value[q] = v;
        out.grad[q] = g;
    }
}

// Element loop over the shared velocity pattern. kernel(t, local) fills the
// local matrix indexed by (c*nloc + i, d*nloc + j).
template <class Kernel>
AssembledOperator assemble_velocity(const FeSpace& space, Kernel&& kernel)
{
    AssembledOperator op;
    op.matrix = space.velocity_pattern();
    double* values = op.matrix.valuePtr();
    const int m = 2 * space.local_velocity_size();
    LocalMatrix local;
    for (int t = 0; t < space.mesh().num_triangles(); ++t) {
        local.setZero();
        kernel(t, local);
        const int* offsets = space.scatter_offsets(t);
        for (int a = 0; a < m; ++a)
            for (int b = 0; b < m; ++b)
                values[offsets[a * m + b]] += local(a, b);
    }
    return op;
}

template <class Kernel>
Vector assemble_velocity_vector(const FeSpace& space, Kernel&& kernel)
{
    Vector out = Vector::Zero(space.num_velocity_dofs());
    const int nloc = space.local_velocity_size();
    double local[2][6];
    for (int t = 0; t < space.mesh().num_triangles(); ++t) {
        for (auto& row : local)
            for (double& x : row)
                x = 0.0;
        kernel(t, local);
        const auto& dofs = space.element_dofs(t);
        for (int c = 0; c < 2; ++c)
            for (int i = 0; i < nloc; ++i)
                out[space.velocity_dof(dofs[i], c)] += local[c][i];
    }
    return out;
}

void check_exponent(double s)
{
    if (s < 1.0)
        throw std::invalid_argument("power exponent must be at least 1");
}

} // namespace

AssembledOperator assemble_a(const FeSpace& space)
{
    const int nloc = space.local_velocity_size();
    const int nq = space.num_quadrature_points();
    return assemble_velocity(space, [&](int t, LocalMatrix& K) {
        for (int q = 0; q < nq; ++q) {
            const double w = space.jxw(t, q);
            Eigen::Vector2d g[6];
            for (int i = 0; i < nloc; ++i)
                g[i] = space.shape_gradient(t, q, i);
            for (int i = 0; i < nloc; ++i)
                for (int j = 0; j < nloc; ++j) {
                    const double gg = g[i].dot(g[j]);
                    for (int c = 0; c < 2; ++c)
                        for (int d = 0; d < 2; ++d)
                            K(c * nloc + i, d * nloc + j) += w * ((c == d ? gg : 0.0) + g[i][d] * g[j][c]);
                }
        }
    });
}

AssembledOperator assemble_a0(const FeSpace& space)
{
    const int nloc = space.local_velocity_size();
    const int nq = space.num_quadrature_points();
    return assemble_velocity(space, [&](int t, LocalMatrix& K) {
        for (int q = 0; q < nq; ++q) {
            const double w = space.jxw(t, q);
            for (int i = 0; i < nloc; ++i)
                for (int j = 0; j < nloc; ++j) {
                    const double v = w * space.shape(q, i) * space.shape(q, j);
                    K(i, j) += v;
                    K(nloc + i, nloc + j) += v;
                }
        }
    });
}

AssembledOperator assemble_d(const FeSpace& space)
{
    const int nloc = space.local_velocity_size();
    const int nq = space.num_quadrature_points();
    const auto& rule = space.quadrature();
    std::vector<Eigen::Triplet<double>> trip;
    for (int t = 0; t < space.mesh().num_triangles(); ++t) {
        const auto& tri = space.mesh().triangle(t);
        const auto& dofs = space.element_dofs(t);
        double local[3][2][6] = {};
        for (int q = 0; q < nq; ++q) {
            const double w = space.jxw(t, q);
            for (int i = 0; i < nloc; ++i) {
                const Eigen::Vector2d g = space.shape_gradient(t, q, i);
                for (int k = 0; k < 3; ++k)
                    for (int c = 0; c < 2; ++c)
                        local[k][c][i] -= w * rule.points[q][k] * g[c];
            }
        }
        for (int k = 0; k < 3; ++k)
            for (int c = 0; c < 2; ++c)
                for (int i = 0; i < nloc; ++i)
                    trip.emplace_back(tri[k], space.velocity_dof(dofs[i], c), local[k][c][i]);
    }
    AssembledOperator op;
    op.row_space = DofSpace::pressure;
    op.col_space = DofSpace::velocity;
    op.matrix.resize(space.num_pressure_dofs(), space.num_velocity_dofs());
    op.matrix.setFromTriplets(trip.begin(), trip.end());
    op.matrix.makeCompressed();
    return op;
}

AssembledOperator assemble_oseen(const FeSpace& space, const Vector& w)
{
    const int nloc = space.local_velocity_size();
    const int nq = space.num_quadrature_points();
    LocalField field;
    return assemble_velocity(space, [&](int t, LocalMatrix& K) {
        gather(space, w, t, field);
        for (int q = 0; q < nq; ++q) {
            const double jw = space.jxw(t, q);
            for (int j = 0; j < nloc; ++j) {
                const double adv = field.value[q].dot(space.shape_gradient(t, q, j));
                for (int i = 0; i < nloc; ++i) {
                    const double v = jw * adv * space.shape(q, i);
                    K(i, j) += v;
                    K(nloc + i, nloc + j) += v;
                }
            }
        }
    });
}

AssembledOperator assemble_convection_jacobian(const FeSpace& space, const Vector& u)
{
    const int nloc = space.local_velocity_size();
    const int nq = space.num_quadrature_points();
    LocalField field;
    return assemble_velocity(space, [&](int t, LocalMatrix& K) {
        gather(space, u, t, field);
        for (int q = 0; q < nq; ++q) {
            const double jw = space.jxw(t, q);
            const Eigen::Matrix2d& gu = field.grad[q];
            for (int j = 0; j < nloc; ++j) {
                const double phij = space.shape(q, j);
                const double adv = field.value[q].dot(space.shape_gradient(t, q, j));
                for (int i = 0; i < nloc; ++i) {
                    const double wi = jw * space.shape(q, i);
                    for (int c = 0; c < 2; ++c)
                        for (int d = 0; d < 2; ++d)
                            K(c * nloc + i, d * nloc + j) += wi * (phij * gu(c, d) + (c == d ? adv : 0.0));
                }
            }
        }
    });
}

Vector assemble_convection_residual(const FeSpace& space, const Vector& u)
{
    const int nloc = space.local_velocity_size();
    const int nq = space.num_quadrature_points();
    LocalField field;
    return assemble_velocity_vector(space, [&](int t, double (&local)[2][6]) {
        gather(space, u, t, field);
        for (int q = 0; q < nq; ++q) {
            const Eigen::Vector2d conv = field.grad[q] * field.value[q];
            const double jw = space.jxw(t, q);
            for (int i = 0; i < nloc; ++i)
                for (int c = 0; c < 2; ++c)
                    local[c][i] += jw * conv[c] * space.shape(q, i);
        }
    });
}

Vector assemble_c_residual(const FeSpace& space, const Vector& u, double s)
{
    check_exponent(s);
    const int nloc = space.local_velocity_size();
    const int nq = space.num_quadrature_points();
    LocalField field;
    return assemble_velocity_vector(space, [&](int t, double (&local)[2][6]) {
        gather(space, u, t, field);
        for (int q = 0; q < nq; ++q) {
            const Eigen::Vector2d cu = power_map(field.value[q], s);
            const double jw = space.jxw(t, q);
            for (int i = 0; i < nloc; ++i)
                for (int c = 0; c < 2; ++c)
                    local[c][i] += jw * cu[c] * space.shape(q, i);
        }
    });
}

AssembledOperator assemble_c_jacobian(const FeSpace& space, const Vector& u, double s)
{
    check_exponent(s);
    const int nloc = space.local_velocity_size();
    const int nq = space.num_quadrature_points();
    LocalField field;
    return assemble_velocity(space, [&](int t, LocalMatrix& K) {
        gather(space, u, t, field);
        for (int q = 0; q < nq; ++q) {
            const Eigen::Matrix2d J = space.jxw(t, q) * power_map_derivative(field.value[q], s);
            for (int i = 0; i < nloc; ++i)
                for (int j = 0; j < nloc; ++j) {
                    const double pp = space.shape(q, i) * space.shape(q, j);
                    for (int c = 0; c < 2; ++c)
                        for (int d = 0; d < 2; ++d)
                            K(c * nloc + i, d * nloc + j) += pp * J(c, d);
                }
        }
    });
}

Vector assemble_load(const FeSpace& space, const Vector& control)
{
    if (control.size() != space.num_control_dofs())
        throw std::invalid_argument("assemble_load: control vector has the wrong size");
    const int nloc = space.local_velocity_size();
    const int nq = space.num_quadrature_points();
    const auto& rule = space.quadrature();
    return assemble_velocity_vector(space, [&](int t, double (&local)[2][6]) {
        const auto& tri = space.mesh().triangle(t);
        for (int q = 0; q < nq; ++q) {
            Eigen::Vector2d f = Eigen::Vector2d::Zero();
            for (int k = 0; k < 3; ++k)
                for (int c = 0; c < 2; ++c)
                    f[c] += rule.points[q][k] * control[space.control_dof(tri[k], c)];
            const double jw = space.jxw(t, q);
            for (int i = 0; i < nloc; ++i)
                for (int c = 0; c < 2; ++c)
                    local[c][i] += jw * f[c] * space.shape(q, i);
        }
    });
}

Vector assemble_load(const FeSpace& space, const VectorFunction& field)
{
    const int nloc = space.local_velocity_size();
    const int nq = space.num_quadrature_points();
    return assemble_velocity_vector(space, [&](int t, double (&local)[2][6]) {
        for (int q = 0; q < nq; ++q) {
            const Eigen::Vector2d f = field(space.quadrature_point(t, q));
            if (!f.allFinite())
                throw EvaluationError("load field returned a non-finite value");
            const double jw = space.jxw(t, q);
            for (int i = 0; i < nloc; ++i)
                for (int c = 0; c < 2; ++c)
                    local[c][i] += jw * f[c] * space.shape(q, i);
        }
    });
}

AssembledOperator assemble_load_operator(const FeSpace& space)
{
    const int nloc = space.local_velocity_size();
    const int nq = space.num_quadrature_points();
    const auto& rule = space.quadrature();
    std::vector<Eigen::Triplet<double>> trip;
    for (int t = 0; t < space.mesh().num_triangles(); ++t) {
        const auto& tri = space.mesh().triangle(t);
        const auto& dofs = space.element_dofs(t);
        double local[6][3] = {};
        for (int q = 0; q < nq; ++q) {
            const double jw = space.jxw(t, q);
            for (int i = 0; i < nloc; ++i)
                for (int k = 0; k < 3; ++k)
                    local[i][k] += jw * space.shape(q, i) * rule.points[q][k];
        }
        for (int c = 0; c < 2; ++c)
            for (int i = 0; i < nloc; ++i)
                for (int k = 0; k < 3; ++k)
                    trip.emplace_back(space.velocity_dof(dofs[i], c), space.control_dof(tri[k], c), local[i][k]);
    }
    AssembledOperator op;
    op.row_space = DofSpace::velocity;
    op.col_space = DofSpace::control;
    op.matrix.resize(space.num_velocity_dofs(), space.num_control_dofs());
    op.matrix.setFromTriplets(trip.begin(), trip.end());
    op.matrix.makeCompressed();
    return op;
}

namespace {

SparseMatrix p1_mass(const FeSpace& space, int components)
{
    const int nn = space.mesh().num_nodes();
    std::vector<Eigen::Triplet<double>> trip;
    for (int t = 0; t < space.mesh().num_triangles(); ++t) {
        const auto& tri = space.mesh().triangle(t);
        const double area = space.element_area(t);
        for (int k = 0; k < 3; ++k)
            for (int l = 0; l < 3; ++l) {
                const double v = area * (k == l ? 2.0 : 1.0) / 12.0;
                for (int c = 0; c < components; ++c)
                    trip.emplace_back(c * nn + tri[k], c * nn + tri[l], v);
            }
    }
    SparseMatrix m(components * nn, components * nn);
    m.setFromTriplets(trip.begin(), trip.end());
    m.makeCompressed();
    return m;
}

} // namespace

AssembledOperator assemble_pressure_mass(const FeSpace& space)
{
    AssembledOperator op;
    op.row_space = op.col_space = DofSpace::pressure;
    op.matrix = p1_mass(space, 1);
    return op;
}

AssembledOperator assemble_control_mass(const FeSpace& space)
{
    AssembledOperator op;
    op.row_space = op.col_space = DofSpace::control;
    op.matrix = p1_mass(space, 2);
    return op;
}

} // namespace cbfed
