#pragma once

#include <array>
#include <functional>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Sparse>

#include "cbfed/mesh.hpp"
#include "cbfed/quadrature.hpp"

namespace cbfed {

using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using VectorFunction = std::function<Eigen::Vector2d(const Point&)>;
using ScalarFunction = std::function<double(const Point&)>;

/// Identifies which discrete space the entries of a vector or the rows/cols
/// of an operator refer to.
enum class DofSpace { velocity, pressure, control };

/// A Gamma1 edge seen from the velocity space: scalar dofs of its two end
/// nodes and (for P2) of its midpoint, plus its length.
struct SlipEdge {
    std::array<int, 3> dofs;
    int num_dofs;
    double length;
};

/// Mixed finite-element spaces on a TriMesh.
///
/// Velocity: continuous P2 (or P1 for the inf-sup negative control) vector
/// field. Scalar velocity dofs are the mesh nodes followed by the edge
/// midpoints; the vector layout is [x-components | y-components].
/// Pressure: continuous P1, one dof per node, zero mean enforced at solve
/// time. Control: continuous P1 vector field, layout [x | y].
///
/// The velocity constraint mask realizes V = {v = 0 on Gamma0, v_n = 0 on
/// Gamma1}: both components vanish at dofs touching Gamma0 (including the
/// two top corners), only the y-component vanishes on the open top side.
class FeSpace {
public:
    explicit FeSpace(TriMesh mesh, int velocity_order = 2);

    const TriMesh& mesh() const { return mesh_; }
    int velocity_order() const { return order_; }

    int num_edges() const { return static_cast<int>(edges_.size()); }
    const std::vector<std::array<int, 2>>& edges() const { return edges_; }

    int num_scalar_velocity_dofs() const { return n_scalar_; }
    int num_velocity_dofs() const { return 2 * n_scalar_; }
    int num_pressure_dofs() const { return mesh_.num_nodes(); }
    int num_control_dofs() const { return 2 * mesh_.num_nodes(); }

    int velocity_dof(int scalar, int component) const { return component * n_scalar_ + scalar; }
    int control_dof(int node, int component) const { return component * mesh_.num_nodes() + node; }

    /// Number of local scalar velocity basis functions per triangle (6 or 3).
    int local_velocity_size() const { return order_ == 2 ? 6 : 3; }
    /// Local scalar velocity dofs: vertices, then midpoints of the edges
    /// opposite vertex 0, 1, 2.
    const std::array<int, 6>& element_dofs(int t) const { return element_dofs_[t]; }

    Point scalar_dof_point(int s) const;

    /// 1 for constrained vector velocity dofs of V.
    const std::vector<char>& velocity_constraints() const { return constrained_; }
    /// 1 for every velocity dof on the boundary (the space V0 = H^1_0).
    const std::vector<char>& no_slip_constraints() const { return constrained_v0_; }
    /// Free tangential (x-component) velocity dofs on Gamma1.
    const std::vector<int>& slip_tangential_dofs() const { return slip_dofs_; }
    const std::vector<SlipEdge>& slip_edges() const { return slip_edges_; }

    /// Zeroes every constrained entry of a velocity vector.
    void apply_constraints(Vector& u) const;

    // Element data on the degree-8 rule.
    const TriangleQuadrature& quadrature() const { return *quad_; }
    int num_quadrature_points() const { return quad_->size(); }
    /// Reference shape function value, identical on every element.
    double shape(int q, int i) const { return shape_[q * 6 + i]; }
    /// Physical gradient of local basis function i at quadrature point q.
    Eigen::Vector2d shape_gradient(int t, int q, int i) const
    {
        const double* g = &grad_[((static_cast<std::size_t>(t) * quad_->size() + q) * 6 + i) * 2];
        return {g[0], g[1]};
    }
    /// Quadrature weight times |det J|.
    double jxw(int t, int q) const { return quad_->weights[q] * 2.0 * area_[t]; }
    double element_area(int t) const { return area_[t]; }
    Point quadrature_point(int t, int q) const;
    /// Gradients of the barycentric coordinates (= P1 basis gradients).
    const std::array<Eigen::Vector2d, 3>& barycentric_gradients(int t) const { return bary_grad_[t]; }

    /// Integrals of the P1 pressure basis functions.
    const Vector& pressure_basis_integrals() const { return pressure_integrals_; }

    /// Velocity-velocity sparsity pattern (all values zero).
    const SparseMatrix& velocity_pattern() const { return pattern_; }
    /// Offsets into velocity_pattern().valuePtr() for the local element
    /// matrix of triangle t; entry (a, b) with a = c*nloc + i, b = d*nloc + j
    /// sits at offsets[a * 2*nloc + b].
    const int* scatter_offsets(int t) const
    {
        const int m = 2 * local_velocity_size();
        return &scatter_[static_cast<std::size_t>(t) * m * m];
    }

private:
    TriMesh mesh_;
    int order_;
    int n_scalar_ = 0;
    std::vector<std::array<int, 2>> edges_;
    std::vector<std::array<int, 6>> element_dofs_;
    std::vector<char> constrained_;
    std::vector<char> constrained_v0_;
    std::vector<int> slip_dofs_;
    std::vector<SlipEdge> slip_edges_;
    const TriangleQuadrature* quad_;
    std::vector<double> shape_;
    std::vector<double> grad_;
    std::vector<double> area_;
    std::vector<std::array<Eigen::Vector2d, 3>> bary_grad_;
    Vector pressure_integrals_;
    SparseMatrix pattern_;
    std::vector<int> scatter_;
};

/// Scalar basis values of the local velocity element at barycentric point.
void velocity_shape_values(int order, const std::array<double, 3>& lambda, double* out);
/// Physical gradients of the local velocity basis at barycentric point.
void velocity_shape_gradients(int order, const std::array<double, 3>& lambda,
                              const std::array<Eigen::Vector2d, 3>& dlambda, Eigen::Vector2d* out);

/// Value and gradient of a discrete velocity at a point; gradient(c, b)
/// holds d u_c / d x_b.
struct VelocitySample {
    Eigen::Vector2d value;
    Eigen::Matrix2d gradient;
};

VelocitySample evaluate_velocity(const FeSpace& space, const Vector& u, const Point& x);
double evaluate_pressure(const FeSpace& space, const Vector& p, const Point& x);
Eigen::Vector2d evaluate_control(const FeSpace& space, const Vector& f, const Point& x);

/// Nodal / edge-midpoint interpolant; no constraints applied. Throws
/// EvaluationError if the field returns a non-finite value.
Vector interpolate_velocity(const FeSpace& space, const VectorFunction& field);
/// Nodal interpolant shifted to zero mean.
Vector interpolate_pressure(const FeSpace& space, const ScalarFunction& field);
/// Nodal interpolant of a vector control.
Vector interpolate_control(const FeSpace& space, const VectorFunction& field);

double pressure_mean(const FeSpace& space, const Vector& p);
void remove_pressure_mean(const FeSpace& space, Vector& p);

double velocity_l2_norm(const FeSpace& space, const Vector& u);
/// ||eps(u)||_{L2}, the norm of V.
double velocity_v_norm(const FeSpace& space, const Vector& u);
/// int |u|^s dx
double velocity_power_integral(const FeSpace& space, const Vector& u, double s);
double pressure_l2_norm(const FeSpace& space, const Vector& p);
double control_l2_norm(const FeSpace& space, const Vector& f);

/// int_O g(x) dx with the degree-8 rule.
double integrate(const FeSpace& space, const ScalarFunction& g);

} // namespace cbfed
