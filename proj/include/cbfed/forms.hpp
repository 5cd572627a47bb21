#pragma once

#include <Eigen/Core>

#include "cbfed/fem.hpp"

namespace cbfed {

/// Coefficients of the CBFeD momentum equation.
struct ModelParams {
    double mu = 1.0;
    double alpha = 0.0;
    double beta = 0.0;
    double kappa = 0.0;
    double r = 3.0;
    double q = 1.0;

    /// Throws ConfigurationError when mu <= 0, alpha < 0, beta < 0,
    /// kappa > 0, r < 1, q < 1, or (beta > 0 or kappa != 0) with q >= r.
    void validate() const;
};

/// A sparse operator together with the spaces of its rows and columns.
struct AssembledOperator {
    DofSpace row_space = DofSpace::velocity;
    DofSpace col_space = DofSpace::velocity;
    SparseMatrix matrix;

    /// Max-norm of matrix - matrix^T is at most tol.
    bool is_symmetric(double tol = 0.0) const;
};

/// |u|^{s-1} u, zero at u = 0.
Eigen::Vector2d power_map(const Eigen::Vector2d& u, double s);
/// Gateaux derivative of u -> |u|^{s-1} u:
///   |u|^{s-1} I + (s-1)|u|^{s-3} u u^T, reducing to I for s = 1 and to 0
/// at u = 0 when 1 < s < 3.
Eigen::Matrix2d power_map_derivative(const Eigen::Vector2d& u, double s);

/// a(u,v) = int 2 eps(u):eps(v).
AssembledOperator assemble_a(const FeSpace& space);
/// a0(u,v) = int u.v (velocity mass matrix).
AssembledOperator assemble_a0(const FeSpace& space);
/// d(v,q) = -int q div v, rows indexed by pressure, columns by velocity.
AssembledOperator assemble_d(const FeSpace& space);
/// Matrix of u -> b(w,u,v): entry (i,j) = int (w.grad phi_j).phi_i.
AssembledOperator assemble_oseen(const FeSpace& space, const Vector& w);
/// Newton linearization of b(u,u,.): du -> b(du,u,.) + b(u,du,.).
AssembledOperator assemble_convection_jacobian(const FeSpace& space, const Vector& u);
/// b(u,u,phi_i) for every velocity basis function.
Vector assemble_convection_residual(const FeSpace& space, const Vector& u);

/// int |u|^{s-1} u.phi_i. Throws std::invalid_argument for s < 1.
Vector assemble_c_residual(const FeSpace& space, const Vector& u, double s);
/// Matrix of du -> int C'(u)du.phi_i. Throws std::invalid_argument for s < 1.
AssembledOperator assemble_c_jacobian(const FeSpace& space, const Vector& u, double s);

/// int f.phi_i for a P1 control vector.
Vector assemble_load(const FeSpace& space, const Vector& control);
/// int f.phi_i for an analytic field.
Vector assemble_load(const FeSpace& space, const VectorFunction& field);
/// Velocity x control matrix B with assemble_load(space, f) = B f.
AssembledOperator assemble_load_operator(const FeSpace& space);

/// P1 mass matrix of the pressure space.
AssembledOperator assemble_pressure_mass(const FeSpace& space);
/// P1 vector mass matrix of the control space.
AssembledOperator assemble_control_mass(const FeSpace& space);

} // namespace cbfed
