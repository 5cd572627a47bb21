#include "cbfed/fem.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "cbfed/errors.hpp"

namespace cbfed {

void velocity_shape_values(int order, const std::array<double, 3>& l, double* out)
{
    if (order == 1) {
        out[0] = l[0];
        out[1] = l[1];
        out[2] = l[2];
        return;
    }
    for (int k = 0; k < 3; ++k)
        out[k] = l[k] * (2.0 * l[k] - 1.0);
    out[3] = 4.0 * l[1] * l[2];
    out[4] = 4.0 * l[2] * l[0];
    out[5] = 4.0 * l[0] * l[1];
}

void velocity_shape_gradients(int order, const std::array<double, 3>& l,
                              const std::array<Eigen::Vector2d, 3>& dl, Eigen::Vector2d* out)
{
    if (order == 1) {
        for (int k = 0; k < 3; ++k)
            out[k] = dl[k];
        return;
    }
    for (int k = 0; k < 3; ++k)
        out[k] = (4.0 * l[k] - 1.0) * dl[k];
    out[3] = 4.0 * (l[1] * dl[2] + l[2] * dl[1]);
    out[4] = 4.0 * (l[2] * dl[0] + l[0] * dl[2]);
    out[5] = 4.0 * (l[0] * dl[1] + l[1] * dl[0]);
}

namespace {

std::array<Eigen::Vector2d, 3> compute_bary_gradients(const TriMesh& mesh, int t)
{
    const auto& tri = mesh.triangle(t);
    const Point& p0 = mesh.node(tri[0]);
    const Point& p1 = mesh.node(tri[1]);
    const Point& p2 = mesh.node(tri[2]);
    const double det = (p1.x() - p0.x()) * (p2.y() - p0.y()) - (p2.x() - p0.x()) * (p1.y() - p0.y());
    // grad lambda_k = rot(p_{k+2} - p_{k+1}) / det
    std::array<Eigen::Vector2d, 3> g;
    g[0] = Eigen::Vector2d(p1.y() - p2.y(), p2.x() - p1.x()) / det;
    g[1] = Eigen::Vector2d(p2.y() - p0.y(), p0.x() - p2.x()) / det;
    g[2] = Eigen::Vector2d(p0.y() - p1.y(), p1.x() - p0.x()) / det;
    return g;
}

} // namespace

FeSpace::FeSpace(TriMesh mesh, int velocity_order)
    : mesh_(std::move(mesh)), order_(velocity_order), quad_(&triangle_rule_degree8())
{
    if (order_ != 1 && order_ != 2)
        throw std::invalid_argument("FeSpace: velocity order must be 1 or 2");

    const int nn = mesh_.num_nodes();
    const int nt = mesh_.num_triangles();

    // Edge table in order of first appearance.
    std::map<std::pair<int, int>, int> edge_id;
    element_dofs_.resize(nt);
    for (int t = 0; t < nt; ++t) {
        const auto& tri = mesh_.triangle(t);
        auto& dofs = element_dofs_[t];
        dofs.fill(-1);
        for (int k = 0; k < 3; ++k)
            dofs[k] = tri[k];
        for (int k = 0; k < 3; ++k) {
            int a = tri[(k + 1) % 3], b = tri[(k + 2) % 3];
            auto key = std::minmax(a, b);
            auto [it, inserted] = edge_id.try_emplace({key.first, key.second}, static_cast<int>(edges_.size()));
            if (inserted)
                edges_.push_back({key.first, key.second});
            if (order_ == 2)
                dofs[3 + k] = nn + it->second;
        }
    }
    n_scalar_ = order_ == 2 ? nn + static_cast<int>(edges_.size()) : nn;

    // Constraints from boundary tags. A node touching any Gamma0 edge is
    // fully constrained; this covers the corners (0,1) and (1,1).
    std::vector<char> node_g0(nn, 0), node_g1(nn, 0);
    for (const auto& be : mesh_.boundary_edges())
        for (int v : be.nodes)
            (be.part == BoundaryPart::gamma0 ? node_g0 : node_g1)[v] = 1;

    constrained_.assign(2 * n_scalar_, 0);
    constrained_v0_.assign(2 * n_scalar_, 0);
    auto constrain = [&](int s, bool tangential_free) {
        constrained_[velocity_dof(s, 1)] = 1;
        if (!tangential_free)
            constrained_[velocity_dof(s, 0)] = 1;
        constrained_v0_[velocity_dof(s, 0)] = 1;
        constrained_v0_[velocity_dof(s, 1)] = 1;
    };
    for (int v = 0; v < nn; ++v)
        if (node_g0[v] || node_g1[v])
            constrain(v, !node_g0[v]);

    std::vector<char> slip_scalar(n_scalar_, 0);
    for (int v = 0; v < nn; ++v)
        if (node_g1[v] && !node_g0[v])
            slip_scalar[v] = 1;

    for (const auto& be : mesh_.boundary_edges()) {
        const auto key = std::minmax(be.nodes[0], be.nodes[1]);
        const int e = edge_id.at({key.first, key.second});
        const bool slip = be.part == BoundaryPart::gamma1;
        if (order_ == 2) {
            constrain(nn + e, slip);
            if (slip)
                slip_scalar[nn + e] = 1;
        }
        if (slip) {
            SlipEdge se;
            se.dofs = {be.nodes[0], be.nodes[1], order_ == 2 ? nn + e : -1};
            se.num_dofs = order_ == 2 ? 3 : 2;
            se.length = (mesh_.node(be.nodes[0]) - mesh_.node(be.nodes[1])).norm();
            slip_edges_.push_back(se);
        }
    }
    for (int s = 0; s < n_scalar_; ++s)
        if (slip_scalar[s])
            slip_dofs_.push_back(velocity_dof(s, 0));

    // Quadrature-point tables.
    const int nq = quad_->size();
    shape_.assign(static_cast<std::size_t>(nq) * 6, 0.0);
    for (int q = 0; q < nq; ++q)
        velocity_shape_values(order_, quad_->points[q], &shape_[q * 6]);

    area_.resize(nt);
    bary_grad_.resize(nt);
    grad_.assign(static_cast<std::size_t>(nt) * nq * 6 * 2, 0.0);
    pressure_integrals_ = Vector::Zero(nn);
    for (int t = 0; t < nt; ++t) {
        area_[t] = mesh_.signed_area(t);
        bary_grad_[t] = compute_bary_gradients(mesh_, t);
        for (int q = 0; q < nq; ++q) {
            Eigen::Vector2d g[6];
            velocity_shape_gradients(order_, quad_->points[q], bary_grad_[t], g);
            for (int i = 0; i < local_velocity_size(); ++i) {
                double* dst = &grad_[((static_cast<std::size_t>(t) * nq + q) * 6 + i) * 2];
                dst[0] = g[i].x();
                dst[1] = g[i].y();
            }
        }
        for (int k = 0; k < 3; ++k)
            pressure_integrals_[mesh_.triangle(t)[k]] += area_[t] / 3.0;
    }

    // Velocity sparsity pattern and element scatter offsets.
    const int nloc = local_velocity_size();
    const int m = 2 * nloc;
    auto global = [&](int t, int a) { return velocity_dof(element_dofs_[t][a % nloc], a / nloc); };
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(nt) * m * m);
    for (int t = 0; t < nt; ++t)
        for (int a = 0; a < m; ++a)
            for (int b = 0; b < m; ++b)
                trip.emplace_back(global(t, a), global(t, b), 0.0);
    pattern_.resize(2 * n_scalar_, 2 * n_scalar_);
    pattern_.setFromTriplets(trip.begin(), trip.end());
    pattern_.makeCompressed();

    scatter_.resize(static_cast<std::size_t>(nt) * m * m);
    const int* outer = pattern_.outerIndexPtr();
    const int* inner = pattern_.innerIndexPtr();
    for (int t = 0; t < nt; ++t) {
        for (int a = 0; a < m; ++a) {
            const int row = global(t, a);
            for (int b = 0; b < m; ++b) {
                const int col = global(t, b);
                const int* pos = std::lower_bound(inner + outer[row], inner + outer[row + 1], col);
                scatter_[(static_cast<std::size_t>(t) * m + a) * m + b] = static_cast<int>(pos - inner);
            }
        }
    }
}

Point FeSpace::scalar_dof_point(int s) const
{
    const int nn = mesh_.num_nodes();
    if (s < nn)
        return mesh_.node(s);
    const auto& e = edges_[s - nn];
    return 0.5 * (mesh_.node(e[0]) + mesh_.node(e[1]));
}

Point FeSpace::quadrature_point(int t, int q) const
{
    const auto& tri = mesh_.triangle(t);
    const auto& l = quad_->points[q];
    return l[0] * mesh_.node(tri[0]) + l[1] * mesh_.node(tri[1]) + l[2] * mesh_.node(tri[2]);
}

void FeSpace::apply_constraints(Vector& u) const
{
    for (int i = 0; i < u.size(); ++i)
        if (constrained_[i])
            u[i] = 0.0;
}

namespace {

PointLocation locate_or_throw(const FeSpace& space, const Point& x)
{
    auto loc = space.mesh().locate(x);
    if (!loc)
        throw std::out_of_range("point outside the unit square");
    return *loc;
}

} // namespace

VelocitySample evaluate_velocity(const FeSpace& space, const Vector& u, const Point& x)
{
    const auto loc = locate_or_throw(space, x);
    const int nloc = space.local_velocity_size();
    double phi[6];
    Eigen::Vector2d dphi[6];
    velocity_shape_values(space.velocity_order(), loc.barycentric, phi);
    velocity_shape_gradients(space.velocity_order(), loc.barycentric,
                             space.barycentric_gradients(loc.triangle), dphi);
    VelocitySample s{Eigen::Vector2d::Zero(), Eigen::Matrix2d::Zero()};
    const auto& dofs = space.element_dofs(loc.triangle);
    for (int i = 0; i < nloc; ++i) {
        for (int c = 0; c < 2; ++c) {
            const double coef = u[space.velocity_dof(dofs[i], c)];
            s.value[c] += coef * phi[i];
            s.gradient.row(c) += coef * dphi[i].transpose();
        }
    }
    return s;
}

double evaluate_pressure(const FeSpace& space, const Vector& p, const Point& x)
{
    const auto loc = locate_or_throw(space, x);
    const auto& tri = space.mesh().triangle(loc.triangle);
    return loc.barycentric[0] * p[tri[0]] + loc.barycentric[1] * p[tri[1]] + loc.barycentric[2] * p[tri[2]];
}

Eigen::Vector2d evaluate_control(const FeSpace& space, const Vector& f, const Point& x)
{
    const auto loc = locate_or_throw(space, x);
    const auto& tri = space.mesh().triangle(loc.triangle);
    Eigen::Vector2d v = Eigen::Vector2d::Zero();
    for (int k = 0; k < 3; ++k)
        for (int c = 0; c < 2; ++c)
            v[c] += loc.barycentric[k] * f[space.control_dof(tri[k], c)];
    return v;
}

namespace {

Eigen::Vector2d checked(const VectorFunction& field, const Point& x)
{
    const Eigen::Vector2d v = field(x);
    if (!std::isfinite(v.x()) || !std::isfinite(v.y()))
        throw EvaluationError("non-finite field value at (" + std::to_string(x.x()) + ", " +
                              std::to_string(x.y()) + ")");
    return v;
}

} // namespace

Vector interpolate_velocity(const FeSpace& space, const VectorFunction& field)
{
    Vector u(space.num_velocity_dofs());
    for (int s = 0; s < space.num_scalar_velocity_dofs(); ++s) {
        const Eigen::Vector2d v = checked(field, space.scalar_dof_point(s));
        u[space.velocity_dof(s, 0)] = v.x();
        u[space.velocity_dof(s, 1)] = v.y();
    }
    return u;
}

Vector interpolate_pressure(const FeSpace& space, const ScalarFunction& field)
{
    Vector p(space.num_pressure_dofs());
    for (int v = 0; v < space.num_pressure_dofs(); ++v) {
        const double val = field(space.mesh().node(v));
        if (!std::isfinite(val))
            throw EvaluationError("non-finite pressure value");
        p[v] = val;
    }
    remove_pressure_mean(space, p);
    return p;
}

Vector interpolate_control(const FeSpace& space, const VectorFunction& field)
{
    const int nn = space.mesh().num_nodes();
    Vector f(2 * nn);
    for (int v = 0; v < nn; ++v) {
        const Eigen::Vector2d val = checked(field, space.mesh().node(v));
        f[space.control_dof(v, 0)] = val.x();
        f[space.control_dof(v, 1)] = val.y();
    }
    return f;
}

double pressure_mean(const FeSpace& space, const Vector& p)
{
    // |O| = 1
    return space.pressure_basis_integrals().dot(p);
}

void remove_pressure_mean(const FeSpace& space, Vector& p)
{
    p.array() -= pressure_mean(space, p);
}

namespace {

template <typename PointFn>
double integrate_velocity_points(const FeSpace& space, const Vector& u, PointFn&& fn)
{
    const int nloc = space.local_velocity_size();
    double total = 0.0;
    for (int t = 0; t < space.mesh().num_triangles(); ++t) {
        const auto& dofs = space.element_dofs(t);
        for (int q = 0; q < space.num_quadrature_points(); ++q) {
            Eigen::Vector2d val = Eigen::Vector2d::Zero();
            Eigen::Matrix2d grad = Eigen::Matrix2d::Zero();
            for (int i = 0; i < nloc; ++i) {
                const double phi = space.shape(q, i);
                const Eigen::Vector2d g = space.shape_gradient(t, q, i);
                for (int c = 0; c < 2; ++c) {
                    const double coef = u[space.velocity_dof(dofs[i], c)];
                    val[c] += coef * phi;
                    grad.row(c) += coef * g.transpose();
                }
            }
            total += space.jxw(t, q) * fn(val, grad);
        }
    }
    return total;
}

} // namespace

double velocity_l2_norm(const FeSpace& space, const Vector& u)
{
    return std::sqrt(integrate_velocity_points(
        space, u, [](const Eigen::Vector2d& v, const Eigen::Matrix2d&) { return v.squaredNorm(); }));
}

double velocity_v_norm(const FeSpace& space, const Vector& u)
{
    return std::sqrt(integrate_velocity_points(space, u, [](const Eigen::Vector2d&, const Eigen::Matrix2d& g) {
        const Eigen::Matrix2d eps = 0.5 * (g + g.transpose());
        return eps.squaredNorm();
    }));
}

double velocity_power_integral(const FeSpace& space, const Vector& u, double s)
{
    return integrate_velocity_points(
        space, u, [s](const Eigen::Vector2d& v, const Eigen::Matrix2d&) { return std::pow(v.norm(), s); });
}

double pressure_l2_norm(const FeSpace& space, const Vector& p)
{
    double total = 0.0;
    const auto& quad = space.quadrature();
    for (int t = 0; t < space.mesh().num_triangles(); ++t) {
        const auto& tri = space.mesh().triangle(t);
        for (int q = 0; q < quad.size(); ++q) {
            const auto& l = quad.points[q];
            const double v = l[0] * p[tri[0]] + l[1] * p[tri[1]] + l[2] * p[tri[2]];
            total += space.jxw(t, q) * v * v;
        }
    }
    return std::sqrt(total);
}

double control_l2_norm(const FeSpace& space, const Vector& f)
{
    const int nn = space.mesh().num_nodes();
    return std::hypot(pressure_l2_norm(space, f.head(nn)), pressure_l2_norm(space, f.tail(nn)));
}

double integrate(const FeSpace& space, const ScalarFunction& g)
{
    double total = 0.0;
    for (int t = 0; t < space.mesh().num_triangles(); ++t)
        for (int q = 0; q < space.num_quadrature_points(); ++q)
            total += space.jxw(t, q) * g(space.quadrature_point(t, q));
    return total;
}

} // namespace cbfed
