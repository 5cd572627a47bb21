#include "cbfed/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace cbfed {

TriMesh build_unit_square(int n)
{
    if (n < 1)
        throw std::invalid_argument("build_unit_square: n must be >= 1");

    TriMesh mesh;
    mesh.n_ = n;
    const int stride = n + 1;
    mesh.nodes_.reserve(stride * stride);
    for (int j = 0; j <= n; ++j)
        for (int i = 0; i <= n; ++i)
            mesh.nodes_.emplace_back(static_cast<double>(i) / n, static_cast<double>(j) / n);

    auto id = [stride](int i, int j) { return j * stride + i; };

    // Cell (i,j) produces triangle 2*(j*n+i) below the diagonal and
    // 2*(j*n+i)+1 above it; locate() relies on this ordering.
    mesh.triangles_.reserve(2 * n * n);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            const int v00 = id(i, j), v10 = id(i + 1, j);
            const int v11 = id(i + 1, j + 1), v01 = id(i, j + 1);
            mesh.triangles_.push_back({v00, v10, v11});
            mesh.triangles_.push_back({v00, v11, v01});
        }
    }

    mesh.boundary_edges_.reserve(4 * n);
    for (int i = 0; i < n; ++i)
        mesh.boundary_edges_.push_back({{id(i, 0), id(i + 1, 0)}, BoundaryPart::gamma0});
    for (int j = 0; j < n; ++j)
        mesh.boundary_edges_.push_back({{id(n, j), id(n, j + 1)}, BoundaryPart::gamma0});
    for (int i = n; i > 0; --i)
        mesh.boundary_edges_.push_back({{id(i, n), id(i - 1, n)}, BoundaryPart::gamma1});
    for (int j = n; j > 0; --j)
        mesh.boundary_edges_.push_back({{id(0, j), id(0, j - 1)}, BoundaryPart::gamma0});
    return mesh;
}

double TriMesh::signed_area(int t) const
{
    const auto& tri = triangles_[t];
    const Point e1 = nodes_[tri[1]] - nodes_[tri[0]];
    const Point e2 = nodes_[tri[2]] - nodes_[tri[0]];
    return 0.5 * (e1.x() * e2.y() - e1.y() * e2.x());
}

std::optional<PointLocation> TriMesh::locate(const Point& x) const
{
    constexpr double slack = 1e-14;
    if (n_ == 0 || x.x() < -slack || x.x() > 1.0 + slack || x.y() < -slack || x.y() > 1.0 + slack)
        return std::nullopt;

    const double sx = x.x() * n_, sy = x.y() * n_;
    const int i = std::clamp(static_cast<int>(std::floor(sx)), 0, n_ - 1);
    const int j = std::clamp(static_cast<int>(std::floor(sy)), 0, n_ - 1);
    const double xi = sx - i, eta = sy - j;

    PointLocation loc;
    if (xi >= eta) {
        // (v00, v10, v11)
        loc.triangle = 2 * (j * n_ + i);
        loc.barycentric = {1.0 - xi, xi - eta, eta};
    } else {
        // (v00, v11, v01)
        loc.triangle = 2 * (j * n_ + i) + 1;
        loc.barycentric = {1.0 - eta, xi, eta - xi};
    }
    return loc;
}

double mesh_size(const TriMesh& mesh)
{
    double h = 0.0;
    for (const auto& tri : mesh.triangles())
        for (int k = 0; k < 3; ++k)
            h = std::max(h, (mesh.node(tri[k]) - mesh.node(tri[(k + 1) % 3])).norm());
    return h;
}

void write_mesh_vtk(const TriMesh& mesh, std::ostream& os)
{
    os << "# vtk DataFile Version 3.0\n"
       << "unit square triangulation n=" << mesh.subdivisions() << "\n"
       << "ASCII\nDATASET UNSTRUCTURED_GRID\n";
    os << "POINTS " << mesh.num_nodes() << " double\n";
    os.precision(17);
    for (const auto& p : mesh.nodes())
        os << p.x() << ' ' << p.y() << " 0\n";
    os << "CELLS " << mesh.num_triangles() << ' ' << 4 * mesh.num_triangles() << '\n';
    for (const auto& t : mesh.triangles())
        os << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
    os << "CELL_TYPES " << mesh.num_triangles() << '\n';
    for (int t = 0; t < mesh.num_triangles(); ++t)
        os << "5\n";

    std::vector<int> tag(mesh.num_nodes(), 0);
    for (const auto& e : mesh.boundary_edges())
        for (int v : e.nodes)
            if (e.part == BoundaryPart::gamma0)
                tag[v] = 1;
            else if (tag[v] == 0)
                tag[v] = 2;
    os << "POINT_DATA " << mesh.num_nodes() << "\nSCALARS boundary_tag int 1\nLOOKUP_TABLE default\n";
    for (int v : tag)
        os << v << '\n';
}

} // namespace cbfed
