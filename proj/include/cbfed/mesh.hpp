#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <vector>

#include <Eigen/Core>

namespace cbfed {

using Point = Eigen::Vector2d;

/// Boundary parts of the unit square: Gamma1 is the slip boundary (top
/// side y = 1), Gamma0 carries the no-slip condition.
enum class BoundaryPart { gamma0, gamma1 };

struct BoundaryEdge {
    std::array<int, 2> nodes;
    BoundaryPart part;
};

/// Result of locating a point: the containing triangle and the barycentric
/// coordinates with respect to its three vertices.
struct PointLocation {
    int triangle;
    std::array<double, 3> barycentric;
};

/// Structured triangulation of the unit square. Each of the n x n grid cells
/// is split along the diagonal from its lower-left to its upper-right corner.
/// Nodes are numbered row-major from (0,0); all triangles are counterclockwise.
class TriMesh {
public:
    TriMesh() = default;

    int subdivisions() const { return n_; }
    int num_nodes() const { return static_cast<int>(nodes_.size()); }
    int num_triangles() const { return static_cast<int>(triangles_.size()); }

    const std::vector<Point>& nodes() const { return nodes_; }
    const std::vector<std::array<int, 3>>& triangles() const { return triangles_; }
    const std::vector<BoundaryEdge>& boundary_edges() const { return boundary_edges_; }

    const Point& node(int i) const { return nodes_[i]; }
    const std::array<int, 3>& triangle(int t) const { return triangles_[t]; }

    /// Signed area (positive for counterclockwise triangles).
    double signed_area(int t) const;

    /// Locates a point of the closed unit square in O(1) using the grid
    /// structure. Returns nullopt for points outside [0,1]^2.
    std::optional<PointLocation> locate(const Point& x) const;

    friend TriMesh build_unit_square(int n);

private:
    int n_ = 0;
    std::vector<Point> nodes_;
    std::vector<std::array<int, 3>> triangles_;
    std::vector<BoundaryEdge> boundary_edges_;
};

/// Builds the (n+1)^2-node, 2n^2-triangle mesh of (0,1)^2. Throws
/// std::invalid_argument for n < 1.
TriMesh build_unit_square(int n);

/// Maximum edge length; equals sqrt(2)/n for this triangulation.
double mesh_size(const TriMesh& mesh);

/// Legacy ASCII VTK (UNSTRUCTURED_GRID) dump of the bare mesh with the
/// boundary tag of each node as point data (0 interior, 1 Gamma0, 2 Gamma1).
void write_mesh_vtk(const TriMesh& mesh, std::ostream& os);

} // namespace cbfed
