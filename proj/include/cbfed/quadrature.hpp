#pragma once

#include <array>
#include <vector>

namespace cbfed {

/// Quadrature on the reference triangle {(x,y): x,y >= 0, x+y <= 1}, stored
/// in barycentric coordinates. Weights sum to 1/2, the reference area.
struct TriangleQuadrature {
    std::vector<std::array<double, 3>> points;
    std::vector<double> weights;
    int degree = 0;
    int size() const { return static_cast<int>(weights.size()); }
};

/// Quadrature on the reference segment [0,1]; weights sum to 1.
struct EdgeQuadrature {
    std::vector<double> points;
    std::vector<double> weights;
    int degree = 0;
    int size() const { return static_cast<int>(weights.size()); }
};

/// 16-point symmetric rule, exact for total degree 8.
const TriangleQuadrature& triangle_rule_degree8();

/// 5-point Gauss-Legendre rule, exact for degree 9.
const EdgeQuadrature& edge_rule_degree9();

} // namespace cbfed
