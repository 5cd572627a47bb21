#pragma once

#include <iosfwd>

#include "cbfed/fem.hpp"

namespace cbfed {

/// Legacy ASCII VTK dump of a solution: point-data vectors u and f and the
/// scalar p at the mesh vertices. P2 midpoint values are not written.
void write_solution_vtk(const FeSpace& space, const Vector& u, const Vector& p, const Vector& f, std::ostream& os);

} // namespace cbfed
