#include "cbfed/io.hpp"

#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace cbfed {

namespace {

void put(std::ostream& os, const char* fmt, double a, double b, double c)
{
    char buf[96];
    std::snprintf(buf, sizeof buf, fmt, a, b, c);
    os << buf;
}

} // namespace

void write_solution_vtk(const FeSpace& space, const Vector& u, const Vector& p, const Vector& f, std::ostream& os)
{
    const TriMesh& mesh = space.mesh();
    const int nn = mesh.num_nodes();
    if (u.size() != space.num_velocity_dofs() || p.size() != space.num_pressure_dofs() ||
        f.size() != space.num_control_dofs())
        throw std::invalid_argument("field sizes do not match the space");

    os << "# vtk DataFile Version 3.0\ncbfed solution\nASCII\nDATASET UNSTRUCTURED_GRID\n";
    os << "POINTS " << nn << " double\n";
    for (const Point& x : mesh.nodes())
        put(os, "%.10g %.10g %.10g\n", x.x(), x.y(), 0.0);
    os << "CELLS " << mesh.num_triangles() << ' ' << 4 * mesh.num_triangles() << '\n';
    for (const auto& t : mesh.triangles())
        os << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
    os << "CELL_TYPES " << mesh.num_triangles() << '\n';
    for (int t = 0; t < mesh.num_triangles(); ++t)
        os << "5\n";
    os << "POINT_DATA " << nn << "\nVECTORS u double\n";
    for (int i = 0; i < nn; ++i)
        put(os, "%.10e %.10e %.10e\n", u[space.velocity_dof(i, 0)], u[space.velocity_dof(i, 1)], 0.0);
    os << "VECTORS f double\n";
    for (int i = 0; i < nn; ++i)
        put(os, "%.10e %.10e %.10e\n", f[space.control_dof(i, 0)], f[space.control_dof(i, 1)], 0.0);
    os << "SCALARS p double 1\nLOOKUP_TABLE default\n";
    char buf[32];
    for (int i = 0; i < nn; ++i) {
        std::snprintf(buf, sizeof buf, "%.10e\n", p[i]);
        os << buf;
    }
}

} // namespace cbfed
