#include "cutflux/vtk.hpp"

#include <fstream>
#include <stdexcept>

namespace cutflux {

void write_vtk(const std::string& path, const Mesh& mesh, const VtkCellFields& fields) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_vtk: cannot open " + path);
  out.precision(12);

  out << "# vtk DataFile Version 3.0\n";
  out << "cutflux\n";
  out << "ASCII\n";
  out << "DATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << mesh.n_vertices() << " double\n";
  for (const Vec2& p : mesh.vertices) out << p.x() << " " << p.y() << " 0\n";

  out << "CELLS " << mesh.n_cells() << " " << 4 * mesh.n_cells() << "\n";
  for (const auto& c : mesh.cells) out << "3 " << c[0] << " " << c[1] << " " << c[2] << "\n";
  out << "CELL_TYPES " << mesh.n_cells() << "\n";
  for (int c = 0; c < mesh.n_cells(); ++c) out << "5\n";

  if (fields.scalars.empty() && fields.vectors.empty()) return;
  out << "CELL_DATA " << mesh.n_cells() << "\n";
  for (const auto& [name, values] : fields.scalars) {
    out << "SCALARS " << name << " double 1\n";
    out << "LOOKUP_TABLE default\n";
    for (double v : values) out << v << "\n";
  }
  for (const auto& [name, values] : fields.vectors) {
    out << "VECTORS " << name << " double\n";
    for (const Vec2& v : values) out << v.x() << " " << v.y() << " 0\n";
  }
}

}  // namespace cutflux
