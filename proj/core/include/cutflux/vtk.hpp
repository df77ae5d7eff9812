#pragma once

#include <string>
#include <vector>

#include "cutflux/mesh.hpp"

namespace cutflux {

/// Legacy ASCII VTK dump of a triangulation with named per-cell scalar and
/// vector fields.
struct VtkCellFields {
  std::vector<std::pair<std::string, std::vector<double>>> scalars;
  std::vector<std::pair<std::string, std::vector<Vec2>>> vectors;
};

void write_vtk(const std::string& path, const Mesh& mesh, const VtkCellFields& fields);

}  // namespace cutflux
