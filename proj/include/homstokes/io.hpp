#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "homstokes/field.hpp"

namespace homstokes {

/// Legacy ASCII VTK of the P1 triangulation. Velocity and pressure fields are
/// written as point data at the P1 vertices, quadrature fields as cell data
/// (element means). Throws io-error.
void write_vtk(const std::string& path, const TriMesh& mesh,
               const std::vector<std::pair<std::string, const Field*>>& fields);

/// Element count, dof counts, h, measure and, for domain meshes, inradius and facets.
nlohmann::json mesh_stats(const TriMesh& mesh);

/// Writes text to path, creating parent directories. Throws io-error.
void write_text_file(const std::string& path, const std::string& text);

}  // namespace homstokes
