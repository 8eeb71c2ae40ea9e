#include "homstokes/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "homstokes/error.hpp"

namespace homstokes {

void write_text_file(const std::string& path, const std::string& text) {
  std::filesystem::path p(path);
  std::error_code ec;
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io_error, "cannot write '" + path + "'");
  out << text;
  out.flush();
  if (!out) throw Error(ErrorCode::io_error, "write to '" + path + "' failed");
}

void write_vtk(const std::string& path, const TriMesh& mesh,
               const std::vector<std::pair<std::string, const Field*>>& fields) {
  const std::size_t ne = mesh.n_elements();
  std::ostringstream os;
  os.precision(12);
  os << "# vtk DataFile Version 3.0\nhomstokes\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  // Periodic meshes identify dofs across the cell; write unwrapped corners per element instead.
  const bool shared = !mesh.periodic;
  const std::size_t np = shared ? static_cast<std::size_t>(mesh.n_p1) : 3 * ne;
  os << "POINTS " << np << " double\n";
  if (shared) {
    for (const auto& p : mesh.p1_points) os << p.x << ' ' << p.y << " 0\n";
  } else {
    for (const auto& c : mesh.corners)
      for (const auto& p : c) os << p.x << ' ' << p.y << " 0\n";
  }
  os << "CELLS " << ne << ' ' << 4 * ne << '\n';
  for (std::size_t e = 0; e < ne; ++e) {
    if (shared) {
      const auto& d = mesh.p1_dofs[e];
      os << "3 " << d[0] << ' ' << d[1] << ' ' << d[2] << '\n';
    } else {
      os << "3 " << 3 * e << ' ' << 3 * e + 1 << ' ' << 3 * e + 2 << '\n';
    }
  }
  os << "CELL_TYPES " << ne << '\n';
  for (std::size_t e = 0; e < ne; ++e) os << "5\n";

  auto emit = [&](const std::string& name, int nc, const std::function<double(std::size_t, int)>& value,
                  std::size_t n) {
    if (nc == 1) {
      os << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
      for (std::size_t i = 0; i < n; ++i) os << value(i, 0) << '\n';
    } else if (nc == 2) {
      os << "VECTORS " << name << " double\n";
      for (std::size_t i = 0; i < n; ++i) os << value(i, 0) << ' ' << value(i, 1) << " 0\n";
    } else {
      os << "TENSORS " << name << " double\n";
      for (std::size_t i = 0; i < n; ++i)
        os << value(i, 0) << ' ' << value(i, 1) << " 0\n" << value(i, 2) << ' ' << value(i, 3) << " 0\n0 0 0\n";
    }
  };

  bool point_header = false, cell_header = false;
  for (const auto& [name, f] : fields) {
    if (f->mesh_ptr().get() != &mesh) throw Error(ErrorCode::incompatible_mesh, "field '" + name + "' is on another mesh");
    if (f->space() == Space::quadrature) continue;
    if (!point_header) {
      os << "POINT_DATA " << np << '\n';
      point_header = true;
    }
    const Field& g = *f;
    if (shared) {
      // vertex value: the P2 vertex dof or the P1 dof
      std::vector<int> vmap(mesh.n_p1, 0);
      for (std::size_t e = 0; e < ne; ++e)
        for (int a = 0; a < 3; ++a) vmap[mesh.p1_dofs[e][a]] = g.space() == Space::velocity ? mesh.p2_dofs[e][a] : mesh.p1_dofs[e][a];
      emit(name, g.components(), [&](std::size_t i, int c) { return g.at(c, vmap[i]); }, np);
    } else {
      emit(name, g.components(),
           [&](std::size_t i, int c) {
             std::size_t e = i / 3;
             int a = static_cast<int>(i % 3);
             int dof = g.space() == Space::velocity ? mesh.p2_dofs[e][a] : mesh.p1_dofs[e][a];
             return g.at(c, dof);
           },
           np);
    }
  }
  for (const auto& [name, f] : fields) {
    if (f->space() != Space::quadrature) continue;
    if (!cell_header) {
      os << "CELL_DATA " << ne << '\n';
      cell_header = true;
    }
    const Field& g = *f;
    emit(name, g.components(),
         [&](std::size_t e, int c) {
           double s = 0.0, w = 0.0;
           for (int q = 0; q < kQp; ++q) {
             s += mesh.qp_w[e * kQp + q] * g.at(c, e * kQp + q);
             w += mesh.qp_w[e * kQp + q];
           }
           return s / w;
         },
         ne);
  }
  write_text_file(path, os.str());
}

nlohmann::json mesh_stats(const TriMesh& mesh) {
  nlohmann::json j;
  j["elements"] = mesh.n_elements();
  j["velocity_nodes"] = mesh.n_p2;
  j["pressure_nodes"] = mesh.n_p1;
  j["quadrature_points"] = mesh.n_qp();
  j["h_char"] = mesh.h_char();
  j["measure"] = mesh.measure();
  j["periodic"] = mesh.periodic;
  j["lattice"] = mesh.lattice.has_value();
  if (const auto* dm = dynamic_cast<const DomainMesh*>(&mesh)) {
    j["domain"] = dm->spec.name;
    j["inradius"] = dm->inradius;
    j["diameter"] = dm->diameter;
    j["boundary_facets"] = dm->facets.size();
  }
  return j;
}

}  // namespace homstokes
