#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "homstokes/geometry.hpp"
#include "homstokes/quadrature.hpp"

namespace homstokes {

/// Square lattice metadata. Each active square (i, j) holds two triangles:
/// lower (x0,y0),(x0+s,y0),(x0+s,y0+s) and upper (x0,y0),(x0+s,y0+s),(x0,y0+s).
struct LatticeInfo {
  int nx = 0;
  int ny = 0;
  double s = 0.0;
  Vec2 origin;
  bool periodic = false;
  /// Index of the lower triangle of square i + nx*j, or -1 when inactive.
  std::vector<int> square_elem;
};

/// Triangle mesh carrying P2 (velocity) and P1 (pressure) scalar dof maps.
/// Element corner coordinates are stored unwrapped, so periodic meshes keep
/// positive-area geometry while their dofs are identified across the cell.
class TriMesh {
 public:
  virtual ~TriMesh() = default;

  std::size_t n_elements() const { return corners.size(); }
  std::size_t n_qp() const { return corners.size() * kQp; }

  Vec2 qp_point(std::size_t e, int q) const;
  double qp_weight(std::size_t e, int q) const;

  /// Physical gradients of the six P2 basis functions at quadrature point q.
  void p2_gradients(std::size_t e, int q, double out[6][2]) const;
  /// Physical gradients of the three P1 basis functions (constant).
  void p1_gradients(std::size_t e, double out[3][2]) const;

  /// Finds the element containing p. For periodic meshes p is wrapped into
  /// the cell first. Returns false when p lies outside the mesh.
  bool locate(Vec2 p, std::size_t& elem, double& l1, double& l2) const;

  double measure() const;
  double max_diameter() const;
  /// Characteristic element size: max diameter / sqrt(2), the square side on lattices.
  double h_char() const { return max_diameter() / std::sqrt(2.0); }

  std::vector<std::array<Vec2, 3>> corners;
  std::vector<std::array<int, 3>> p1_dofs;
  std::vector<std::array<int, 6>> p2_dofs;
  int n_p1 = 0;
  int n_p2 = 0;
  std::vector<Vec2> p1_points;
  std::vector<Vec2> p2_points;
  std::vector<double> area;
  /// Inverse transpose of the element Jacobian, row-major.
  std::vector<std::array<double, 4>> jinvt;
  /// Quadrature weights of all points, numbered e * kQp + q.
  std::vector<double> qp_w;
  bool periodic = false;
  std::optional<LatticeInfo> lattice;

  /// Computes areas and inverse Jacobians; builds the point-location index.
  void finalize_geometry();

 private:
  int bucket_nx_ = 0;
  int bucket_ny_ = 0;
  Vec2 bucket_lo_;
  double bucket_size_ = 0.0;
  std::vector<std::vector<int>> buckets_;
};

/// Periodic mesh of the unit torus with n cells per axis.
/// For d = 2 the triangle tables are populated; for d = 3 only the torus
/// vertex identification and tetrahedral measure are built (no solvers).
class UnitCellMesh : public TriMesh {
 public:
  int d = 2;
  int n = 0;
  std::size_t n_cells = 0;
  std::size_t n_torus_vertices = 0;
  std::size_t n_simplices = 0;
  double simplex_measure_sum = 0.0;
};

struct DomainSpec {
  std::string name;
  std::vector<Vec2> vertices;

  static DomainSpec unit_square();
  static DomainSpec l_shape();
  static DomainSpec from_preset(const std::string& name);
};

struct BoundaryFacet {
  std::size_t elem = 0;
  /// P2 dofs of the endpoints and the midpoint.
  std::array<int, 3> p2{};
  Vec2 a;
  Vec2 b;
  Vec2 normal;
  double length = 0.0;
};

class DomainMesh : public TriMesh {
 public:
  DomainSpec spec;
  double h_target = 0.0;
  std::vector<BoundaryFacet> facets;
  std::vector<char> p2_on_boundary;
  std::vector<int> boundary_p2;
  /// Exact distance to the boundary at every quadrature point.
  std::vector<double> qp_delta;
  double inradius = 0.0;
  double diameter = 0.0;

  double delta(Vec2 p) const { return polygon_boundary_distance(spec.vertices, p); }
};

std::shared_ptr<const UnitCellMesh> build_cell_mesh(int d, int n);
std::shared_ptr<const DomainMesh> build_domain_mesh(const DomainSpec& spec, double h);

}  // namespace homstokes
