#pragma once

#include <array>
#include <functional>
#include <memory>
#include <vector>

#include "homstokes/mesh.hpp"

namespace homstokes {

enum class Rank { scalar, vector, tensor };
enum class Space { velocity, pressure, quadrature };

const char* rank_name(Rank r);
const char* space_name(Space s);

/// Components per rank in two dimensions. Tensor component (a, b) is stored at
/// index 2*a + b; for gradients of vector fields a is the vector component and
/// b the derivative direction.
inline int rank_components(Rank r) { return r == Rank::scalar ? 1 : (r == Rank::vector ? 2 : 4); }

/// Discrete field. Values are stored component-major: value(c, node) lives at
/// c * n_nodes() + node. Quadrature-space nodes are (element, point) pairs
/// numbered e * kQp + q.
class Field {
 public:
  Field() = default;
  Field(std::shared_ptr<const TriMesh> mesh, Rank rank, Space space);
  Field(std::shared_ptr<const TriMesh> mesh, Rank rank, Space space, std::vector<double> values);

  const TriMesh& mesh() const { return *mesh_; }
  const std::shared_ptr<const TriMesh>& mesh_ptr() const { return mesh_; }
  Rank rank() const { return rank_; }
  Space space() const { return space_; }
  int components() const { return rank_components(rank_); }
  std::size_t n_nodes() const { return n_nodes_; }

  double& at(int c, std::size_t node) { return values_[c * n_nodes_ + node]; }
  double at(int c, std::size_t node) const { return values_[c * n_nodes_ + node]; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

  /// Values of all components at quadrature point q of element e.
  void qp_value(std::size_t e, int q, double* out) const;
  /// Gradients of all components at a quadrature point; out[c][dir].
  /// Requires velocity or pressure space.
  void qp_gradient(std::size_t e, int q, double (*out)[2]) const;

  /// Point evaluation (values, optional gradients). Quadrature-space fields
  /// are read through the element-wise P2 polynomial matching their values.
  bool eval(Vec2 p, double* out, double (*grad)[2] = nullptr) const;
  /// Same inside a known element at barycentric coordinates (l1, l2).
  void eval_in(std::size_t e, double l1, double l2, double* out, double (*grad)[2] = nullptr) const;

  bool has_gradient() const { return space_ != Space::quadrature; }

 private:
  std::shared_ptr<const TriMesh> mesh_;
  Rank rank_ = Rank::scalar;
  Space space_ = Space::velocity;
  std::size_t n_nodes_ = 0;
  std::vector<double> values_;
};

std::size_t space_size(const TriMesh& mesh, Space space);

using PointFunction = std::function<void(Vec2, double*)>;

/// Nodal interpolation (velocity/pressure) or sampling at quadrature points.
Field interpolate(std::shared_ptr<const TriMesh> mesh, Rank rank, Space space, const PointFunction& f);

/// Values at all quadrature points, same layout as a quadrature-space field.
Field to_quadrature(const Field& f);

/// Gradient of a vector field as a quadrature-space tensor (row = component).
Field gradient_at_quadrature(const Field& f);

/// Derivatives d/dx and d/dy of the element-wise P2 polynomials through the
/// quadrature values, at the quadrature points.
std::array<Field, 2> quadrature_derivatives(const Field& f);

/// Same field on another mesh by evaluation at its nodes (exact for nested
/// meshes). Throws incompatible-mesh when a node falls outside the source.
Field transfer(const Field& f, std::shared_ptr<const TriMesh> target);

Field add(const Field& a, const Field& b, double scale_b = 1.0);
Field scaled(const Field& a, double s);
Field plus_constant(const Field& a, double c);

struct NormKind {
  enum class Kind { l2, lp, h1, l2_quotient, l2_layer_weighted };
  enum class Region { layer, co_layer };

  Kind kind = Kind::l2;
  double p = 2.0;
  double r = 0.0;
  int power = 1;
  Region region = Region::layer;

  static NormKind L2() { return {}; }
  static NormKind Lp(double p) { return {Kind::lp, p}; }
  static NormKind H1() { return {Kind::h1}; }
  static NormKind L2_quotient() { return {Kind::l2_quotient}; }
  static NormKind L2_layer_weighted(double r, int power, Region region) {
    return {Kind::l2_layer_weighted, 2.0, r, power, region};
  }
};

double norm(const Field& f, const NormKind& kind);

struct Region {
  enum class Kind { all, layer, co_layer };
  Kind kind = Kind::all;
  double r = 0.0;

  static Region all() { return {}; }
  static Region layer(double r) { return {Kind::layer, r}; }
  static Region co_layer(double r) { return {Kind::co_layer, r}; }
};

/// Integral of a scalar field; region membership by the distance at quadrature points.
double integrate(const Field& f, Region region = Region::all());

/// Mean of each component over the mesh.
std::vector<double> component_means(const Field& f);

/// Distance to the boundary, exact at nodes (velocity/pressure space) or at
/// quadrature points.
Field distance_field(const std::shared_ptr<const DomainMesh>& mesh, Space space = Space::velocity);

}  // namespace homstokes
