#pragma once

#include <array>

namespace homstokes {

/// Points of the degree-4 symmetric triangle rule.
constexpr int kQp = 6;

struct ReferenceTables {
  /// Barycentric coordinates of the quadrature points.
  std::array<std::array<double, 3>, kQp> bary{};
  /// Weights summing to 1; multiply by the element area.
  std::array<double, kQp> w{};
  /// P2 basis values at quadrature points, [q][a].
  std::array<std::array<double, 6>, kQp> p2{};
  /// P2 reference gradients (d/dxi, d/deta), [q][a][c].
  std::array<std::array<std::array<double, 2>, 6>, kQp> dp2{};
  /// P1 basis values at quadrature points.
  std::array<std::array<double, 3>, kQp> p1{};
  /// P1 reference gradients (constant).
  std::array<std::array<double, 2>, 3> dp1{};
  /// Inverse of the 6x6 matrix of P2 basis values at the quadrature points:
  /// maps quadrature values to the P2 polynomial through them.
  std::array<std::array<double, 6>, 6> qp_to_p2{};
};

const ReferenceTables& reference_tables();

/// P2 basis at barycentric point (l0, l1, l2). Local order: vertices 0..2,
/// then edge nodes (0,1), (1,2), (2,0).
void p2_values(double l1, double l2, double out[6]);
void p2_ref_gradients(double l1, double l2, double out[6][2]);

}  // namespace homstokes
