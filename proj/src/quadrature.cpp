#include "homstokes/quadrature.hpp"

#include <Eigen/Dense>

namespace homstokes {

void p2_values(double l1, double l2, double out[6]) {
  double l0 = 1.0 - l1 - l2;
  out[0] = l0 * (2.0 * l0 - 1.0);
  out[1] = l1 * (2.0 * l1 - 1.0);
  out[2] = l2 * (2.0 * l2 - 1.0);
  out[3] = 4.0 * l0 * l1;
  out[4] = 4.0 * l1 * l2;
  out[5] = 4.0 * l2 * l0;
}

void p2_ref_gradients(double l1, double l2, double out[6][2]) {
  double l0 = 1.0 - l1 - l2;
  const double g0[2] = {-1.0, -1.0}, g1[2] = {1.0, 0.0}, g2[2] = {0.0, 1.0};
  for (int c = 0; c < 2; ++c) {
    out[0][c] = (4.0 * l0 - 1.0) * g0[c];
    out[1][c] = (4.0 * l1 - 1.0) * g1[c];
    out[2][c] = (4.0 * l2 - 1.0) * g2[c];
    out[3][c] = 4.0 * (l1 * g0[c] + l0 * g1[c]);
    out[4][c] = 4.0 * (l2 * g1[c] + l1 * g2[c]);
    out[5][c] = 4.0 * (l0 * g2[c] + l2 * g0[c]);
  }
}

namespace {

ReferenceTables build_tables() {
  ReferenceTables t;
  const double a1 = 0.445948490915965, b1 = 0.108103018168070, w1 = 0.223381589678011;
  const double a2 = 0.091576213509771, b2 = 0.816847572980459, w2 = 0.109951743655322;
  t.bary = {{{b1, a1, a1}, {a1, b1, a1}, {a1, a1, b1}, {b2, a2, a2}, {a2, b2, a2}, {a2, a2, b2}}};
  double wsum = 3.0 * (w1 + w2);
  for (int q = 0; q < 3; ++q) t.w[q] = w1 / wsum;
  for (int q = 3; q < 6; ++q) t.w[q] = w2 / wsum;

  Eigen::Matrix<double, 6, 6> v;
  for (int q = 0; q < kQp; ++q) {
    double l1 = t.bary[q][1], l2 = t.bary[q][2];
    double vals[6], grads[6][2];
    p2_values(l1, l2, vals);
    p2_ref_gradients(l1, l2, grads);
    for (int a = 0; a < 6; ++a) {
      t.p2[q][a] = vals[a];
      t.dp2[q][a] = {grads[a][0], grads[a][1]};
      v(q, a) = vals[a];
    }
    t.p1[q] = {t.bary[q][0], l1, l2};
  }
  t.dp1 = {{{-1.0, -1.0}, {1.0, 0.0}, {0.0, 1.0}}};
  Eigen::Matrix<double, 6, 6> inv = v.inverse();
  for (int a = 0; a < 6; ++a) {
    for (int q = 0; q < 6; ++q) t.qp_to_p2[a][q] = inv(a, q);
  }
  return t;
}

}  // namespace

const ReferenceTables& reference_tables() {
  static const ReferenceTables tables = build_tables();
  return tables;
}

}  // namespace homstokes
