#include "homstokes/manufactured.hpp"

#include <cmath>
#include <numbers>

namespace homstokes {
namespace manufactured {

namespace {
constexpr double kPi = std::numbers::pi;
}

void velocity(Vec2 x, double* out) {
  double sx = std::sin(kPi * x.x), sy = std::sin(kPi * x.y);
  out[0] = kPi * sx * sx * std::sin(2 * kPi * x.y);
  out[1] = -kPi * std::sin(2 * kPi * x.x) * sy * sy;
}

void velocity_gradient(Vec2 x, double* out) {
  double sx = std::sin(kPi * x.x), sy = std::sin(kPi * x.y);
  double s2x = std::sin(2 * kPi * x.x), s2y = std::sin(2 * kPi * x.y);
  double p2 = kPi * kPi;
  out[0] = p2 * s2x * s2y;
  out[1] = 2 * p2 * sx * sx * std::cos(2 * kPi * x.y);
  out[2] = -2 * p2 * std::cos(2 * kPi * x.x) * sy * sy;
  out[3] = -p2 * s2x * s2y;
}

void pressure(Vec2 x, double* out) { out[0] = std::cos(kPi * x.x) * std::cos(kPi * x.y); }

void forcing(Vec2 x, double* out) {
  double p3 = kPi * kPi * kPi;
  double lap0 = 2 * p3 * std::sin(2 * kPi * x.y) * (2 * std::cos(2 * kPi * x.x) - 1);
  double lap1 = -2 * p3 * std::sin(2 * kPi * x.x) * (2 * std::cos(2 * kPi * x.y) - 1);
  out[0] = -lap0 - kPi * std::sin(kPi * x.x) * std::cos(kPi * x.y);
  out[1] = -lap1 - kPi * std::cos(kPi * x.x) * std::sin(kPi * x.y);
}

}  // namespace manufactured

double l2_error(const Field& f, const PointFunction& exact) {
  const TriMesh& m = f.mesh();
  int nc = f.components();
  double v[4], e[4], s = 0.0;
  for (std::size_t el = 0; el < m.n_elements(); ++el) {
    for (int q = 0; q < kQp; ++q) {
      f.qp_value(el, q, v);
      exact(m.qp_point(el, q), e);
      for (int c = 0; c < nc; ++c) s += m.qp_weight(el, q) * (v[c] - e[c]) * (v[c] - e[c]);
    }
  }
  return std::sqrt(s);
}

double h1_seminorm_error(const Field& f, const PointFunction& exact_gradient) {
  const TriMesh& m = f.mesh();
  int nc = f.components();
  double g[4][2], e[8], s = 0.0;
  for (std::size_t el = 0; el < m.n_elements(); ++el) {
    for (int q = 0; q < kQp; ++q) {
      f.qp_gradient(el, q, g);
      exact_gradient(m.qp_point(el, q), e);
      for (int c = 0; c < nc; ++c) {
        for (int b = 0; b < 2; ++b) {
          double d = g[c][b] - e[2 * c + b];
          s += m.qp_weight(el, q) * d * d;
        }
      }
    }
  }
  return std::sqrt(s);
}

double l2_quotient_error(const Field& f, const PointFunction& exact) {
  const TriMesh& m = f.mesh();
  double v[1], e[1], mean = 0.0, area = 0.0;
  for (std::size_t el = 0; el < m.n_elements(); ++el) {
    for (int q = 0; q < kQp; ++q) {
      f.qp_value(el, q, v);
      exact(m.qp_point(el, q), e);
      mean += m.qp_weight(el, q) * (v[0] - e[0]);
      area += m.qp_weight(el, q);
    }
  }
  mean /= area;
  double s = 0.0;
  for (std::size_t el = 0; el < m.n_elements(); ++el) {
    for (int q = 0; q < kQp; ++q) {
      f.qp_value(el, q, v);
      exact(m.qp_point(el, q), e);
      double d = v[0] - e[0] - mean;
      s += m.qp_weight(el, q) * d * d;
    }
  }
  return std::sqrt(s);
}

}  // namespace homstokes
