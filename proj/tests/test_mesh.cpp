#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "homstokes/error.hpp"
#include "homstokes/field.hpp"
#include "homstokes/mesh.hpp"
#include "homstokes/stokes.hpp"

using namespace homstokes;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::invalid_config;
}

double brute_distance(const std::vector<Vec2>& poly, Vec2 p) {
  double d = 1e300;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    Vec2 a = poly[i], b = poly[(i + 1) % poly.size()];
    // dense sampling of the segment plus both endpoints
    for (int k = 0; k <= 20000; ++k) {
      double t = k / 20000.0;
      d = std::min(d, length(a + (b - a) * t - p));
    }
  }
  return d;
}

}  // namespace

TEST(CellMesh, CountsAndPeriodicIdentification) {
  auto m = build_cell_mesh(2, 4);
  EXPECT_EQ(m->n_cells, 16u);
  EXPECT_EQ(m->n_elements(), 32u);
  // torus: n^2 vertices, 3 n^2 edges
  EXPECT_EQ(m->n_p1, 16);
  EXPECT_EQ(m->n_p2, 16 + 48);
  EXPECT_TRUE(m->periodic);
}

TEST(CellMesh, UnitMeasure) {
  EXPECT_NEAR(build_cell_mesh(2, 2)->measure(), 1.0, 1e-14);
  auto m3 = build_cell_mesh(3, 3);
  EXPECT_EQ(m3->n_cells, 27u);
  EXPECT_NEAR(m3->simplex_measure_sum, 1.0, 1e-14);
}

TEST(CellMesh, RejectsDegenerateResolution) {
  EXPECT_EQ(code_of([] { build_cell_mesh(2, 1); }), ErrorCode::invalid_resolution);
  EXPECT_EQ(code_of([] { build_cell_mesh(4, 8); }), ErrorCode::invalid_resolution);
}

TEST(DomainMesh, UnitSquareArea) {
  auto m = build_domain_mesh(DomainSpec::unit_square(), 0.25);
  double s = 0;
  for (double a : m->area) {
    EXPECT_GT(a, 0.0);
    s += a;
  }
  EXPECT_NEAR(s, 1.0, 1e-12);
  EXPECT_LE(m->max_diameter(), 2 * 0.25);
}

TEST(DomainMesh, LShapeArea) {
  DomainSpec l{"custom", {{0, 0}, {1, 0}, {1, 0.5}, {0.5, 0.5}, {0.5, 1}, {0, 1}}};
  auto m = build_domain_mesh(l, 1.0 / 8);
  EXPECT_NEAR(m->measure(), 0.75, 1e-12);
  auto preset = build_domain_mesh(DomainSpec::l_shape(), 1.0 / 8);
  EXPECT_NEAR(preset->measure(), 0.75, 1e-12);
}

TEST(DomainMesh, BoundaryFacetsTileTheBoundary) {
  auto m = build_domain_mesh(DomainSpec::l_shape(), 1.0 / 16);
  double perimeter = 0;
  for (const auto& f : m->facets) perimeter += f.length;
  EXPECT_NEAR(perimeter, 4.0, 1e-12);
}

TEST(DomainMesh, RejectsBadInput) {
  EXPECT_EQ(code_of([] { build_domain_mesh(DomainSpec::unit_square(), 2.0); }), ErrorCode::invalid_resolution);
  DomainSpec bowtie{"bowtie", {{0, 0}, {1, 1}, {1, 0}, {0, 1}}};
  EXPECT_EQ(code_of([&] { build_domain_mesh(bowtie, 0.1); }), ErrorCode::invalid_domain);
}

TEST(Distance, Examples) {
  auto sq = build_domain_mesh(DomainSpec::unit_square(), 0.25);
  EXPECT_DOUBLE_EQ(sq->delta({0.5, 0.5}), 0.5);
  EXPECT_DOUBLE_EQ(sq->delta({0.0, 0.3}), 0.0);
  auto l = DomainSpec::l_shape();
  EXPECT_NEAR(polygon_boundary_distance(l.vertices, {0.6, 0.6}), brute_distance(l.vertices, {0.6, 0.6}), 1e-4);
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(0, 1);
  for (int k = 0; k < 30; ++k) {
    Vec2 p{u(rng), u(rng)};
    EXPECT_NEAR(polygon_boundary_distance(l.vertices, p), brute_distance(l.vertices, p), 1e-4);
  }
}

TEST(Distance, ZeroOnBoundaryDofsAndLipschitz) {
  auto m = build_domain_mesh(DomainSpec::l_shape(), 1.0 / 16);
  Field d = distance_field(m, Space::velocity);
  for (int n : m->boundary_p2) EXPECT_EQ(d.at(0, n), 0.0);
  std::mt19937 rng(3);
  std::uniform_int_distribution<std::size_t> pick(0, m->n_qp() - 1);
  for (int k = 0; k < 2000; ++k) {
    std::size_t a = pick(rng), b = pick(rng);
    Vec2 pa = m->qp_point(a / kQp, a % kQp), pb = m->qp_point(b / kQp, b % kQp);
    EXPECT_LE(std::abs(m->qp_delta[a] - m->qp_delta[b]), length(pa - pb) + 1e-14);
  }
}

TEST(Norms, Examples) {
  auto m = build_domain_mesh(DomainSpec::unit_square(), 1.0 / 16);
  Field one = interpolate(m, Rank::scalar, Space::velocity, [](Vec2, double* o) { o[0] = 1.0; });
  EXPECT_NEAR(norm(one, NormKind::L2()), 1.0, 1e-12);
  Field seven = interpolate(m, Rank::scalar, Space::pressure, [](Vec2, double* o) { o[0] = 7.0; });
  EXPECT_NEAR(norm(seven, NormKind::L2_quotient()), 0.0, 1e-12);
  // sin(pi x) sin(pi y) sampled at quadrature points: the rule is exact to
  // degree 4, so the remaining error is the quadrature error of sin^2
  Field s = interpolate(m, Rank::scalar, Space::quadrature, [](Vec2 p, double* o) {
    o[0] = std::sin(std::numbers::pi * p.x) * std::sin(std::numbers::pi * p.y);
  });
  EXPECT_NEAR(norm(s, NormKind::L2()), 0.5, 1e-8);
}

TEST(Norms, TypeMismatch) {
  auto m = build_domain_mesh(DomainSpec::unit_square(), 0.25);
  Field q(m, Rank::vector, Space::quadrature);
  EXPECT_EQ(code_of([&] { norm(q, NormKind::H1()); }), ErrorCode::type_mismatch);
}

TEST(Integrate, Regions) {
  auto m = build_domain_mesh(DomainSpec::unit_square(), 1.0 / 32);
  Field one = interpolate(m, Rank::scalar, Space::quadrature, [](Vec2, double* o) { o[0] = 1.0; });
  EXPECT_NEAR(integrate(one), 1.0, 1e-12);
  // region membership by quadrature point: exact when 0.25 falls on lattice lines
  EXPECT_NEAR(integrate(one, Region::co_layer(0.25)), 0.25, 1e-12);
  EXPECT_NEAR(integrate(one, Region::layer(0.25)), 0.75, 1e-12);
}

TEST(NormProperties, QuotientShiftSquareAndSplit) {
  auto m = build_domain_mesh(DomainSpec::l_shape(), 1.0 / 16);
  std::mt19937 rng(11);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 5; ++trial) {
    Field f(m, Rank::scalar, Space::velocity);
    for (auto& v : f.values()) v = g(rng);
    double c = 10 * g(rng);
    EXPECT_NEAR(norm(plus_constant(f, c), NormKind::L2_quotient()), norm(f, NormKind::L2_quotient()), 1e-12);

    Field fq = to_quadrature(f);
    Field sq = fq;
    for (auto& v : sq.values()) v *= v;
    double n2 = norm(f, NormKind::L2());
    EXPECT_NEAR(n2 * n2, integrate(sq), 1e-12);
    double r = 0.05 + 0.04 * trial;
    EXPECT_NEAR(integrate(fq, Region::layer(r)) + integrate(fq, Region::co_layer(r)), integrate(fq), 1e-12);
  }
}

TEST(NormProperties, WeightedLayerNorms) {
  auto m = build_domain_mesh(DomainSpec::unit_square(), 1.0 / 32);
  Field one = interpolate(m, Rank::scalar, Space::quadrature, [](Vec2, double* o) { o[0] = 1.0; });
  // co-layer Sigma_r with weight delta: integral of delta over [r, 1-r]^2 computed by the same quadrature
  double r = 0.25, ref = 0;
  for (std::size_t t = 0; t < m->n_qp(); ++t)
    if (m->qp_delta[t] > r) ref += m->qp_w[t] * m->qp_delta[t];
  EXPECT_NEAR(norm(one, NormKind::L2_layer_weighted(r, 1, NormKind::Region::co_layer)), std::sqrt(ref), 1e-12);
  EXPECT_THROW(norm(one, NormKind::L2_layer_weighted(0.7, 1, NormKind::Region::layer)), Error);
}

TEST(InfSup, StableUnderRefinement) {
  double b8 = inf_sup_constant(build_domain_mesh(DomainSpec::unit_square(), 1.0 / 8));
  double b16 = inf_sup_constant(build_domain_mesh(DomainSpec::unit_square(), 1.0 / 16));
  double b32 = inf_sup_constant(build_domain_mesh(DomainSpec::unit_square(), 1.0 / 32));
  EXPECT_GT(b8, 0.1);
  EXPECT_LT(std::max({b8, b16, b32}) / std::min({b8, b16, b32}), 1.2);
}

TEST(Transfer, ExactOnNestedLattices) {
  auto coarse = build_domain_mesh(DomainSpec::unit_square(), 1.0 / 8);
  auto fine = build_domain_mesh(DomainSpec::unit_square(), 1.0 / 16);
  Field f = interpolate(coarse, Rank::vector, Space::velocity, [](Vec2 p, double* o) {
    o[0] = std::sin(3 * p.x) * p.y;
    o[1] = std::exp(p.x - p.y);
  });
  Field g = transfer(f, fine);
  for (int k = 0; k < 50; ++k) {
    Vec2 p{0.013 + 0.019 * k, 0.97 - 0.018 * k};
    double a[2], b[2];
    ASSERT_TRUE(f.eval(p, a));
    ASSERT_TRUE(g.eval(p, b));
    EXPECT_NEAR(a[0], b[0], 1e-13);
    EXPECT_NEAR(a[1], b[1], 1e-13);
  }
}
