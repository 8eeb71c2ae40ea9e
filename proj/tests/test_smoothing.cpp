#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "homstokes/cellsolve.hpp"
#include "homstokes/error.hpp"
#include "homstokes/smoothing.hpp"
#include "oracles.hpp"

using namespace homstokes;

namespace {

constexpr double kPi = std::numbers::pi;

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::invalid_config;
}

using oracle::integrate_1d;
using oracle::kernel_multiplier;
using oracle::profile;

Field sin_field(std::shared_ptr<const TriMesh> m) {
  return interpolate(m, Rank::scalar, Space::quadrature, [](Vec2 p, double* o) { o[0] = std::sin(2 * kPi * p.x); });
}

}  // namespace

TEST(Mollifier, ConstantMatchesClosedForm) {
  // int_0^1 exp(-1/s) ds = e^-1 - E1(1)
  double closed = oracle::kernel_constant();
  EXPECT_NEAR(Mollifier::unit_constant(), closed, 1e-12 * closed);
}

TEST(Mollifier, UnitMassSupportAndSign) {
  double c = oracle::kernel_constant();
  double mass = 2 * kPi * c * integrate_1d(0.0, 0.5, 64, 16, [](double r) { return profile(r) * r; });
  EXPECT_NEAR(mass, 1.0, 1e-10);
  EXPECT_EQ(Mollifier::unit({0.5, 0.0}), 0.0);
  EXPECT_EQ(Mollifier::unit({0.4, 0.4}), 0.0);
  EXPECT_GT(Mollifier::unit({0.49, 0.0}), 0.0);
  for (int i = 0; i < 100; ++i) EXPECT_GE(Mollifier::unit({0.01 * i - 0.5, 0.003 * i}), 0.0);
  Mollifier m(0.25);
  EXPECT_DOUBLE_EQ(m.support_radius(), 0.125);
  EXPECT_NEAR(m({0.05, 0.02}), Mollifier::unit({0.2, 0.08}) / (0.25 * 0.25), 1e-12);
  // gradient by central differences
  Vec2 d{0.03, -0.05};
  Vec2 g = m.gradient(d);
  double h = 1e-6;
  EXPECT_NEAR(g.x, (m(d + Vec2{h, 0}) - m(d - Vec2{h, 0})) / (2 * h), 1e-5 * std::abs(g.x) + 1e-6);
  EXPECT_NEAR(g.y, (m(d + Vec2{0, h}) - m(d - Vec2{0, h})) / (2 * h), 1e-5 * std::abs(g.y) + 1e-6);
}

TEST(Mollifier, RejectsNonPositiveRadius) {
  EXPECT_EQ(code_of([] { Mollifier m(0.0); }), ErrorCode::invalid_radius);
  auto mesh = build_domain_mesh(DomainSpec::unit_square(), 0.125);
  Field f(mesh, Rank::scalar, Space::quadrature);
  EXPECT_EQ(code_of([&] { smooth(f, -0.1); }), ErrorCode::invalid_radius);
}

TEST(Smooth, ConstantOnTorusStaysConstant) {
  auto cell = build_cell_mesh(2, 32);
  Field one = interpolate(cell, Rank::scalar, Space::quadrature, [](Vec2, double* o) { o[0] = 1.0; });
  for (double eps : {0.5, 0.25, 0.1}) {
    Field s = smooth(one, eps);
    for (double v : s.values()) EXPECT_NEAR(v, 1.0, 1e-8);
  }
  auto sq = build_domain_mesh(DomainSpec::unit_square(), 1.0 / 32);
  Field one_sq = interpolate(sq, Rank::scalar, Space::quadrature, [](Vec2, double* o) { o[0] = 1.0; });
  Field s = smooth(one_sq, 0.25, {Extension::periodic, true});
  for (double v : s.values()) EXPECT_NEAR(v, 1.0, 1e-8);
}

TEST(Smooth, ReproducesLinearFunctionsInside) {
  auto m = build_domain_mesh(DomainSpec::unit_square(), 1.0 / 64);
  Field f = interpolate(m, Rank::scalar, Space::velocity, [](Vec2 p, double* o) { o[0] = p.x; });
  const double eps = 0.125;
  Field s = smooth(f, eps);
  for (std::size_t t = 0; t < m->n_qp(); ++t)
    if (m->qp_delta[t] > 0.5 * eps) EXPECT_NEAR(s.at(0, t), m->qp_point(t / kQp, t % kQp).x, 1e-8);
}

TEST(Smooth, MatchesBruteForceConvolution) {
  auto m = build_domain_mesh(DomainSpec::unit_square(), 1.0 / 128);
  const double eps = 0.125;
  Field s = smooth(sin_field(m), eps);
  Mollifier k(eps);
  std::mt19937 rng(2024);
  std::uniform_int_distribution<std::size_t> pick(0, m->n_qp() - 1);
  for (int trial = 0; trial < 20; ++trial) {
    std::size_t t = pick(rng);
    Vec2 x = m->qp_point(t / kQp, t % kQp);
    double ref = oracle::convolve_unit_square(eps, x.x, x.y, [](double a, double) { return std::sin(2 * kPi * a); });
    EXPECT_NEAR(k(Vec2{0.01, 0.02}), oracle::kernel(eps, 0.01, 0.02), 1e-9);
    EXPECT_NEAR(s.at(0, t), ref, 1e-6);
  }
}

TEST(Smooth, PreservesMassOfInteriorData) {
  auto m = build_domain_mesh(DomainSpec::unit_square(), 1.0 / 128);
  auto bump = [](Vec2 p, double* o) {
    double a = std::max(0.0, 1 - std::pow((p.x - 0.5) / 0.2, 2)), b = std::max(0.0, 1 - std::pow((p.y - 0.5) / 0.2, 2));
    o[0] = a * a * b * b;
  };
  Field f = interpolate(m, Rank::scalar, Space::velocity, bump);
  Field s = smooth(f, 0.125);
  EXPECT_NEAR(integrate(s), integrate(to_quadrature(f)), 1e-8);
}

TEST(Smooth, GradientCommutesOnPolynomials) {
  auto m = build_domain_mesh(DomainSpec::unit_square(), 1.0 / 64);
  Field f = interpolate(m, Rank::scalar, Space::velocity, [](Vec2 p, double* o) { o[0] = p.x * p.x - 3 * p.x * p.y + 2 * p.y * p.y; });
  Field gf = interpolate(m, Rank::vector, Space::velocity, [](Vec2 p, double* o) {
    o[0] = 2 * p.x - 3 * p.y;
    o[1] = -3 * p.x + 4 * p.y;
  });
  const double eps = 0.125;
  Field a = smooth_gradient(f, eps);
  Field b = smooth(gf, eps);
  auto d = smooth_derivatives(f, eps);
  double err = 0, err_d = 0;
  for (std::size_t t = 0; t < m->n_qp(); ++t) {
    if (m->qp_delta[t] <= eps) continue;
    for (int c = 0; c < 2; ++c) {
      err += m->qp_w[t] * std::pow(a.at(c, t) - b.at(c, t), 2);
      err_d += m->qp_w[t] * std::pow(d[c].at(0, t) - a.at(c, t), 2);
    }
  }
  EXPECT_LE(std::sqrt(err), 1e-6);
  EXPECT_LE(std::sqrt(err_d), 1e-12);
  EXPECT_EQ(code_of([&] { smooth_gradient(gradient_at_quadrature(gf), eps); }), ErrorCode::type_mismatch);
}

TEST(Smooth, LatticeAndReferencePathsAgree) {
  auto m = build_domain_mesh(DomainSpec::l_shape(), 1.0 / 16);
  Field f = interpolate(m, Rank::vector, Space::quadrature, [](Vec2 p, double* o) {
    o[0] = std::cos(5 * p.x) * p.y;
    o[1] = p.x * p.x;
  });
  for (double eps : {0.2}) {
    Field a = smooth(f, eps, {Extension::automatic, true});
    Field b = smooth(f, eps, {Extension::automatic, false});
    for (std::size_t i = 0; i < a.values().size(); ++i) EXPECT_NEAR(a.values()[i], b.values()[i], 1e-12);
    auto da = smooth_derivatives(f, eps, {Extension::automatic, true});
    auto db = smooth_derivatives(f, eps, {Extension::automatic, false});
    for (int j = 0; j < 2; ++j)
      for (std::size_t i = 0; i < da[j].values().size(); ++i) EXPECT_NEAR(da[j].values()[i], db[j].values()[i], 1e-10);
  }
}

TEST(Smooth, SupportGrowsByHalfEps) {
  auto m = build_domain_mesh(DomainSpec::unit_square(), 1.0 / 64);
  const double r = 0.3, eps = 0.1;
  auto dm = m;
  Field f = interpolate(m, Rank::scalar, Space::quadrature, [&](Vec2 p, double* o) {
    o[0] = dm->delta(p) > r ? 1.0 : 0.0;
  });
  Field s = smooth(f, eps);
  // the element-wise P2 reading of f can reach one element outside Sigma_r
  double reach = r - eps / 2 - m->max_diameter();
  for (std::size_t t = 0; t < m->n_qp(); ++t)
    if (m->qp_delta[t] < reach) EXPECT_EQ(s.at(0, t), 0.0);
}

TEST(Smooth, RateRatioMatchesFourierMultiplier) {
  // periodic continuation of sin(2 pi x1): S_eps f = m(2 pi eps) f exactly
  auto m = build_domain_mesh(DomainSpec::unit_square(), 1.0 / 128);
  Field f = sin_field(m);
  double fn = norm(f, NormKind::L2());
  for (double eps : {0.125, 0.0625, 0.03125}) {
    Field s = smooth(f, eps, {Extension::periodic, true});
    double ratio = norm(add(s, f, -1.0), NormKind::L2()) / eps;
    double expect = (1.0 - kernel_multiplier(2 * kPi * eps)) * fn / eps;
    EXPECT_NEAR(ratio, expect, 1e-6 * expect + 1e-9) << eps;
    EXPECT_GT(ratio, 0.0);
    EXPECT_LE(ratio, 0.5 * 2 * kPi / std::sqrt(2.0));
  }
}

TEST(Cutoff, Examples) {
  auto m = build_domain_mesh(DomainSpec::unit_square(), 1.0 / 32);
  EXPECT_DOUBLE_EQ(cutoff_value(*m, 0.1, {0.5, 0.5}), 1.0);
  EXPECT_DOUBLE_EQ(cutoff_value(*m, 0.1, {0.05, 0.5}), 0.0);
  EXPECT_NEAR(cutoff_value(*m, 0.1, {0.15, 0.5}), 0.5, 1e-15);
  Vec2 g = cutoff_gradient_value(*m, 0.1, {0.15, 0.5});
  EXPECT_NEAR(g.x, 10.0, 1e-12);
  EXPECT_NEAR(g.y, 0.0, 1e-12);
}

TEST(Cutoff, PlateauSupportAndGradientBound) {
  auto m = build_domain_mesh(DomainSpec::l_shape(), 1.0 / 32);
  const double r = 0.1;
  Field psi = cutoff_field(m, r);
  Field gpsi = cutoff_gradient(m, r);
  for (std::size_t t = 0; t < m->n_qp(); ++t) {
    double d = m->qp_delta[t];
    if (d <= r) EXPECT_EQ(psi.at(0, t), 0.0);
    if (d >= 2 * r) EXPECT_EQ(psi.at(0, t), 1.0);
    EXPECT_LE(std::hypot(gpsi.at(0, t), gpsi.at(1, t)), 1.0 / r + 1e-12);
  }
}

TEST(Cutoff, RangeChecks) {
  auto m = build_domain_mesh(DomainSpec::unit_square(), 1.0 / 16);
  EXPECT_EQ(code_of([&] { cutoff_field(m, 0.25); }), ErrorCode::invalid_layer);
  EXPECT_EQ(code_of([&] { cutoff_field(m, 0.0); }), ErrorCode::invalid_layer);
  Field z = cutoff_field(m, 0.5, true);
  for (double v : z.values()) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(code_of([&] { cutoff_field(m, 0.6, true); }), ErrorCode::invalid_layer);
}

TEST(EstimateRatio, ContractionAndDegenerateInput) {
  auto cell = build_cell_mesh(2, 16);
  Field one = interpolate(cell, Rank::scalar, Space::pressure, [](Vec2, double* o) { o[0] = 1.0; });
  auto m = build_domain_mesh(DomainSpec::unit_square(), 1.0 / 32);
  std::mt19937 rng(5);
  std::normal_distribution<double> g;
  Field psi(m, Rank::vector, Space::velocity);
  for (auto& v : psi.values()) v = g(rng);
  EXPECT_LE(smoothing_estimate_ratio(one, psi, 0.125), 1.0 + 1e-6);
  Field zero(m, Rank::vector, Space::velocity);
  EXPECT_EQ(code_of([&] { smoothing_estimate_ratio(one, zero, 0.125); }), ErrorCode::undefined_ratio);
}

TEST(EstimateRatio, BoundedForCorrectorWeights) {
  auto a = std::make_shared<const CoefficientField>(builtin_coefficient("scalar_trig"));
  auto c = solve_correctors(a, build_cell_mesh(2, 32));
  auto m = build_domain_mesh(DomainSpec::unit_square(), 1.0 / 64);
  std::mt19937 rng(9);
  std::normal_distribution<double> g;
  Field psi(m, Rank::vector, Space::velocity);
  for (auto& v : psi.values()) v = g(rng);
  double worst = 0;
  for (double eps : {0.125, 0.0625, 0.03125}) worst = std::max(worst, smoothing_estimate_ratio(c.pi[0][0], psi, eps));
  EXPECT_GT(worst, 0.0);
  EXPECT_LE(worst, 10.0);
}
