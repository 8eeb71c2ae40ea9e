#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "homstokes/cellsolve.hpp"
#include "homstokes/error.hpp"
#include "homstokes/mesh.hpp"
#include "homstokes/twoscale.hpp"
#include "oracles.hpp"

using namespace homstokes;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

using LaminateOracle = oracle::Laminate;

std::shared_ptr<const CoefficientField> coef(const std::string& name, ParamMap p = {}) {
  return std::make_shared<const CoefficientField>(builtin_coefficient(name, p));
}

double field_difference(const Field& fine, const Field& coarse) {
  Field t = transfer(coarse, fine.mesh_ptr());
  return norm(add(fine, t, -1.0), NormKind::L2());
}

}  // namespace

TEST(Correctors, IdentityVanishes) {
  auto c = solve_correctors(coef("identity"), build_cell_mesh(2, 8));
  for (int k = 0; k < 2; ++k)
    for (int g = 0; g < 2; ++g) {
      EXPECT_LE(norm(c.chi[k][g], NormKind::L2()), 1e-12);
      EXPECT_LE(norm(c.pi[k][g], NormKind::L2()), 1e-12);
    }
  auto ah = homogenized_tensor(c);
  for (int r = 0; r < 16; ++r) EXPECT_NEAR(ah.a_hat.v[r], Tensor4::identity().v[r], 1e-12);
  auto b = flux_difference(c, ah);
  for (int i = 0; i < 2; ++i)
    for (int k = 0; k < 2; ++k) EXPECT_LE(norm(b.b[i][k], NormKind::L2()), 1e-12);
  auto f = solve_flux_correctors(b);
  for (int i = 0; i < 2; ++i)
    for (int k = 0; k < 2; ++k)
      for (int g = 0; g < 2; ++g) {
        EXPECT_LE(norm(f.T[i][k][g], NormKind::L2()), 1e-12);
        EXPECT_LE(norm(f.q[i][k][g], NormKind::L2()), 1e-12);
        for (int j = 0; j < 2; ++j) EXPECT_LE(norm(f.E[j][i][k][g], NormKind::L2()), 1e-12);
      }
  auto rep = verify_corrector_identities(c, f, ah, b);
  EXPECT_TRUE(rep.pass);
}

TEST(Correctors, LaminateMatchesOneDimensionalOracle) {
  LaminateOracle o(2.0, 1.0);
  EXPECT_NEAR(o.harmonic, std::sqrt(3.0), 1e-12);
  auto c = solve_correctors(coef("laminate", {{"mean", 2.0}, {"amplitude", 1.0}}), build_cell_mesh(2, 64));
  auto ah = homogenized_tensor(c);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int al = 0; al < 2; ++al)
        for (int be = 0; be < 2; ++be)
          EXPECT_NEAR(ah.a_hat(i, j, al, be), o.a_hat(i, j, al, be), 1e-6) << i << j << al << be;

  // chi_2 and pi_2 vanish, chi_1^{1 gamma} vanishes, chi_1^{22} follows the oracle
  for (int g = 0; g < 2; ++g) {
    EXPECT_LE(norm(c.chi[1][g], NormKind::L2()), 1e-9);
    EXPECT_LE(norm(c.pi[1][g], NormKind::L2()), 1e-9);
  }
  for (int k = 0; k < 20; ++k) {
    Vec2 y{0.05 * k + 0.013, 0.37 * k - std::floor(0.37 * k)};
    double v[2];
    ASSERT_TRUE(c.chi[0][1].eval(y, v));
    EXPECT_NEAR(v[1], o.chi_at(y.x), 1e-5);
    EXPECT_NEAR(v[0], 0.0, 1e-7);
    ASSERT_TRUE(c.chi[0][0].eval(y, v));
    EXPECT_NEAR(v[0], 0.0, 1e-7);
    double p;
    ASSERT_TRUE(c.pi[0][0].eval(y, &p));
    EXPECT_NEAR(p, std::cos(kTwoPi * y.x), 2e-3);  // pi_1^1 = a - <a>, P1 interpolation error
  }

  auto b = flux_difference(c, ah);
  // b_11^{11} = b_22^{11} = <a> - a and b_11^{22} = 0, compared in L2(Y);
  // b carries the piecewise-linear corrector gradient, so pointwise errors are O(h^2)
  double e0 = 0, e1 = 0, e2 = 0;
  for (std::size_t t = 0; t < b.mesh->n_qp(); ++t) {
    Vec2 y = b.mesh->qp_point(t / kQp, t % kQp);
    double expect = -std::cos(kTwoPi * y.x), w = b.mesh->qp_w[t];
    e0 += w * std::pow(b.component(0, 0, 0, 0, t) - expect, 2);
    e1 += w * std::pow(b.component(1, 1, 0, 0, t) - expect, 2);
    e2 += w * std::pow(b.component(0, 0, 1, 1, t), 2);
  }
  EXPECT_LE(std::sqrt(e0), 1e-4);
  EXPECT_LE(std::sqrt(e1), 1e-4);
  EXPECT_LE(std::sqrt(e2), 1e-3);
}

TEST(Correctors, SelfRefinementScalarTrig) {
  auto a = coef("scalar_trig", {{"kappa", 2.0}});
  auto c32 = solve_correctors(a, build_cell_mesh(2, 32));
  auto c64 = solve_correctors(a, build_cell_mesh(2, 64));
  auto c128 = solve_correctors(a, build_cell_mesh(2, 128));
  for (int k = 0; k < 2; ++k)
    for (int g = 0; g < 2; ++g) {
      double d1 = field_difference(c64.chi[k][g], c32.chi[k][g]);
      double d2 = field_difference(c128.chi[k][g], c64.chi[k][g]);
      EXPECT_GE(d1 / d2, 3.0) << k << g;
    }
  auto ah = homogenized_tensor(c64);
  EXPECT_GE(ah.window.mu_low, 1.0 / 3.0 - 0.05);
  EXPECT_LE(ah.window.mu_high, 3.0 + 0.05);
  for (int r = 0; r < 4; ++r)
    for (int s = 0; s < 4; ++s) EXPECT_NEAR(ah.a_hat.v[r * 4 + s], ah.a_hat.v[s * 4 + r], 1e-10);
}

TEST(Correctors, MeansAndDivergence) {
  auto c = solve_correctors(coef("smoothed_checkerboard"), build_cell_mesh(2, 32));
  for (int k = 0; k < 2; ++k)
    for (int g = 0; g < 2; ++g) {
      for (double m : component_means(c.chi[k][g])) EXPECT_LE(std::abs(m), 1e-12);
      EXPECT_LE(std::abs(component_means(c.pi[k][g])[0]), 1e-12);
    }
  EXPECT_LE(c.divergence_residual, 1e-9);
  EXPECT_LE(c.momentum_residual, 1e-9);
}

TEST(FluxCorrectors, IdentitiesForEveryBuiltin) {
  for (const char* name : {"scalar_trig", "laminate", "smoothed_checkerboard"}) {
    auto c = solve_correctors(coef(name), build_cell_mesh(2, 64));
    auto ah = homogenized_tensor(c);
    auto b = flux_difference(c, ah);
    auto f = solve_flux_correctors(b);
    auto rep = verify_corrector_identities(c, f, ah, b);
    EXPECT_LE(rep.b_mean, 1e-8) << name;
    EXPECT_EQ(rep.e_antisymmetry, 0.0) << name;
    EXPECT_TRUE(rep.a_hat_elliptic) << name;
    EXPECT_LE(rep.weak_divergence_b, 1e-5) << name;
  }
}

TEST(FluxCorrectors, RejectsNonzeroMean) {
  auto c = solve_correctors(coef("scalar_trig"), build_cell_mesh(2, 16));
  auto ah = homogenized_tensor(c);
  auto b = flux_difference(c, ah);
  for (std::size_t t = 0; t < b.b[0][0].n_nodes(); ++t) b.b[0][0].at(0, t) += 0.1;
  try {
    solve_flux_correctors(b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::incompatible_data);
  }
}

TEST(FluxCorrectors, MismatchedCoefficientStagnates) {
  // negative control: q from the laminate against pi of scalar_trig
  double prev = 0;
  std::vector<double> res;
  for (int n : {32, 64}) {
    auto mesh = build_cell_mesh(2, n);
    auto ct = solve_correctors(coef("scalar_trig"), mesh);
    auto cl = solve_correctors(coef("laminate"), mesh);
    auto at = homogenized_tensor(ct), al = homogenized_tensor(cl);
    auto bt = flux_difference(ct, at), bl = flux_difference(cl, al);
    auto fl = solve_flux_correctors(bl);
    res.push_back(verify_corrector_identities(ct, fl, at, bt).dq_minus_pi);
    (void)prev;
  }
  EXPECT_GT(res[1], 0.1);
  EXPECT_LT(res[0] / res[1], 1.5);
}

TEST(Holder, ZeroAndLinear) {
  auto mesh = build_cell_mesh(2, 16);
  Field zero(mesh, Rank::vector, Space::velocity);
  EXPECT_EQ(holder_seminorm(zero, 0.25), 0.0);
  const double sx = 0.3, sy = -0.2;
  Field lin = interpolate(mesh, Rank::scalar, Space::quadrature, [&](Vec2 p, double* o) { o[0] = sx * p.x + sy * p.y; });
  // direct evaluation over the same sample set
  auto pts = halton_points(512);
  double ref = 0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      Vec2 d = pts[i] - pts[j];
      ref = std::max(ref, std::abs(sx * d.x + sy * d.y) / std::pow(length(d), 0.25));
    }
  EXPECT_NEAR(holder_seminorm(lin, 0.25, CellMetric::euclidean), ref, 1e-10);
}

TEST(Holder, StableUnderRefinement) {
  auto a = coef("scalar_trig");
  double h64 = holder_seminorm(solve_correctors(a, build_cell_mesh(2, 64)).chi[0][1], 0.25);
  double h128 = holder_seminorm(solve_correctors(a, build_cell_mesh(2, 128)).chi[0][1], 0.25);
  EXPECT_GT(h64, 0.0);
  EXPECT_LT(std::abs(h64 - h128) / h128, 0.15);
}

TEST(CellCaccioppoli, BoundedAcrossBuiltins) {
  for (const char* name : {"scalar_trig", "laminate", "smoothed_checkerboard"}) {
    auto c = solve_correctors(coef(name), build_cell_mesh(2, 32));
    double r = cell_caccioppoli_ratio(c.chi[0][1], {0.5, 0.5}, 0.25);
    EXPECT_TRUE(std::isfinite(r));
    EXPECT_LE(r, 1e3) << name;
  }
  Field f(build_cell_mesh(2, 8), Rank::vector, Space::velocity);
  EXPECT_THROW(cell_caccioppoli_ratio(f, {0.5, 0.5}, 0.3), Error);
}

TEST(CellSampler, InterpolatesPeriodically) {
  auto c = solve_correctors(coef("scalar_trig"), build_cell_mesh(2, 32));
  CellSampler s(c, nullptr);
  CellSample a = s.at({0.3, 0.6}), b = s.at({2.3, -1.4});
  for (int k = 0; k < 2; ++k)
    for (int g = 0; g < 2; ++g) {
      EXPECT_NEAR(a.pi[k][g], b.pi[k][g], 1e-13);
      for (int be = 0; be < 2; ++be) EXPECT_NEAR(a.chi[k][g][be], b.chi[k][g][be], 1e-13);
      for (int i = 0; i < 2; ++i) EXPECT_EQ(a.q[i][k][g], 0.0);
    }
}
