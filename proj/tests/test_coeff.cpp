#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "homstokes/coefficient.hpp"
#include "homstokes/error.hpp"

using namespace homstokes;

TEST(Builtin, IdentityIsIdentity) {
  auto a = builtin_coefficient("identity");
  EXPECT_EQ(a.mu, 1.0);
  for (Vec2 y : {Vec2{0, 0}, Vec2{0.3, 0.7}, Vec2{0.99, 0.01}}) {
    Tensor4 t = a.eval(y);
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) EXPECT_EQ(t.v[r * 4 + c], r == c ? 1.0 : 0.0);
  }
}

TEST(Builtin, ScalarTrigRangeAndMu) {
  auto a = builtin_coefficient("scalar_trig", {{"kappa", 2.0}});
  EXPECT_NEAR(a.mu, 1.0 / 3.0, 1e-15);
  for (int i = 0; i < 64; ++i)
    for (int j = 0; j < 64; ++j) {
      double s = a.multiplier({i / 64.0, j / 64.0});
      EXPECT_GE(s, 1.0 - 1e-15);
      EXPECT_LE(s, 3.0 + 1e-15);
    }
}

TEST(Builtin, RejectsNonElliptic) {
  try {
    builtin_coefficient("scalar_trig", {{"kappa", 0.5}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::invalid_coefficient);
  }
  EXPECT_THROW(builtin_coefficient("laminate", {{"mean", 1.0}, {"amplitude", 2.0}}), Error);
  EXPECT_THROW(builtin_coefficient("marble"), Error);
  EXPECT_THROW(builtin_coefficient("scalar_trig", {{"kapa", 2.0}}), Error);
}

TEST(Ellipticity, Windows) {
  auto id = verify_ellipticity(builtin_coefficient("identity"), 16);
  EXPECT_EQ(id.mu_low, 1.0);
  EXPECT_EQ(id.mu_high, 1.0);
  // kappa + sin cos reaches 1 and 3 at (1/4, 0) and (3/4, 0)
  auto st = verify_ellipticity(builtin_coefficient("scalar_trig", {{"kappa", 2.0}}), 4096);
  EXPECT_NEAR(st.mu_low, 1.0, 0.05);
  EXPECT_NEAR(st.mu_high, 3.0, 0.05);
  auto lam = verify_ellipticity(builtin_coefficient("laminate", {{"mean", 2.0}, {"amplitude", 1.0}}), 4096);
  EXPECT_NEAR(lam.mu_low, 1.0, 0.05);
  EXPECT_NEAR(lam.mu_high, 3.0, 0.05);
}

TEST(Ellipticity, EveryBuiltinWithinDeclaredMu) {
  for (const char* name : {"identity", "scalar_trig", "laminate", "smoothed_checkerboard"}) {
    auto a = builtin_coefficient(name);
    auto w = verify_ellipticity(a, 4096);
    EXPECT_GE(w.mu_low, a.mu - 0.02) << name;
    EXPECT_LE(w.mu_high, 1.0 / a.mu + 0.02) << name;
    EXPECT_EQ(verify_symmetry(a, 256), 0.0) << name;
    EXPECT_LE(verify_periodicity(a, 256), 1e-14) << name;
  }
}

TEST(Symmetry, DetectsInjectedPerturbation) {
  const double delta = 0.125;
  auto a = CoefficientField::from_tensor(
      "skewed",
      [delta](Vec2) {
        Tensor4 t = Tensor4::identity(2.0);
        t(0, 1, 0, 1) += delta;  // breaks a_ij^ab = a_ji^ba
        return t;
      },
      0.4, false);
  EXPECT_DOUBLE_EQ(verify_symmetry(a, 16), delta);
}

TEST(Periodicity, DetectsAperiodicTerm) {
  auto a = CoefficientField::from_multiplier("drift", [](Vec2 y) { return 2.0 + 0.1 * y.x; }, 0.4);
  EXPECT_GT(verify_periodicity(a, 16), 0.09);
  EXPECT_EQ(verify_periodicity(builtin_coefficient("identity"), 16), 0.0);
  EXPECT_LE(verify_periodicity(builtin_coefficient("scalar_trig"), 64), 1e-14);
}

TEST(Tensor4, ScalarIdentityDetection) {
  double s = 0;
  EXPECT_TRUE(Tensor4::identity(2.5).is_scalar_identity(&s));
  EXPECT_EQ(s, 2.5);
  Tensor4 t = Tensor4::identity();
  t(0, 0, 1, 1) = 1.5;
  EXPECT_FALSE(t.is_scalar_identity());
  auto w = tensor_ellipticity(Tensor4::identity(3.0));
  EXPECT_NEAR(w.mu_low, 3.0, 1e-14);
  EXPECT_NEAR(w.mu_high, 3.0, 1e-14);
}
