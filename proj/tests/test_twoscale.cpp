#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "homstokes/error.hpp"
#include "homstokes/manufactured.hpp"
#include "homstokes/rates.hpp"
#include "homstokes/smoothing.hpp"
#include "homstokes/twoscale.hpp"

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

struct Pipeline {
  CellProducts cell;
  std::shared_ptr<const DomainMesh> mesh;
  double eps;
  StokesSolution ue, u0;
};

Pipeline make_setup(const std::string& coefficient, int cell_n, double h, double eps) {
  Pipeline s{run_cell(std::make_shared<const CoefficientField>(builtin_coefficient(coefficient)), cell_n),
          build_domain_mesh(DomainSpec::unit_square(), h), eps, {}, {}};
  Field F = interpolate(s.mesh, Rank::vector, Space::quadrature, manufactured::forcing);
  Field zero(s.mesh, Rank::scalar, Space::quadrature);
  auto g = BoundaryTrace::zero(*s.mesh);
  s.ue = StokesOperator(s.mesh, StokesCoefficient::oscillating(s.cell.coefficient, eps), {16.0, true}).solve(F, zero, g);
  s.u0 = StokesOperator(s.mesh, StokesCoefficient::constant(s.cell.a_hat.a_hat)).solve(F, zero, g);
  return s;
}

const Pipeline& trig() {
  static Pipeline s = make_setup("scalar_trig", 32, 1.0 / 64, 0.25);
  return s;
}

double wrap(double t) { return t - std::floor(t); }

StokesSolution scaled_solution(const StokesSolution& s, double a, double pshift) {
  StokesSolution o = s;
  o.u = scaled(s.u, a);
  o.p = plus_constant(scaled(s.p, a), pshift);
  return o;
}

}  // namespace

TEST(TwoScale, IdentityCoefficientIsExact) {
  Pipeline s = make_setup("identity", 16, 1.0 / 32, 0.125);
  for (Variant v : {Variant::A, Variant::B, Variant::C}) {
    auto b = assemble_approximant(s.ue, s.u0, s.cell.correctors, s.cell.flux, s.eps, v);
    EXPECT_LE(norm(b.w, NormKind::L2()), 1e-10) << variant_name(v);
    EXPECT_LE(norm(b.grad_w, NormKind::L2()), 1e-10);
    EXPECT_LE(norm(b.z, NormKind::L2_quotient()), 1e-10);
    EXPECT_LE(norm(b.corrector_term, NormKind::L2()), 1e-12);
  }
}

TEST(TwoScale, VariantCMatchesPointwiseFormula) {
  const Pipeline& s = trig();
  auto b = assemble_approximant(s.ue, s.u0, s.cell.correctors, s.cell.flux, s.eps, Variant::C);
  const auto& c = s.cell.correctors;
  std::mt19937 rng(17);
  std::uniform_int_distribution<std::size_t> pick(0, s.mesh->n_qp() - 1);
  for (int trial = 0; trial < 20; ++trial) {
    std::size_t t = pick(rng);
    std::size_t e = t / kQp;
    int q = static_cast<int>(t % kQp);
    Vec2 x = s.mesh->qp_point(e, q);
    Vec2 y{wrap(x.x / s.eps), wrap(x.y / s.eps)};
    double du0[2][2];
    s.u0.u.qp_gradient(e, q, du0);  // du0[gamma][k] = d_k u0^gamma
    double ue[2], u0v[2], pe, p0;
    s.ue.u.qp_value(e, q, ue);
    s.u0.u.qp_value(e, q, u0v);
    s.ue.p.qp_value(e, q, &pe);
    s.u0.p.qp_value(e, q, &p0);
    double corr[2] = {0, 0}, pcorr = 0;
    for (int k = 0; k < 2; ++k)
      for (int g = 0; g < 2; ++g) {
        double chi[2], pi;
        ASSERT_TRUE(c.chi[k][g].eval(y, chi));
        ASSERT_TRUE(c.pi[k][g].eval(y, &pi));
        for (int beta = 0; beta < 2; ++beta) corr[beta] += chi[beta] * du0[g][k];
        pcorr += pi * du0[g][k];
      }
    for (int beta = 0; beta < 2; ++beta) {
      EXPECT_NEAR(b.corrector_term.at(beta, t), corr[beta], 1e-10);
      EXPECT_NEAR(b.w.at(beta, t), ue[beta] - u0v[beta] - s.eps * corr[beta], 1e-10);
    }
    EXPECT_NEAR(b.p_simple.at(0, t), pe - p0 - pcorr, 1e-10);
  }
}

TEST(TwoScale, PressureGaugeDoesNotChangeQuotients) {
  const Pipeline& s = trig();
  auto base = assemble_approximant(s.ue, s.u0, s.cell.correctors, s.cell.flux, s.eps, Variant::A);
  auto shifted = assemble_approximant(scaled_solution(s.ue, 1.0, 3.5), scaled_solution(s.u0, 1.0, -1.25),
                                      s.cell.correctors, s.cell.flux, s.eps, Variant::A);
  EXPECT_NEAR(norm(shifted.z, NormKind::L2_quotient()), norm(base.z, NormKind::L2_quotient()), 1e-12);
  EXPECT_NEAR(norm(shifted.p_simple, NormKind::L2_quotient()), norm(base.p_simple, NormKind::L2_quotient()), 1e-12);
}

TEST(TwoScale, LinearInTheSolutionPair) {
  const Pipeline& s = trig();
  auto base = assemble_approximant(s.ue, s.u0, s.cell.correctors, s.cell.flux, s.eps, Variant::B);
  auto twice = assemble_approximant(scaled_solution(s.ue, 2.0, 0.0), scaled_solution(s.u0, 2.0, 0.0),
                                    s.cell.correctors, s.cell.flux, s.eps, Variant::B);
  auto rel = [](const Field& a, const Field& b) {
    return norm(add(b, a, -2.0), NormKind::L2()) / std::max(1e-300, norm(a, NormKind::L2()));
  };
  EXPECT_LE(rel(base.w, twice.w), 1e-12);
  EXPECT_LE(rel(base.grad_w, twice.grad_w), 1e-12);
  EXPECT_LE(rel(base.z, twice.z), 1e-12);
}

TEST(TwoScale, TriangleInequality) {
  const Pipeline& s = trig();
  for (Variant v : {Variant::A, Variant::C}) {
    auto b = assemble_approximant(s.ue, s.u0, s.cell.correctors, s.cell.flux, s.eps, v);
    double lhs = norm(b.velocity_difference, NormKind::L2());
    double rhs = norm(b.w, NormKind::L2()) + s.eps * norm(b.corrector_term, NormKind::L2());
    EXPECT_LE(lhs, rhs * (1 + 1e-12));
  }
}

TEST(Amplitude, VanishesForZeroVelocity) {
  const Pipeline& s = trig();
  Field zero(s.mesh, Rank::vector, Space::velocity);
  for (Variant v : {Variant::A, Variant::B, Variant::C}) {
    auto a = build_amplitude(zero, s.eps, v);
    for (double x : a.phi.values()) EXPECT_EQ(x, 0.0);
    for (const auto& d : a.dphi)
      for (double x : d.values()) EXPECT_EQ(x, 0.0);
  }
}

TEST(Amplitude, LinearVelocityVariantC) {
  auto m = build_domain_mesh(DomainSpec::unit_square(), 1.0 / 16);
  Field u = interpolate(m, Rank::vector, Space::velocity, [](Vec2 p, double* o) {
    o[0] = 2 * p.x - p.y;
    o[1] = 0.5 * p.x + 3 * p.y;
  });
  auto a = build_amplitude(u, 0.125, Variant::C);
  const double expect[4] = {2, -1, 0.5, 3};  // component 2 * gamma + k = d_k u^gamma
  for (int c = 0; c < 4; ++c)
    for (std::size_t t = 0; t < m->n_qp(); ++t) {
      EXPECT_NEAR(a.phi.at(c, t), expect[c], 1e-12);
      EXPECT_NEAR(a.dphi[0].at(c, t), 0.0, 1e-8);
      EXPECT_NEAR(a.dphi[1].at(c, t), 0.0, 1e-8);
    }
}

TEST(Amplitude, SecondMollificationMovesLittle) {
  // phi_B = S(phi_A) and phi_A vanishes near the boundary, so
  // ||phi_A - phi_B|| <= (eps / 2) ||grad phi_A||
  const Pipeline& s = trig();
  auto a = build_amplitude(s.u0.u, s.eps / 2, Variant::A);
  auto b = build_amplitude(s.u0.u, s.eps / 2, Variant::B);
  double diff = norm(add(a.phi, b.phi, -1.0), NormKind::L2());
  double g = std::hypot(norm(a.dphi[0], NormKind::L2()), norm(a.dphi[1], NormKind::L2()));
  EXPECT_GT(diff, 0.0);
  EXPECT_LE(diff, 0.5 * (s.eps / 2) * g * 1.01);
}

TEST(Amplitude, CutoffSupport) {
  const Pipeline& s = trig();
  const double eps = 0.125;
  auto a = build_amplitude(s.u0.u, eps, Variant::A);
  for (std::size_t t = 0; t < s.mesh->n_qp(); ++t)
    if (s.mesh->qp_delta[t] < 1.5 * eps - s.mesh->max_diameter())
      for (int c = 0; c < 4; ++c) EXPECT_EQ(a.phi.at(c, t), 0.0);
  EXPECT_EQ(code_of([&] { build_amplitude(s.u0.u, 0.0, Variant::A); }), ErrorCode::invalid_radius);
  EXPECT_EQ(code_of([&] { build_amplitude(s.u0.u, 0.3, Variant::A); }), ErrorCode::invalid_layer);
}

TEST(TwoScale, RejectsMismatchedMeshes) {
  const Pipeline& s = trig();
  auto other = build_domain_mesh(DomainSpec::unit_square(), 1.0 / 8);
  StokesSolution o;
  o.u = Field(other, Rank::vector, Space::velocity);
  o.p = Field(other, Rank::scalar, Space::pressure);
  EXPECT_EQ(code_of([&] { assemble_approximant(s.ue, o, s.cell.correctors, s.cell.flux, s.eps, Variant::C); }),
            ErrorCode::incompatible_mesh);
}

TEST(Record, ValuesFlagsAndVariants) {
  EXPECT_EQ(parse_variant("B"), Variant::B);
  EXPECT_EQ(code_of([] { parse_variant("D"); }), ErrorCode::invalid_config);
  const Pipeline& s = trig();
  auto a = assemble_approximant(s.ue, s.u0, s.cell.correctors, s.cell.flux, s.eps, Variant::A);
  auto c = assemble_approximant(s.ue, s.u0, s.cell.correctors, s.cell.flux, s.eps, Variant::C);
  DataNorms n{1.0, 0.0, 0.0};
  ErrorRecord r = error_record(a, n, 1.0 / 64, 16.0);
  EXPECT_FALSE(r.flagged);
  EXPECT_TRUE(error_record(a, n, 1.0 / 32, 16.0).flagged);
  add_variant_errors(r, c);
  EXPECT_EQ(r.value("h1_w_A"), r.h1_w);
  EXPECT_EQ(r.value("h1_w_C"), r.extra.at("h1_w_C"));
  EXPECT_TRUE(std::isnan(r.value("no_such_norm")));
  EXPECT_GT(r.l2_vel, 0.0);
  EXPECT_LE(r.l2_w, r.h1_w);
}
