#include "homstokes/stokes.hpp"

#include <cmath>
#include <numeric>
#include <random>

#include <Eigen/Dense>

#include "homstokes/error.hpp"

namespace homstokes {

StokesCoefficient StokesCoefficient::oscillating(std::shared_ptr<const CoefficientField> a, double eps) {
  if (!(eps > 0.0)) throw Error(ErrorCode::invalid_radius, "oscillation period must be positive");
  StokesCoefficient c;
  c.kind = Kind::oscillating;
  c.field = std::move(a);
  c.eps = eps;
  return c;
}

StokesCoefficient StokesCoefficient::constant(const Tensor4& t) {
  StokesCoefficient c;
  c.kind = Kind::constant;
  c.tensor = t;
  return c;
}

QpCoefficient StokesCoefficient::sample(const TriMesh& mesh) const {
  QpCoefficient q;
  std::size_t n = mesh.n_qp();
  double s = 1.0;
  switch (kind) {
    case Kind::identity:
      q.a.assign(n, 1.0);
      return q;
    case Kind::constant:
      if (tensor.is_scalar_identity(&s)) {
        q.a.assign(n, s);
      } else {
        q.scalar = false;
        q.t.assign(n, tensor);
      }
      return q;
    case Kind::oscillating:
      q.scalar = field->is_scalar();
      if (q.scalar) {
        q.a.resize(n);
      } else {
        q.t.resize(n);
      }
      for (std::size_t e = 0; e < mesh.n_elements(); ++e) {
        for (int k = 0; k < kQp; ++k) {
          Vec2 x = mesh.qp_point(e, k);
          Vec2 y{x.x / eps, x.y / eps};
          y = {y.x - std::floor(y.x), y.y - std::floor(y.y)};
          if (q.scalar) {
            q.a[e * kQp + k] = field->multiplier(y);
          } else {
            q.t[e * kQp + k] = field->eval(y);
          }
        }
      }
      return q;
  }
  return q;
}

BoundaryTrace BoundaryTrace::zero(const DomainMesh& mesh) {
  return {std::vector<double>(2 * static_cast<std::size_t>(mesh.n_p2), 0.0)};
}

BoundaryTrace BoundaryTrace::interpolate(const DomainMesh& mesh, const PointFunction& g) {
  BoundaryTrace t = zero(mesh);
  std::size_t n2 = mesh.n_p2;
  double v[4];
  for (int i : mesh.boundary_p2) {
    g(mesh.p2_points[i], v);
    t.values[i] = v[0];
    t.values[n2 + i] = v[1];
  }
  return t;
}

namespace {

// three-point Gauss rule on [0, 1]
constexpr double kGt[3] = {0.5 - 0.3872983346207417, 0.5, 0.5 + 0.3872983346207417};
constexpr double kGw[3] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};

void trace_basis(double t, double n[3], double dn[3]) {
  n[0] = (1.0 - t) * (1.0 - 2.0 * t);
  n[1] = t * (2.0 * t - 1.0);
  n[2] = 4.0 * t * (1.0 - t);
  dn[0] = 4.0 * t - 3.0;
  dn[1] = 4.0 * t - 1.0;
  dn[2] = 4.0 - 8.0 * t;
}

void check_vector(const Field& f, const char* what) {
  if (f.rank() != Rank::vector) throw Error(ErrorCode::type_mismatch, std::string(what) + " must be a vector field");
}

void check_scalar(const Field& f, const char* what) {
  if (f.rank() != Rank::scalar) throw Error(ErrorCode::type_mismatch, std::string(what) + " must be a scalar field");
}

}  // namespace

double check_compatibility(const Field& h, const BoundaryTrace& g, const DomainMesh& mesh) {
  check_scalar(h, "divergence data");
  double ih = integrate(h);
  std::size_t n2 = mesh.n_p2;
  if (g.values.size() != 2 * n2) throw Error(ErrorCode::incompatible_mesh, "boundary trace does not match mesh");
  double flux = 0.0;
  for (const auto& f : mesh.facets) {
    for (int k = 0; k < 3; ++k) {
      double n[3], dn[3];
      trace_basis(kGt[k], n, dn);
      double gx = 0.0, gy = 0.0;
      for (int a = 0; a < 3; ++a) {
        gx += n[a] * g.values[f.p2[a]];
        gy += n[a] * g.values[n2 + f.p2[a]];
      }
      flux += kGw[k] * f.length * (gx * f.normal.x + gy * f.normal.y);
    }
  }
  return ih - flux;
}

std::vector<double> load_vector(const Field& F) {
  check_vector(F, "body force");
  const TriMesh& m = F.mesh();
  std::size_t n2 = m.n_p2;
  std::vector<double> out(2 * n2, 0.0);
  const auto& ref = reference_tables();
  double v[2];
  for (std::size_t e = 0; e < m.n_elements(); ++e) {
    const auto& d = m.p2_dofs[e];
    for (int q = 0; q < kQp; ++q) {
      F.qp_value(e, q, v);
      double w = m.qp_weight(e, q);
      for (int a = 0; a < 6; ++a) {
        out[d[a]] += w * v[0] * ref.p2[q][a];
        out[n2 + d[a]] += w * v[1] * ref.p2[q][a];
      }
    }
  }
  return out;
}

std::vector<double> divergence_load(const Field& h) {
  check_scalar(h, "divergence data");
  const TriMesh& m = h.mesh();
  std::vector<double> out(m.n_p1, 0.0);
  const auto& ref = reference_tables();
  double v[1];
  for (std::size_t e = 0; e < m.n_elements(); ++e) {
    const auto& d = m.p1_dofs[e];
    for (int q = 0; q < kQp; ++q) {
      h.qp_value(e, q, v);
      double w = m.qp_weight(e, q);
      for (int r = 0; r < 3; ++r) out[d[r]] += w * v[0] * ref.p1[q][r];
    }
  }
  return out;
}

StokesOperator::StokesOperator(std::shared_ptr<const DomainMesh> mesh, const StokesCoefficient& coefficient,
                               const ResolutionGuard& guard)
    : mesh_(std::move(mesh)) {
  if (coefficient.kind == StokesCoefficient::Kind::oscillating && !guard.override_guard) {
    double hc = mesh_->h_char();
    if (hc > coefficient.eps / guard.ratio * (1.0 + 1e-9)) {
      throw Error(ErrorCode::resolution_guard, "mesh size " + std::to_string(hc) + " does not resolve eps = " +
                                                   std::to_string(coefficient.eps) + " (need h <= eps/" +
                                                   std::to_string(guard.ratio) + ")");
    }
  }
  std::vector<char> fixed = mesh_->p2_on_boundary;
  saddle_ = std::make_unique<SaddleSolver>(mesh_, coefficient.sample(*mesh_), std::move(fixed));
}

StokesSolution StokesOperator::solve(const Field& F, const Field& h, const BoundaryTrace& g) const {
  if (F.mesh_ptr() != mesh_ || h.mesh_ptr() != mesh_) {
    throw Error(ErrorCode::incompatible_mesh, "problem data live on a different mesh");
  }
  double compat = check_compatibility(h, g, *mesh_);
  if (std::abs(compat) > 1e-8) {
    throw Error(ErrorCode::incompatible_data, "int h - oint n.g = " + std::to_string(compat));
  }
  SaddleResult r = saddle_->solve(load_vector(F), divergence_load(h), g.values);
  StokesSolution s;
  s.u = Field(mesh_, Rank::vector, Space::velocity, std::move(r.u));
  s.p = Field(mesh_, Rank::scalar, Space::pressure, std::move(r.p));
  s.diagnostics.iterations = r.iterations;
  s.diagnostics.momentum_residual = r.momentum_residual;
  s.diagnostics.divergence_residual = r.divergence_residual;
  s.diagnostics.compatibility_residual = compat;
  s.diagnostics.stats = saddle_->stats();
  return s;
}

StokesSolution solve_stokes(const StokesProblem& problem) {
  StokesOperator op(problem.mesh, problem.coefficient, problem.guard);
  return op.solve(problem.F, problem.h, problem.g);
}

DataNorms data_norms(const Field& F, const Field& h, const BoundaryTrace& g, const DomainMesh& mesh) {
  DataNorms n;
  n.f_norm = norm(F, NormKind::L2());
  n.h_norm = h.has_gradient() ? norm(h, NormKind::H1()) : norm(h, NormKind::L2());
  std::size_t n2 = mesh.n_p2;
  double s = 0.0;
  for (const auto& f : mesh.facets) {
    for (int k = 0; k < 3; ++k) {
      double b[3], db[3];
      trace_basis(kGt[k], b, db);
      for (int c = 0; c < 2; ++c) {
        double v = 0.0, dv = 0.0;
        for (int a = 0; a < 3; ++a) {
          double gv = g.values[c * n2 + f.p2[a]];
          v += b[a] * gv;
          dv += db[a] * gv / f.length;
        }
        s += kGw[k] * f.length * (v * v + dv * dv);
      }
    }
  }
  n.g_norm = std::sqrt(s);
  return n;
}

double energy_constant(const StokesSolution& s, const DataNorms& norms) {
  double lhs = norm(s.u, NormKind::H1()) + norm(s.p, NormKind::L2_quotient());
  double rhs = norms.sum();
  if (!(rhs > 0.0)) throw Error(ErrorCode::undefined_ratio, "all data norms vanish");
  return lhs / rhs;
}

DivSolution solve_div(const Field& f, const std::shared_ptr<const DomainMesh>& mesh) {
  check_scalar(f, "divergence data");
  if (f.mesh_ptr() != mesh) throw Error(ErrorCode::incompatible_mesh, "data live on a different mesh");
  double mean = integrate(f);
  if (std::abs(mean) > 1e-8) {
    throw Error(ErrorCode::incompatible_data, "divergence data must have zero mean, got " + std::to_string(mean));
  }
  StokesOperator op(mesh, StokesCoefficient::identity());
  Field F(mesh, Rank::vector, Space::quadrature);
  StokesSolution s = op.solve(F, f, BoundaryTrace::zero(*mesh));
  DivSolution out;
  out.divergence_residual = s.diagnostics.divergence_residual;
  double fn = norm(f, NormKind::L2());
  out.constant = fn > 0.0 ? norm(s.u, NormKind::H1()) / fn : 0.0;
  out.u = std::move(s.u);
  return out;
}

double caccioppoli_ratio(const StokesSolution& s, Vec2 center, double r, CaccioppoliMode mode) {
  return caccioppoli_ratio(s.u, center, r, mode);
}

double caccioppoli_ratio(const Field& u, Vec2 center, double r, CaccioppoliMode mode) {
  check_vector(u, "velocity");
  if (!u.has_gradient()) throw Error(ErrorCode::type_mismatch, "velocity needs gradients");
  const auto* dm = dynamic_cast<const DomainMesh*>(&u.mesh());
  if (!dm) throw Error(ErrorCode::type_mismatch, "Caccioppoli windows need a domain mesh");
  if (!(r > 0.0)) throw Error(ErrorCode::invalid_window, "radius must be positive");
  const TriMesh& m = u.mesh();
  double val[2], grad[2][2];
  if (mode == CaccioppoliMode::interior) {
    if (!point_in_polygon(dm->spec.vertices, center) || dm->delta(center) < 2.0 * r) {
      throw Error(ErrorCode::invalid_window, "ball of radius 2r must lie inside the domain");
    }
    double num = 0.0, vol = 0.0, mean[2] = {0.0, 0.0};
    for (std::size_t e = 0; e < m.n_elements(); ++e) {
      for (int q = 0; q < kQp; ++q) {
        Vec2 x = m.qp_point(e, q);
        double d = length(x - center);
        if (d >= 2.0 * r) continue;
        double w = m.qp_weight(e, q);
        if (d < r) {
          u.qp_gradient(e, q, grad);
          num += w * (grad[0][0] * grad[0][0] + grad[0][1] * grad[0][1] + grad[1][0] * grad[1][0] +
                      grad[1][1] * grad[1][1]);
        } else {
          u.qp_value(e, q, val);
          vol += w;
          mean[0] += w * val[0];
          mean[1] += w * val[1];
        }
      }
    }
    mean[0] /= vol;
    mean[1] /= vol;
    double osc = 0.0;
    for (std::size_t e = 0; e < m.n_elements(); ++e) {
      for (int q = 0; q < kQp; ++q) {
        Vec2 x = m.qp_point(e, q);
        double d = length(x - center);
        if (d >= 2.0 * r || d < r) continue;
        u.qp_value(e, q, val);
        double a = val[0] - mean[0], b = val[1] - mean[1];
        osc += m.qp_weight(e, q) * (a * a + b * b);
      }
    }
    return num / (osc / (r * r) + std::pow(r, 4.0));
  }

  // boundary half-ball: center on the boundary, no corner within 2r, u = 0 on the flat part
  if (dm->delta(center) > 1e-12) throw Error(ErrorCode::invalid_window, "boundary window must be centered on the boundary");
  for (const auto& v : dm->spec.vertices) {
    if (length(v - center) < 2.0 * r) throw Error(ErrorCode::invalid_window, "a corner lies inside the 2r window");
  }
  std::size_t n2 = m.n_p2;
  for (int i : dm->boundary_p2) {
    if (length(m.p2_points[i] - center) <= 2.0 * r &&
        (std::abs(u.at(0, i)) > 1e-12 || std::abs(u.at(1, i)) > 1e-12)) {
      throw Error(ErrorCode::invalid_window, "velocity does not vanish on the boundary portion");
    }
  }
  (void)n2;
  double g2 = 0.0, v1 = 0.0, u2 = 0.0, v2 = 0.0;
  for (std::size_t e = 0; e < m.n_elements(); ++e) {
    for (int q = 0; q < kQp; ++q) {
      Vec2 x = m.qp_point(e, q);
      double d = length(x - center);
      if (d >= 2.0 * r) continue;
      double w = m.qp_weight(e, q);
      u.qp_value(e, q, val);
      u2 += w * (val[0] * val[0] + val[1] * val[1]);
      v2 += w;
      if (d < r) {
        u.qp_gradient(e, q, grad);
        g2 += w * (grad[0][0] * grad[0][0] + grad[0][1] * grad[0][1] + grad[1][0] * grad[1][0] +
                   grad[1][1] * grad[1][1]);
        v1 += w;
      }
    }
  }
  double denom = std::sqrt(u2 / v2) / r;
  if (!(denom > 0.0)) throw Error(ErrorCode::undefined_ratio, "velocity vanishes on the window");
  return std::sqrt(g2 / v1) / denom;
}

double inf_sup_constant(const std::shared_ptr<const DomainMesh>& mesh, int lanczos_steps) {
  StokesOperator op(mesh, StokesCoefficient::identity());
  const SaddleSolver& s = op.saddle();
  const Csr& mass = s.pressure_mass();
  SparseCholesky mchol(mass);
  int n = mesh->n_p1;
  std::vector<double> ones(n, 1.0), m1(n);
  symmetric_mult(mass, ones.data(), m1.data());
  double one_m_one = std::accumulate(m1.begin(), m1.end(), 0.0);

  auto mdot = [&](const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> mb(n);
    symmetric_mult(mass, b.data(), mb.data());
    return std::inner_product(a.begin(), a.end(), mb.begin(), 0.0);
  };
  auto deflate = [&](std::vector<double>& x) {
    double c = std::inner_product(m1.begin(), m1.end(), x.begin(), 0.0) / one_m_one;
    for (double& v : x) v -= c;
  };

  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = dist(rng);
  deflate(v);
  double nv = std::sqrt(mdot(v, v));
  for (double& x : v) x /= nv;

  int steps = std::min(lanczos_steps, n - 2);
  std::vector<std::vector<double>> basis;
  std::vector<double> alpha, beta;
  std::vector<double> w;
  for (int j = 0; j < steps; ++j) {
    basis.push_back(v);
    s.apply_schur(v, w);
    mchol.solve(w.data(), 1);
    deflate(w);
    double a = mdot(v, w);
    alpha.push_back(a);
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& b : basis) {
        double c = mdot(b, w);
        for (int i = 0; i < n; ++i) w[i] -= c * b[i];
      }
      deflate(w);
    }
    double bnorm = std::sqrt(mdot(w, w));
    if (bnorm < 1e-12 || j + 1 == steps) break;
    beta.push_back(bnorm);
    for (int i = 0; i < n; ++i) v[i] = w[i] / bnorm;
  }
  int k = static_cast<int>(alpha.size());
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(k, k);
  for (int i = 0; i < k; ++i) {
    t(i, i) = alpha[i];
    if (i + 1 < k) t(i, i + 1) = t(i + 1, i) = beta[i];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues()(0)));
}

}  // namespace homstokes
