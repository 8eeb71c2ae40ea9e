#include "homstokes/cellsolve.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "homstokes/error.hpp"

namespace homstokes {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Vec2 wrap_cell(Vec2 y) { return {y.x - std::floor(y.x), y.y - std::floor(y.y)}; }

double periodic_distance(Vec2 a, Vec2 b) {
  double dx = std::abs(a.x - b.x), dy = std::abs(a.y - b.y);
  dx -= std::floor(dx);
  dy -= std::floor(dy);
  dx = std::min(dx, 1.0 - dx);
  dy = std::min(dy, 1.0 - dy);
  return std::sqrt(dx * dx + dy * dy);
}

std::vector<char> pinned_first_node(const TriMesh& m) {
  std::vector<char> fixed(m.n_p2, 0);
  fixed[0] = 1;
  return fixed;
}

void remove_component_means(Field& f) {
  auto means = component_means(f);
  for (int c = 0; c < f.components(); ++c) {
    for (std::size_t i = 0; i < f.n_nodes(); ++i) f.at(c, i) -= means[c];
  }
}

}  // namespace

QpCoefficient sample_cell_coefficient(const CoefficientField& a, const TriMesh& mesh) {
  QpCoefficient c;
  c.scalar = a.is_scalar();
  std::size_t n = mesh.n_qp();
  if (c.scalar) {
    c.a.resize(n);
  } else {
    c.t.resize(n);
  }
  for (std::size_t e = 0; e < mesh.n_elements(); ++e) {
    for (int q = 0; q < kQp; ++q) {
      Vec2 y = wrap_cell(mesh.qp_point(e, q));
      if (c.scalar) {
        c.a[e * kQp + q] = a.multiplier(y);
      } else {
        c.t[e * kQp + q] = a.eval(y);
      }
    }
  }
  return c;
}

Tensor4 tensor_at(const QpCoefficient& c, std::size_t qp) { return c.scalar ? Tensor4::identity(c.a[qp]) : c.t[qp]; }

CorrectorSet solve_correctors(std::shared_ptr<const CoefficientField> a, std::shared_ptr<const UnitCellMesh> mesh) {
  if (!mesh || mesh->d != 2) throw Error(ErrorCode::invalid_resolution, "cell solves need a two-dimensional cell mesh");
  CorrectorSet out;
  out.mesh = mesh;
  out.coefficient = a;
  out.samples = sample_cell_coefficient(*a, *mesh);
  const TriMesh& m = *mesh;
  SaddleSolver solver(mesh, out.samples, pinned_first_node(m));
  out.stats = solver.stats();
  std::size_t n2 = m.n_p2;
  std::vector<double> zero_div(m.n_p1, 0.0);
  for (int k = 0; k < 2; ++k) {
    for (int gamma = 0; gamma < 2; ++gamma) {
      // -int a_{ik}^{alpha gamma} d_i phi_v
      std::vector<double> load(2 * n2, 0.0);
      double g[6][2];
      for (std::size_t e = 0; e < m.n_elements(); ++e) {
        const auto& d = m.p2_dofs[e];
        for (int q = 0; q < kQp; ++q) {
          m.p2_gradients(e, q, g);
          double w = m.qp_weight(e, q);
          std::size_t qp = e * kQp + q;
          if (out.samples.scalar) {
            double wa = w * out.samples.a[qp];
            for (int v = 0; v < 6; ++v) load[gamma * n2 + d[v]] -= wa * g[v][k];
          } else {
            const Tensor4& t = out.samples.t[qp];
            for (int alpha = 0; alpha < 2; ++alpha) {
              double c0 = w * t(0, k, alpha, gamma), c1 = w * t(1, k, alpha, gamma);
              for (int v = 0; v < 6; ++v) load[alpha * n2 + d[v]] -= c0 * g[v][0] + c1 * g[v][1];
            }
          }
        }
      }
      SaddleResult r = solver.solve(load, zero_div);
      out.iterations = std::max(out.iterations, r.iterations);
      out.momentum_residual = std::max(out.momentum_residual, r.momentum_residual);
      out.divergence_residual = std::max(out.divergence_residual, r.divergence_residual);
      Field chi(mesh, Rank::vector, Space::velocity, std::move(r.u));
      remove_component_means(chi);
      out.chi[k][gamma] = std::move(chi);
      out.pi[k][gamma] = Field(mesh, Rank::scalar, Space::pressure, std::move(r.p));
    }
  }
  return out;
}

HomogenizedTensor homogenized_tensor(const CorrectorSet& c) {
  const TriMesh& m = *c.mesh;
  HomogenizedTensor out;
  Tensor4& ah = out.a_hat;
  // grad chi[j][beta] at a point: gc[j][beta][gamma'][k] = d_k chi_j^{gamma' beta}
  double gc[2][2][2][2];
  double vol = 0.0;
  for (std::size_t e = 0; e < m.n_elements(); ++e) {
    for (int q = 0; q < kQp; ++q) {
      std::size_t qp = e * kQp + q;
      double w = m.qp_weight(e, q);
      vol += w;
      for (int j = 0; j < 2; ++j) {
        for (int beta = 0; beta < 2; ++beta) c.chi[j][beta].qp_gradient(e, q, gc[j][beta]);
      }
      Tensor4 a = tensor_at(c.samples, qp);
      for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
          for (int alpha = 0; alpha < 2; ++alpha) {
            for (int beta = 0; beta < 2; ++beta) {
              double s = a(i, j, alpha, beta);
              for (int k = 0; k < 2; ++k) {
                for (int gp = 0; gp < 2; ++gp) s += a(i, k, alpha, gp) * gc[j][beta][gp][k];
              }
              ah(i, j, alpha, beta) += w * s;
            }
          }
        }
      }
    }
  }
  for (double& v : ah.v) v /= vol;
  out.window = tensor_ellipticity(ah);
  return out;
}

FluxDifference flux_difference(const CorrectorSet& c, const HomogenizedTensor& a_hat) {
  const TriMesh& m = *c.mesh;
  FluxDifference out;
  out.mesh = c.mesh;
  for (int i = 0; i < 2; ++i) {
    for (int k = 0; k < 2; ++k) out.b[i][k] = Field(c.mesh, Rank::tensor, Space::quadrature);
  }
  // gc[k][gamma][beta][j] = d_j chi_k^{beta gamma}
  double gc[2][2][2][2];
  for (std::size_t e = 0; e < m.n_elements(); ++e) {
    for (int q = 0; q < kQp; ++q) {
      std::size_t qp = e * kQp + q;
      for (int k = 0; k < 2; ++k) {
        for (int gamma = 0; gamma < 2; ++gamma) c.chi[k][gamma].qp_gradient(e, q, gc[k][gamma]);
      }
      Tensor4 a = tensor_at(c.samples, qp);
      for (int i = 0; i < 2; ++i) {
        for (int k = 0; k < 2; ++k) {
          for (int alpha = 0; alpha < 2; ++alpha) {
            for (int gamma = 0; gamma < 2; ++gamma) {
              double s = a_hat.a_hat(i, k, alpha, gamma) - a(i, k, alpha, gamma);
              for (int j = 0; j < 2; ++j) {
                for (int beta = 0; beta < 2; ++beta) s -= a(i, j, alpha, beta) * gc[k][gamma][beta][j];
              }
              out.b[i][k].at(2 * alpha + gamma, qp) = s;
            }
          }
        }
      }
    }
  }
  return out;
}

FluxSet solve_flux_correctors(const FluxDifference& b, double tol) {
  const TriMesh& m = *b.mesh;
  std::size_t n2 = m.n_p2;
  const auto& w = m.qp_w;
  double vol = 0.0;
  for (double x : w) vol += x;
  for (int i = 0; i < 2; ++i) {
    for (int k = 0; k < 2; ++k) {
      for (int c = 0; c < 4; ++c) {
        double s = 0.0;
        for (std::size_t qp = 0; qp < w.size(); ++qp) s += w[qp] * b.b[i][k].at(c, qp);
        if (std::abs(s) > tol * vol) {
          throw Error(ErrorCode::incompatible_data,
                      "flux difference has nonzero cell mean " + std::to_string(s) + " (solvability fails)");
        }
      }
    }
  }
  QpCoefficient identity;
  identity.a.assign(m.n_qp(), 1.0);
  SaddleSolver solver(b.mesh, identity, pinned_first_node(m));
  FluxSet out;
  out.mesh = b.mesh;
  const auto& ref = reference_tables();
  std::vector<double> zero_div(m.n_p1, 0.0);
  for (int i = 0; i < 2; ++i) {
    for (int k = 0; k < 2; ++k) {
      for (int gamma = 0; gamma < 2; ++gamma) {
        // momentum  -lap T + grad q = -b
        std::vector<double> load(2 * n2, 0.0);
        for (std::size_t e = 0; e < m.n_elements(); ++e) {
          const auto& d = m.p2_dofs[e];
          for (int q = 0; q < kQp; ++q) {
            std::size_t qp = e * kQp + q;
            for (int alpha = 0; alpha < 2; ++alpha) {
              double f = -w[qp] * b.component(i, k, alpha, gamma, qp);
              for (int v = 0; v < 6; ++v) load[alpha * n2 + d[v]] += f * ref.p2[q][v];
            }
          }
        }
        SaddleResult r = solver.solve(load, zero_div);
        out.momentum_residual = std::max(out.momentum_residual, r.momentum_residual);
        out.divergence_residual = std::max(out.divergence_residual, r.divergence_residual);
        Field t(b.mesh, Rank::vector, Space::velocity, std::move(r.u));
        remove_component_means(t);
        out.T[i][k][gamma] = std::move(t);
        out.q[i][k][gamma] = Field(b.mesh, Rank::scalar, Space::pressure, std::move(r.p));
      }
    }
  }
  // E_{jik}^{alpha gamma} = d_j T_{ik}^{alpha gamma} - d_i T_{jk}^{alpha gamma}
  for (int j = 0; j < 2; ++j) {
    for (int i = 0; i < 2; ++i) {
      for (int k = 0; k < 2; ++k) {
        for (int gamma = 0; gamma < 2; ++gamma) out.E[j][i][k][gamma] = Field(b.mesh, Rank::vector, Space::quadrature);
      }
    }
  }
  double g[2][2][2][2];  // g[i][k][alpha][dir] for fixed gamma
  for (std::size_t e = 0; e < m.n_elements(); ++e) {
    for (int q = 0; q < kQp; ++q) {
      std::size_t qp = e * kQp + q;
      for (int gamma = 0; gamma < 2; ++gamma) {
        for (int i = 0; i < 2; ++i) {
          for (int k = 0; k < 2; ++k) out.T[i][k][gamma].qp_gradient(e, q, g[i][k]);
        }
        for (int j = 0; j < 2; ++j) {
          for (int i = 0; i < 2; ++i) {
            for (int k = 0; k < 2; ++k) {
              for (int alpha = 0; alpha < 2; ++alpha) {
                out.E[j][i][k][gamma].at(alpha, qp) = g[i][k][alpha][j] - g[j][k][alpha][i];
              }
            }
          }
        }
      }
    }
  }
  return out;
}

Pair<Field> recovered_gradient(const Field& p) {
  if (p.space() != Space::pressure || p.rank() != Rank::scalar) {
    throw Error(ErrorCode::type_mismatch, "gradient recovery expects a scalar pressure-space field");
  }
  const TriMesh& m = p.mesh();
  Csr mass = p1_mass_lower(m);
  SparseCholesky chol(mass);
  const auto& ref = reference_tables();
  std::vector<double> rhs(2 * static_cast<std::size_t>(m.n_p1), 0.0);
  double g[1][2];
  for (std::size_t e = 0; e < m.n_elements(); ++e) {
    p.qp_gradient(e, 0, g);
    const auto& d = m.p1_dofs[e];
    for (int q = 0; q < kQp; ++q) {
      double w = m.qp_weight(e, q);
      for (int r = 0; r < 3; ++r) {
        rhs[d[r]] += w * g[0][0] * ref.p1[q][r];
        rhs[m.n_p1 + d[r]] += w * g[0][1] * ref.p1[q][r];
      }
    }
  }
  chol.solve(rhs.data(), 2);
  std::vector<double> gx(rhs.begin(), rhs.begin() + m.n_p1), gy(rhs.begin() + m.n_p1, rhs.end());
  return {Field(p.mesh_ptr(), Rank::scalar, Space::pressure, std::move(gx)),
          Field(p.mesh_ptr(), Rank::scalar, Space::pressure, std::move(gy))};
}

IdentityReport verify_corrector_identities(const CorrectorSet& c, const FluxSet& f, const HomogenizedTensor& a_hat,
                                           const FluxDifference& b, const IdentityTolerances& tol) {
  const TriMesh& m = *c.mesh;
  const auto& w = m.qp_w;
  IdentityReport r;
  for (int k = 0; k < 2; ++k) {
    for (int gamma = 0; gamma < 2; ++gamma) {
      for (double v : component_means(c.chi[k][gamma])) r.chi_mean = std::max(r.chi_mean, std::abs(v));
      r.pi_mean = std::max(r.pi_mean, std::abs(component_means(c.pi[k][gamma])[0]));
    }
  }
  r.chi_divergence = c.divergence_residual;
  for (int i = 0; i < 2; ++i) {
    for (int k = 0; k < 2; ++k) {
      for (int comp = 0; comp < 4; ++comp) {
        double s = 0.0;
        for (std::size_t qp = 0; qp < w.size(); ++qp) s += w[qp] * b.b[i][k].at(comp, qp);
        r.b_mean = std::max(r.b_mean, std::abs(s));
      }
    }
  }
  for (int j = 0; j < 2; ++j) {
    for (int i = 0; i < 2; ++i) {
      for (int k = 0; k < 2; ++k) {
        for (int gamma = 0; gamma < 2; ++gamma) {
          const auto& a = f.E[j][i][k][gamma].values();
          const auto& bb = f.E[i][j][k][gamma].values();
          for (std::size_t n = 0; n < a.size(); ++n) r.e_antisymmetry = std::max(r.e_antisymmetry, std::abs(a[n] + bb[n]));
        }
      }
    }
  }

  // sum_i d_i q_{ik}^gamma against pi_k^gamma
  Pair<Pair<Pair<Pair<Field>>>> grads;
  for (int i = 0; i < 2; ++i) {
    for (int k = 0; k < 2; ++k) {
      for (int gamma = 0; gamma < 2; ++gamma) grads[i][k][gamma] = recovered_gradient(f.q[i][k][gamma]);
    }
  }
  for (int k = 0; k < 2; ++k) {
    for (int gamma = 0; gamma < 2; ++gamma) {
      double s_rec = 0.0, s_raw = 0.0;
      double gq[1][2], v[1];
      for (std::size_t e = 0; e < m.n_elements(); ++e) {
        for (int q = 0; q < kQp; ++q) {
          c.pi[k][gamma].qp_value(e, q, v);
          double pi = v[0];
          double rec = 0.0, raw = 0.0;
          for (int i = 0; i < 2; ++i) {
            grads[i][k][gamma][i].qp_value(e, q, v);
            rec += v[0];
            f.q[i][k][gamma].qp_gradient(e, q, gq);
            raw += gq[0][i];
          }
          double wq = m.qp_weight(e, q);
          s_rec += wq * (rec - pi) * (rec - pi);
          s_raw += wq * (raw - pi) * (raw - pi);
        }
      }
      r.dq_minus_pi = std::max(r.dq_minus_pi, std::sqrt(s_rec));
      r.dq_minus_pi_raw = std::max(r.dq_minus_pi_raw, std::sqrt(s_raw));
    }
  }

  // int b_{ik}^{alpha gamma} d_i phi + int pi_k^gamma d_alpha phi = 0 for trigonometric phi
  const int modes[4][2] = {{1, 0}, {0, 1}, {1, 1}, {1, -1}};
  for (const auto& md : modes) {
    for (int phase = 0; phase < 2; ++phase) {
      double acc[2][2][2] = {};  // [k][alpha][gamma]
      double v[1];
      for (std::size_t e = 0; e < m.n_elements(); ++e) {
        for (int q = 0; q < kQp; ++q) {
          std::size_t qp = e * kQp + q;
          Vec2 y = m.qp_point(e, q);
          double arg = kTwoPi * (md[0] * y.x + md[1] * y.y);
          double dphi_scale = phase == 0 ? kTwoPi * std::cos(arg) : -kTwoPi * std::sin(arg);
          double dphi[2] = {dphi_scale * md[0], dphi_scale * md[1]};
          for (int k = 0; k < 2; ++k) {
            for (int gamma = 0; gamma < 2; ++gamma) {
              c.pi[k][gamma].qp_value(e, q, v);
              for (int alpha = 0; alpha < 2; ++alpha) {
                double s = v[0] * dphi[alpha];
                for (int i = 0; i < 2; ++i) s += b.component(i, k, alpha, gamma, qp) * dphi[i];
                acc[k][alpha][gamma] += w[qp] * s;
              }
            }
          }
        }
      }
      for (const auto& a1 : acc) {
        for (const auto& a2 : a1) {
          for (double x : a2) r.weak_divergence_b = std::max(r.weak_divergence_b, std::abs(x));
        }
      }
    }
  }

  r.a_hat_window = a_hat.window;
  double mu = c.coefficient ? c.coefficient->mu : 1.0;
  r.a_hat_elliptic = r.a_hat_window.mu_low >= mu - tol.ellipticity && r.a_hat_window.mu_high <= 1.0 / mu + tol.ellipticity;
  r.pass = r.chi_mean <= tol.mean && r.pi_mean <= tol.mean && r.chi_divergence <= tol.divergence &&
           r.b_mean <= tol.b_mean && r.e_antisymmetry <= tol.antisymmetry && r.dq_minus_pi <= tol.dq_minus_pi &&
           r.a_hat_elliptic;
  return r;
}

std::vector<Vec2> halton_points(int n) {
  auto radical = [](int i, int base) {
    double f = 1.0, r = 0.0;
    while (i > 0) {
      f /= base;
      r += f * (i % base);
      i /= base;
    }
    return r;
  };
  std::vector<Vec2> pts(n);
  for (int i = 0; i < n; ++i) pts[i] = {radical(i + 1, 2), radical(i + 1, 3)};
  return pts;
}

double holder_seminorm(const Field& f, double sigma, CellMetric metric, int n_points) {
  if (!(sigma > 0.0 && sigma < 1.0)) throw Error(ErrorCode::invalid_radius, "Holder exponent must lie in (0, 1)");
  auto pts = halton_points(n_points);
  int nc = f.components();
  std::vector<double> vals(pts.size() * nc);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (!f.eval(pts[i], &vals[i * nc])) throw Error(ErrorCode::incompatible_mesh, "sample point outside the mesh");
  }
  double best = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      double d = metric == CellMetric::periodic ? periodic_distance(pts[i], pts[j]) : length(pts[i] - pts[j]);
      if (d <= 0.0) continue;
      double s = 0.0;
      for (int c = 0; c < nc; ++c) {
        double t = vals[i * nc + c] - vals[j * nc + c];
        s += t * t;
      }
      best = std::max(best, std::sqrt(s) / std::pow(d, sigma));
    }
  }
  return best;
}

double cell_caccioppoli_ratio(const Field& f, Vec2 center, double r) {
  if (!(r > 0.0) || 2.0 * r > 0.5 + 1e-12) throw Error(ErrorCode::invalid_window, "periodic window needs 0 < 2r <= 1/2");
  const TriMesh& m = f.mesh();
  int nc = f.components();
  double val[4], grad[4][2];
  double num = 0.0, vol = 0.0;
  std::vector<double> mean(nc, 0.0);
  for (std::size_t e = 0; e < m.n_elements(); ++e) {
    for (int q = 0; q < kQp; ++q) {
      double d = periodic_distance(m.qp_point(e, q), center);
      if (d >= 2.0 * r) continue;
      double w = m.qp_weight(e, q);
      if (d < r) {
        f.qp_gradient(e, q, grad);
        for (int c = 0; c < nc; ++c) num += w * (grad[c][0] * grad[c][0] + grad[c][1] * grad[c][1]);
      } else {
        f.qp_value(e, q, val);
        vol += w;
        for (int c = 0; c < nc; ++c) mean[c] += w * val[c];
      }
    }
  }
  for (double& x : mean) x /= vol;
  double osc = 0.0;
  for (std::size_t e = 0; e < m.n_elements(); ++e) {
    for (int q = 0; q < kQp; ++q) {
      double d = periodic_distance(m.qp_point(e, q), center);
      if (d >= 2.0 * r || d < r) continue;
      f.qp_value(e, q, val);
      for (int c = 0; c < nc; ++c) osc += m.qp_weight(e, q) * (val[c] - mean[c]) * (val[c] - mean[c]);
    }
  }
  return num / (osc / (r * r) + std::pow(r, 4.0));
}

}  // namespace homstokes
