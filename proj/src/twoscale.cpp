#include "homstokes/twoscale.hpp"

#include <cmath>
#include <limits>

#include "homstokes/error.hpp"
#include "homstokes/smoothing.hpp"

namespace homstokes {

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::A:
      return "A";
    case Variant::B:
      return "B";
    case Variant::C:
      return "C";
  }
  return "?";
}

Variant parse_variant(const std::string& s) {
  if (s == "A") return Variant::A;
  if (s == "B") return Variant::B;
  if (s == "C") return Variant::C;
  throw Error(ErrorCode::invalid_config, "unknown amplitude variant '" + s + "'");
}

CellSampler::CellSampler(const CorrectorSet& correctors, const FluxSet* flux) : c_(correctors), f_(flux) {
  if (f_ && f_->mesh != c_.mesh) throw Error(ErrorCode::incompatible_mesh, "correctors and flux correctors differ in mesh");
}

CellSample CellSampler::at(Vec2 y) const {
  CellSample s{};
  std::size_t e = 0;
  double l1 = 0.0, l2 = 0.0;
  if (!c_.mesh->locate(y, e, l1, l2)) throw Error(ErrorCode::incompatible_mesh, "cell point location failed");
  for (int k = 0; k < 2; ++k) {
    for (int g = 0; g < 2; ++g) {
      double v[2], grad[2][2];
      c_.chi[k][g].eval_in(e, l1, l2, v, grad);
      for (int b = 0; b < 2; ++b) {
        s.chi[k][g][b] = v[b];
        s.dchi[k][g][b][0] = grad[b][0];
        s.dchi[k][g][b][1] = grad[b][1];
      }
      c_.pi[k][g].eval_in(e, l1, l2, &s.pi[k][g]);
      if (f_) {
        for (int i = 0; i < 2; ++i) f_->q[i][k][g].eval_in(e, l1, l2, &s.q[i][k][g]);
      }
    }
  }
  return s;
}

Amplitude build_amplitude(const Field& u0, double eps, Variant variant, const AmplitudeOptions& opt) {
  if (!(eps > 0.0)) throw Error(ErrorCode::invalid_radius, "eps must be positive");
  Amplitude a;
  a.variant = variant;
  a.eps = eps;
  Field grad = gradient_at_quadrature(u0);
  if (variant == Variant::C) {
    a.phi = grad;
    a.dphi = quadrature_derivatives(grad);
    return a;
  }
  auto dm = std::dynamic_pointer_cast<const DomainMesh>(u0.mesh_ptr());
  if (!dm) throw Error(ErrorCode::type_mismatch, "amplitudes need a domain mesh");
  Field psi = cutoff_field(dm, opt.cutoff_factor * eps, true);
  Field g = grad;
  const std::size_t nq = g.n_nodes();
  for (int c = 0; c < 4; ++c)
    for (std::size_t t = 0; t < nq; ++t) g.at(c, t) *= psi.at(0, t);
  if (variant == Variant::B) g = smooth(g, eps);
  a.phi = smooth(g, eps);
  a.dphi = smooth_derivatives(g, eps);
  return a;
}

std::vector<ApproximantBundle> assemble_approximants(const StokesSolution& u_eps, const StokesSolution& u0,
                                                     const CorrectorSet& correctors, const FluxSet& flux, double eps,
                                                     const std::vector<Amplitude>& amplitudes) {
  const auto& mesh_ptr = u_eps.u.mesh_ptr();
  if (u0.u.mesh_ptr() != mesh_ptr || u_eps.p.mesh_ptr() != mesh_ptr || u0.p.mesh_ptr() != mesh_ptr)
    throw Error(ErrorCode::incompatible_mesh, "u_eps and u0 must live on the same mesh");
  for (const auto& a : amplitudes) {
    if (a.phi.mesh_ptr() != mesh_ptr) throw Error(ErrorCode::incompatible_mesh, "amplitude lives on another mesh");
  }
  const TriMesh& mesh = *mesh_ptr;
  const std::size_t nq = mesh.n_qp();

  Field du = add(u_eps.u, u0.u, -1.0);
  Field grad_e = gradient_at_quadrature(u_eps.u);
  Field grad_0 = gradient_at_quadrature(u0.u);
  Field dp = to_quadrature(add(u_eps.p, u0.p, -1.0));
  Field duq = to_quadrature(du);

  std::vector<ApproximantBundle> out(amplitudes.size());
  for (std::size_t v = 0; v < amplitudes.size(); ++v) {
    auto& b = out[v];
    b.variant = amplitudes[v].variant;
    b.eps = eps;
    b.phi = amplitudes[v].phi;
    b.corrector_term = Field(mesh_ptr, Rank::vector, Space::quadrature);
    b.w = Field(mesh_ptr, Rank::vector, Space::quadrature);
    b.grad_w = Field(mesh_ptr, Rank::tensor, Space::quadrature);
    b.z = Field(mesh_ptr, Rank::scalar, Space::quadrature);
    b.p_simple = Field(mesh_ptr, Rank::scalar, Space::quadrature);
    b.velocity_difference = du;
    b.grad_u_eps = grad_e;
  }

  CellSampler sampler(correctors, &flux);
  for (std::size_t t = 0; t < nq; ++t) {
    Vec2 x = mesh.qp_point(t / kQp, static_cast<int>(t % kQp));
    CellSample s = sampler.at(x * (1.0 / eps));
    for (std::size_t v = 0; v < amplitudes.size(); ++v) {
      const Amplitude& a = amplitudes[v];
      auto& b = out[v];
      double phi[2][2], dphi[2][2][2];  // phi[k][gamma], dphi[j][k][gamma]
      for (int k = 0; k < 2; ++k) {
        for (int g = 0; g < 2; ++g) {
          phi[k][g] = a.phi.at(2 * g + k, t);
          for (int j = 0; j < 2; ++j) dphi[j][k][g] = a.dphi[j].at(2 * g + k, t);
        }
      }
      double p_corr = 0.0, q_corr = 0.0;
      for (int k = 0; k < 2; ++k) {
        for (int g = 0; g < 2; ++g) {
          p_corr += s.pi[k][g] * phi[k][g];
          for (int i = 0; i < 2; ++i) q_corr += s.q[i][k][g] * dphi[i][k][g];
        }
      }
      b.p_simple.at(0, t) = dp.at(0, t) - p_corr;
      b.z.at(0, t) = dp.at(0, t) - p_corr - eps * q_corr;
      for (int beta = 0; beta < 2; ++beta) {
        double ct = 0.0;
        double gw[2] = {0.0, 0.0};
        for (int k = 0; k < 2; ++k) {
          for (int g = 0; g < 2; ++g) {
            ct += s.chi[k][g][beta] * phi[k][g];
            for (int j = 0; j < 2; ++j) gw[j] += s.dchi[k][g][beta][j] * phi[k][g] + eps * s.chi[k][g][beta] * dphi[j][k][g];
          }
        }
        b.corrector_term.at(beta, t) = ct;
        b.w.at(beta, t) = duq.at(beta, t) - eps * ct;
        for (int j = 0; j < 2; ++j)
          b.grad_w.at(2 * beta + j, t) = grad_e.at(2 * beta + j, t) - grad_0.at(2 * beta + j, t) - gw[j];
      }
    }
  }
  return out;
}

ApproximantBundle assemble_approximant(const StokesSolution& u_eps, const StokesSolution& u0,
                                       const CorrectorSet& correctors, const FluxSet& flux, double eps,
                                       Variant variant, const AmplitudeOptions& opt) {
  std::vector<Amplitude> amps{build_amplitude(u0.u, eps, variant, opt)};
  return std::move(assemble_approximants(u_eps, u0, correctors, flux, eps, amps).front());
}

namespace {

struct BundleNorms {
  double h1_w, l2_w, quot_z, quot_p_simple;
};

BundleNorms bundle_norms(const ApproximantBundle& b) {
  BundleNorms n{};
  n.l2_w = norm(b.w, NormKind::L2());
  double gw = norm(b.grad_w, NormKind::L2());
  n.h1_w = std::sqrt(n.l2_w * n.l2_w + gw * gw);
  n.quot_z = norm(b.z, NormKind::L2_quotient());
  n.quot_p_simple = norm(b.p_simple, NormKind::L2_quotient());
  return n;
}

}  // namespace

ErrorRecord error_record(const ApproximantBundle& bundle, const DataNorms& norms, double h, double guard_ratio) {
  ErrorRecord r;
  r.eps = bundle.eps;
  r.h = h;
  r.variant = variant_name(bundle.variant);
  r.l2_vel = norm(bundle.velocity_difference, NormKind::L2());
  r.l4_vel = norm(bundle.velocity_difference, NormKind::Lp(4.0));
  BundleNorms n = bundle_norms(bundle);
  r.h1_w = n.h1_w;
  r.l2_w = n.l2_w;
  r.quot_z = n.quot_z;
  r.quot_p_simple = n.quot_p_simple;
  r.grad_l4 = norm(bundle.grad_u_eps, NormKind::Lp(4.0));
  r.grad_l2 = norm(bundle.grad_u_eps, NormKind::L2());
  r.f_norm = norms.f_norm;
  r.h_norm = norms.h_norm;
  r.g_norm = norms.g_norm;
  r.guard_ratio = guard_ratio;
  r.flagged = h > bundle.eps / guard_ratio * (1.0 + 1e-12);
  return r;
}

void add_variant_errors(ErrorRecord& record, const ApproximantBundle& bundle) {
  BundleNorms n = bundle_norms(bundle);
  std::string v = variant_name(bundle.variant);
  record.extra["h1_w_" + v] = n.h1_w;
  record.extra["l2_w_" + v] = n.l2_w;
  record.extra["quot_z_" + v] = n.quot_z;
  record.extra["quot_p_simple_" + v] = n.quot_p_simple;
}

double ErrorRecord::value(const std::string& name) const {
  static const std::map<std::string, double ErrorRecord::*> fixed = {
      {"eps", &ErrorRecord::eps},         {"h", &ErrorRecord::h},
      {"l2_vel", &ErrorRecord::l2_vel},   {"l4_vel", &ErrorRecord::l4_vel},
      {"h1_w", &ErrorRecord::h1_w},       {"l2_w", &ErrorRecord::l2_w},
      {"quot_z", &ErrorRecord::quot_z},   {"quot_p_simple", &ErrorRecord::quot_p_simple},
      {"grad_l4", &ErrorRecord::grad_l4}, {"grad_l2", &ErrorRecord::grad_l2},
      {"f_norm", &ErrorRecord::f_norm},   {"h_norm", &ErrorRecord::h_norm},
      {"g_norm", &ErrorRecord::g_norm},
  };
  auto it = fixed.find(name);
  if (it != fixed.end()) return this->*(it->second);
  auto e = extra.find(name);
  if (e != extra.end()) return e->second;
  // "<norm>_<variant>" for the primary variant maps to the fixed column
  auto us = name.rfind('_');
  if (us != std::string::npos && name.substr(us + 1) == variant) {
    auto base = fixed.find(name.substr(0, us));
    if (base != fixed.end()) return this->*(base->second);
  }
  return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace homstokes
