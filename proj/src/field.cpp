#include "homstokes/field.hpp"

#include <cmath>

#include "homstokes/error.hpp"
#include "homstokes/simd.hpp"

namespace homstokes {

const char* rank_name(Rank r) {
  switch (r) {
    case Rank::scalar:
      return "scalar";
    case Rank::vector:
      return "vector";
    case Rank::tensor:
      return "tensor";
  }
  return "scalar";
}

const char* space_name(Space s) {
  switch (s) {
    case Space::velocity:
      return "velocity";
    case Space::pressure:
      return "pressure";
    case Space::quadrature:
      return "quadrature";
  }
  return "velocity";
}

std::size_t space_size(const TriMesh& mesh, Space space) {
  switch (space) {
    case Space::velocity:
      return static_cast<std::size_t>(mesh.n_p2);
    case Space::pressure:
      return static_cast<std::size_t>(mesh.n_p1);
    case Space::quadrature:
      return mesh.n_qp();
  }
  return 0;
}

Field::Field(std::shared_ptr<const TriMesh> mesh, Rank rank, Space space)
    : mesh_(std::move(mesh)), rank_(rank), space_(space) {
  n_nodes_ = space_size(*mesh_, space_);
  values_.assign(n_nodes_ * components(), 0.0);
}

Field::Field(std::shared_ptr<const TriMesh> mesh, Rank rank, Space space, std::vector<double> values)
    : mesh_(std::move(mesh)), rank_(rank), space_(space), values_(std::move(values)) {
  n_nodes_ = space_size(*mesh_, space_);
  if (values_.size() != n_nodes_ * components()) {
    throw Error(ErrorCode::type_mismatch, "dof count does not match mesh, rank and space");
  }
  for (double v : values_) {
    if (!std::isfinite(v)) throw Error(ErrorCode::type_mismatch, "field values must be finite");
  }
}

void Field::qp_value(std::size_t e, int q, double* out) const {
  int nc = components();
  if (space_ == Space::quadrature) {
    for (int c = 0; c < nc; ++c) out[c] = at(c, e * kQp + q);
    return;
  }
  const auto& ref = reference_tables();
  for (int c = 0; c < nc; ++c) {
    double s = 0.0;
    if (space_ == Space::velocity) {
      const auto& d = mesh_->p2_dofs[e];
      for (int a = 0; a < 6; ++a) s += ref.p2[q][a] * at(c, d[a]);
    } else {
      const auto& d = mesh_->p1_dofs[e];
      for (int a = 0; a < 3; ++a) s += ref.p1[q][a] * at(c, d[a]);
    }
    out[c] = s;
  }
}

void Field::qp_gradient(std::size_t e, int q, double (*out)[2]) const {
  int nc = components();
  if (space_ == Space::quadrature) {
    throw Error(ErrorCode::type_mismatch, "quadrature-space fields carry no gradient");
  }
  if (space_ == Space::velocity) {
    double g[6][2];
    mesh_->p2_gradients(e, q, g);
    const auto& d = mesh_->p2_dofs[e];
    for (int c = 0; c < nc; ++c) {
      double gx = 0.0, gy = 0.0;
      for (int a = 0; a < 6; ++a) {
        double v = at(c, d[a]);
        gx += g[a][0] * v;
        gy += g[a][1] * v;
      }
      out[c][0] = gx;
      out[c][1] = gy;
    }
  } else {
    double g[3][2];
    mesh_->p1_gradients(e, g);
    const auto& d = mesh_->p1_dofs[e];
    for (int c = 0; c < nc; ++c) {
      double gx = 0.0, gy = 0.0;
      for (int a = 0; a < 3; ++a) {
        double v = at(c, d[a]);
        gx += g[a][0] * v;
        gy += g[a][1] * v;
      }
      out[c][0] = gx;
      out[c][1] = gy;
    }
  }
}

bool Field::eval(Vec2 p, double* out, double (*grad)[2]) const {
  std::size_t e = 0;
  double l1 = 0.0, l2 = 0.0;
  if (!mesh_->locate(p, e, l1, l2)) return false;
  eval_in(e, l1, l2, out, grad);
  return true;
}

void Field::eval_in(std::size_t e, double l1, double l2, double* out, double (*grad)[2]) const {
  int nc = components();
  const auto& m = mesh_->jinvt[e];
  if (space_ == Space::pressure) {
    const auto& d = mesh_->p1_dofs[e];
    double b[3] = {1.0 - l1 - l2, l1, l2};
    double g[3][2];
    mesh_->p1_gradients(e, g);
    for (int c = 0; c < nc; ++c) {
      double s = 0.0, gx = 0.0, gy = 0.0;
      for (int a = 0; a < 3; ++a) {
        double v = at(c, d[a]);
        s += b[a] * v;
        gx += g[a][0] * v;
        gy += g[a][1] * v;
      }
      out[c] = s;
      if (grad) {
        grad[c][0] = gx;
        grad[c][1] = gy;
      }
    }
    return;
  }
  double phi[6], dref[6][2];
  p2_values(l1, l2, phi);
  p2_ref_gradients(l1, l2, dref);
  double coef[6];
  for (int c = 0; c < nc; ++c) {
    if (space_ == Space::velocity) {
      const auto& d = mesh_->p2_dofs[e];
      for (int a = 0; a < 6; ++a) coef[a] = at(c, d[a]);
    } else {
      const auto& inv = reference_tables().qp_to_p2;
      for (int a = 0; a < 6; ++a) {
        double s = 0.0;
        for (int q = 0; q < kQp; ++q) s += inv[a][q] * at(c, e * kQp + q);
        coef[a] = s;
      }
    }
    double s = 0.0, rx = 0.0, ry = 0.0;
    for (int a = 0; a < 6; ++a) {
      s += phi[a] * coef[a];
      rx += dref[a][0] * coef[a];
      ry += dref[a][1] * coef[a];
    }
    out[c] = s;
    if (grad) {
      grad[c][0] = m[0] * rx + m[1] * ry;
      grad[c][1] = m[2] * rx + m[3] * ry;
    }
  }
}

Field interpolate(std::shared_ptr<const TriMesh> mesh, Rank rank, Space space, const PointFunction& f) {
  Field out(mesh, rank, space);
  int nc = out.components();
  double buf[4];
  if (space == Space::quadrature) {
    for (std::size_t e = 0; e < mesh->n_elements(); ++e) {
      for (int q = 0; q < kQp; ++q) {
        f(mesh->qp_point(e, q), buf);
        for (int c = 0; c < nc; ++c) out.at(c, e * kQp + q) = buf[c];
      }
    }
    return out;
  }
  const auto& pts = space == Space::velocity ? mesh->p2_points : mesh->p1_points;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    f(pts[i], buf);
    for (int c = 0; c < nc; ++c) out.at(c, i) = buf[c];
  }
  return out;
}

Field to_quadrature(const Field& f) {
  if (f.space() == Space::quadrature) return f;
  Field out(f.mesh_ptr(), f.rank(), Space::quadrature);
  int nc = f.components();
  double buf[4];
  for (std::size_t e = 0; e < f.mesh().n_elements(); ++e) {
    for (int q = 0; q < kQp; ++q) {
      f.qp_value(e, q, buf);
      for (int c = 0; c < nc; ++c) out.at(c, e * kQp + q) = buf[c];
    }
  }
  return out;
}

Field gradient_at_quadrature(const Field& f) {
  if (f.rank() != Rank::vector) throw Error(ErrorCode::type_mismatch, "gradient tensor needs a vector field");
  Field out(f.mesh_ptr(), Rank::tensor, Space::quadrature);
  double g[2][2];
  for (std::size_t e = 0; e < f.mesh().n_elements(); ++e) {
    for (int q = 0; q < kQp; ++q) {
      f.qp_gradient(e, q, g);
      std::size_t k = e * kQp + q;
      out.at(0, k) = g[0][0];
      out.at(1, k) = g[0][1];
      out.at(2, k) = g[1][0];
      out.at(3, k) = g[1][1];
    }
  }
  return out;
}

std::array<Field, 2> quadrature_derivatives(const Field& f) {
  if (f.space() != Space::quadrature) throw Error(ErrorCode::type_mismatch, "expected a quadrature-space field");
  const TriMesh& mesh = f.mesh();
  const auto& ref = reference_tables();
  std::array<Field, 2> out{Field(f.mesh_ptr(), f.rank(), Space::quadrature),
                           Field(f.mesh_ptr(), f.rank(), Space::quadrature)};
  const int nc = f.components();
  for (std::size_t e = 0; e < mesh.n_elements(); ++e) {
    const auto& m = mesh.jinvt[e];
    for (int c = 0; c < nc; ++c) {
      double coef[6];
      for (int a = 0; a < 6; ++a) {
        double s = 0.0;
        for (int q = 0; q < kQp; ++q) s += ref.qp_to_p2[a][q] * f.at(c, e * kQp + q);
        coef[a] = s;
      }
      for (int q = 0; q < kQp; ++q) {
        double rx = 0.0, ry = 0.0;
        for (int a = 0; a < 6; ++a) {
          rx += ref.dp2[q][a][0] * coef[a];
          ry += ref.dp2[q][a][1] * coef[a];
        }
        out[0].at(c, e * kQp + q) = m[0] * rx + m[1] * ry;
        out[1].at(c, e * kQp + q) = m[2] * rx + m[3] * ry;
      }
    }
  }
  return out;
}

Field transfer(const Field& f, std::shared_ptr<const TriMesh> target) {
  Field out(target, f.rank(), f.space());
  const int nc = f.components();
  double buf[4];
  auto put = [&](std::size_t node, Vec2 p) {
    if (!f.eval(p, buf)) throw Error(ErrorCode::incompatible_mesh, "target point outside the source mesh");
    for (int c = 0; c < nc; ++c) out.at(c, node) = buf[c];
  };
  if (f.space() == Space::velocity) {
    for (std::size_t i = 0; i < target->p2_points.size(); ++i) put(i, target->p2_points[i]);
  } else if (f.space() == Space::pressure) {
    for (std::size_t i = 0; i < target->p1_points.size(); ++i) put(i, target->p1_points[i]);
  } else {
    for (std::size_t e = 0; e < target->n_elements(); ++e)
      for (int q = 0; q < kQp; ++q) put(e * kQp + q, target->qp_point(e, q));
  }
  return out;
}

Field add(const Field& a, const Field& b, double scale_b) {
  if (a.mesh_ptr() != b.mesh_ptr() || a.rank() != b.rank() || a.space() != b.space()) {
    throw Error(ErrorCode::type_mismatch, "fields differ in mesh, rank or space");
  }
  Field out = a;
  for (std::size_t i = 0; i < out.values().size(); ++i) out.values()[i] += scale_b * b.values()[i];
  return out;
}

Field scaled(const Field& a, double s) {
  Field out = a;
  for (double& v : out.values()) v *= s;
  return out;
}

Field plus_constant(const Field& a, double c) {
  Field out = a;
  for (double& v : out.values()) v += c;
  return out;
}

namespace {

/// Component values at all quadrature points, one contiguous array per component.
std::vector<std::vector<double>> qp_arrays(const Field& f) {
  Field q = to_quadrature(f);
  std::size_t n = q.n_nodes();
  std::vector<std::vector<double>> out(q.components());
  for (int c = 0; c < q.components(); ++c) {
    out[c].assign(q.values().begin() + c * n, q.values().begin() + (c + 1) * n);
  }
  return out;
}

const DomainMesh& require_domain(const Field& f) {
  const auto* dm = dynamic_cast<const DomainMesh*>(&f.mesh());
  if (!dm) throw Error(ErrorCode::type_mismatch, "layer regions need a domain mesh");
  return *dm;
}

void check_layer(const DomainMesh& dm, double r) {
  if (!(r > 0.0) || r >= dm.inradius) {
    throw Error(ErrorCode::invalid_layer, "layer width must lie in (0, inradius)");
  }
}

}  // namespace

std::vector<double> component_means(const Field& f) {
  auto arr = qp_arrays(f);
  const auto& w = f.mesh().qp_w;
  double vol = 0.0;
  for (double x : w) vol += x;
  std::vector<double> means(arr.size(), 0.0);
  for (std::size_t c = 0; c < arr.size(); ++c) {
    double s = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * arr[c][i];
    means[c] = s / vol;
  }
  return means;
}

double norm(const Field& f, const NormKind& kind) {
  const auto& w = f.mesh().qp_w;
  std::size_t n = w.size();
  using K = NormKind::Kind;
  switch (kind.kind) {
    case K::l2:
    case K::lp:
    case K::l2_quotient: {
      if (kind.kind == K::lp && !(kind.p >= 1.0)) throw Error(ErrorCode::type_mismatch, "Lp norm needs p >= 1");
      auto arr = qp_arrays(f);
      if (kind.kind == K::l2_quotient) {
        auto means = component_means(f);
        for (std::size_t c = 0; c < arr.size(); ++c) {
          for (double& v : arr[c]) v -= means[c];
        }
      }
      std::vector<const double*> ptr;
      for (const auto& a : arr) ptr.push_back(a.data());
      double p = kind.kind == K::lp ? kind.p : 2.0;
      double s = simd::weighted_sum_pow(w.data(), ptr.data(), static_cast<int>(ptr.size()), n, p);
      return std::pow(s, 1.0 / p);
    }
    case K::h1: {
      if (!f.has_gradient()) throw Error(ErrorCode::type_mismatch, "H1 norm needs a velocity or pressure field");
      auto arr = qp_arrays(f);
      double s = 0.0;
      for (const auto& a : arr) s += simd::weighted_sum_sq(w.data(), a.data(), n);
      double g[4][2];
      int nc = f.components();
      for (std::size_t e = 0; e < f.mesh().n_elements(); ++e) {
        for (int q = 0; q < kQp; ++q) {
          f.qp_gradient(e, q, g);
          double m2 = 0.0;
          for (int c = 0; c < nc; ++c) m2 += g[c][0] * g[c][0] + g[c][1] * g[c][1];
          s += w[e * kQp + q] * m2;
        }
      }
      return std::sqrt(s);
    }
    case K::l2_layer_weighted: {
      const DomainMesh& dm = require_domain(f);
      check_layer(dm, kind.r);
      if (kind.power != 1 && kind.power != -1) throw Error(ErrorCode::type_mismatch, "weight power must be +1 or -1");
      auto arr = qp_arrays(f);
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        double d = dm.qp_delta[i];
        bool in_layer = d <= kind.r;
        if (in_layer != (kind.region == NormKind::Region::layer)) continue;
        double m2 = 0.0;
        for (const auto& a : arr) m2 += a[i] * a[i];
        s += w[i] * m2 * (kind.power == 1 ? d : 1.0 / d);
      }
      return std::sqrt(s);
    }
  }
  return 0.0;
}

double integrate(const Field& f, Region region) {
  if (f.rank() != Rank::scalar) throw Error(ErrorCode::type_mismatch, "integrate expects a scalar field");
  auto arr = qp_arrays(f);
  const auto& w = f.mesh().qp_w;
  const DomainMesh* dm = nullptr;
  if (region.kind != Region::Kind::all) {
    dm = &require_domain(f);
    check_layer(*dm, region.r);
  }
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (dm) {
      bool in_layer = dm->qp_delta[i] <= region.r;
      if (in_layer != (region.kind == Region::Kind::layer)) continue;
    }
    s += w[i] * arr[0][i];
  }
  return s;
}

Field distance_field(const std::shared_ptr<const DomainMesh>& mesh, Space space) {
  if (space == Space::quadrature) {
    Field out(mesh, Rank::scalar, Space::quadrature);
    out.values() = mesh->qp_delta;
    return out;
  }
  Field out = interpolate(mesh, Rank::scalar, space, [&](Vec2 p, double* v) { v[0] = mesh->delta(p); });
  if (space == Space::velocity) {
    for (int i : mesh->boundary_p2) out.at(0, i) = 0.0;
  }
  return out;
}

}  // namespace homstokes
