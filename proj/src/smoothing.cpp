#include "homstokes/smoothing.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <mutex>
#include <numbers>

#include "homstokes/error.hpp"
#include "homstokes/quadrature.hpp"
#include "homstokes/simd.hpp"

namespace homstokes {

namespace {

/// int_0^1 exp(-1/s) ds by composite Simpson; the integrand is flat at 0.
double bump_radial_integral() {
  const int n = 1 << 16;
  const double h = 1.0 / n;
  auto f = [](double s) { return s > 0.0 ? std::exp(-1.0 / s) : 0.0; };
  double acc = f(0.0) + f(1.0);
  for (int i = 1; i < n; ++i) acc += (i % 2 ? 4.0 : 2.0) * f(i * h);
  return acc * h / 3.0;
}

}  // namespace

double Mollifier::unit_constant() {
  static const double c = 4.0 / (std::numbers::pi * bump_radial_integral());
  return c;
}

double Mollifier::unit(Vec2 x) {
  double t = 1.0 - 4.0 * dot(x, x);
  return t > 0.0 ? unit_constant() * std::exp(-1.0 / t) : 0.0;
}

Mollifier::Mollifier(double eps) : eps_(eps) {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw Error(ErrorCode::invalid_radius, "smoothing radius must be positive");
  scale_ = 1.0 / (eps * eps);
}

double Mollifier::operator()(Vec2 d) const { return scale_ * unit(d * (1.0 / eps_)); }

Vec2 Mollifier::gradient(Vec2 d) const {
  Vec2 y = d * (1.0 / eps_);
  double t = 1.0 - 4.0 * dot(y, y);
  if (t <= 0.0) return {};
  double z = unit_constant() * std::exp(-1.0 / t);
  double g = -8.0 * z / (t * t) * scale_ / eps_;
  return y * g;
}

namespace {

using Kernel = std::function<double(Vec2)>;

/// Sub-points of a regular m x m refinement of the reference triangle with the
/// six-point rule on each piece, and the qp-to-P2 reconstruction basis there.
struct SubRule {
  std::vector<double> l1, l2, w;
  /// basis[p * 6 + s]: value at sub-point p of the P2 polynomial equal to 1 at
  /// quadrature point s and 0 at the others.
  std::vector<double> basis;
};

const SubRule& sub_rule(int m) {
  static std::mutex mu;
  static std::vector<std::unique_ptr<SubRule>> cache;
  std::lock_guard<std::mutex> lock(mu);
  if (cache.size() <= static_cast<std::size_t>(m)) cache.resize(m + 1);
  if (cache[m]) return *cache[m];
  auto r = std::make_unique<SubRule>();
  const auto& ref = reference_tables();
  auto add_tri = [&](double a1, double a2, double b1, double b2, double c1, double c2) {
    for (int q = 0; q < kQp; ++q) {
      const auto& b = ref.bary[q];
      r->l1.push_back(b[0] * a1 + b[1] * b1 + b[2] * c1);
      r->l2.push_back(b[0] * a2 + b[1] * b2 + b[2] * c2);
      r->w.push_back(ref.w[q] / (static_cast<double>(m) * m));
    }
  };
  const double h = 1.0 / m;
  for (int a = 0; a < m; ++a) {
    for (int b = 0; a + b < m; ++b) {
      add_tri(a * h, b * h, (a + 1) * h, b * h, a * h, (b + 1) * h);
      if (a + b < m - 1) add_tri((a + 1) * h, b * h, (a + 1) * h, (b + 1) * h, a * h, (b + 1) * h);
    }
  }
  const auto& inv = ref.qp_to_p2;
  r->basis.resize(r->l1.size() * 6);
  for (std::size_t p = 0; p < r->l1.size(); ++p) {
    double phi[6];
    p2_values(r->l1[p], r->l2[p], phi);
    for (int s = 0; s < 6; ++s) {
      double v = 0.0;
      for (int a = 0; a < 6; ++a) v += phi[a] * inv[a][s];
      r->basis[p * 6 + s] = v;
    }
  }
  cache[m].reset(r.release());
  return *cache[m];
}

/// Refinement level giving sub-triangles of size about eps / 128.
int sub_level(double edge, double eps) { return std::max(1, static_cast<int>(std::ceil(128.0 * edge / eps))); }

double point_triangle_distance(Vec2 p, const std::array<Vec2, 3>& c) {
  double d0 = cross(c[1] - c[0], p - c[0]);
  double d1 = cross(c[2] - c[1], p - c[1]);
  double d2 = cross(c[0] - c[2], p - c[2]);
  bool pos = d0 >= 0 && d1 >= 0 && d2 >= 0;
  bool neg = d0 <= 0 && d1 <= 0 && d2 <= 0;
  if (pos || neg) return 0.0;
  return std::min({point_segment_distance(p, c[0], c[1]), point_segment_distance(p, c[1], c[2]),
                   point_segment_distance(p, c[2], c[0])});
}

/// Adds to out[s] the integral over triangle c of kernel(x - z) L_s(z).
void triangle_moments(Vec2 x, const std::array<Vec2, 3>& c, double area, const SubRule& rule, const Kernel& kernel,
                      double out[6]) {
  Vec2 e1 = c[1] - c[0], e2 = c[2] - c[0];
  for (std::size_t p = 0; p < rule.w.size(); ++p) {
    Vec2 z = c[0] + e1 * rule.l1[p] + e2 * rule.l2[p];
    double k = kernel(x - z);
    if (k == 0.0) continue;
    k *= rule.w[p] * area;
    const double* b = &rule.basis[p * 6];
    for (int s = 0; s < 6; ++s) out[s] += k * b[s];
  }
}

bool resolve_periodic(const TriMesh& mesh, Extension ext) {
  if (ext == Extension::automatic) return mesh.periodic;
  return ext == Extension::periodic;
}

/// Lattice convolution: the stencil depends only on the square offset and on
/// the source / target (triangle, quadrature point) types.
class LatticeConvolution {
 public:
  LatticeConvolution(const TriMesh& mesh, double radius, double eps, const Kernel& kernel) : L_(*mesh.lattice) {
    const double s = L_.s;
    R_ = static_cast<int>(std::ceil(radius / s)) + 1;
    ntap_ = 2 * R_ + 1;
    const SubRule& rule = sub_rule(sub_level(s, eps));

    // reference geometry from the first active square
    int e0 = -1;
    std::size_t sq0 = 0;
    for (std::size_t k = 0; k < L_.square_elem.size(); ++k) {
      if (L_.square_elem[k] >= 0) {
        e0 = L_.square_elem[k];
        sq0 = k;
        break;
      }
    }
    if (e0 < 0) throw Error(ErrorCode::invalid_domain, "lattice has no active squares");
    Vec2 o0{L_.origin.x + s * static_cast<double>(sq0 % L_.nx), L_.origin.y + s * static_cast<double>(sq0 / L_.nx)};
    std::array<std::array<Vec2, 3>, 2> tri;
    for (int t = 0; t < 2; ++t)
      for (int v = 0; v < 3; ++v) tri[t][v] = mesh.corners[e0 + t][v] - o0;
    std::array<Vec2, 12> target;
    for (int T = 0; T < 12; ++T) target[T] = mesh.qp_point(e0 + T / 6, T % 6) - o0;
    const double area = 0.5 * s * s;

    // full[dj][S][T][t]
    std::vector<double> full(static_cast<std::size_t>(ntap_) * 144 * ntap_, 0.0);
    for (int dj = -R_; dj <= R_; ++dj) {
      for (int di = -R_; di <= R_; ++di) {
        Vec2 shift{di * s, dj * s};
        for (int t = 0; t < 2; ++t) {
          std::array<Vec2, 3> c{tri[t][0] + shift, tri[t][1] + shift, tri[t][2] + shift};
          for (int T = 0; T < 12; ++T) {
            if (point_triangle_distance(target[T], c) >= radius) continue;
            double m[6] = {0, 0, 0, 0, 0, 0};
            triangle_moments(target[T], c, area, rule, kernel, m);
            for (int q = 0; q < 6; ++q) {
              int S = t * 6 + q;
              full[((static_cast<std::size_t>(dj + R_) * 12 + S) * 12 + T) * ntap_ + (di + R_)] = m[q];
            }
          }
        }
      }
    }
    // trim each (dj, S, target group of 3) to its nonzero tap range
    blocks_.resize(static_cast<std::size_t>(ntap_) * 12 * 4);
    for (int dj = 0; dj < ntap_; ++dj) {
      for (int S = 0; S < 12; ++S) {
        for (int g = 0; g < 4; ++g) {
          Block& b = blocks_[(static_cast<std::size_t>(dj) * 12 + S) * 4 + g];
          int lo = ntap_, hi = -1;
          for (int k = 0; k < 3; ++k) {
            const double* w = &full[((static_cast<std::size_t>(dj) * 12 + S) * 12 + 3 * g + k) * ntap_];
            for (int t = 0; t < ntap_; ++t) {
              if (w[t] != 0.0) {
                lo = std::min(lo, t);
                hi = std::max(hi, t);
              }
            }
          }
          if (hi < lo) continue;
          b.t0 = lo;
          b.nt = hi - lo + 1;
          b.w.resize(3 * b.nt);
          for (int k = 0; k < 3; ++k) {
            const double* w = &full[((static_cast<std::size_t>(dj) * 12 + S) * 12 + 3 * g + k) * ntap_];
            for (int t = 0; t < b.nt; ++t) b.w[k * b.nt + t] = w[lo + t];
          }
        }
      }
    }
  }

  /// in: quadrature-space values, nc components; out: same layout.
  void apply(const TriMesh& mesh, const std::vector<double>& in, int nc, bool periodic, std::vector<double>& out) const {
    const int nx = L_.nx, ny = L_.ny;
    const std::size_t nq = mesh.n_qp();
    const std::size_t width = static_cast<std::size_t>(nx) + 2 * R_;
    if (periodic) {
      for (int v : L_.square_elem)
        if (v < 0) throw Error(ErrorCode::incompatible_mesh, "periodic extension needs a full rectangular lattice");
    }
    auto wrap = [](int i, int n) { return ((i % n) + n) % n; };
    // src[((j * 12 + S) * nc + c) * width + R + i]
    std::vector<double> src(static_cast<std::size_t>(ny) * 12 * nc * width, 0.0);
    for (int j = 0; j < ny; ++j) {
      for (int S = 0; S < 12; ++S) {
        for (int c = 0; c < nc; ++c) {
          double* row = &src[((static_cast<std::size_t>(j) * 12 + S) * nc + c) * width];
          for (int i = -R_; i < nx + R_; ++i) {
            int ii = i;
            if (ii < 0 || ii >= nx) {
              if (!periodic) continue;
              ii = wrap(ii, nx);
            }
            int e = L_.square_elem[ii + static_cast<std::size_t>(nx) * j];
            if (e < 0) continue;
            row[R_ + i] = in[c * nq + (static_cast<std::size_t>(e) + S / 6) * kQp + S % 6];
          }
        }
      }
    }
    out.assign(nq * nc, 0.0);
    std::vector<double> acc(static_cast<std::size_t>(12) * nc * nx);
    std::vector<const double*> inp(nc);
    std::vector<double*> outp(3 * nc);
    for (int j = 0; j < ny; ++j) {
      std::fill(acc.begin(), acc.end(), 0.0);
      for (int dj = -R_; dj <= R_; ++dj) {
        int jj = j + dj;
        if (jj < 0 || jj >= ny) {
          if (!periodic) continue;
          jj = wrap(jj, ny);
        }
        for (int S = 0; S < 12; ++S) {
          for (int g = 0; g < 4; ++g) {
            const Block& b = blocks_[(static_cast<std::size_t>(dj + R_) * 12 + S) * 4 + g];
            if (b.nt == 0) continue;
            for (int c = 0; c < nc; ++c)
              inp[c] = &src[((static_cast<std::size_t>(jj) * 12 + S) * nc + c) * width] + b.t0;
            for (int k = 0; k < 3; ++k)
              for (int c = 0; c < nc; ++c) outp[k * nc + c] = &acc[((3 * g + k) * static_cast<std::size_t>(nc) + c) * nx];
            simd::stencil_row(nx, nc, 3, inp.data(), b.w.data(), b.nt, outp.data());
          }
        }
      }
      for (int i = 0; i < nx; ++i) {
        int e = L_.square_elem[i + static_cast<std::size_t>(nx) * j];
        if (e < 0) continue;
        for (int T = 0; T < 12; ++T)
          for (int c = 0; c < nc; ++c)
            out[c * nq + (static_cast<std::size_t>(e) + T / 6) * kQp + T % 6] =
                acc[(static_cast<std::size_t>(T) * nc + c) * nx + i];
      }
    }
  }

 private:
  struct Block {
    int t0 = 0;
    int nt = 0;
    std::vector<double> w;
  };
  const LatticeInfo& L_;
  int R_ = 0;
  int ntap_ = 0;
  std::vector<Block> blocks_;
};

/// Direct quadrature over the elements meeting the kernel support of each target point.
void reference_apply(const TriMesh& mesh, double radius, double eps, const Kernel& kernel, const std::vector<double>& in,
                     int nc, bool periodic, std::vector<double>& out) {
  const std::size_t ne = mesh.n_elements(), nq = mesh.n_qp();
  Vec2 lo{1e300, 1e300}, hi{-1e300, -1e300};
  double max_edge = 0.0;
  for (const auto& c : mesh.corners) {
    for (int v = 0; v < 3; ++v) {
      lo = {std::min(lo.x, c[v].x), std::min(lo.y, c[v].y)};
      hi = {std::max(hi.x, c[v].x), std::max(hi.y, c[v].y)};
      max_edge = std::max(max_edge, length(c[(v + 1) % 3] - c[v]));
    }
  }
  Vec2 period = hi - lo;
  if (periodic && std::abs(mesh.measure() - period.x * period.y) > 1e-9 * period.x * period.y)
    throw Error(ErrorCode::incompatible_mesh, "periodic extension needs a mesh filling its bounding box");

  // element buckets
  const double bs = std::max(radius, max_edge);
  const int bx = std::max(1, static_cast<int>(std::ceil(period.x / bs)));
  const int by = std::max(1, static_cast<int>(std::ceil(period.y / bs)));
  std::vector<std::vector<int>> buckets(static_cast<std::size_t>(bx) * by);
  auto cell = [&](double v, double l, int n) {
    return std::clamp(static_cast<int>(std::floor((v - l) / bs)), 0, n - 1);
  };
  for (std::size_t e = 0; e < ne; ++e) {
    const auto& c = mesh.corners[e];
    double x0 = std::min({c[0].x, c[1].x, c[2].x}), x1 = std::max({c[0].x, c[1].x, c[2].x});
    double y0 = std::min({c[0].y, c[1].y, c[2].y}), y1 = std::max({c[0].y, c[1].y, c[2].y});
    for (int j = cell(y0, lo.y, by); j <= cell(y1, lo.y, by); ++j)
      for (int i = cell(x0, lo.x, bx); i <= cell(x1, lo.x, bx); ++i)
        buckets[i + static_cast<std::size_t>(bx) * j].push_back(static_cast<int>(e));
  }

  out.assign(nq * nc, 0.0);
  std::vector<int> stamp(ne, -1);
  const int shifts = periodic ? 1 : 0;
  std::vector<double> local(nc);
  for (std::size_t t = 0; t < nq; ++t) {
    Vec2 x0 = mesh.qp_point(t / kQp, static_cast<int>(t % kQp));
    std::fill(local.begin(), local.end(), 0.0);
    for (int sy = -shifts; sy <= shifts; ++sy) {
      for (int sx = -shifts; sx <= shifts; ++sx) {
        // source copy translated by (sx, sy) periods: evaluate at x0 - shift
        Vec2 x{x0.x - sx * period.x, x0.y - sy * period.y};
        if (x.x + radius < lo.x || x.x - radius > hi.x || x.y + radius < lo.y || x.y - radius > hi.y) continue;
        int stamp_id = static_cast<int>(t * 9 + (sy + 1) * 3 + (sx + 1));
        for (int j = cell(x.y - radius, lo.y, by); j <= cell(x.y + radius, lo.y, by); ++j) {
          for (int i = cell(x.x - radius, lo.x, bx); i <= cell(x.x + radius, lo.x, bx); ++i) {
            for (int e : buckets[i + static_cast<std::size_t>(bx) * j]) {
              if (stamp[e] == stamp_id) continue;
              stamp[e] = stamp_id;
              const auto& c = mesh.corners[e];
              if (point_triangle_distance(x, c) >= radius) continue;
              double edge = std::max({length(c[1] - c[0]), length(c[2] - c[1]), length(c[0] - c[2])});
              double m[6] = {0, 0, 0, 0, 0, 0};
              triangle_moments(x, c, mesh.area[e], sub_rule(sub_level(edge / std::sqrt(2.0), eps)), kernel, m);
              for (int ch = 0; ch < nc; ++ch) {
                double v = 0.0;
                for (int q = 0; q < kQp; ++q) v += m[q] * in[ch * nq + e * kQp + q];
                local[ch] += v;
              }
            }
          }
        }
      }
    }
    for (int ch = 0; ch < nc; ++ch) out[ch * nq + t] = local[ch];
  }
}

std::vector<double> convolve(const Field& fq, double eps, const Kernel& kernel, const SmoothingOptions& opt) {
  const TriMesh& mesh = fq.mesh();
  const bool periodic = resolve_periodic(mesh, opt.extension);
  const double radius = 0.5 * eps;
  std::vector<double> out;
  if (opt.use_lattice && mesh.lattice) {
    LatticeConvolution conv(mesh, radius, eps, kernel);
    conv.apply(mesh, fq.values(), fq.components(), periodic, out);
  } else {
    reference_apply(mesh, radius, eps, kernel, fq.values(), fq.components(), periodic, out);
  }
  return out;
}

}  // namespace

Field smooth(const Field& f, double eps, const SmoothingOptions& opt) {
  Mollifier z(eps);
  Field fq = to_quadrature(f);
  auto out = convolve(fq, eps, [&](Vec2 d) { return z(d); }, opt);
  return Field(f.mesh_ptr(), f.rank(), Space::quadrature, std::move(out));
}

std::array<Field, 2> smooth_derivatives(const Field& f, double eps, const SmoothingOptions& opt) {
  Mollifier z(eps);
  Field fq = to_quadrature(f);
  auto gx = convolve(fq, eps, [&](Vec2 d) { return z.gradient(d).x; }, opt);
  auto gy = convolve(fq, eps, [&](Vec2 d) { return z.gradient(d).y; }, opt);
  return {Field(f.mesh_ptr(), f.rank(), Space::quadrature, std::move(gx)),
          Field(f.mesh_ptr(), f.rank(), Space::quadrature, std::move(gy))};
}

Field smooth_gradient(const Field& f, double eps, const SmoothingOptions& opt) {
  if (f.rank() == Rank::tensor) throw Error(ErrorCode::type_mismatch, "gradient of a tensor field is not supported");
  auto d = smooth_derivatives(f, eps, opt);
  const int nc = f.components();
  const std::size_t nq = d[0].n_nodes();
  Field g(f.mesh_ptr(), f.rank() == Rank::scalar ? Rank::vector : Rank::tensor, Space::quadrature);
  for (int c = 0; c < nc; ++c) {
    for (std::size_t t = 0; t < nq; ++t) {
      g.at(2 * c, t) = d[0].at(c, t);
      g.at(2 * c + 1, t) = d[1].at(c, t);
    }
  }
  return g;
}

double cutoff_value(const DomainMesh& mesh, double r, Vec2 x) {
  return std::clamp((mesh.delta(x) - r) / r, 0.0, 1.0);
}

Vec2 cutoff_gradient_value(const DomainMesh& mesh, double r, Vec2 x) {
  double d = mesh.delta(x);
  if (d <= r || d >= 2.0 * r || d <= 0.0) return {};
  Vec2 n = x - polygon_nearest_point(mesh.spec.vertices, x);
  return n * (1.0 / (length(n) * r));
}

namespace {

void check_layer(const DomainMesh& mesh, double r, bool allow_empty_plateau) {
  double limit = allow_empty_plateau ? mesh.inradius : 0.5 * mesh.inradius;
  bool ok = r > 0.0 && (allow_empty_plateau ? r <= limit * (1 + 1e-12) : r < limit);
  if (!ok)
    throw Error(ErrorCode::invalid_layer, "cut-off width " + std::to_string(r) + " outside the admissible range (0, " +
                                              std::to_string(limit) + ")");
}

}  // namespace

Field cutoff_field(const std::shared_ptr<const DomainMesh>& mesh, double r, bool allow_empty_plateau) {
  check_layer(*mesh, r, allow_empty_plateau);
  Field psi(mesh, Rank::scalar, Space::quadrature);
  for (std::size_t t = 0; t < mesh->n_qp(); ++t) psi.at(0, t) = std::clamp((mesh->qp_delta[t] - r) / r, 0.0, 1.0);
  return psi;
}

Field cutoff_gradient(const std::shared_ptr<const DomainMesh>& mesh, double r, bool allow_empty_plateau) {
  check_layer(*mesh, r, allow_empty_plateau);
  Field g(mesh, Rank::vector, Space::quadrature);
  for (std::size_t t = 0; t < mesh->n_qp(); ++t) {
    Vec2 v = cutoff_gradient_value(*mesh, r, mesh->qp_point(t / kQp, static_cast<int>(t % kQp)));
    g.at(0, t) = v.x;
    g.at(1, t) = v.y;
  }
  return g;
}

double smoothing_estimate_ratio(const Field& rho, const Field& psi, double eps) {
  if (rho.rank() != Rank::scalar) throw Error(ErrorCode::type_mismatch, "rho must be scalar");
  if (!rho.mesh().periodic) throw Error(ErrorCode::incompatible_mesh, "rho must live on a periodic cell mesh");
  double psi_norm = norm(psi, NormKind::L2());
  double rho_norm = norm(rho, NormKind::L2());
  if (!(psi_norm > 0.0) || !(rho_norm > 0.0))
    throw Error(ErrorCode::undefined_ratio, "smoothing estimate ratio with a vanishing norm");
  Field s = smooth(psi, eps, {Extension::zero, true});
  const TriMesh& mesh = psi.mesh();
  const int nc = s.components();
  double acc = 0.0;
  for (std::size_t t = 0; t < mesh.n_qp(); ++t) {
    Vec2 x = mesh.qp_point(t / kQp, static_cast<int>(t % kQp));
    double rv = 0.0;
    rho.eval(x * (1.0 / eps), &rv);
    double m2 = 0.0;
    for (int c = 0; c < nc; ++c) m2 += s.at(c, t) * s.at(c, t);
    acc += mesh.qp_w[t] * rv * rv * m2;
  }
  return std::sqrt(acc) / (rho_norm * psi_norm);
}

}  // namespace homstokes
