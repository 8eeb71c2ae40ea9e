#include "homstokes/saddle.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <mutex>
#include <numeric>
#include <string>

#include <cholmod.h>

#include "homstokes/error.hpp"

namespace homstokes {

void Csr::mult(const double* x, double* y) const {
  for (int r = 0; r < nrows; ++r) {
    double s = 0.0;
    for (std::int64_t k = ptr[r]; k < ptr[r + 1]; ++k) s += val[k] * x[idx[k]];
    y[r] = s;
  }
}

void Csr::mult_transpose_add(const double* x, double* y) const {
  for (int r = 0; r < nrows; ++r) {
    double xr = x[r];
    if (xr == 0.0) continue;
    for (std::int64_t k = ptr[r]; k < ptr[r + 1]; ++k) y[idx[k]] += val[k] * xr;
  }
}

void symmetric_mult(const Csr& lower, const double* x, double* y) {
  std::fill(y, y + lower.nrows, 0.0);
  for (int r = 0; r < lower.nrows; ++r) {
    double s = 0.0;
    for (std::int64_t k = lower.ptr[r]; k < lower.ptr[r + 1]; ++k) {
      int c = lower.idx[k];
      s += lower.val[k] * x[c];
      if (c != r) y[c] += lower.val[k] * x[r];
    }
    y[r] += s;
  }
}

extern "C" {
void dgemm_(const char*, const char*, const int*, const int*, const int*, const double*, const double*, const int*,
            const double*, const int*, const double*, double*, const int*);
void dtrsm_(const char*, const char*, const char*, const char*, const int*, const int*, const double*, const double*,
            const int*, double*, const int*);
void dpotrf_(const char*, const int*, double*, const int*, int*);
}

namespace {

// Some optimized BLAS builds pick kernels the host executes incorrectly; the
// supernodal factorization is only used when the dense kernels it calls agree
// with plain loops on small problems.
bool dense_kernels_agree() {
  const int n = 300;
  std::vector<double> a(n * n), b(n * n), c(n * n, 0.0);
  std::uint64_t state = 88172645463325252ull;
  auto next = [&state] {
    state ^= state << 13;
    state ^= state >> 7;
    state ^= state << 17;
    return static_cast<double>(state >> 11) * 0x1.0p-53 - 0.5;
  };
  for (double& x : a) x = next();
  for (double& x : b) x = next();
  const double one = 1.0, zero = 0.0;
  dgemm_("N", "N", &n, &n, &n, &one, a.data(), &n, b.data(), &n, &zero, c.data(), &n);
  for (int j = 0; j < n; j += 7) {
    for (int i = 0; i < n; ++i) {
      double s = 0.0;
      for (int k = 0; k < n; ++k) s += a[i + k * n] * b[k + j * n];
      if (std::abs(s - c[i + j * n]) > 1e-10) return false;
    }
  }
  const int m = 120;
  std::vector<double> l(m * m, 0.0), x(m * m), rhs(m * m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < i; ++j) l[i + j * m] = 0.1 * next();
    l[i + i * m] = 2.0;
  }
  for (double& v : rhs) v = next();
  x = rhs;
  dtrsm_("L", "L", "N", "N", &m, &m, &one, l.data(), &m, x.data(), &m);
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < m; ++i) {
      double s = 0.0;
      for (int k = 0; k <= i; ++k) s += l[i + k * m] * x[k + j * m];
      if (std::abs(s - rhs[i + j * m]) > 1e-10) return false;
    }
  }
  std::vector<double> spd(m * m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      double s = 0.0;
      for (int k = 0; k < m; ++k) s += rhs[i + k * m] * rhs[j + k * m];
      spd[i + j * m] = s + (i == j ? 1.0 : 0.0);
    }
  }
  int info = 0;
  dpotrf_("L", &m, spd.data(), &m, &info);
  return info == 0;
}

}  // namespace

bool supernodal_enabled() {
  static const bool enabled = [] {
    const char* mode = std::getenv("HOMSTOKES_CHOLMOD");
    std::string m = mode ? mode : "auto";
    if (m == "simplicial") return false;
    if (m == "supernodal") return true;
    return dense_kernels_agree();
  }();
  return enabled;
}

struct SparseCholesky::Impl {
  mutable cholmod_common common;
  // cholmod_common holds solve workspace, so concurrent solves are serialized
  mutable std::mutex mutex;
  cholmod_factor* factor = nullptr;
};

SparseCholesky::SparseCholesky(const Csr& lower) : impl_(std::make_unique<Impl>()), n_(lower.nrows) {
  cholmod_common& c = impl_->common;
  cholmod_l_start(&c);
  c.supernodal = supernodal_enabled() ? CHOLMOD_SUPERNODAL : CHOLMOD_SIMPLICIAL;
  c.print = 0;
  c.error_handler = nullptr;
  std::int64_t nnz = lower.ptr.empty() ? 0 : lower.ptr.back();
  cholmod_sparse* a = cholmod_l_allocate_sparse(n_, n_, nnz, 1, 1, 1, CHOLMOD_REAL, &c);
  if (!a) throw Error(ErrorCode::solver_failure, "out of memory allocating the sparse matrix");
  auto* ap = static_cast<SuiteSparse_long*>(a->p);
  auto* ai = static_cast<SuiteSparse_long*>(a->i);
  auto* ax = static_cast<double*>(a->x);
  for (int r = 0; r <= n_; ++r) ap[r] = lower.ptr[r];
  for (std::int64_t k = 0; k < nnz; ++k) {
    ai[k] = lower.idx[k];
    ax[k] = lower.val[k];
  }
  impl_->factor = cholmod_l_analyze(a, &c);
  if (!impl_->factor) {
    cholmod_l_free_sparse(&a, &c);
    throw Error(ErrorCode::solver_failure, "symbolic factorization failed");
  }
  cholmod_l_factorize(a, impl_->factor, &c);
  cholmod_l_free_sparse(&a, &c);
  if (c.status != CHOLMOD_OK || impl_->factor->minor < static_cast<std::size_t>(n_)) {
    throw Error(ErrorCode::solver_failure, "Cholesky factorization failed at column " +
                                               std::to_string(impl_->factor->minor) + " of " + std::to_string(n_) +
                                               " (status " + std::to_string(c.status) + ")");
  }
  factor_nnz_ = impl_->factor->is_super ? static_cast<std::int64_t>(impl_->factor->xsize)
                                        : static_cast<std::int64_t>(impl_->factor->nzmax);
  flops_ = c.fl;
}

SparseCholesky::~SparseCholesky() {
  if (impl_) {
    if (impl_->factor) cholmod_l_free_factor(&impl_->factor, &impl_->common);
    cholmod_l_finish(&impl_->common);
  }
}

void SparseCholesky::solve(double* b, int ncol) const {
  if (n_ == 0) return;
  std::lock_guard<std::mutex> lock(impl_->mutex);
  cholmod_dense rhs{};
  rhs.nrow = n_;
  rhs.ncol = ncol;
  rhs.nzmax = static_cast<std::size_t>(n_) * ncol;
  rhs.d = n_;
  rhs.x = b;
  rhs.xtype = CHOLMOD_REAL;
  rhs.dtype = CHOLMOD_DOUBLE;
  cholmod_dense* x = cholmod_l_solve(CHOLMOD_A, impl_->factor, &rhs, &impl_->common);
  if (!x) throw Error(ErrorCode::solver_failure, "triangular solve failed");
  std::copy_n(static_cast<double*>(x->x), static_cast<std::size_t>(n_) * ncol, b);
  cholmod_l_free_dense(&x, &impl_->common);
}

double QpCoefficient::mean_diagonal(std::size_t k) const {
  if (scalar) return a[k];
  const Tensor4& m = t[k];
  return 0.25 * (m.v[0] + m.v[5] + m.v[10] + m.v[15]);
}

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// CSR pattern from per-row sorted unique column lists.
Csr pattern_from_lists(std::vector<std::vector<int>>& lists, int ncols) {
  Csr m;
  m.nrows = static_cast<int>(lists.size());
  m.ncols = ncols;
  m.ptr.assign(lists.size() + 1, 0);
  for (std::size_t r = 0; r < lists.size(); ++r) {
    auto& l = lists[r];
    std::sort(l.begin(), l.end());
    l.erase(std::unique(l.begin(), l.end()), l.end());
    m.ptr[r + 1] = m.ptr[r] + static_cast<std::int64_t>(l.size());
  }
  m.idx.resize(m.ptr.back());
  for (std::size_t r = 0; r < lists.size(); ++r) {
    std::copy(lists[r].begin(), lists[r].end(), m.idx.begin() + m.ptr[r]);
    std::vector<int>().swap(lists[r]);
  }
  m.val.assign(m.idx.size(), 0.0);
  return m;
}

inline double& entry(Csr& m, int r, int c) {
  auto first = m.idx.begin() + m.ptr[r], last = m.idx.begin() + m.ptr[r + 1];
  auto it = std::lower_bound(first, last, c);
  return m.val[it - m.idx.begin()];
}

/// Element matrices: velocity stiffness ke[(alpha,a)][(beta,b)] (12x12, alpha-major)
/// and divergence de[r][(alpha,a)] (3x12).
void element_matrices(const TriMesh& mesh, const QpCoefficient& coef, std::size_t e, double ke[12][12],
                      double de[3][12]) {
  const auto& ref = reference_tables();
  for (int i = 0; i < 12; ++i) {
    for (int j = 0; j < 12; ++j) ke[i][j] = 0.0;
  }
  for (int r = 0; r < 3; ++r) {
    for (int j = 0; j < 12; ++j) de[r][j] = 0.0;
  }
  double g[6][2];
  for (int q = 0; q < kQp; ++q) {
    mesh.p2_gradients(e, q, g);
    double w = mesh.qp_weight(e, q);
    std::size_t k = e * kQp + q;
    if (coef.scalar) {
      double wa = w * coef.a[k];
      for (int a = 0; a < 6; ++a) {
        for (int b = 0; b <= a; ++b) {
          double v = wa * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
          ke[a][b] += v;
          ke[6 + a][6 + b] += v;
        }
      }
    } else {
      const Tensor4& t = coef.t[k];
      for (int al = 0; al < 2; ++al) {
        for (int be = 0; be < 2; ++be) {
          double c00 = w * t(0, 0, al, be), c01 = w * t(0, 1, al, be);
          double c10 = w * t(1, 0, al, be), c11 = w * t(1, 1, al, be);
          for (int a = 0; a < 6; ++a) {
            double ta0 = c00 * g[a][0] + c10 * g[a][1];
            double ta1 = c01 * g[a][0] + c11 * g[a][1];
            for (int b = 0; b < 6; ++b) ke[al * 6 + a][be * 6 + b] += ta0 * g[b][0] + ta1 * g[b][1];
          }
        }
      }
    }
    for (int r = 0; r < 3; ++r) {
      double wp = w * ref.p1[q][r];
      for (int a = 0; a < 6; ++a) {
        de[r][a] += wp * g[a][0];
        de[r][6 + a] += wp * g[a][1];
      }
    }
  }
  if (coef.scalar) {
    for (int a = 0; a < 6; ++a) {
      for (int b = 0; b < a; ++b) {
        ke[b][a] = ke[a][b];
        ke[6 + b][6 + a] = ke[6 + a][6 + b];
      }
    }
  }
}

}  // namespace

Csr p1_mass_lower(const TriMesh& m) {
  std::vector<std::vector<int>> lists(m.n_p1);
  for (const auto& d : m.p1_dofs) {
    for (int r = 0; r < 3; ++r) {
      for (int s = 0; s < 3; ++s) {
        if (d[s] <= d[r]) lists[d[r]].push_back(d[s]);
      }
    }
  }
  Csr mass = pattern_from_lists(lists, m.n_p1);
  const auto& ref = reference_tables();
  for (std::size_t e = 0; e < m.n_elements(); ++e) {
    const auto& d1 = m.p1_dofs[e];
    for (int q = 0; q < kQp; ++q) {
      double w = m.qp_weight(e, q);
      for (int r = 0; r < 3; ++r) {
        for (int s = 0; s < 3; ++s) {
          if (d1[s] <= d1[r]) entry(mass, d1[r], d1[s]) += w * ref.p1[q][r] * ref.p1[q][s];
        }
      }
    }
  }
  return mass;
}

SaddleSolver::SaddleSolver(std::shared_ptr<const TriMesh> mesh, const QpCoefficient& coef,
                           std::vector<char> fixed_nodes, double rtol)
    : mesh_(std::move(mesh)), rtol_(rtol), coef_(coef) {
  auto t0 = std::chrono::steady_clock::now();
  const TriMesh& m = *mesh_;
  if ((coef_.scalar ? coef_.a.size() : coef_.t.size()) != m.n_qp()) {
    throw Error(ErrorCode::incompatible_mesh, "coefficient samples do not match the mesh quadrature");
  }
  if (!coef_.scalar) {
    for (const auto& t : coef_.t) {
      for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < r; ++c) {
          if (std::abs(t.v[r * 4 + c] - t.v[c * 4 + r]) > 1e-12 * (std::abs(t.v[r * 4 + c]) + 1.0)) {
            throw Error(ErrorCode::solver_failure, "the saddle solver requires a symmetric coefficient tensor");
          }
        }
      }
    }
    coupled_ = true;
  }
  if (fixed_nodes.empty()) fixed_nodes.assign(m.n_p2, 0);
  free_of_node_.assign(m.n_p2, -1);
  for (int i = 0; i < m.n_p2; ++i) {
    if (!fixed_nodes[i]) free_of_node_[i] = nfree_++;
  }
  for (std::size_t e = 0; e < m.n_elements(); ++e) {
    for (int a = 0; a < 6; ++a) {
      if (fixed_nodes[m.p2_dofs[e][a]]) {
        fixed_elems_.push_back(e);
        break;
      }
    }
  }

  // patterns
  {
    std::vector<std::vector<int>> lists(nfree_);
    for (const auto& d : m.p2_dofs) {
      for (int a = 0; a < 6; ++a) {
        int fa = free_of_node_[d[a]];
        if (fa < 0) continue;
        for (int b = 0; b < 6; ++b) {
          int fb = free_of_node_[d[b]];
          if (fb >= 0) lists[fa].push_back(fb);
        }
      }
    }
    Csr full = pattern_from_lists(lists, nfree_);
    int nv = coupled_ ? 2 * nfree_ : nfree_;
    std::vector<std::vector<int>> low(nv);
    for (int c = 0; c < (coupled_ ? 2 : 1); ++c) {
      for (int i = 0; i < nfree_; ++i) {
        int row = c * nfree_ + i;
        for (std::int64_t k = full.ptr[i]; k < full.ptr[i + 1]; ++k) {
          for (int c2 = 0; c2 < (coupled_ ? 2 : 1); ++c2) {
            int col = c2 * nfree_ + full.idx[k];
            if (col <= row) low[row].push_back(col);
          }
        }
      }
    }
    k_lower_ = pattern_from_lists(low, nv);
  }
  {
    std::vector<std::vector<int>> lists(m.n_p1);
    for (std::size_t e = 0; e < m.n_elements(); ++e) {
      for (int r = 0; r < 3; ++r) {
        for (int a = 0; a < 6; ++a) {
          int fa = free_of_node_[m.p2_dofs[e][a]];
          if (fa < 0) continue;
          lists[m.p1_dofs[e][r]].push_back(fa);
          lists[m.p1_dofs[e][r]].push_back(nfree_ + fa);
        }
      }
    }
    d_free_ = pattern_from_lists(lists, 2 * nfree_);
  }
  {
    std::vector<std::vector<int>> lists(m.n_p1);
    for (const auto& d : m.p1_dofs) {
      for (int r = 0; r < 3; ++r) {
        for (int s = 0; s < 3; ++s) {
          if (d[s] <= d[r]) lists[d[r]].push_back(d[s]);
        }
      }
    }
    mass_ = pattern_from_lists(lists, m.n_p1);
  }
  Csr wmass = mass_;

  const auto& ref = reference_tables();
  double ke[12][12], de[3][12];
  for (std::size_t e = 0; e < m.n_elements(); ++e) {
    element_matrices(m, coef_, e, ke, de);
    const auto& d2 = m.p2_dofs[e];
    const auto& d1 = m.p1_dofs[e];
    for (int i = 0; i < 12; ++i) {
      int fi = free_of_node_[d2[i % 6]];
      if (fi < 0) continue;
      int row = coupled_ ? (i / 6) * nfree_ + fi : fi;
      if (!coupled_ && i >= 6) continue;
      for (int j = 0; j < 12; ++j) {
        if (!coupled_ && j >= 6) continue;
        int fj = free_of_node_[d2[j % 6]];
        if (fj < 0) continue;
        int col = coupled_ ? (j / 6) * nfree_ + fj : fj;
        if (col > row) continue;
        entry(k_lower_, row, col) += ke[i][j];
      }
    }
    for (int r = 0; r < 3; ++r) {
      for (int j = 0; j < 12; ++j) {
        int fj = free_of_node_[d2[j % 6]];
        if (fj < 0) continue;
        entry(d_free_, d1[r], (j / 6) * nfree_ + fj) += de[r][j];
      }
    }
    for (int q = 0; q < kQp; ++q) {
      double w = m.qp_weight(e, q);
      double inv = 1.0 / coef_.mean_diagonal(e * kQp + q);
      for (int r = 0; r < 3; ++r) {
        for (int s = 0; s < 3; ++s) {
          if (d1[s] > d1[r]) continue;
          double v = w * ref.p1[q][r] * ref.p1[q][s];
          entry(mass_, d1[r], d1[s]) += v;
          entry(wmass, d1[r], d1[s]) += v * inv;
        }
      }
    }
  }
  stats_.assembly_seconds = seconds_since(t0);
  stats_.velocity_unknowns = 2 * nfree_;
  stats_.pressure_unknowns = m.n_p1;

  auto t1 = std::chrono::steady_clock::now();
  k_chol_ = std::make_unique<SparseCholesky>(k_lower_);
  precond_chol_ = std::make_unique<SparseCholesky>(wmass);
  stats_.factor_seconds = seconds_since(t1);
  stats_.factor_nnz = k_chol_->factor_nnz();
  stats_.factor_flops = k_chol_->flops();
}

void SaddleSolver::velocity_solve(std::vector<double>& rhs_free) const {
  if (coupled_) {
    k_chol_->solve(rhs_free.data(), 1);
  } else {
    k_chol_->solve(rhs_free.data(), 2);
  }
}

void SaddleSolver::apply_precond(std::vector<double>& r) const {
  precond_chol_->solve(r.data(), 1);
  project(r);
}

void SaddleSolver::project(std::vector<double>& x) const {
  double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  for (double& v : x) v -= mean;
}

void SaddleSolver::apply_schur(const std::vector<double>& x, std::vector<double>& y) const {
  std::vector<double> t(2 * static_cast<std::size_t>(nfree_), 0.0);
  d_free_.mult_transpose_add(x.data(), t.data());
  velocity_solve(t);
  y.resize(mesh_->n_p1);
  d_free_.mult(t.data(), y.data());
}

SaddleResult SaddleSolver::solve(const std::vector<double>& load, const std::vector<double>& div_load,
                                 const std::vector<double>& u_fixed) const {
  const TriMesh& m = *mesh_;
  std::size_t n2 = static_cast<std::size_t>(m.n_p2);
  if (load.size() != 2 * n2 || div_load.size() != static_cast<std::size_t>(m.n_p1)) {
    throw Error(ErrorCode::incompatible_mesh, "load vectors do not match the mesh");
  }
  bool has_fixed_values = !u_fixed.empty();
  if (has_fixed_values && u_fixed.size() != 2 * n2) {
    throw Error(ErrorCode::incompatible_mesh, "fixed velocity vector does not match the mesh");
  }
  std::vector<double> f(2 * static_cast<std::size_t>(nfree_));
  for (std::size_t i = 0; i < n2; ++i) {
    int fi = free_of_node_[i];
    if (fi < 0) continue;
    f[fi] = load[i];
    f[nfree_ + fi] = load[n2 + i];
  }
  std::vector<double> g = div_load;
  if (has_fixed_values) {
    double ke[12][12], de[3][12];
    for (std::size_t e : fixed_elems_) {
      const auto& d2 = m.p2_dofs[e];
      double ul[12];
      bool any = false;
      for (int j = 0; j < 12; ++j) {
        int node = d2[j % 6];
        ul[j] = free_of_node_[node] < 0 ? u_fixed[(j / 6) * n2 + node] : 0.0;
        any = any || ul[j] != 0.0;
      }
      if (!any) continue;
      element_matrices(m, coef_, e, ke, de);
      for (int i = 0; i < 12; ++i) {
        int fi = free_of_node_[d2[i % 6]];
        if (fi < 0) continue;
        double s = 0.0;
        for (int j = 0; j < 12; ++j) s += ke[i][j] * ul[j];
        f[(i / 6) * nfree_ + fi] -= s;
      }
      for (int r = 0; r < 3; ++r) {
        double s = 0.0;
        for (int j = 0; j < 12; ++j) s += de[r][j] * ul[j];
        g[m.p1_dofs[e][r]] -= s;
      }
    }
  }

  // b = g - D K^{-1} f
  std::vector<double> kf = f;
  velocity_solve(kf);
  std::vector<double> b(m.n_p1);
  d_free_.mult(kf.data(), b.data());
  for (int r = 0; r < m.n_p1; ++r) b[r] = g[r] - b[r];

  SaddleResult res;
  res.compatibility_defect = std::abs(std::accumulate(b.begin(), b.end(), 0.0));
  project(b);

  std::vector<double> x(m.n_p1, 0.0), r = b, z = b, p, q;
  double bnorm = std::sqrt(std::inner_product(b.begin(), b.end(), b.begin(), 0.0));
  int it = 0;
  if (bnorm > 0.0) {
    apply_precond(z);
    p = z;
    double rz = std::inner_product(r.begin(), r.end(), z.begin(), 0.0);
    const int max_it = 5000;
    double rnorm = bnorm;
    for (it = 0; it < max_it && rnorm > rtol_ * bnorm; ++it) {
      apply_schur(p, q);
      project(q);
      double pq = std::inner_product(p.begin(), p.end(), q.begin(), 0.0);
      if (!(pq > 0.0)) break;
      double alpha = rz / pq;
      for (int i = 0; i < m.n_p1; ++i) {
        x[i] += alpha * p[i];
        r[i] -= alpha * q[i];
      }
      rnorm = std::sqrt(std::inner_product(r.begin(), r.end(), r.begin(), 0.0));
      z = r;
      apply_precond(z);
      double rz_new = std::inner_product(r.begin(), r.end(), z.begin(), 0.0);
      double beta = rz_new / rz;
      rz = rz_new;
      for (int i = 0; i < m.n_p1; ++i) p[i] = z[i] + beta * p[i];
    }
    if (rnorm > 1e-8 * bnorm) {
      throw Error(ErrorCode::solver_failure, "pressure iteration did not converge");
    }
  }
  res.iterations = it;

  // velocity from the converged pressure
  std::vector<double> uf = f;
  d_free_.mult_transpose_add(x.data(), uf.data());
  velocity_solve(uf);

  // mass-weighted mean-zero pressure gauge
  std::vector<double> ones(m.n_p1, 1.0), mw(m.n_p1);
  symmetric_mult(mass_, ones.data(), mw.data());
  double area = std::accumulate(mw.begin(), mw.end(), 0.0);
  double pint = std::inner_product(mw.begin(), mw.end(), x.begin(), 0.0);
  for (double& v : x) v -= pint / area;

  // residuals of the reduced system
  std::vector<double> kr(uf.size(), 0.0);
  if (coupled_) {
    symmetric_mult(k_lower_, uf.data(), kr.data());
  } else {
    symmetric_mult(k_lower_, uf.data(), kr.data());
    symmetric_mult(k_lower_, uf.data() + nfree_, kr.data() + nfree_);
  }
  std::vector<double> dtp(uf.size(), 0.0);
  d_free_.mult_transpose_add(x.data(), dtp.data());
  double mom = 0.0;
  for (std::size_t i = 0; i < uf.size(); ++i) mom = std::max(mom, std::abs(kr[i] - dtp[i] - f[i]));
  std::vector<double> du(m.n_p1);
  d_free_.mult(uf.data(), du.data());
  double dv = 0.0;
  for (int i = 0; i < m.n_p1; ++i) dv = std::max(dv, std::abs(du[i] - g[i]));
  res.momentum_residual = mom;
  res.divergence_residual = dv;

  res.u.assign(2 * n2, 0.0);
  for (std::size_t i = 0; i < n2; ++i) {
    int fi = free_of_node_[i];
    if (fi < 0) {
      if (has_fixed_values) {
        res.u[i] = u_fixed[i];
        res.u[n2 + i] = u_fixed[n2 + i];
      }
    } else {
      res.u[i] = uf[fi];
      res.u[n2 + i] = uf[nfree_ + fi];
    }
  }
  res.p = std::move(x);
  return res;
}

}  // namespace homstokes
