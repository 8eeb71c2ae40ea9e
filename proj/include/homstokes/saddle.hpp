#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "homstokes/coefficient.hpp"
#include "homstokes/mesh.hpp"

namespace homstokes {

/// Compressed sparse rows.
struct Csr {
  int nrows = 0;
  int ncols = 0;
  std::vector<std::int64_t> ptr;
  std::vector<int> idx;
  std::vector<double> val;

  /// y = A x
  void mult(const double* x, double* y) const;
  /// y += A^T x
  void mult_transpose_add(const double* x, double* y) const;
};

/// Whether factorizations use the supernodal (dense BLAS) path. Decided once per
/// process: HOMSTOKES_CHOLMOD=simplicial|supernodal forces a choice, otherwise
/// the BLAS kernels are spot-checked against plain loops.
bool supernodal_enabled();

/// Sparse Cholesky factor of a symmetric positive definite matrix given by
/// its lower triangle in CSR form (CHOLMOD supernodal).
class SparseCholesky {
 public:
  explicit SparseCholesky(const Csr& lower);
  ~SparseCholesky();
  SparseCholesky(const SparseCholesky&) = delete;
  SparseCholesky& operator=(const SparseCholesky&) = delete;

  int size() const { return n_; }
  /// Solves A X = B in place for ncol right-hand sides stored column after column.
  void solve(double* b, int ncol) const;
  std::int64_t factor_nnz() const { return factor_nnz_; }
  double flops() const { return flops_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int n_ = 0;
  std::int64_t factor_nnz_ = 0;
  double flops_ = 0.0;
};

/// Coefficient sampled at every quadrature point of a mesh: a scalar
/// multiplier of the identity tensor or a full tensor.
struct QpCoefficient {
  bool scalar = true;
  std::vector<double> a;
  std::vector<Tensor4> t;

  double mean_diagonal(std::size_t k) const;
};

struct SaddleResult {
  /// Velocity on all P2 dofs, component-major (c * n_p2 + node).
  std::vector<double> u;
  /// Pressure on P1 dofs, mass-weighted mean zero.
  std::vector<double> p;
  int iterations = 0;
  /// Max-norm residuals of the assembled momentum and divergence equations.
  double momentum_residual = 0.0;
  double divergence_residual = 0.0;
  /// Component of the divergence load outside the range (compatibility defect).
  double compatibility_defect = 0.0;
};

struct SaddleStats {
  int velocity_unknowns = 0;
  int pressure_unknowns = 0;
  std::int64_t factor_nnz = 0;
  double factor_flops = 0.0;
  double assembly_seconds = 0.0;
  double factor_seconds = 0.0;
};

/// Taylor-Hood discretization of  -div(A grad u) + grad p = F,  div u = h.
/// Weak form: a(u, v) - (p, div v) = (F, v), (r, div u) = (r, h).
/// Velocity nodes flagged in fixed_nodes carry prescribed values for both
/// components. The velocity block is factored once; the pressure Schur
/// complement is solved by preconditioned conjugate gradients projected off
/// the constant pressure mode.
class SaddleSolver {
 public:
  SaddleSolver(std::shared_ptr<const TriMesh> mesh, const QpCoefficient& coef, std::vector<char> fixed_nodes,
               double rtol = 1e-13);

  /// load: (F, v) for every velocity dof; div_load: (h, r) for every pressure
  /// dof; u_fixed: velocity values (only fixed entries are read; may be empty).
  SaddleResult solve(const std::vector<double>& load, const std::vector<double>& div_load,
                     const std::vector<double>& u_fixed = {}) const;

  /// Pressure Schur complement S x = D K^{-1} D^T x (mean-zero handling left to the caller).
  void apply_schur(const std::vector<double>& x, std::vector<double>& y) const;
  /// Pressure mass matrix (unweighted), lower triangle.
  const Csr& pressure_mass() const { return mass_; }

  const SaddleStats& stats() const { return stats_; }
  const TriMesh& mesh() const { return *mesh_; }

 private:
  void velocity_solve(std::vector<double>& rhs_free) const;
  void apply_precond(std::vector<double>& r) const;
  void project(std::vector<double>& x) const;

  std::shared_ptr<const TriMesh> mesh_;
  double rtol_;
  bool coupled_ = false;
  std::vector<int> free_of_node_;
  int nfree_ = 0;
  Csr k_lower_;
  std::unique_ptr<SparseCholesky> k_chol_;
  Csr d_free_;
  Csr mass_;
  std::unique_ptr<SparseCholesky> precond_chol_;
  std::vector<std::size_t> fixed_elems_;
  QpCoefficient coef_;
  SaddleStats stats_;
};

/// Lower triangle of the P1 mass matrix of a mesh.
Csr p1_mass_lower(const TriMesh& mesh);

/// Symmetric product y = A x from the lower triangle.
void symmetric_mult(const Csr& lower, const double* x, double* y);

}  // namespace homstokes
