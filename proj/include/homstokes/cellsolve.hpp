#pragma once

#include <array>
#include <memory>

#include "homstokes/coefficient.hpp"
#include "homstokes/field.hpp"
#include "homstokes/saddle.hpp"

namespace homstokes {

template <class T>
using Pair = std::array<T, 2>;

/// Periodic correctors: chi[k][gamma] is a vector velocity field with
/// components chi_k^{beta gamma}; pi[k][gamma] a scalar pressure field.
/// Both have zero cell mean.
struct CorrectorSet {
  std::shared_ptr<const UnitCellMesh> mesh;
  std::shared_ptr<const CoefficientField> coefficient;
  Pair<Pair<Field>> chi;
  Pair<Pair<Field>> pi;
  /// Coefficient samples at the cell quadrature points.
  QpCoefficient samples;

  int iterations = 0;
  double momentum_residual = 0.0;
  double divergence_residual = 0.0;
  SaddleStats stats;
};

struct HomogenizedTensor {
  Tensor4 a_hat;
  EllipticityWindow window;
};

/// b[i][k] holds b_{ik}^{alpha gamma} at quadrature points as a tensor field
/// with component 2 * alpha + gamma.
struct FluxDifference {
  std::shared_ptr<const UnitCellMesh> mesh;
  Pair<Pair<Field>> b;

  double component(int i, int k, int alpha, int gamma, std::size_t qp) const {
    return b[i][k].at(2 * alpha + gamma, qp);
  }
};

/// Flux correctors. T[i][k][gamma] is a vector velocity field (components
/// alpha), q[i][k][gamma] a scalar pressure field, and E[j][i][k][gamma] a
/// vector quadrature field holding E_{jik}^{alpha gamma}.
struct FluxSet {
  std::shared_ptr<const UnitCellMesh> mesh;
  Pair<Pair<Pair<Field>>> T;
  Pair<Pair<Pair<Field>>> q;
  Pair<Pair<Pair<Pair<Field>>>> E;
  double momentum_residual = 0.0;
  double divergence_residual = 0.0;
};

/// Samples a coefficient at every quadrature point of a periodic cell mesh.
QpCoefficient sample_cell_coefficient(const CoefficientField& a, const TriMesh& mesh);
Tensor4 tensor_at(const QpCoefficient& c, std::size_t qp);

CorrectorSet solve_correctors(std::shared_ptr<const CoefficientField> a, std::shared_ptr<const UnitCellMesh> mesh);

HomogenizedTensor homogenized_tensor(const CorrectorSet& c);

FluxDifference flux_difference(const CorrectorSet& c, const HomogenizedTensor& a_hat);

/// Solves  Delta T - grad q = b,  div T = 0  per (i, k, gamma) with zero-mean T and q.
/// Throws incompatible-data when some |int_Y b| exceeds tol.
FluxSet solve_flux_correctors(const FluxDifference& b, double tol = 1e-8);

/// Continuous P1 field whose values are the L2 projection of the
/// piecewise-constant gradient of a periodic pressure-space field.
Pair<Field> recovered_gradient(const Field& p);

struct IdentityTolerances {
  double mean = 1e-10;
  double divergence = 1e-9;
  double b_mean = 1e-8;
  double antisymmetry = 0.0;
  double dq_minus_pi = 1e-2;
  double ellipticity = 0.05;
};

struct IdentityReport {
  double chi_mean = 0.0;
  double pi_mean = 0.0;
  double chi_divergence = 0.0;
  double b_mean = 0.0;
  double e_antisymmetry = 0.0;
  /// max over (k, gamma) of || sum_i d_i q_ik^gamma - pi_k^gamma ||_{L2(Y)} with the recovered gradient
  double dq_minus_pi = 0.0;
  /// same with the raw piecewise-constant gradient
  double dq_minus_pi_raw = 0.0;
  /// weak form of d_i b_ik^{alpha gamma} = -d_alpha pi_k^gamma against trigonometric tests
  double weak_divergence_b = 0.0;
  EllipticityWindow a_hat_window;
  bool a_hat_elliptic = false;
  bool pass = false;
};

IdentityReport verify_corrector_identities(const CorrectorSet& c, const FluxSet& f, const HomogenizedTensor& a_hat,
                                           const FluxDifference& b, const IdentityTolerances& tol = {});

enum class CellMetric { periodic, euclidean };

/// Max over pairs of 512 Halton points in the cell of |f(x) - f(y)| / |x - y|^sigma.
double holder_seminorm(const Field& f, double sigma, CellMetric metric = CellMetric::periodic, int n_points = 512);

/// Periodic-ball Caccioppoli ratio
/// int_{B_r} |grad f|^2 / (r^-2 int_{B_2r \ B_r} |f - mean|^2 + r^{d+2}).
double cell_caccioppoli_ratio(const Field& f, Vec2 center, double r);

/// Halton points in [0, 1)^2 with bases 2 and 3, skipping index 0.
std::vector<Vec2> halton_points(int n);

}  // namespace homstokes
