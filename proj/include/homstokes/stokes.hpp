#pragma once

#include <memory>
#include <optional>

#include "homstokes/coefficient.hpp"
#include "homstokes/field.hpp"
#include "homstokes/saddle.hpp"

namespace homstokes {

/// Which coefficient a Stokes problem carries.
struct StokesCoefficient {
  enum class Kind { identity, oscillating, constant };
  Kind kind = Kind::identity;
  std::shared_ptr<const CoefficientField> field;
  double eps = 0.0;
  Tensor4 tensor = Tensor4::identity();

  static StokesCoefficient identity() { return {}; }
  static StokesCoefficient oscillating(std::shared_ptr<const CoefficientField> a, double eps);
  static StokesCoefficient constant(const Tensor4& t);

  /// Samples at every quadrature point; oscillating uses y = (x / eps) mod 1.
  QpCoefficient sample(const TriMesh& mesh) const;
};

/// Velocity values on the P2 dofs (component-major); only boundary entries are used.
struct BoundaryTrace {
  std::vector<double> values;

  static BoundaryTrace zero(const DomainMesh& mesh);
  static BoundaryTrace interpolate(const DomainMesh& mesh, const PointFunction& g);
};

struct ResolutionGuard {
  /// Oscillating problems need h <= eps / ratio.
  double ratio = 16.0;
  bool override_guard = false;
};

struct StokesProblem {
  std::shared_ptr<const DomainMesh> mesh;
  StokesCoefficient coefficient;
  Field F;
  Field h;
  BoundaryTrace g;
  ResolutionGuard guard;
};

struct StokesDiagnostics {
  int iterations = 0;
  double momentum_residual = 0.0;
  double divergence_residual = 0.0;
  double compatibility_residual = 0.0;
  SaddleStats stats;
};

struct StokesSolution {
  Field u;
  Field p;
  StokesDiagnostics diagnostics;
};

/// Quadrature value of  int h - oint n.g  (g read through its P2 boundary trace).
double check_compatibility(const Field& h, const BoundaryTrace& g, const DomainMesh& mesh);

/// Factored operator for one mesh and coefficient; solves many data sets.
class StokesOperator {
 public:
  StokesOperator(std::shared_ptr<const DomainMesh> mesh, const StokesCoefficient& coefficient,
                 const ResolutionGuard& guard = {});

  StokesSolution solve(const Field& F, const Field& h, const BoundaryTrace& g) const;

  const SaddleSolver& saddle() const { return *saddle_; }
  const std::shared_ptr<const DomainMesh>& mesh() const { return mesh_; }

 private:
  std::shared_ptr<const DomainMesh> mesh_;
  std::unique_ptr<SaddleSolver> saddle_;
};

StokesSolution solve_stokes(const StokesProblem& problem);

struct DataNorms {
  double f_norm = 0.0;
  double h_norm = 0.0;
  double g_norm = 0.0;
  double sum() const { return f_norm + h_norm + g_norm; }
};

/// ||F||_{L2}, ||h||_{H1} (L2 when h has no gradient), ||g||_{H1(boundary)}.
DataNorms data_norms(const Field& F, const Field& h, const BoundaryTrace& g, const DomainMesh& mesh);

/// (||u||_{H1} + ||p||_{L2/R}) / (sum of data norms).
double energy_constant(const StokesSolution& s, const DataNorms& norms);

struct DivSolution {
  Field u;
  double constant = 0.0;
  double divergence_residual = 0.0;
};

/// Velocity with div u = f and zero trace, from the identity-coefficient Stokes solve.
DivSolution solve_div(const Field& f, const std::shared_ptr<const DomainMesh>& mesh);

enum class CaccioppoliMode { interior, boundary };

double caccioppoli_ratio(const StokesSolution& s, Vec2 center, double r, CaccioppoliMode mode);

/// Vector-field version used by tests on synthetic fields.
double caccioppoli_ratio(const Field& u, Vec2 center, double r, CaccioppoliMode mode);

/// Discrete inf-sup constant beta with beta^2 the smallest nonzero eigenvalue
/// of M^{-1} S (S the identity-coefficient Schur complement).
double inf_sup_constant(const std::shared_ptr<const DomainMesh>& mesh, int lanczos_steps = 120);

/// (F, v) for every velocity dof of a vector field F.
std::vector<double> load_vector(const Field& F);
/// (h, r) for every pressure dof.
std::vector<double> divergence_load(const Field& h);

}  // namespace homstokes
