#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "homstokes/cellsolve.hpp"
#include "homstokes/stokes.hpp"

namespace homstokes {

/// Corrector amplitude: A = S_eps(psi grad u0), B = S_eps^2(psi grad u0), C = grad u0.
enum class Variant { A, B, C };

const char* variant_name(Variant v);
/// Throws invalid-config for anything but "A", "B" or "C".
Variant parse_variant(const std::string& s);

/// Cell fields at one point y of the torus.
struct CellSample {
  /// chi[k][gamma][beta] = chi_k^{beta gamma}(y)
  double chi[2][2][2];
  /// dchi[k][gamma][beta][j] = d_{y_j} chi_k^{beta gamma}(y)
  double dchi[2][2][2][2];
  /// pi[k][gamma]
  double pi[2][2];
  /// q[i][k][gamma]
  double q[2][2][2];
};

/// Periodic degree-2 (velocity) and degree-1 (pressure) interpolation of the
/// cell solutions with one point location per query.
class CellSampler {
 public:
  /// flux may be null; q then reads as zero.
  CellSampler(const CorrectorSet& correctors, const FluxSet* flux);
  CellSample at(Vec2 y) const;

 private:
  const CorrectorSet& c_;
  const FluxSet* f_;
};

struct AmplitudeOptions {
  /// Cut-off width r = cutoff_factor * eps.
  double cutoff_factor = 2.0;
};

/// phi holds phi_k^gamma at tensor component 2 * gamma + k; dphi[j] holds d_j phi.
struct Amplitude {
  Variant variant = Variant::A;
  double eps = 0.0;
  Field phi;
  std::array<Field, 2> dphi;
};

/// grad u0 at quadrature points, cut off and mollified per variant. Variants A
/// and B throw invalid-layer when the cut-off width exceeds the inradius.
Amplitude build_amplitude(const Field& u0, double eps, Variant variant, const AmplitudeOptions& opt = {});

/// Two-scale fields at quadrature points of the common fine mesh.
struct ApproximantBundle {
  Variant variant = Variant::A;
  double eps = 0.0;
  Field phi;
  /// chi(x / eps) phi, so that u_approx = u0 + eps * corrector_term
  Field corrector_term;
  /// u_eps - u0 - eps chi(x / eps) phi and its gradient (component 2 * beta + j)
  Field w;
  Field grad_w;
  /// p_eps - p0 - pi(x / eps) phi - eps q(x / eps) grad phi
  Field z;
  /// p_eps - p0 - pi(x / eps) phi
  Field p_simple;
  /// u_eps - u0 (velocity space) and grad u_eps at quadrature points
  Field velocity_difference;
  Field grad_u_eps;
};

/// One pass over the quadrature points for all amplitudes. Throws
/// incompatible-mesh when the solutions and amplitudes do not share a mesh.
std::vector<ApproximantBundle> assemble_approximants(const StokesSolution& u_eps, const StokesSolution& u0,
                                                     const CorrectorSet& correctors, const FluxSet& flux, double eps,
                                                     const std::vector<Amplitude>& amplitudes);

ApproximantBundle assemble_approximant(const StokesSolution& u_eps, const StokesSolution& u0,
                                       const CorrectorSet& correctors, const FluxSet& flux, double eps,
                                       Variant variant, const AmplitudeOptions& opt = {});

struct ErrorRecord {
  double eps = 0.0;
  double h = 0.0;
  std::string variant = "A";
  double l2_vel = 0.0;
  double l4_vel = 0.0;
  double h1_w = 0.0;
  double l2_w = 0.0;
  double quot_z = 0.0;
  double quot_p_simple = 0.0;
  double grad_l4 = 0.0;
  double grad_l2 = 0.0;
  double f_norm = 0.0;
  double h_norm = 0.0;
  double g_norm = 0.0;
  /// h / eps against the resolution-guard ratio; flagged when h > eps / ratio.
  double guard_ratio = 16.0;
  bool flagged = false;
  /// Named extras: other variants ("h1_w_C", ...) and diagnostics.
  std::map<std::string, double> extra;
  /// Non-empty when the pipeline failed at this eps.
  std::string failure;

  bool ok() const { return failure.empty(); }
  double data_sum() const { return f_norm + h_norm + g_norm; }
  /// Named lookup over the fixed columns and the extras; NaN when absent.
  double value(const std::string& name) const;
};

ErrorRecord error_record(const ApproximantBundle& bundle, const DataNorms& norms, double h, double guard_ratio = 16.0);

/// Adds h1_w_X, l2_w_X, quot_z_X, quot_p_simple_X for a secondary variant X.
void add_variant_errors(ErrorRecord& record, const ApproximantBundle& bundle);

}  // namespace homstokes
