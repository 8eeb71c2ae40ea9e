#pragma once

#include <array>
#include <memory>

#include "homstokes/field.hpp"

namespace homstokes {

/// zeta_eps(x) = eps^-2 zeta(x / eps) with zeta(x) = c exp(-1 / (1 - |2x|^2)) on |x| < 1/2.
class Mollifier {
 public:
  explicit Mollifier(double eps);

  double eps() const { return eps_; }
  double support_radius() const { return 0.5 * eps_; }

  /// Normalization constant c of the unit kernel.
  static double unit_constant();
  /// Unit kernel zeta.
  static double unit(Vec2 x);

  double operator()(Vec2 d) const;
  Vec2 gradient(Vec2 d) const;

 private:
  double eps_;
  double scale_;
};

/// How f is continued outside its mesh. automatic means periodic on periodic
/// meshes and zero otherwise; periodic on a domain mesh repeats its bounding box.
enum class Extension { automatic, zero, periodic };

struct SmoothingOptions {
  Extension extension = Extension::automatic;
  /// Use the translation-invariant stencil when the mesh is a lattice.
  bool use_lattice = true;
};

/// S_eps f at every quadrature point of f's mesh. Inside each element f is
/// read as the P2 polynomial through its quadrature values (exact for
/// velocity and pressure fields). Throws invalid-radius when eps <= 0.
Field smooth(const Field& f, double eps, const SmoothingOptions& opt = {});

/// grad S_eps f by convolution with grad zeta_eps. Scalar f gives a vector
/// field, vector f a tensor field with component 2*a + b = d_b (S f)_a.
Field smooth_gradient(const Field& f, double eps, const SmoothingOptions& opt = {});

/// d/dx and d/dy of S_eps f, each with the rank of f.
std::array<Field, 2> smooth_derivatives(const Field& f, double eps, const SmoothingOptions& opt = {});

/// psi_r(x) = clamp((delta(x) - r) / r, 0, 1).
double cutoff_value(const DomainMesh& mesh, double r, Vec2 x);
Vec2 cutoff_gradient_value(const DomainMesh& mesh, double r, Vec2 x);

/// psi_r at quadrature points. Requires 0 < r < inradius / 2 unless
/// allow_empty_plateau is set, in which case 0 < r <= inradius is accepted.
/// Throws invalid-layer otherwise.
Field cutoff_field(const std::shared_ptr<const DomainMesh>& mesh, double r, bool allow_empty_plateau = false);
/// grad psi_r at quadrature points (same range rules).
Field cutoff_gradient(const std::shared_ptr<const DomainMesh>& mesh, double r, bool allow_empty_plateau = false);

/// || rho(x / eps) S_eps(Psi) ||_{L2} / (||rho||_{L2(Y)} ||Psi||_{L2}) with
/// rho a scalar field on a cell mesh. Throws undefined-ratio when either
/// norm vanishes.
double smoothing_estimate_ratio(const Field& rho, const Field& psi, double eps);

}  // namespace homstokes
