#pragma once

#include <array>
#include <functional>
#include <map>
#include <string>

#include "homstokes/geometry.hpp"

namespace homstokes {

/// Fourth-order tensor a_{ij}^{alpha beta} in two dimensions, viewed as the
/// 4x4 matrix M[(i,alpha)][(j,beta)] acting on xi = (xi_i^alpha).
struct Tensor4 {
  std::array<double, 16> v{};

  static int row(int i, int alpha) { return i * 2 + alpha; }
  double& operator()(int i, int j, int alpha, int beta) { return v[row(i, alpha) * 4 + row(j, beta)]; }
  double operator()(int i, int j, int alpha, int beta) const { return v[row(i, alpha) * 4 + row(j, beta)]; }

  static Tensor4 identity(double s = 1.0);
  /// True when the tensor is s * delta_ij delta^{alpha beta} for some s (exactly).
  bool is_scalar_identity(double* s = nullptr) const;
};

enum class Smoothness { smooth, piecewise };

using ParamMap = std::map<std::string, double>;

/// Periodic coefficient y -> A(y) with ellipticity metadata. Builtins are
/// scalar multipliers of the identity tensor and expose the multiplier
/// directly; user tensors go through the general evaluator.
class CoefficientField {
 public:
  int dim = 2;
  std::string name;
  ParamMap params;
  double mu = 1.0;
  bool symmetric = true;
  Smoothness smoothness = Smoothness::smooth;

  bool is_scalar() const { return static_cast<bool>(multiplier_); }
  double multiplier(Vec2 y) const { return multiplier_(y); }
  Tensor4 eval(Vec2 y) const;

  static CoefficientField from_multiplier(std::string name, std::function<double(Vec2)> a, double mu);
  static CoefficientField from_tensor(std::string name, std::function<Tensor4(Vec2)> a, double mu, bool symmetric,
                                      Smoothness smoothness = Smoothness::smooth);

 private:
  std::function<double(Vec2)> multiplier_;
  std::function<Tensor4(Vec2)> tensor_;
};

/// identity | scalar_trig(kappa) | laminate(mean, amplitude) | smoothed_checkerboard(a1, a2)
CoefficientField builtin_coefficient(const std::string& name, const ParamMap& params = {});

struct EllipticityWindow {
  double mu_low = 0.0;
  double mu_high = 0.0;
};

/// Extreme eigenvalues of the symmetric part over a grid of about n_samples cell points.
EllipticityWindow verify_ellipticity(const CoefficientField& a, int n_samples);
EllipticityWindow tensor_ellipticity(const Tensor4& t);
double verify_symmetry(const CoefficientField& a, int n_samples);
double verify_periodicity(const CoefficientField& a, int n_samples);

/// C-infinity step rising from 0 at u = -1/2 to 1 at u = 1/2.
double smooth_step(double u);

}  // namespace homstokes
