#include "homstokes/coefficient.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "homstokes/error.hpp"

namespace homstokes {

Tensor4 Tensor4::identity(double s) {
  Tensor4 t;
  for (int r = 0; r < 4; ++r) t.v[r * 4 + r] = s;
  return t;
}

bool Tensor4::is_scalar_identity(double* s) const {
  double d = v[0];
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      if (v[r * 4 + c] != (r == c ? d : 0.0)) return false;
    }
  }
  if (s) *s = d;
  return true;
}

Tensor4 CoefficientField::eval(Vec2 y) const {
  if (multiplier_) return Tensor4::identity(multiplier_(y));
  return tensor_(y);
}

CoefficientField CoefficientField::from_multiplier(std::string name, std::function<double(Vec2)> a, double mu) {
  CoefficientField c;
  c.name = std::move(name);
  c.multiplier_ = std::move(a);
  c.mu = mu;
  c.symmetric = true;
  return c;
}

CoefficientField CoefficientField::from_tensor(std::string name, std::function<Tensor4(Vec2)> a, double mu,
                                               bool symmetric, Smoothness smoothness) {
  CoefficientField c;
  c.name = std::move(name);
  c.tensor_ = std::move(a);
  c.mu = mu;
  c.symmetric = symmetric;
  c.smoothness = smoothness;
  return c;
}

double smooth_step(double u) {
  auto f = [](double x) { return x > 0.0 ? std::exp(-1.0 / x) : 0.0; };
  double a = f(u + 0.5), b = f(0.5 - u);
  if (a + b == 0.0) return u > 0.0 ? 1.0 : 0.0;
  return a / (a + b);
}

namespace {

double get(const ParamMap& p, const std::string& key, double dflt) {
  auto it = p.find(key);
  return it == p.end() ? dflt : it->second;
}

void check_keys(const std::string& name, const ParamMap& p, std::initializer_list<const char*> allowed) {
  for (const auto& [k, v] : p) {
    bool ok = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; });
    if (!ok) throw Error(ErrorCode::invalid_coefficient, "unknown parameter '" + k + "' for " + name);
    if (!std::isfinite(v)) throw Error(ErrorCode::invalid_coefficient, "parameter '" + k + "' is not finite");
  }
}

double window_mu(double lo, double hi) { return std::min(lo, 1.0 / hi); }

/// Periodic square wave of period 1, +1 on (0, 1/2), -1 on (1/2, 1), with
/// transitions of width w.
double smoothed_square_wave(double t, double w) {
  double u = t - std::floor(t + 0.25);  // in [-1/4, 3/4)
  return -1.0 + 2.0 * smooth_step(u / w) - 2.0 * smooth_step((u - 0.5) / w);
}

}  // namespace

CoefficientField builtin_coefficient(const std::string& name, const ParamMap& params) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  CoefficientField c;
  if (name == "identity") {
    check_keys(name, params, {});
    c = CoefficientField::from_multiplier(name, [](Vec2) { return 1.0; }, 1.0);
  } else if (name == "scalar_trig") {
    check_keys(name, params, {"kappa"});
    double kappa = get(params, "kappa", 2.0);
    if (!(kappa > 1.0)) {
      throw Error(ErrorCode::invalid_coefficient, "scalar_trig needs kappa > 1 (multiplier reaches kappa - 1)");
    }
    c = CoefficientField::from_multiplier(
        name, [kappa](Vec2 y) { return kappa + std::sin(two_pi * y.x) * std::cos(two_pi * y.y); },
        window_mu(kappa - 1.0, kappa + 1.0));
  } else if (name == "laminate") {
    check_keys(name, params, {"mean", "amplitude"});
    double m = get(params, "mean", 2.0), amp = get(params, "amplitude", 1.0);
    if (!(m - std::abs(amp) > 0.0)) {
      throw Error(ErrorCode::invalid_coefficient, "laminate profile must stay positive (mean > |amplitude|)");
    }
    c = CoefficientField::from_multiplier(name, [m, amp](Vec2 y) { return m + amp * std::cos(two_pi * y.x); },
                                          window_mu(m - std::abs(amp), m + std::abs(amp)));
  } else if (name == "smoothed_checkerboard") {
    check_keys(name, params, {"a1", "a2"});
    double a1 = get(params, "a1", 1.0), a2 = get(params, "a2", 3.0);
    if (!(a1 > 0.0) || !(a2 > 0.0)) {
      throw Error(ErrorCode::invalid_coefficient, "checkerboard phases must be positive");
    }
    const double width = 1.0 / 16.0;
    c = CoefficientField::from_multiplier(
        name,
        [a1, a2, width](Vec2 y) {
          double s = smoothed_square_wave(y.x, width) * smoothed_square_wave(y.y, width);
          return a2 + (a1 - a2) * 0.5 * (1.0 + s);
        },
        window_mu(std::min(a1, a2), std::max(a1, a2)));
  } else {
    throw Error(ErrorCode::invalid_coefficient, "unknown coefficient '" + name + "'");
  }
  c.params = params;
  return c;
}

namespace {

template <class F>
void for_samples(int n_samples, F&& f) {
  int m = std::max(1, static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n_samples)))));
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < m; ++i) f(Vec2{static_cast<double>(i) / m, static_cast<double>(j) / m});
  }
}

}  // namespace

EllipticityWindow tensor_ellipticity(const Tensor4& t) {
  Eigen::Matrix4d m;
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) m(r, c) = 0.5 * (t.v[r * 4 + c] + t.v[c * 4 + r]);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(m, Eigen::EigenvaluesOnly);
  return {es.eigenvalues()(0), es.eigenvalues()(3)};
}

EllipticityWindow verify_ellipticity(const CoefficientField& a, int n_samples) {
  EllipticityWindow w{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for_samples(n_samples, [&](Vec2 y) {
    EllipticityWindow e;
    if (a.is_scalar()) {
      double s = a.multiplier(y);
      e = {s, s};
    } else {
      e = tensor_ellipticity(a.eval(y));
    }
    w.mu_low = std::min(w.mu_low, e.mu_low);
    w.mu_high = std::max(w.mu_high, e.mu_high);
  });
  return w;
}

double verify_symmetry(const CoefficientField& a, int n_samples) {
  double dev = 0.0;
  for_samples(n_samples, [&](Vec2 y) {
    Tensor4 t = a.eval(y);
    for (int r = 0; r < 4; ++r) {
      for (int c = 0; c < 4; ++c) dev = std::max(dev, std::abs(t.v[r * 4 + c] - t.v[c * 4 + r]));
    }
  });
  return dev;
}

double verify_periodicity(const CoefficientField& a, int n_samples) {
  static const Vec2 shifts[] = {{1, 0}, {0, 1}, {1, 1}, {-1, 0}, {0, -1}, {-1, 2}, {3, -2}};
  double dev = 0.0;
  for_samples(n_samples, [&](Vec2 y) {
    Tensor4 t0 = a.eval(y);
    for (Vec2 z : shifts) {
      Tensor4 t1 = a.eval(y + z);
      for (int r = 0; r < 16; ++r) dev = std::max(dev, std::abs(t1.v[r] - t0.v[r]));
    }
  });
  return dev;
}

}  // namespace homstokes
