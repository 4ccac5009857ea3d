#pragma once

#include <Eigen/Geometry>

#include <array>
#include <cmath>
#include <numbers>

#include "ringnet/autodiff.hpp"

namespace ringnet {

/// Forward-mode dual number with N tangent directions. Used to obtain exact
/// local Jacobians of small closed-form maps (Rodrigues) for the tape.
template <int N>
struct Dual {
  double v = 0.0;
  std::array<double, N> d{};

  Dual() = default;
  Dual(double value) : v(value) {}  // NOLINT(google-explicit-constructor)

  friend Dual operator+(Dual a, const Dual& b) {
    a.v += b.v;
    for (int i = 0; i < N; ++i) a.d[i] += b.d[i];
    return a;
  }
  friend Dual operator-(Dual a, const Dual& b) {
    a.v -= b.v;
    for (int i = 0; i < N; ++i) a.d[i] -= b.d[i];
    return a;
  }
  friend Dual operator-(Dual a) {
    a.v = -a.v;
    for (double& x : a.d) x = -x;
    return a;
  }
  friend Dual operator*(const Dual& a, const Dual& b) {
    Dual r(a.v * b.v);
    for (int i = 0; i < N; ++i) r.d[i] = a.d[i] * b.v + a.v * b.d[i];
    return r;
  }
  friend Dual operator/(const Dual& a, const Dual& b) {
    Dual r(a.v / b.v);
    for (int i = 0; i < N; ++i) r.d[i] = (a.d[i] * b.v - a.v * b.d[i]) / (b.v * b.v);
    return r;
  }
  template <class F, class DF>
  friend Dual apply(const Dual& a, F f, DF df) {
    Dual r(f(a.v));
    const double s = df(a.v);
    for (int i = 0; i < N; ++i) r.d[i] = s * a.d[i];
    return r;
  }
};

inline double value_of(double x) { return x; }
template <int N>
double value_of(const Dual<N>& x) {
  return x.v;
}

inline double sin_(double x) { return std::sin(x); }
inline double cos_(double x) { return std::cos(x); }
inline double sqrt_(double x) { return std::sqrt(x); }
template <int N>
Dual<N> sin_(const Dual<N>& x) {
  return apply(x, [](double t) { return std::sin(t); }, [](double t) { return std::cos(t); });
}
template <int N>
Dual<N> cos_(const Dual<N>& x) {
  return apply(x, [](double t) { return std::cos(t); }, [](double t) { return -std::sin(t); });
}
template <int N>
Dual<N> sqrt_(const Dual<N>& x) {
  return apply(x, [](double t) { return std::sqrt(t); }, [](double t) { return 0.5 / std::sqrt(t); });
}

/// Below this rotation angle the second-order Taylor expansion is used.
inline constexpr double kSmallAngle = 1e-8;

/// Row-major 3x3 rotation matrix of an axis-angle vector.
template <class T>
std::array<T, 9> rodrigues_matrix(const std::array<T, 3>& w) {
  const T theta_sq = w[0] * w[0] + w[1] * w[1] + w[2] * w[2];
  // Skew-symmetric cross-product matrix K and K^2.
  const std::array<T, 9> k = {T(0.0), -w[2], w[1], w[2], T(0.0), -w[0], -w[1], w[0], T(0.0)};
  std::array<T, 9> k2;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) {
      T acc(0.0);
      for (int m = 0; m < 3; ++m) acc = acc + k[r * 3 + m] * k[m * 3 + c];
      k2[r * 3 + c] = acc;
    }
  T a, b;
  if (value_of(theta_sq) < kSmallAngle * kSmallAngle) {
    a = T(1.0);
    b = T(0.5);
  } else {
    const T theta = sqrt_(theta_sq);
    a = sin_(theta) / theta;
    b = (T(1.0) - cos_(theta)) / theta_sq;
  }
  std::array<T, 9> out;
  for (int i = 0; i < 9; ++i) out[i] = a * k[i] + b * k2[i];
  out[0] = out[0] + T(1.0);
  out[4] = out[4] + T(1.0);
  out[8] = out[8] + T(1.0);
  return out;
}

/// Rotation matrix (3 x 3) of an axis-angle vector in radians.
inline DenseArray rodrigues(std::span<const double> axis_angle) {
  if (axis_angle.size() != 3) throw DimensionError("rodrigues: expected 3 components");
  for (double v : axis_angle)
    if (!std::isfinite(v)) throw NumericError("rodrigues: non-finite axis-angle input");
  const auto r = rodrigues_matrix<double>({axis_angle[0], axis_angle[1], axis_angle[2]});
  return DenseArray({3, 3}, std::vector<double>(r.begin(), r.end()));
}

namespace ad {

/// Differentiable Rodrigues map: 3-vector (any 3-element shape) -> 3 x 3.
inline Var rodrigues(Var axis_angle) {
  const DenseArray& w = axis_angle.value();
  if (w.size() != 3) throw DimensionError("rodrigues: expected 3 components");
  std::array<Dual<3>, 3> wd;
  for (int i = 0; i < 3; ++i) {
    if (!std::isfinite(w[i])) throw NumericError("rodrigues: non-finite axis-angle input");
    wd[i] = Dual<3>(w[i]);
    wd[i].d[i] = 1.0;
  }
  const auto r = rodrigues_matrix(wd);
  DenseArray out({3, 3});
  std::array<double, 27> jac{};  // d R[i] / d w[k] at [i * 3 + k]
  for (int i = 0; i < 9; ++i) {
    out[i] = r[i].v;
    for (int k = 0; k < 3; ++k) jac[i * 3 + k] = r[i].d[k];
  }
  return axis_angle.tape().record(OpKind::kCustom, "rodrigues", std::move(out), {axis_angle},
                                  [axis_angle, jac](const DenseArray& g, Gradients& grads) {
                                    if (!axis_angle.requires_grad()) return;
                                    DenseArray& gw = grads.accumulator(axis_angle);
                                    for (int i = 0; i < 9; ++i)
                                      for (int k = 0; k < 3; ++k) gw[k] += g[i] * jac[i * 3 + k];
                                  });
}

/// Yaw (degrees) of a rotation about the vertical model axis (y), from the
/// Y-X-Z Euler decomposition R = Ry(yaw) Rx(pitch) Rz(roll): atan2(R02, R22).
inline Var yaw_degrees(Var rotation) {
  const DenseArray& r = rotation.value();
  if (r.size() != 9) throw DimensionError("yaw_degrees: expected a 3 x 3 matrix");
  const double a = r[2], b = r[8];
  const double deg = 180.0 / std::numbers::pi;
  return rotation.tape().record(OpKind::kCustom, "yaw_degrees", DenseArray::scalar(std::atan2(a, b) * deg), {rotation},
                                [rotation, a, b, deg](const DenseArray& g, Gradients& grads) {
                                  if (!rotation.requires_grad()) return;
                                  const double den = a * a + b * b;
                                  if (den == 0.0) return;
                                  DenseArray& gr = grads.accumulator(rotation);
                                  gr[2] += g[0] * deg * b / den;
                                  gr[8] -= g[0] * deg * a / den;
                                });
}

}  // namespace ad

inline double yaw_degrees(const DenseArray& rotation) {
  return std::atan2(rotation[2], rotation[8]) * 180.0 / std::numbers::pi;
}

/// Axis-angle vector of R = Ry(yaw) Rx(pitch) Rz(roll), angles in degrees.
inline std::array<double, 3> axis_angle_from_euler(double yaw_deg, double pitch_deg, double roll_deg) {
  const double k = std::numbers::pi / 180.0;
  const Eigen::Matrix3d r = (Eigen::AngleAxisd(yaw_deg * k, Eigen::Vector3d::UnitY()) *
                             Eigen::AngleAxisd(pitch_deg * k, Eigen::Vector3d::UnitX()) *
                             Eigen::AngleAxisd(roll_deg * k, Eigen::Vector3d::UnitZ()))
                                .toRotationMatrix();
  const Eigen::AngleAxisd aa(r);
  const Eigen::Vector3d v = aa.axis() * aa.angle();
  return {v.x(), v.y(), v.z()};
}

}  // namespace ringnet
