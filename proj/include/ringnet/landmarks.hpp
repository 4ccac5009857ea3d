#pragma once

// Static and pose-dependent (contour) 3D landmarks on a triangle mesh.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "ringnet/autodiff.hpp"
#include "ringnet/mesh.hpp"

namespace ringnet {

/// A point on the mesh surface: triangle index plus barycentric coordinates.
struct SurfacePoint {
  std::uint32_t triangle = 0;
  std::array<double, 3> bary{1.0, 0.0, 0.0};

  friend bool operator==(const SurfacePoint&, const SurfacePoint&) = default;
};

/// One sample of a contour landmark's trajectory over head yaw.
struct ContourSample {
  double yaw_deg = 0.0;
  SurfacePoint point;

  friend bool operator==(const ContourSample&, const ContourSample&) = default;
};

/// Landmark order is contour landmarks first, then static landmarks (the
/// 68-point layout puts the 17 jaw-line points first).
struct LandmarkEmbedding {
  std::vector<std::vector<ContourSample>> contour;
  std::vector<SurfacePoint> static_points;

  std::size_t size() const { return contour.size() + static_points.size(); }

  /// Appends one message per violated invariant.
  void collect_problems(std::size_t num_faces, std::vector<std::string>& problems) const {
    auto check_point = [&](const SurfacePoint& p, const std::string& where) {
      if (p.triangle >= num_faces) problems.push_back(where + ": triangle index out of range");
      double s = 0.0;
      for (double b : p.bary) {
        if (!(b >= 0.0)) problems.push_back(where + ": negative barycentric coordinate");
        s += b;
      }
      if (std::abs(s - 1.0) > 1e-6) problems.push_back(where + ": barycentric coordinates do not sum to 1");
    };
    for (std::size_t i = 0; i < static_points.size(); ++i) check_point(static_points[i], "static landmark " + std::to_string(i));
    for (std::size_t i = 0; i < contour.size(); ++i) {
      const std::string where = "contour landmark " + std::to_string(i);
      if (contour[i].empty()) problems.push_back(where + ": empty trajectory");
      for (std::size_t s = 0; s < contour[i].size(); ++s) {
        check_point(contour[i][s].point, where);
        if (s > 0 && !(contour[i][s].yaw_deg > contour[i][s - 1].yaw_deg)) {
          problems.push_back(where + ": yaw samples not strictly increasing");
        }
      }
    }
  }

  friend bool operator==(const LandmarkEmbedding&, const LandmarkEmbedding&) = default;
};

/// Position of a yaw value within a contour trajectory.
struct TrajectoryBracket {
  std::size_t lower = 0;
  std::size_t upper = 0;
  double alpha = 0.0;     // weight of the upper sample
  double slope = 0.0;     // d alpha / d yaw; zero when clamped
};

inline TrajectoryBracket locate_yaw(const std::vector<ContourSample>& samples, double yaw_deg) {
  if (samples.empty()) throw ValueError("contour trajectory table is empty");
  const std::size_t last = samples.size() - 1;
  if (yaw_deg <= samples.front().yaw_deg) return {0, 0, 0.0, 0.0};
  if (yaw_deg >= samples.back().yaw_deg) return {last, last, 0.0, 0.0};
  std::size_t hi = 1;
  while (samples[hi].yaw_deg < yaw_deg) ++hi;
  const double span = samples[hi].yaw_deg - samples[hi - 1].yaw_deg;
  return {hi - 1, hi, (yaw_deg - samples[hi - 1].yaw_deg) / span, 1.0 / span};
}

namespace detail {

inline void check_surface_point(const SurfacePoint& p, std::size_t num_faces) {
  if (p.triangle >= num_faces) {
    throw DimensionError("landmark triangle index " + std::to_string(p.triangle) + " out of range");
  }
}

inline std::array<double, 3> surface_position(const DenseArray& vertices, const std::vector<Face>& faces,
                                              const SurfacePoint& p) {
  check_surface_point(p, faces.size());
  const Face& f = faces[p.triangle];
  std::array<double, 3> out{};
  for (int c = 0; c < 3; ++c) {
    if (f[c] >= vertices.rows()) throw DimensionError("face references a missing vertex");
    for (int k = 0; k < 3; ++k) out[k] += p.bary[c] * vertices(f[c], k);
  }
  return out;
}

inline void scatter_surface_gradient(DenseArray& gv, const std::vector<Face>& faces, const SurfacePoint& p,
                                     const double* g, double weight) {
  const Face& f = faces[p.triangle];
  for (int c = 0; c < 3; ++c)
    for (int k = 0; k < 3; ++k) gv(f[c], k) += weight * p.bary[c] * g[k];
}

}  // namespace detail

inline DenseArray static_landmarks3d(const DenseArray& vertices, const std::vector<Face>& faces,
                                     const std::vector<SurfacePoint>& points) {
  DenseArray out = DenseArray::zeros(points.size(), 3);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto p = ringnet::detail::surface_position(vertices, faces, points[i]);
    for (int k = 0; k < 3; ++k) out(i, k) = p[k];
  }
  return out;
}

inline DenseArray dynamic_landmarks3d(const DenseArray& vertices, const std::vector<Face>& faces,
                                      const std::vector<std::vector<ContourSample>>& contour, double yaw_deg) {
  DenseArray out = DenseArray::zeros(contour.size(), 3);
  for (std::size_t i = 0; i < contour.size(); ++i) {
    const TrajectoryBracket b = locate_yaw(contour[i], yaw_deg);
    const auto p0 = ringnet::detail::surface_position(vertices, faces, contour[i][b.lower].point);
    const auto p1 = ringnet::detail::surface_position(vertices, faces, contour[i][b.upper].point);
    for (int k = 0; k < 3; ++k) out(i, k) = (1.0 - b.alpha) * p0[k] + b.alpha * p1[k];
  }
  return out;
}

namespace ad {

inline Var static_landmarks3d(Var vertices, const std::vector<Face>& faces, const std::vector<SurfacePoint>& points) {
  DenseArray out = ringnet::static_landmarks3d(vertices.value(), faces, points);
  return vertices.tape().record(OpKind::kCustom, "static_landmarks3d", std::move(out), {vertices},
                                [vertices, &faces, points](const DenseArray& g, Gradients& grads) {
                                  if (!vertices.requires_grad()) return;
                                  DenseArray& gv = grads.accumulator(vertices);
                                  for (std::size_t i = 0; i < points.size(); ++i)
                                    ringnet::detail::scatter_surface_gradient(gv, faces, points[i], g.data() + 3 * i, 1.0);
                                });
}

/// Contour landmarks at the yaw held in the 1 x 1 variable `yaw_deg`.
/// Differentiable in both the vertices and the yaw (piecewise linear).
inline Var dynamic_landmarks3d(Var vertices, const std::vector<Face>& faces,
                               const std::vector<std::vector<ContourSample>>& contour, Var yaw_deg) {
  const double yaw = yaw_deg.value().item();
  const std::size_t c = contour.size();
  std::vector<TrajectoryBracket> brackets(c);
  DenseArray out = DenseArray::zeros(c, 3);
  DenseArray delta = DenseArray::zeros(c, 3);  // p_upper - p_lower
  for (std::size_t i = 0; i < c; ++i) {
    brackets[i] = locate_yaw(contour[i], yaw);
    const auto p0 = ringnet::detail::surface_position(vertices.value(), faces, contour[i][brackets[i].lower].point);
    const auto p1 = ringnet::detail::surface_position(vertices.value(), faces, contour[i][brackets[i].upper].point);
    for (int k = 0; k < 3; ++k) {
      out(i, k) = (1.0 - brackets[i].alpha) * p0[k] + brackets[i].alpha * p1[k];
      delta(i, k) = p1[k] - p0[k];
    }
  }
  return vertices.tape().record(
      OpKind::kCustom, "dynamic_landmarks3d", std::move(out), {vertices, yaw_deg},
      [vertices, yaw_deg, &faces, &contour, brackets, delta](const DenseArray& g, Gradients& grads) {
        if (vertices.requires_grad()) {
          DenseArray& gv = grads.accumulator(vertices);
          for (std::size_t i = 0; i < brackets.size(); ++i) {
            const TrajectoryBracket& b = brackets[i];
            ringnet::detail::scatter_surface_gradient(gv, faces, contour[i][b.lower].point, g.data() + 3 * i, 1.0 - b.alpha);
            ringnet::detail::scatter_surface_gradient(gv, faces, contour[i][b.upper].point, g.data() + 3 * i, b.alpha);
          }
        }
        if (yaw_deg.requires_grad()) {
          double acc = 0.0;
          for (std::size_t i = 0; i < brackets.size(); ++i)
            for (int k = 0; k < 3; ++k) acc += g(i, k) * delta(i, k) * brackets[i].slope;
          grads.accumulator(yaw_deg)[0] += acc;
        }
      });
}

}  // namespace ad
}  // namespace ringnet
