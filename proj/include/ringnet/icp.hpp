#pragma once

#include <vector>

#include "ringnet/bvh.hpp"
#include "ringnet/similarity.hpp"

namespace ringnet {

struct IcpOptions {
  std::size_t max_iters = 50;
  double tol = 1e-6;  // mm
};

struct IcpResult {
  SimilarityTransform transform;  // maps the mesh onto the scan
  double mean_distance = 0.0;
  std::size_t iterations = 0;
};

/// Distances from scan points to the mesh placed by `t`. A similarity scales
/// all distances by its scale, so queries run on the untransformed mesh.
inline std::vector<double> aligned_distances(const std::vector<Vec3>& scan, const Bvh& mesh, const SimilarityTransform& t) {
  std::vector<double> out(scan.size());
  for (std::size_t i = 0; i < scan.size(); ++i) out[i] = t.scale * mesh.closest(t.inverse_apply(scan[i])).distance;
  return out;
}

inline double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

/// Point-to-surface ICP re-estimating scale each iteration. Never returns a
/// transform with larger mean distance than `init`.
inline IcpResult icp_refine(const std::vector<Vec3>& scan, const Bvh& mesh, const SimilarityTransform& init,
                            const IcpOptions& opt = {}) {
  if (scan.empty()) throw ValueError("icp_refine: empty scan");
  if (!(init.scale > 0.0)) throw ValueError("icp_refine: init scale must be positive");
  IcpResult best{init, mean_of(aligned_distances(scan, mesh, init)), 0};
  std::vector<Vec3> src(scan.size());
  for (std::size_t it = 0; it < opt.max_iters; ++it) {
    for (std::size_t i = 0; i < scan.size(); ++i) src[i] = mesh.closest(best.transform.inverse_apply(scan[i])).point;
    SimilarityTransform next;
    try {
      next = similarity_from_landmarks(src, scan);
    } catch (const ValueError&) {
      break;
    }
    const double d = mean_of(aligned_distances(scan, mesh, next));
    const bool improved = d < best.mean_distance;
    const bool converged = !(best.mean_distance - d >= opt.tol);
    if (improved) best = {next, d, it + 1};
    else best.iterations = it + 1;
    if (converged) break;
  }
  return best;
}

}  // namespace ringnet
