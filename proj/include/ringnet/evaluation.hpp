#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ringnet/bvh.hpp"
#include "ringnet/icp.hpp"
#include "ringnet/parallel.hpp"
#include "ringnet/similarity.hpp"

namespace ringnet {

/// Reference scan with annotated landmarks. Cropping and the default
/// evaluation landmarks follow the 7-point order of kEvalLandmarks: outer
/// right eye, inner right eye, inner left eye, outer left eye, nose, mouth corners.
struct ScanMesh {
  std::string image_id;
  std::string subject;
  std::string challenge = "neutral";
  Mesh mesh;
  std::vector<Vec3> landmarks;
};

struct Prediction {
  Mesh mesh;
  std::vector<Vec3> landmarks;
};

inline const std::vector<std::string>& challenge_names() {
  static const std::vector<std::string> names = {"neutral", "expression", "occlusion", "selfie"};
  return names;
}

/// Keeps vertices within 0.7 (outer_eye_dist + nose_dist) of the centre and
/// faces whose three vertices all survive.
inline ScanMesh crop_scan(const ScanMesh& scan, const Vec3& centre, double outer_eye_dist, double nose_dist) {
  if (!(outer_eye_dist > 0.0) || !(nose_dist > 0.0)) throw ValueError("crop_scan: distances must be positive");
  const double radius = 0.7 * (outer_eye_dist + nose_dist);
  ScanMesh out = scan;
  out.mesh.vertices.clear();
  out.mesh.faces.clear();
  std::vector<std::int64_t> remap(scan.mesh.vertices.size(), -1);
  for (std::size_t i = 0; i < scan.mesh.vertices.size(); ++i) {
    if ((scan.mesh.vertices[i] - centre).norm() <= radius) {
      remap[i] = static_cast<std::int64_t>(out.mesh.vertices.size());
      out.mesh.vertices.push_back(scan.mesh.vertices[i]);
    }
  }
  if (out.mesh.vertices.empty()) throw ValueError("crop_scan: no vertex lies within the crop radius");
  for (const Face& f : scan.mesh.faces) {
    if (remap[f[0]] < 0 || remap[f[1]] < 0 || remap[f[2]] < 0) continue;
    out.mesh.faces.push_back({static_cast<std::uint32_t>(remap[f[0]]), static_cast<std::uint32_t>(remap[f[1]]),
                              static_cast<std::uint32_t>(remap[f[2]])});
  }
  return out;
}

/// Crop centred on the nose landmark; outer_eye_dist = |p0 - p3|,
/// nose_dist = distance from the nose to the midpoint of the inner eye corners.
inline ScanMesh crop_scan(const ScanMesh& scan) {
  if (scan.landmarks.size() != 7) throw ValueError("crop_scan: expected the 7 evaluation landmarks");
  const auto& p = scan.landmarks;
  return crop_scan(scan, p[4], (p[0] - p[3]).norm(), (p[4] - 0.5 * (p[1] + p[2])).norm());
}

struct ErrorStats {
  double median = 0.0, mean = 0.0, std = 0.0;
  std::size_t count = 0;
};

inline ErrorStats error_stats(std::vector<double> v) {
  ErrorStats s;
  s.count = v.size();
  if (v.empty()) return s;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  s.median = n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean = sum / static_cast<double>(n);
  double sq = 0.0;
  for (double x : v) sq += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(sq / static_cast<double>(n));
  return s;
}

/// 0 to 7 mm in 0.05 mm steps.
inline std::vector<double> default_thresholds() {
  std::vector<double> t;
  for (int i = 0; i <= 140; ++i) t.push_back(0.05 * i);
  return t;
}

/// Fraction of distances <= each threshold.
inline std::vector<double> cumulative_curve(std::vector<double> distances, const std::vector<double>& thresholds) {
  std::sort(distances.begin(), distances.end());
  std::vector<double> out;
  out.reserve(thresholds.size());
  for (double t : thresholds) {
    const auto k = std::upper_bound(distances.begin(), distances.end(), t) - distances.begin();
    out.push_back(distances.empty() ? 0.0 : static_cast<double>(k) / static_cast<double>(distances.size()));
  }
  return out;
}

struct EvalOptions {
  bool crop = true;
  IcpOptions icp;
  std::vector<double> thresholds = default_thresholds();
  std::size_t threads = 1;
};

struct ImageResult {
  std::string image_id;
  std::string challenge;
  bool failed = false;
  std::string failure;
  std::vector<double> distances;
  SimilarityTransform transform;
  std::size_t icp_iterations = 0;
};

struct EvalReport {
  std::vector<ImageResult> images;
  std::map<std::string, ErrorStats> per_challenge;
  ErrorStats overall;
  std::vector<double> thresholds;
  std::vector<double> curve;
  std::size_t failures = 0;
};

/// Landmark similarity, ICP refinement, then scan-to-mesh distances in scan units.
inline ImageResult evaluate_image(const Prediction& pred, const ScanMesh& scan, const EvalOptions& opt) {
  ImageResult r;
  r.image_id = scan.image_id;
  r.challenge = scan.challenge;
  if (pred.landmarks.size() != scan.landmarks.size()) throw DimensionError("evaluate: prediction and scan landmark counts differ");
  const ScanMesh target = opt.crop ? crop_scan(scan) : scan;
  const Bvh bvh(pred.mesh);
  const SimilarityTransform init = similarity_from_landmarks(pred.landmarks, target.landmarks);
  const IcpResult icp = icp_refine(target.mesh.vertices, bvh, init, opt.icp);
  r.transform = icp.transform;
  r.icp_iterations = icp.iterations;
  r.distances = aligned_distances(target.mesh.vertices, bvh, icp.transform);
  return r;
}

/// Predictions are aligned with scans by position; a missing prediction marks
/// the image failed and leaves it out of the statistics.
inline EvalReport evaluate(const std::vector<std::optional<Prediction>>& preds, const std::vector<ScanMesh>& scans,
                           const EvalOptions& opt = {}) {
  if (preds.size() != scans.size()) throw DimensionError("evaluate: prediction and scan lists differ in length");
  EvalReport rep;
  rep.thresholds = opt.thresholds;
  rep.images.resize(scans.size());
  parallel_for(scans.size(), opt.threads, [&](std::size_t i) {
    if (!preds[i]) {
      rep.images[i].image_id = scans[i].image_id;
      rep.images[i].challenge = scans[i].challenge;
      rep.images[i].failed = true;
      rep.images[i].failure = "missing prediction";
      return;
    }
    rep.images[i] = evaluate_image(*preds[i], scans[i], opt);
  });
  std::vector<double> pooled;
  std::map<std::string, std::vector<double>> by_challenge;
  for (const ImageResult& r : rep.images) {
    if (r.failed) {
      ++rep.failures;
      continue;
    }
    pooled.insert(pooled.end(), r.distances.begin(), r.distances.end());
    auto& c = by_challenge[r.challenge];
    c.insert(c.end(), r.distances.begin(), r.distances.end());
  }
  for (auto& [name, v] : by_challenge) rep.per_challenge[name] = error_stats(std::move(v));
  rep.curve = cumulative_curve(pooled, opt.thresholds);
  rep.overall = error_stats(std::move(pooled));
  return rep;
}

}  // namespace ringnet
