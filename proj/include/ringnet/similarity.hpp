#pragma once

#include <Eigen/Dense>

#include <vector>

#include "ringnet/error.hpp"
#include "ringnet/mesh.hpp"

namespace ringnet {

/// x -> scale * rotation * x + translation.
struct SimilarityTransform {
  double scale = 1.0;
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& x) const { return scale * (rotation * x) + translation; }
  Vec3 inverse_apply(const Vec3& y) const { return rotation.transpose() * (y - translation) / scale; }

  std::vector<Vec3> apply(const std::vector<Vec3>& xs) const {
    std::vector<Vec3> out;
    out.reserve(xs.size());
    for (const Vec3& x : xs) out.push_back(apply(x));
    return out;
  }

  Mesh apply(const Mesh& m) const { return {apply(m.vertices), m.faces}; }
};

/// Closed-form least-squares similarity mapping src onto dst (SVD with
/// reflection correction).
inline SimilarityTransform similarity_from_landmarks(const std::vector<Vec3>& src, const std::vector<Vec3>& dst) {
  if (src.size() != dst.size()) throw DimensionError("similarity_from_landmarks: point counts differ");
  if (src.size() < 3) throw ValueError("similarity_from_landmarks: need at least 3 correspondences");
  const double n = static_cast<double>(src.size());
  Vec3 ms = Vec3::Zero(), md = Vec3::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) {
    ms += src[i];
    md += dst[i];
  }
  ms /= n;
  md /= n;
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero(), scatter = Eigen::Matrix3d::Zero();
  double var_src = 0.0;
  for (std::size_t i = 0; i < src.size(); ++i) {
    const Vec3 s = src[i] - ms, d = dst[i] - md;
    cov += d * s.transpose();
    scatter += s * s.transpose();
    var_src += s.squaredNorm();
  }
  cov /= n;
  var_src /= n;
  const Eigen::Vector3d spread = Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(scatter).eigenvalues();
  if (!(spread[2] > 0.0) || spread[1] <= 1e-12 * spread[2]) {
    throw ValueError("similarity_from_landmarks: source points are collinear or coincident");
  }
  // Identical point sets: the identity is exact, the SVD only approximates it.
  if (src == dst) return {};
  const Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Vector3d d = Eigen::Vector3d::Ones();
  if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0) d[2] = -1.0;
  SimilarityTransform t;
  t.rotation = svd.matrixU() * d.asDiagonal() * svd.matrixV().transpose();
  t.scale = svd.singularValues().dot(d) / var_src;
  t.translation = md - t.scale * (t.rotation * ms);
  return t;
}

}  // namespace ringnet
