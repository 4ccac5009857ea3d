#pragma once

#include <Eigen/Geometry>

#include <algorithm>
#include <limits>
#include <numeric>
#include <vector>

#include "ringnet/error.hpp"
#include "ringnet/mesh.hpp"

namespace ringnet {

/// Closest point to p on triangle abc (Voronoi-region walk).
inline Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return a;
  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return b;
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return a + (d1 / (d1 - d3)) * ab;
  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return c;
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return a + (d2 / (d2 - d6)) * ac;
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);
  const double denom = 1.0 / (va + vb + vc);
  return a + ab * (vb * denom) + ac * (vc * denom);
}

struct ClosestPoint {
  Vec3 point = Vec3::Zero();
  double distance = std::numeric_limits<double>::infinity();
  std::uint32_t triangle = 0;
};

/// Exhaustive closest point over all triangles.
inline ClosestPoint closest_point_brute_force(const Mesh& mesh, const Vec3& p) {
  if (mesh.faces.empty()) throw ValueError("closest point query on an empty mesh");
  ClosestPoint best;
  for (std::uint32_t t = 0; t < mesh.faces.size(); ++t) {
    const Face& f = mesh.faces[t];
    const Vec3 q = closest_point_on_triangle(p, mesh.vertices[f[0]], mesh.vertices[f[1]], mesh.vertices[f[2]]);
    const double d = (p - q).norm();
    if (d < best.distance) best = {q, d, t};
  }
  return best;
}

/// Bounding-volume hierarchy over a mesh's triangles; immutable after construction.
class Bvh {
 public:
  explicit Bvh(const Mesh& mesh, std::size_t leaf_size = 4) : mesh_(mesh) {
    if (mesh.faces.empty()) throw ValueError("Bvh: empty mesh");
    for (const Face& f : mesh.faces)
      for (std::uint32_t v : f)
        if (v >= mesh.vertices.size()) throw DimensionError("Bvh: face index out of range");
    order_.resize(mesh.faces.size());
    std::iota(order_.begin(), order_.end(), 0u);
    centroids_.reserve(mesh.faces.size());
    for (const Face& f : mesh.faces)
      centroids_.push_back((mesh.vertices[f[0]] + mesh.vertices[f[1]] + mesh.vertices[f[2]]) / 3.0);
    build(0, order_.size(), leaf_size);
  }

  const Mesh& mesh() const { return mesh_; }

  ClosestPoint closest(const Vec3& p) const {
    ClosestPoint best;
    std::vector<std::size_t> stack = {0};
    while (!stack.empty()) {
      const Node& n = nodes_[stack.back()];
      stack.pop_back();
      // The slack keeps rounding in the box test from pruning a nearer triangle.
      if (n.box.squaredExteriorDistance(p) > best.distance * best.distance * (1.0 + 1e-9)) continue;
      if (n.count > 0) {
        for (std::size_t i = n.first; i < n.first + n.count; ++i) {
          const std::uint32_t t = order_[i];
          const Face& f = mesh_.faces[t];
          const Vec3 q = closest_point_on_triangle(p, mesh_.vertices[f[0]], mesh_.vertices[f[1]], mesh_.vertices[f[2]]);
          const double d = (p - q).norm();
          if (d < best.distance || (d == best.distance && t < best.triangle)) best = {q, d, t};
        }
        continue;
      }
      const double dl = nodes_[n.left].box.squaredExteriorDistance(p);
      const double dr = nodes_[n.right].box.squaredExteriorDistance(p);
      // Visit the nearer child first.
      if (dl <= dr) {
        stack.push_back(n.right);
        stack.push_back(n.left);
      } else {
        stack.push_back(n.left);
        stack.push_back(n.right);
      }
    }
    return best;
  }

  std::vector<double> distances(const std::vector<Vec3>& points) const {
    std::vector<double> out(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) out[i] = closest(points[i]).distance;
    return out;
  }

 private:
  struct Node {
    Eigen::AlignedBox3d box;
    std::size_t first = 0, count = 0;  // leaf range in order_
    std::size_t left = 0, right = 0;
  };

  std::size_t build(std::size_t begin, std::size_t end, std::size_t leaf_size) {
    const std::size_t index = nodes_.size();
    nodes_.emplace_back();
    Eigen::AlignedBox3d box, cbox;
    for (std::size_t i = begin; i < end; ++i) {
      const Face& f = mesh_.faces[order_[i]];
      for (std::uint32_t v : f) box.extend(mesh_.vertices[v]);
      cbox.extend(centroids_[order_[i]]);
    }
    nodes_[index].box = box;
    if (end - begin <= leaf_size) {
      nodes_[index].first = begin;
      nodes_[index].count = end - begin;
      return index;
    }
    int axis = 0;
    cbox.sizes().maxCoeff(&axis);
    const std::size_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin), order_.begin() + static_cast<std::ptrdiff_t>(mid),
                     order_.begin() + static_cast<std::ptrdiff_t>(end), [&](std::uint32_t a, std::uint32_t b) {
                       return centroids_[a][axis] < centroids_[b][axis] || (centroids_[a][axis] == centroids_[b][axis] && a < b);
                     });
    const std::size_t left = build(begin, mid, leaf_size);
    const std::size_t right = build(mid, end, leaf_size);
    nodes_[index].left = left;
    nodes_[index].right = right;
    return index;
  }

  Mesh mesh_;
  std::vector<std::uint32_t> order_;
  std::vector<Vec3> centroids_;
  std::vector<Node> nodes_;
};

/// Per-point Euclidean distance to the closest point on the mesh surface.
inline std::vector<double> scan_to_mesh_distance(const std::vector<Vec3>& points, const Mesh& mesh) {
  return Bvh(mesh).distances(points);
}

}  // namespace ringnet
