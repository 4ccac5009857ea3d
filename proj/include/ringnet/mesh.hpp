#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <vector>

#include "ringnet/dense_array.hpp"

namespace ringnet {

using Vec3 = Eigen::Vector3d;
using Face = std::array<std::uint32_t, 3>;

/// Triangle mesh in model or scan units.
struct Mesh {
  std::vector<Vec3> vertices;
  std::vector<Face> faces;
};

inline std::vector<Vec3> to_points(const DenseArray& rows) {
  if (rows.rank() != 2 || rows.cols() != 3) throw DimensionError("to_points: expected an M x 3 array");
  std::vector<Vec3> out(rows.rows());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = Vec3(rows(i, 0), rows(i, 1), rows(i, 2));
  return out;
}

inline DenseArray to_rows(const std::vector<Vec3>& points) {
  DenseArray out = DenseArray::zeros(points.size(), 3);
  for (std::size_t i = 0; i < points.size(); ++i)
    for (int k = 0; k < 3; ++k) out(i, k) = points[i][k];
  return out;
}

inline Mesh make_mesh(const DenseArray& vertices, std::vector<Face> faces) {
  return Mesh{to_points(vertices), std::move(faces)};
}

}  // namespace ringnet
