#pragma once

// Procedural desk-scale head model. Produces an ellipsoidal head with nose,
// brow, eye-socket, lip and chin relief, smooth random identity/expression
// bases with the global similarity subspace projected out, a neck/jaw/eyeball
// joint hierarchy, and a 68-point landmark embedding whose jaw-line points
// follow silhouette trajectories over yaw.
//
// Frame: x to image right, y down, z away from the viewer (the face looks
// toward -z). Units are millimetres.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

#include "ringnet/head_model.hpp"

namespace ringnet {

struct ModelGeneratorConfig {
  std::size_t latitude_rings = 20;
  std::size_t longitude_segments = 28;  // must be even for mirror symmetry
  std::size_t num_shape = 10;
  std::size_t num_expression = 5;
  double radius_x = 78.0;
  double radius_y = 110.0;
  double radius_z = 95.0;
  double shape_stddev_mm = 5.0;  // RMS vertex displacement of the first shape component
  double shape_decay = 0.85;
  double expression_stddev_mm = 3.0;
  double expression_decay = 0.85;
  double pose_corrective_mm = 2.0;
  double contour_yaw_limit = 40.0;
  double contour_yaw_step = 5.0;
  std::uint64_t seed = 7;
};

/// Indices (68-point layout) of the seven annotation landmarks used to align
/// predictions to scans: outer/inner eye corners, nose base, mouth corners.
inline constexpr std::array<std::size_t, 7> kEvalLandmarks = {36, 39, 42, 45, 33, 48, 54};

namespace generator_detail {

inline double smoothstep(double t) {
  t = std::clamp(t, 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

inline double gauss2(double dx, double dy, double sx, double sy) {
  return std::exp(-0.5 * ((dx / sx) * (dx / sx) + (dy / sy) * (dy / sy)));
}

// Design positions (x, y) of the 51 static landmarks, 68-point indices 17..67.
inline const std::vector<std::array<double, 2>>& static_design() {
  static const std::vector<std::array<double, 2>> pts = {
      // brows 17-26
      {-48, -30}, {-39, -35}, {-29, -37}, {-19, -35}, {-9, -31},
      {9, -31}, {19, -35}, {29, -37}, {39, -35}, {48, -30},
      // nose bridge 27-30
      {0, -18}, {0, -8}, {0, 2}, {0, 12},
      // nose base 31-35
      {-14, 22}, {-7, 24}, {0, 25}, {7, 24}, {14, 22},
      // right eye 36-41
      {-45, -15}, {-37, -20}, {-27, -20}, {-19, -14}, {-27, -11}, {-37, -11},
      // left eye 42-47
      {19, -14}, {27, -20}, {37, -20}, {45, -15}, {37, -11}, {27, -11},
      // outer lips 48-59
      {-25, 45}, {-16, 39}, {-7, 36}, {0, 37}, {7, 36}, {16, 39},
      {25, 45}, {16, 52}, {7, 55}, {0, 56}, {-7, 55}, {-16, 52},
      // inner lips 60-67
      {-20, 45}, {-8, 43}, {0, 43}, {8, 43}, {20, 45}, {8, 47}, {0, 47}, {-8, 47},
  };
  return pts;
}

struct Grid {
  std::vector<Vec3> vertices;
  std::vector<Face> faces;
  std::vector<std::size_t> mirror;  // vertex index of the x-mirrored vertex
};

inline Grid build_sphere(const ModelGeneratorConfig& c) {
  Grid g;
  const std::size_t nl = c.latitude_rings, ns = c.longitude_segments;
  const double pi = std::numbers::pi;
  auto warp_polar = [&](double v) { return v + 0.4 * std::sin(2.0 * v) / 2.0; };
  auto warp_azimuth = [&](double u) { return u - 0.5 * std::sin(u); };
  auto place = [&](double phi, double lambda) {
    return Vec3(c.radius_x * std::sin(phi) * std::sin(lambda), -c.radius_y * std::cos(phi),
                -c.radius_z * std::sin(phi) * std::cos(lambda));
  };
  g.vertices.push_back(Vec3(0, -c.radius_y, 0));  // top pole
  for (std::size_t i = 1; i <= nl; ++i) {
    const double phi = warp_polar(pi * static_cast<double>(i) / static_cast<double>(nl + 1));
    for (std::size_t j = 0; j < ns; ++j) {
      const double u = 2.0 * pi * static_cast<double>(j) / static_cast<double>(ns);
      const double uu = u > pi ? u - 2.0 * pi : u;
      g.vertices.push_back(place(phi, warp_azimuth(uu)));
    }
  }
  g.vertices.push_back(Vec3(0, c.radius_y, 0));  // bottom pole
  const auto idx = [&](std::size_t i, std::size_t j) { return static_cast<std::uint32_t>(1 + (i - 1) * ns + j % ns); };
  const auto bottom = static_cast<std::uint32_t>(g.vertices.size() - 1);
  // Winding is consistent but orientation is irrelevant to every consumer.
  for (std::size_t j = 0; j < ns; ++j) g.faces.push_back({0, idx(1, j + 1), idx(1, j)});
  for (std::size_t i = 1; i < nl; ++i)
    for (std::size_t j = 0; j < ns; ++j) {
      g.faces.push_back({idx(i, j), idx(i, j + 1), idx(i + 1, j)});
      g.faces.push_back({idx(i, j + 1), idx(i + 1, j + 1), idx(i + 1, j)});
    }
  for (std::size_t j = 0; j < ns; ++j) g.faces.push_back({idx(nl, j), idx(nl, j + 1), bottom});

  g.mirror.resize(g.vertices.size());
  g.mirror[0] = 0;
  g.mirror[bottom] = bottom;
  for (std::size_t i = 1; i <= nl; ++i)
    for (std::size_t j = 0; j < ns; ++j) g.mirror[idx(i, j)] = idx(i, (ns - j) % ns);
  return g;
}

inline void add_relief(std::vector<Vec3>& verts, const ModelGeneratorConfig& c) {
  for (Vec3& v : verts) {
    const double front = std::pow(std::max(0.0, -v.z() / c.radius_z), 2.0);
    if (front == 0.0) continue;
    const double x = v.x(), y = v.y();
    double dz = 0.0;
    dz -= 24.0 * gauss2(x, y - 10.0, 9.0, 16.0);                       // nose
    dz += 6.0 * (gauss2(x + 32.0, y + 15.0, 10.0, 8.0) + gauss2(x - 32.0, y + 15.0, 10.0, 8.0));  // sockets
    dz -= 4.0 * gauss2(x, y + 32.0, 32.0, 6.0);                        // brow ridge
    dz -= 4.0 * gauss2(x, y - 45.0, 16.0, 6.0);                        // lips
    dz -= 6.0 * gauss2(x, y - 82.0, 16.0, 10.0);                       // chin
    v.z() += front * dz;
  }
}

// Orthonormal basis of the 7-dimensional similarity subspace (translation,
// infinitesimal rotation, isotropic scale) acting on the given vertices.
inline Eigen::MatrixXd similarity_subspace(const std::vector<Vec3>& verts) {
  const auto n = static_cast<Eigen::Index>(verts.size());
  Vec3 centroid = Vec3::Zero();
  for (const Vec3& v : verts) centroid += v;
  centroid /= static_cast<double>(verts.size());
  Eigen::MatrixXd q(3 * n, 7);
  q.setZero();
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vec3 p = verts[static_cast<std::size_t>(i)] - centroid;
    for (int a = 0; a < 3; ++a) q(3 * i + a, a) = 1.0;
    for (int a = 0; a < 3; ++a) {
      Vec3 axis = Vec3::Zero();
      axis[a] = 1.0;
      const Vec3 r = axis.cross(p);
      for (int k = 0; k < 3; ++k) q(3 * i + k, 3 + a) = r[k];
    }
    for (int k = 0; k < 3; ++k) q(3 * i + k, 6) = p[k];
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(q);
  return qr.householderQ() * Eigen::MatrixXd::Identity(3 * n, 7);
}

// Smooth random displacement field: cubic polynomial in normalized
// coordinates per axis, times an optional per-vertex localization.
inline Eigen::VectorXd random_field(const std::vector<Vec3>& verts, const ModelGeneratorConfig& c, std::mt19937_64& rng,
                                    const std::vector<double>* localize, int degree) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<std::array<int, 3>> exps;
  for (int i = 0; i <= degree; ++i)
    for (int j = 0; i + j <= degree; ++j)
      for (int k = 0; i + j + k <= degree; ++k) exps.push_back({i, j, k});
  std::vector<std::array<double, 3>> coef(exps.size());
  for (auto& cf : coef)
    for (double& x : cf) x = normal(rng);
  Eigen::VectorXd f(3 * static_cast<Eigen::Index>(verts.size()));
  for (std::size_t v = 0; v < verts.size(); ++v) {
    const double u[3] = {verts[v].x() / c.radius_x, verts[v].y() / c.radius_y, verts[v].z() / c.radius_z};
    const double loc = localize ? (*localize)[v] : 1.0;
    for (int a = 0; a < 3; ++a) {
      double acc = 0.0;
      for (std::size_t m = 0; m < exps.size(); ++m)
        acc += coef[m][a] * std::pow(u[0], exps[m][0]) * std::pow(u[1], exps[m][1]) * std::pow(u[2], exps[m][2]);
      f(3 * static_cast<Eigen::Index>(v) + a) = loc * acc;
    }
  }
  return f;
}

// Rows orthonormal to each other and to `exclude`, each scaled so that the
// RMS per-vertex displacement equals the given stddev.
inline DenseArray orthonormal_basis(std::vector<Eigen::VectorXd> fields, const Eigen::MatrixXd& exclude,
                                    const std::vector<double>& stddev) {
  const auto dim = exclude.rows();
  const double n = static_cast<double>(dim / 3);
  DenseArray out = DenseArray::zeros(fields.size(), static_cast<std::size_t>(dim));
  std::vector<Eigen::VectorXd> done;
  for (std::size_t k = 0; k < fields.size(); ++k) {
    Eigen::VectorXd f = fields[k];
    for (int pass = 0; pass < 2; ++pass) {
      f -= exclude * (exclude.transpose() * f);
      for (const auto& d : done) f -= d * d.dot(f);
    }
    f.normalize();
    done.push_back(f);
    for (Eigen::Index i = 0; i < dim; ++i) out(k, static_cast<std::size_t>(i)) = f(i) * stddev[k] * std::sqrt(n);
  }
  return out;
}

// Front-most triangle under the point (x, y) when looking along +z.
inline std::optional<SurfacePoint> ray_surface_point(const std::vector<Vec3>& verts, const std::vector<Face>& faces,
                                                     double x, double y) {
  std::optional<SurfacePoint> best;
  double best_z = std::numeric_limits<double>::infinity();
  for (std::size_t f = 0; f < faces.size(); ++f) {
    const Vec3& a = verts[faces[f][0]];
    const Vec3& b = verts[faces[f][1]];
    const Vec3& c = verts[faces[f][2]];
    const double det = (b.y() - c.y()) * (a.x() - c.x()) + (c.x() - b.x()) * (a.y() - c.y());
    if (std::abs(det) < 1e-12) continue;
    const double l0 = ((b.y() - c.y()) * (x - c.x()) + (c.x() - b.x()) * (y - c.y())) / det;
    const double l1 = ((c.y() - a.y()) * (x - c.x()) + (a.x() - c.x()) * (y - c.y())) / det;
    const double l2 = 1.0 - l0 - l1;
    if (l0 < -1e-12 || l1 < -1e-12 || l2 < -1e-12) continue;
    const double z = l0 * a.z() + l1 * b.z() + l2 * c.z();
    if (z < best_z) {
      best_z = z;
      SurfacePoint p;
      p.triangle = static_cast<std::uint32_t>(f);
      p.bary = {std::max(l0, 0.0), std::max(l1, 0.0), std::max(l2, 0.0)};
      const double s = p.bary[0] + p.bary[1] + p.bary[2];
      for (double& bb : p.bary) bb /= s;
      best = p;
    }
  }
  return best;
}

inline SurfacePoint vertex_point(const std::vector<Face>& faces, std::size_t vertex) {
  for (std::size_t f = 0; f < faces.size(); ++f)
    for (int k = 0; k < 3; ++k)
      if (faces[f][k] == vertex) {
        SurfacePoint p;
        p.triangle = static_cast<std::uint32_t>(f);
        p.bary = {0.0, 0.0, 0.0};
        p.bary[k] = 1.0;
        return p;
      }
  throw ValueError("vertex is not referenced by any face");
}

}  // namespace generator_detail

/// Builds a valid HeadModel. Values are rounded to 32-bit floats so that the
/// model survives a save/load cycle unchanged.
inline HeadModel generate_head_model(const ModelGeneratorConfig& cfg) {
  using namespace generator_detail;
  if (cfg.longitude_segments % 2 != 0 || cfg.longitude_segments < 8 || cfg.latitude_rings < 6) {
    throw ValueError("generate_head_model: need an even segment count >= 8 and >= 6 rings");
  }
  std::mt19937_64 rng(cfg.seed);
  Grid grid = build_sphere(cfg);
  add_relief(grid.vertices, cfg);
  const std::vector<Vec3>& verts = grid.vertices;
  const std::size_t n = verts.size();
  constexpr std::size_t k = 4;  // neck, jaw, right eye, left eye

  HeadModel m;
  m.template_vertices = to_rows(verts);
  m.faces = grid.faces;
  m.parents = {-1, 0, 0, 0};
  m.jaw_joint = 1;

  // Skinning weights.
  const std::array<Vec3, 2> eye_centres = {Vec3(-32.0, -15.0, -66.0), Vec3(32.0, -15.0, -66.0)};
  m.blend_weights = DenseArray::zeros(k, n);
  std::vector<std::vector<double>> region(k, std::vector<double>(n, 0.0));
  for (std::size_t v = 0; v < n; ++v) {
    const Vec3& p = verts[v];
    const double jaw = smoothstep((p.y() - 41.0) / 8.0) * smoothstep((20.0 - p.z()) / 30.0) *
                       smoothstep((cfg.radius_y * 0.92 - p.y()) / 6.0);
    double eyes[2];
    for (int e = 0; e < 2; ++e) {
      const double d = std::hypot(p.x() - eye_centres[e].x(), p.y() - eye_centres[e].y());
      eyes[e] = (p.z() < -50.0 && d < 16.0) ? 0.9 * (1.0 - smoothstep(d / 16.0)) : 0.0;
    }
    const double jaw_w = jaw * (1.0 - eyes[0] - eyes[1]);
    m.blend_weights(1, v) = jaw_w;
    m.blend_weights(2, v) = eyes[0];
    m.blend_weights(3, v) = eyes[1];
    m.blend_weights(0, v) = 1.0 - jaw_w - eyes[0] - eyes[1];
    for (std::size_t j = 0; j < k; ++j) region[j][v] = m.blend_weights(j, v);
  }

  // Joint regressor: convex vertex combinations whose averages sit inside the head.
  m.joint_regressor = DenseArray::zeros(k, n);
  auto set_regressor = [&](std::size_t joint, const std::vector<std::pair<std::size_t, double>>& entries) {
    double s = 0.0;
    for (const auto& e : entries) s += e.second;
    for (const auto& e : entries) m.joint_regressor(joint, e.first) += e.second / s;
  };
  {
    std::vector<std::pair<std::size_t, double>> neck, jaw;
    for (std::size_t v = 0; v < n; ++v) {
      const Vec3& p = verts[v];
      if (p.y() > 0.8 * cfg.radius_y) neck.emplace_back(v, 1.0);
      if (std::abs(p.x()) > 0.8 * cfg.radius_x && p.y() > 5.0 && p.y() < 45.0 && p.z() > -30.0 && p.z() < 40.0)
        jaw.emplace_back(v, 1.0);
    }
    set_regressor(0, neck);
    set_regressor(1, jaw);
    for (int e = 0; e < 2; ++e) {
      std::vector<std::pair<std::size_t, double>> eye;
      std::size_t back = 0;
      double back_z = -1e9;
      for (std::size_t v = 0; v < n; ++v) {
        const Vec3& p = verts[v];
        if (p.z() < -50.0 && std::hypot(p.x() - eye_centres[e].x(), p.y() - eye_centres[e].y()) < 16.0)
          eye.emplace_back(v, 1.0);
        if (std::abs(p.y() - eye_centres[e].y()) < 20.0 && p.z() > back_z) {
          back_z = p.z();
          back = v;
        }
      }
      const double front_weight = 0.88 / static_cast<double>(eye.size());
      for (auto& entry : eye) entry.second = front_weight;
      eye.emplace_back(back, 0.12);
      set_regressor(2 + static_cast<std::size_t>(e), eye);
    }
  }

  // Bases.
  const Eigen::MatrixXd similarity = similarity_subspace(verts);
  {
    std::vector<Eigen::VectorXd> fields;
    std::vector<double> stddev;
    for (std::size_t i = 0; i < cfg.num_shape; ++i) {
      fields.push_back(random_field(verts, cfg, rng, nullptr, 3));
      stddev.push_back(cfg.shape_stddev_mm * std::pow(cfg.shape_decay, static_cast<double>(i)));
    }
    m.shape_basis = fields.empty() ? DenseArray::zeros(0, 3 * n) : orthonormal_basis(fields, similarity, stddev);
  }
  {
    std::vector<double> face_region(n);
    for (std::size_t v = 0; v < n; ++v) {
      const Vec3& p = verts[v];
      const double front = std::pow(std::max(0.0, -p.z() / cfg.radius_z), 2.0);
      face_region[v] = front * (gauss2(p.x(), p.y() - 45.0, 30.0, 22.0) + 0.6 * gauss2(p.x(), p.y() + 32.0, 40.0, 10.0) +
                                0.4 * gauss2(p.x(), p.y() - 5.0, 45.0, 25.0));
    }
    std::vector<Eigen::VectorXd> fields;
    std::vector<double> stddev;
    for (std::size_t i = 0; i < cfg.num_expression; ++i) {
      fields.push_back(random_field(verts, cfg, rng, &face_region, 2));
      stddev.push_back(cfg.expression_stddev_mm * std::pow(cfg.expression_decay, static_cast<double>(i)));
    }
    m.expression_basis =
        fields.empty() ? DenseArray::zeros(0, 3 * n) : orthonormal_basis(fields, Eigen::MatrixXd::Zero(3 * n, 1), stddev);
  }
  {
    m.pose_basis = DenseArray::zeros(9 * k, 3 * n);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t j = 0; j < k; ++j)
      for (std::size_t r = 0; r < 9; ++r) {
        const Eigen::VectorXd f = random_field(verts, cfg, rng, &region[j], 1);
        const double norm = f.norm();
        if (norm == 0.0) continue;
        for (std::size_t i = 0; i < 3 * n; ++i)
          m.pose_basis(9 * j + r, i) = f(static_cast<Eigen::Index>(i)) / norm * cfg.pose_corrective_mm * std::sqrt(static_cast<double>(n)) * 0.1;
      }
  }

  // Static landmarks by ray casting the design points onto the face.
  for (const auto& d : static_design()) {
    const auto p = ray_surface_point(verts, grid.faces, d[0], d[1]);
    if (!p) throw ValueError("generate_head_model: landmark design point misses the surface");
    m.landmarks.static_points.push_back(*p);
  }

  // Contour trajectories: support points of the rotated lower face in 17
  // directions sweeping from image-left, through the chin, to image-right.
  {
    std::vector<double> yaws;
    for (double y = -cfg.contour_yaw_limit; y <= cfg.contour_yaw_limit + 1e-9; y += cfg.contour_yaw_step) yaws.push_back(y);
    constexpr std::size_t kContour = 17;
    std::vector<std::size_t> candidates;
    for (std::size_t v = 0; v < n; ++v)
      if (verts[v].y() > -10.0 && verts[v].z() < 0.35 * cfg.radius_z && verts[v].y() < 0.9 * cfg.radius_y) candidates.push_back(v);
    auto support = [&](std::size_t l, double yaw) {
      const double a = std::numbers::pi * (1.0 - static_cast<double>(l) / (kContour - 1));
      const Eigen::Vector2d dir(std::cos(a), std::sin(a));
      const Eigen::Matrix3d r = Eigen::AngleAxisd(yaw * std::numbers::pi / 180.0, Vec3::UnitY()).toRotationMatrix();
      std::size_t best = candidates.front();
      double best_s = -1e18;
      for (std::size_t v : candidates) {
        const Vec3 q = r * verts[v];
        const double s = dir.x() * q.x() + dir.y() * q.y();
        if (s > best_s) {
          best_s = s;
          best = v;
        }
      }
      return best;
    };
    m.landmarks.contour.resize(kContour);
    for (std::size_t l = 0; l <= kContour / 2; ++l)
      for (double yaw : yaws) m.landmarks.contour[l].push_back({yaw, vertex_point(grid.faces, support(l, yaw))});
    for (std::size_t l = 0; l < kContour / 2; ++l) {
      auto& mirrored = m.landmarks.contour[kContour - 1 - l];
      for (double yaw : yaws) {
        const std::size_t v = support(l, -yaw);
        mirrored.push_back({yaw, vertex_point(grid.faces, grid.mirror[v])});
      }
    }
  }

  for (DenseArray* a : {&m.template_vertices, &m.shape_basis, &m.expression_basis, &m.pose_basis, &m.joint_regressor})
    for (double& x : a->storage()) x = static_cast<double>(static_cast<float>(x));
  // Dyadic skinning weights: exact in 32-bit storage and summing to exactly 1.
  constexpr double kQuantum = 1048576.0;  // 2^20
  for (std::size_t v = 0; v < n; ++v) {
    double rest = 1.0;
    for (std::size_t j = 1; j < k; ++j) {
      m.blend_weights(j, v) = std::round(m.blend_weights(j, v) * kQuantum) / kQuantum;
      rest -= m.blend_weights(j, v);
    }
    m.blend_weights(0, v) = rest;
  }
  m.validate();
  return m;
}

}  // namespace ringnet
