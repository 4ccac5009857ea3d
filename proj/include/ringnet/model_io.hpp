#pragma once

#include <filesystem>

#include "ringnet/container.hpp"
#include "ringnet/head_model.hpp"

namespace ringnet {

inline constexpr const char* kModelFormat = "ringnet-model";

namespace detail {

inline Json surface_point_json(const SurfacePoint& p) { return {p.triangle, p.bary[0], p.bary[1], p.bary[2]}; }

inline SurfacePoint surface_point_from(const Json& j) {
  if (!j.is_array() || j.size() != 4) throw FormatError("landmark entry must be [triangle, b0, b1, b2]");
  return {j[0].get<std::uint32_t>(), {j[1].get<double>(), j[2].get<double>(), j[3].get<double>()}};
}

}  // namespace detail

/// Arrays are stored as 32-bit floats (faces and parents as 32-bit ints); the
/// landmark embedding lives in the manifest.
inline Container model_container(const HeadModel& m) {
  Container c;
  c.format = kModelFormat;
  const std::size_t n = m.num_vertices(), k = m.num_joints();
  Json contour = Json::array();
  for (const auto& traj : m.landmarks.contour) {
    Json t = Json::array();
    for (const auto& s : traj) t.push_back({{"yaw", s.yaw_deg}, {"point", detail::surface_point_json(s.point)}});
    contour.push_back(t);
  }
  Json fixed = Json::array();
  for (const auto& p : m.landmarks.static_points) fixed.push_back(detail::surface_point_json(p));
  c.meta = {{"num_vertices", n},
            {"num_joints", k},
            {"num_shape", m.num_shape()},
            {"num_expression", m.num_expression()},
            {"num_faces", m.faces.size()},
            {"jaw_joint", m.jaw_joint},
            {"landmarks", {{"contour", contour}, {"static", fixed}}}};
  c.add("template_vertices", m.template_vertices, Dtype::kF32);
  c.add("shape_basis", m.shape_basis, Dtype::kF32);
  c.add("expression_basis", m.expression_basis, Dtype::kF32);
  c.add("pose_basis", m.pose_basis, Dtype::kF32);
  c.add("joint_regressor", m.joint_regressor, Dtype::kF32);
  c.add("blend_weights", m.blend_weights, Dtype::kF32);
  std::vector<std::int64_t> faces;
  for (const Face& f : m.faces) faces.insert(faces.end(), f.begin(), f.end());
  c.add_ints("faces", faces, {m.faces.size(), 3});
  c.add_ints("parents", {m.parents.begin(), m.parents.end()}, {m.parents.size()});
  return c;
}

inline HeadModel model_from_container(const Container& c) {
  HeadModel m;
  try {
    const Json& meta = c.meta;
    const std::size_t n = meta.at("num_vertices"), k = meta.at("num_joints"), s = meta.at("num_shape"),
                      e = meta.at("num_expression"), f = meta.at("num_faces");
    c.expect("template_vertices", Dtype::kF32, {n, 3});
    c.expect("shape_basis", Dtype::kF32, {s, 3 * n});
    c.expect("expression_basis", Dtype::kF32, {e, 3 * n});
    c.expect("pose_basis", Dtype::kF32, {9 * k, 3 * n});
    c.expect("joint_regressor", Dtype::kF32, {k, n});
    c.expect("blend_weights", Dtype::kF32, {k, n});
    c.expect("faces", Dtype::kI32, {f, 3});
    c.expect("parents", Dtype::kI32, {k});
    m.template_vertices = c.get("template_vertices");
    m.shape_basis = c.get("shape_basis");
    m.expression_basis = c.get("expression_basis");
    m.pose_basis = c.get("pose_basis");
    m.joint_regressor = c.get("joint_regressor");
    m.blend_weights = c.get("blend_weights");
    const auto faces = c.get_ints("faces");
    for (std::size_t i = 0; i < f; ++i) {
      Face face{};
      for (std::size_t j = 0; j < 3; ++j) {
        const std::int64_t v = faces[3 * i + j];
        if (v < 0) throw FormatError(std::string(kModelFormat) + ": face " + std::to_string(i) + " has a negative index");
        face[j] = static_cast<std::uint32_t>(v);
      }
      m.faces.push_back(face);
    }
    for (std::int64_t p : c.get_ints("parents")) m.parents.push_back(static_cast<int>(p));
    m.jaw_joint = meta.at("jaw_joint");
    for (const Json& traj : meta.at("landmarks").at("contour")) {
      std::vector<ContourSample> t;
      for (const Json& s2 : traj) t.push_back({s2.at("yaw").get<double>(), detail::surface_point_from(s2.at("point"))});
      m.landmarks.contour.push_back(std::move(t));
    }
    for (const Json& p : meta.at("landmarks").at("static")) m.landmarks.static_points.push_back(detail::surface_point_from(p));
  } catch (const Json::exception& ex) {
    throw FormatError(std::string(kModelFormat) + ": malformed metadata: " + ex.what());
  }
  m.validate();
  return m;
}

inline void save_model(const HeadModel& m, const std::filesystem::path& path) { save_container(model_container(m), path); }

inline HeadModel load_model(const std::filesystem::path& path) {
  return model_from_container(load_container(path, kModelFormat));
}

}  // namespace ringnet
