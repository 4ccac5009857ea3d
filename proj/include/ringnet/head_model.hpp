#pragma once

// Linear statistical head model: identity, expression and pose-corrective
// blendshapes on a template, posed by linear blend skinning over a small
// joint hierarchy (neck, jaw, eyeballs) with a global rotation about the
// regressed root joint.

#include <array>
#include <span>
#include <string>
#include <vector>

#include "ringnet/autodiff.hpp"
#include "ringnet/landmarks.hpp"
#include "ringnet/mesh.hpp"
#include "ringnet/rotation.hpp"

namespace ringnet {

struct HeadModel {
  DenseArray template_vertices;  // N x 3
  std::vector<Face> faces;
  DenseArray shape_basis;       // |beta| x 3N
  DenseArray expression_basis;  // |psi| x 3N
  DenseArray pose_basis;        // 9K x 3N, rows follow the pose feature order
  DenseArray joint_regressor;   // K x N
  DenseArray blend_weights;     // K x N, columns convex
  std::vector<int> parents;     // per joint; -1 attaches to the global root
  std::size_t jaw_joint = 1;
  LandmarkEmbedding landmarks;

  std::size_t num_vertices() const { return template_vertices.rows(); }
  std::size_t num_joints() const { return joint_regressor.rows(); }
  std::size_t num_shape() const { return shape_basis.rows(); }
  std::size_t num_expression() const { return expression_basis.rows(); }

  /// The global rotation pivots about this joint (the first root-attached one).
  std::size_t root_joint() const {
    for (std::size_t j = 0; j < parents.size(); ++j)
      if (parents[j] < 0) return j;
    return 0;
  }

  /// Every violated invariant, one message each. Empty when valid.
  std::vector<std::string> problems() const {
    std::vector<std::string> out;
    const std::size_t n = template_vertices.rank() == 2 ? template_vertices.rows() : 0;
    if (template_vertices.rank() != 2 || template_vertices.cols() != 3) out.push_back("template: expected N x 3");
    if (n < 4) out.push_back("template: need at least 4 vertices");
    const std::size_t k = joint_regressor.rank() == 2 ? joint_regressor.rows() : 0;
    if (k < 1) out.push_back("joint_regressor: need at least 1 joint");
    auto check_basis = [&](const DenseArray& b, const char* name) {
      if (b.rank() != 2 || b.cols() != 3 * n) out.push_back(std::string(name) + ": second dimension must equal 3N");
    };
    check_basis(shape_basis, "shape_basis");
    check_basis(expression_basis, "expression_basis");
    check_basis(pose_basis, "pose_basis");
    if (pose_basis.rank() == 2 && pose_basis.rows() != 9 * k) out.push_back("pose_basis: expected 9K rows");
    if (joint_regressor.rank() != 2 || joint_regressor.cols() != n) out.push_back("joint_regressor: expected K x N");
    if (blend_weights.rank() != 2 || blend_weights.rows() != k || blend_weights.cols() != n) {
      out.push_back("blend_weights: expected K x N");
    } else {
      std::size_t bad_sign = 0, bad_sum = 0;
      for (std::size_t v = 0; v < n; ++v) {
        double s = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
          if (blend_weights(j, v) < 0.0) ++bad_sign;
          s += blend_weights(j, v);
        }
        if (std::abs(s - 1.0) > 1e-5) ++bad_sum;
      }
      if (bad_sign) out.push_back("blend_weights: " + std::to_string(bad_sign) + " negative weights");
      if (bad_sum) out.push_back("blend_weights: " + std::to_string(bad_sum) + " vertices whose weights do not sum to 1");
    }
    std::size_t bad_faces = 0;
    for (const Face& f : faces)
      for (auto idx : f)
        if (idx >= n) ++bad_faces;
    if (bad_faces) out.push_back("faces: " + std::to_string(bad_faces) + " indices out of range");
    if (faces.empty()) out.push_back("faces: empty");
    if (parents.size() != k) out.push_back("parents: expected one entry per joint");
    for (std::size_t j = 0; j < parents.size(); ++j)
      if (parents[j] >= static_cast<int>(j)) out.push_back("parents: joint " + std::to_string(j) + " must follow its parent");
    if (k > 0 && jaw_joint >= k) out.push_back("jaw_joint out of range");
    landmarks.collect_problems(faces.size(), out);
    for (const DenseArray* a : {&template_vertices, &shape_basis, &expression_basis, &pose_basis, &joint_regressor,
                                &blend_weights})
      if (!a->all_finite()) {
        out.push_back("non-finite model values");
        break;
      }
    return out;
  }

  friend bool operator==(const HeadModel&, const HeadModel&) = default;

  void validate() const {
    const auto p = problems();
    if (p.empty()) return;
    std::string msg = "head model invalid:";
    for (const auto& s : p) msg += "\n  - " + s;
    throw InvariantError(msg);
  }
};

/// Offsets of each block inside the flat parameter vector
/// [cam(3) | global rotation(3) | jaw rotation(3) | shape | expression].
struct ParamLayout {
  std::size_t num_shape = 0;
  std::size_t num_expression = 0;

  static constexpr std::size_t kCam = 0;
  static constexpr std::size_t kGlobal = 3;
  static constexpr std::size_t kJaw = 6;
  static constexpr std::size_t kShape = 9;
  std::size_t expression_offset() const { return kShape + num_shape; }
  std::size_t size() const { return 9 + num_shape + num_expression; }

  static ParamLayout of(const HeadModel& m) { return {m.num_shape(), m.num_expression()}; }

  friend bool operator==(const ParamLayout&, const ParamLayout&) = default;
};

/// Camera, pose, shape and expression parameters of one image. The camera
/// block is (log scale, tx, ty) relative to a CameraFrame; neck and eyeball
/// rotations are not part of it and stay zero.
struct ParamVector {
  std::array<double, 3> cam{};
  std::array<double, 3> global_rot{};
  std::array<double, 3> jaw_rot{};
  std::vector<double> shape;
  std::vector<double> expression;

  static ParamVector zeros(const ParamLayout& layout) {
    ParamVector p;
    p.shape.assign(layout.num_shape, 0.0);
    p.expression.assign(layout.num_expression, 0.0);
    return p;
  }

  ParamLayout layout() const { return {shape.size(), expression.size()}; }

  std::vector<double> flat() const {
    std::vector<double> out;
    out.reserve(layout().size());
    out.insert(out.end(), cam.begin(), cam.end());
    out.insert(out.end(), global_rot.begin(), global_rot.end());
    out.insert(out.end(), jaw_rot.begin(), jaw_rot.end());
    out.insert(out.end(), shape.begin(), shape.end());
    out.insert(out.end(), expression.begin(), expression.end());
    return out;
  }

  static ParamVector from_flat(std::span<const double> v, const ParamLayout& layout) {
    if (v.size() != layout.size()) {
      throw DimensionError("ParamVector: expected " + std::to_string(layout.size()) + " values, got " +
                           std::to_string(v.size()));
    }
    ParamVector p;
    std::copy_n(v.begin() + ParamLayout::kCam, 3, p.cam.begin());
    std::copy_n(v.begin() + ParamLayout::kGlobal, 3, p.global_rot.begin());
    std::copy_n(v.begin() + ParamLayout::kJaw, 3, p.jaw_rot.begin());
    p.shape.assign(v.begin() + ParamLayout::kShape, v.begin() + layout.expression_offset());
    p.expression.assign(v.begin() + layout.expression_offset(), v.end());
    return p;
  }

  friend bool operator==(const ParamVector&, const ParamVector&) = default;
};

/// Model arrays registered once as constants on a tape, shared by every decode
/// recorded on it. The model must outlive the tape.
struct ModelTerms {
  const HeadModel* model = nullptr;
  ad::Var template_flat;   // 1 x 3N
  ad::Var shape_basis;
  ad::Var expression_basis;
  ad::Var pose_basis;
  ad::Var joint_regressor;
  ad::Var weights_per_vertex;  // N x K
  ad::Var identity3;

  ModelTerms(ad::Tape& tape, const HeadModel& m) : model(&m) {
    const std::size_t n = m.num_vertices(), k = m.num_joints();
    template_flat = tape.constant(m.template_vertices.reshaped({1, 3 * n}));
    shape_basis = tape.constant(m.shape_basis);
    expression_basis = tape.constant(m.expression_basis);
    pose_basis = tape.constant(m.pose_basis);
    joint_regressor = tape.constant(m.joint_regressor);
    DenseArray wt = DenseArray::zeros(n, k);
    for (std::size_t j = 0; j < k; ++j)
      for (std::size_t v = 0; v < n; ++v) wt(v, j) = m.blend_weights(j, v);
    weights_per_vertex = tape.constant(std::move(wt));
    identity3 = tape.constant(DenseArray::identity(3));
  }
};

struct DecodedVars {
  ad::Var vertices;         // N x 3
  ad::Var joints;           // K x 3, rest pose
  ad::Var global_rotation;  // 3 x 3
};

namespace ad {

/// T_P = T + B_S(beta) + B_P(theta) + B_E(psi) as a 1 x 3N row. `joint_rotations`
/// are the K per-joint rotation matrices (global excluded).
inline Var shaped_template(const ModelTerms& t, Var beta, Var psi, const std::vector<Var>& joint_rotations) {
  if (beta.cols() != t.model->num_shape() || psi.cols() != t.model->num_expression()) {
    throw DimensionError("shaped_template: parameter lengths do not match the bases");
  }
  std::vector<Var> feature;
  feature.reserve(joint_rotations.size());
  for (const Var& r : joint_rotations) feature.push_back(reshape(sub(r, t.identity3), {1, 9}));
  const Var pose_feature = concat_cols(feature);
  Var out = t.template_flat + matmul(beta, t.shape_basis);
  if (psi.cols() > 0) out = out + matmul(psi, t.expression_basis);
  return out + matmul(pose_feature, t.pose_basis);
}

inline Var joints(const ModelTerms& t, Var beta) {
  if (beta.cols() != t.model->num_shape()) throw DimensionError("joints: shape parameter length mismatch");
  const Var rest = t.template_flat + matmul(beta, t.shape_basis);
  return matmul(t.joint_regressor, reshape(rest, {t.model->num_vertices(), 3}));
}

/// Full skinning from explicit rotations: `axis_angles` holds K + 1 rows of
/// axis-angle vectors, global rotation first, then one per joint.
inline DecodedVars decode_pose(const ModelTerms& t, Var beta, Var psi, const std::vector<Var>& axis_angles) {
  const HeadModel& m = *t.model;
  const std::size_t k = m.num_joints(), n = m.num_vertices();
  if (axis_angles.size() != k + 1) throw DimensionError("decode: expected K + 1 rotation vectors");
  const Var global = rodrigues(axis_angles[0]);
  std::vector<Var> local(k);
  for (std::size_t j = 0; j < k; ++j) local[j] = rodrigues(axis_angles[j + 1]);

  const Var shaped = reshape(shaped_template(t, beta, psi, local), {n, 3});
  const Var joint_pos = joints(t, beta);

  // World transforms x -> A x + b, with b kept as a 1 x 3 row.
  const Var pivot = slice_rows(joint_pos, m.root_joint(), m.root_joint() + 1);
  const Var root_a = global;
  const Var root_b = pivot - matmul(pivot, transpose(global));
  std::vector<Var> world_a(k), world_b(k);
  for (std::size_t j = 0; j < k; ++j) {
    const Var c = slice_rows(joint_pos, j, j + 1);
    const Var local_b = c - matmul(c, transpose(local[j]));
    const int p = m.parents[j];
    const Var pa = p < 0 ? root_a : world_a[static_cast<std::size_t>(p)];
    const Var pb = p < 0 ? root_b : world_b[static_cast<std::size_t>(p)];
    world_a[j] = matmul(pa, local[j]);
    world_b[j] = matmul(local_b, transpose(pa)) + pb;
  }
  std::vector<Var> a_rows(k);
  for (std::size_t j = 0; j < k; ++j) a_rows[j] = reshape(world_a[j], {1, 9});
  const Var blended_a = matmul(t.weights_per_vertex, concat_rows(a_rows));
  const Var blended_b = matmul(t.weights_per_vertex, concat_rows(world_b));
  return {rowwise_matvec(blended_a, shaped) + blended_b, joint_pos, global};
}

/// Decodes a 1 x P parameter row laid out per ParamLayout (camera ignored).
inline DecodedVars decode(const ModelTerms& t, Var params) {
  const HeadModel& m = *t.model;
  const ParamLayout layout = ParamLayout::of(m);
  if (params.rows() != 1 || params.cols() != layout.size()) {
    throw DimensionError("decode: expected a 1 x " + std::to_string(layout.size()) + " parameter row");
  }
  Tape& tape = params.tape();
  const Var beta = slice_cols(params, ParamLayout::kShape, layout.expression_offset());
  const Var psi = slice_cols(params, layout.expression_offset(), layout.size());
  std::vector<Var> rotations;
  rotations.push_back(slice_cols(params, ParamLayout::kGlobal, ParamLayout::kGlobal + 3));
  const Var zero = tape.constant(DenseArray::zeros(1, 3));
  for (std::size_t j = 0; j < m.num_joints(); ++j)
    rotations.push_back(j == m.jaw_joint ? slice_cols(params, ParamLayout::kJaw, ParamLayout::kJaw + 3) : zero);
  return decode_pose(t, beta, psi, rotations);
}

}  // namespace ad

namespace detail {

inline void check_finite(std::span<const double> v, const char* what) {
  for (double x : v)
    if (!std::isfinite(x)) throw NumericError(std::string(what) + ": non-finite parameter");
}

}  // namespace detail

/// Shape/pose/expression-blended template (N x 3). `pose` holds K + 1 rows of
/// axis-angle vectors (global first); the global entry does not contribute.
inline DenseArray shaped_template(const HeadModel& m, std::span<const double> beta, const DenseArray& pose,
                                  std::span<const double> psi) {
  if (pose.size() != 3 * (m.num_joints() + 1)) throw DimensionError("shaped_template: expected 3(K+1) pose values");
  ad::Tape tape;
  const ModelTerms t(tape, m);
  std::vector<ad::Var> local;
  for (std::size_t j = 0; j < m.num_joints(); ++j) {
    local.push_back(ad::rodrigues(tape.constant(DenseArray::row(pose.values().subspan(3 * (j + 1), 3)))));
  }
  const ad::Var out = ad::shaped_template(t, tape.constant(DenseArray::row(beta)), tape.constant(DenseArray::row(psi)), local);
  return out.value().reshaped({m.num_vertices(), 3});
}

inline DenseArray joints(const HeadModel& m, std::span<const double> beta) {
  ad::Tape tape;
  const ModelTerms t(tape, m);
  return ad::joints(t, tape.constant(DenseArray::row(beta))).value();
}

/// Posed vertices (N x 3) for explicit rotations (K + 1 axis-angle rows).
inline DenseArray decode_pose(const HeadModel& m, std::span<const double> beta, const DenseArray& pose,
                              std::span<const double> psi) {
  detail::check_finite(beta, "decode");
  detail::check_finite(psi, "decode");
  detail::check_finite(pose.values(), "decode");
  if (pose.size() != 3 * (m.num_joints() + 1)) throw DimensionError("decode: expected 3(K+1) pose values");
  ad::Tape tape;
  const ModelTerms t(tape, m);
  std::vector<ad::Var> rotations;
  for (std::size_t j = 0; j <= m.num_joints(); ++j)
    rotations.push_back(tape.constant(DenseArray::row(pose.values().subspan(3 * j, 3))));
  return ad::decode_pose(t, tape.constant(DenseArray::row(beta)), tape.constant(DenseArray::row(psi)), rotations)
      .vertices.value();
}

/// Full pose array (K + 1 rows) implied by a ParamVector.
inline DenseArray pose_of(const HeadModel& m, const ParamVector& p) {
  DenseArray pose = DenseArray::zeros(m.num_joints() + 1, 3);
  for (int k = 0; k < 3; ++k) {
    pose(0, k) = p.global_rot[k];
    pose(m.jaw_joint + 1, k) = p.jaw_rot[k];
  }
  return pose;
}

inline DenseArray decode_vertices(const HeadModel& m, const ParamVector& p) {
  if (p.layout() != ParamLayout::of(m)) throw DimensionError("decode: parameter layout does not match the model");
  detail::check_finite(p.cam, "decode");
  return decode_pose(m, p.shape, pose_of(m, p), p.expression);
}

inline Mesh decode(const HeadModel& m, const ParamVector& p) { return make_mesh(decode_vertices(m, p), m.faces); }

/// Neutral mesh: shape only, zero pose and expression.
inline DenseArray neutral_vertices(const HeadModel& m, std::span<const double> beta) {
  const ParamVector p = [&] {
    ParamVector z = ParamVector::zeros(ParamLayout::of(m));
    z.shape.assign(beta.begin(), beta.end());
    return z;
  }();
  return decode_vertices(m, p);
}

}  // namespace ringnet
