#pragma once

// Weak-perspective camera, 2D landmark observations and bounding boxes.
// Image convention: x to the right, y down (pixels).

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "ringnet/autodiff.hpp"
#include "ringnet/head_model.hpp"

namespace ringnet {

/// Pixels per model unit and image-plane translation.
struct CameraParams {
  double scale = 1.0;
  double tx = 0.0;
  double ty = 0.0;
};

/// Orthographic drop of z, then uniform scale and translation: k = s (x, y) + t.
inline DenseArray project(const DenseArray& points, const CameraParams& cam) {
  if (!(cam.scale > 0.0)) throw ValueError("project: camera scale must be positive");
  if (points.rank() != 2 || points.cols() != 3) throw DimensionError("project: expected M x 3 points");
  if (!points.all_finite() || !std::isfinite(cam.tx) || !std::isfinite(cam.ty)) throw NumericError("project: non-finite input");
  DenseArray out = DenseArray::zeros(points.rows(), 2);
  for (std::size_t i = 0; i < points.rows(); ++i) {
    out(i, 0) = cam.scale * points(i, 0) + cam.tx;
    out(i, 1) = cam.scale * points(i, 1) + cam.ty;
  }
  return out;
}

namespace ad {

/// Differentiable projection; `cam` is a 1 x 3 row (scale, tx, ty).
inline Var project(Var points, Var cam) {
  if (cam.value().size() != 3) throw DimensionError("project: camera must have 3 entries");
  const CameraParams c{cam.value()[0], cam.value()[1], cam.value()[2]};
  DenseArray out = ringnet::project(points.value(), c);
  return points.tape().record(OpKind::kCustom, "project", std::move(out), {points, cam},
                              [points, cam](const DenseArray& g, Gradients& grads) {
                                const double s = cam.value()[0];
                                const std::size_t m = points.rows();
                                if (points.requires_grad()) {
                                  DenseArray& gp = grads.accumulator(points);
                                  for (std::size_t i = 0; i < m; ++i) {
                                    gp(i, 0) += s * g(i, 0);
                                    gp(i, 1) += s * g(i, 1);
                                  }
                                }
                                if (cam.requires_grad()) {
                                  DenseArray& gc = grads.accumulator(cam);
                                  for (std::size_t i = 0; i < m; ++i) {
                                    gc[0] += g(i, 0) * points.value()(i, 0) + g(i, 1) * points.value()(i, 1);
                                    gc[1] += g(i, 0);
                                    gc[2] += g(i, 1);
                                  }
                                }
                              });
}

}  // namespace ad

/// Reference camera against which ParamVector::cam is expressed:
/// scale = ref_scale * exp(cam[0]), translation = ref_t + (cam[1], cam[2]).
/// The identity frame (1, 0, 0) makes cam = (log s, tx, ty).
struct CameraFrame {
  double ref_scale = 1.0;
  double ref_tx = 0.0;
  double ref_ty = 0.0;

  CameraParams camera(const std::array<double, 3>& cam) const {
    return {ref_scale * std::exp(cam[0]), ref_tx + cam[1], ref_ty + cam[2]};
  }

  std::array<double, 3> encode(const CameraParams& c) const {
    if (!(c.scale > 0.0)) throw ValueError("CameraFrame: camera scale must be positive");
    return {std::log(c.scale / ref_scale), c.tx - ref_tx, c.ty - ref_ty};
  }

  friend bool operator==(const CameraFrame&, const CameraFrame&) = default;
};

namespace ad {

/// Maps a 1 x 3 cam block through a CameraFrame into (scale, tx, ty).
inline Var frame_camera(Var cam_block, const CameraFrame& frame) {
  const Var log_scale = slice_cols(cam_block, 0, 1);
  const Var shift = slice_cols(cam_block, 1, 3);
  Tape& tape = cam_block.tape();
  const Var ref_t = tape.constant(DenseArray::row({frame.ref_tx, frame.ref_ty}));
  return concat_cols({scale(exp(log_scale), frame.ref_scale), shift + ref_t});
}

}  // namespace ad

/// Observed 2D landmarks with detector confidences.
struct Landmarks2D {
  DenseArray positions;            // L x 2 pixels
  std::vector<double> confidence;  // L values in [0, 1]

  std::size_t size() const { return confidence.size(); }

  friend bool operator==(const Landmarks2D&, const Landmarks2D&) = default;
};

struct BoundingBox {
  double xmin = 0.0, ymin = 0.0, xmax = 0.0, ymax = 0.0;

  double width() const { return xmax - xmin; }
  double height() const { return ymax - ymin; }
  double centre_x() const { return 0.5 * (xmin + xmax); }
  double centre_y() const { return 0.5 * (ymin + ymax); }
};

/// Tight box of the landmarks with confidence above `threshold`, expanded by
/// 10% of the width left and right, 30% of the height at the top (smaller y)
/// and 5% at the bottom.
inline BoundingBox bounding_box(const Landmarks2D& lm, double threshold = 0.0) {
  BoundingBox b{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
                -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  bool any = false;
  for (std::size_t i = 0; i < lm.size(); ++i) {
    if (!(lm.confidence[i] > threshold)) continue;
    any = true;
    b.xmin = std::min(b.xmin, lm.positions(i, 0));
    b.xmax = std::max(b.xmax, lm.positions(i, 0));
    b.ymin = std::min(b.ymin, lm.positions(i, 1));
    b.ymax = std::max(b.ymax, lm.positions(i, 1));
  }
  if (!any) throw ValueError("bounding_box: no confident landmarks");
  const double w = b.width(), h = b.height();
  return {b.xmin - 0.10 * w, b.ymin - 0.30 * h, b.xmax + 0.10 * w, b.ymax + 0.05 * h};
}

/// Affine map from pixels into the box-normalized frame: (p - centre) / half_size,
/// half_size = max(width, height) / 2.
struct BoxNormalization {
  double cx = 0.0, cy = 0.0, half_size = 1.0;

  static BoxNormalization of(const BoundingBox& b) {
    const double half = 0.5 * std::max(b.width(), b.height());
    return {b.centre_x(), b.centre_y(), half > 0.0 ? half : 1.0};
  }

  DenseArray apply(const DenseArray& pixels) const {
    DenseArray out = pixels;
    for (std::size_t i = 0; i < out.rows(); ++i) {
      out(i, 0) = (out(i, 0) - cx) / half_size;
      out(i, 1) = (out(i, 1) - cy) / half_size;
    }
    return out;
  }

  /// Pixel-space camera of a camera that projects into the normalized frame.
  CameraParams to_pixels(const CameraParams& c) const {
    return {c.scale * half_size, c.tx * half_size + cx, c.ty * half_size + cy};
  }
  CameraParams from_pixels(const CameraParams& c) const {
    return {c.scale / half_size, (c.tx - cx) / half_size, (c.ty - cy) / half_size};
  }
};

/// All 68 (or L) model landmarks in 3D: contour at the given yaw, then static.
inline DenseArray model_landmarks3d(const HeadModel& m, const DenseArray& vertices, double yaw_deg) {
  const DenseArray contour = dynamic_landmarks3d(vertices, m.faces, m.landmarks.contour, yaw_deg);
  const DenseArray fixed = static_landmarks3d(vertices, m.faces, m.landmarks.static_points);
  std::vector<double> data = contour.storage();
  data.insert(data.end(), fixed.storage().begin(), fixed.storage().end());
  return DenseArray({m.landmarks.size(), 3}, std::move(data));
}

/// The frame in which zero camera parameters place the template's landmarks
/// exactly as box normalization places an observation of it.
inline CameraFrame model_frame(const HeadModel& m) {
  const DenseArray pts = model_landmarks3d(m, m.template_vertices, 0.0);
  Landmarks2D lm{project(pts, {}), std::vector<double>(pts.rows(), 1.0)};
  const BoxNormalization norm = BoxNormalization::of(bounding_box(lm));
  const CameraParams c = norm.from_pixels({1.0, 0.0, 0.0});
  return {c.scale, c.tx, c.ty};
}

namespace ad {

/// Decoded landmarks of a parameter row projected through `frame` (L x 2).
inline Var projected_landmarks(const ModelTerms& t, Var params, const CameraFrame& frame) {
  const HeadModel& m = *t.model;
  const DecodedVars d = decode(t, params);
  const Var yaw = yaw_degrees(d.global_rotation);
  const Var contour = dynamic_landmarks3d(d.vertices, m.faces, m.landmarks.contour, yaw);
  const Var fixed = static_landmarks3d(d.vertices, m.faces, m.landmarks.static_points);
  const Var cam = frame_camera(slice_cols(params, ParamLayout::kCam, ParamLayout::kCam + 3), frame);
  return project(concat_rows({contour, fixed}), cam);
}

}  // namespace ad

/// Projected 2D landmarks (L x 2) of a ParamVector under a camera frame.
inline DenseArray projected_landmarks(const HeadModel& m, const ParamVector& p, const CameraFrame& frame = {}) {
  const DenseArray verts = decode_vertices(m, p);
  const double yaw = yaw_degrees(rodrigues(p.global_rot));
  return project(model_landmarks3d(m, verts, yaw), frame.camera(p.cam));
}

}  // namespace ringnet
