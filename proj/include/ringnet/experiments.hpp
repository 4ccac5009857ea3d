#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ringnet/evaluation.hpp"
#include "ringnet/model_generator.hpp"
#include "ringnet/trainer.hpp"

namespace ringnet {

/// The kEvalLandmarks points on a mesh of the model's topology.
inline std::vector<Vec3> eval_landmarks(const HeadModel& m, const DenseArray& vertices) {
  std::vector<SurfacePoint> pts;
  for (std::size_t idx : kEvalLandmarks) {
    const std::size_t contour = m.landmarks.contour.size();
    if (idx < contour || idx - contour >= m.landmarks.static_points.size())
      throw ValueError("eval_landmarks: evaluation landmark is not a static landmark");
    pts.push_back(m.landmarks.static_points[idx - contour]);
  }
  return to_points(static_landmarks3d(vertices, m.faces, pts));
}

/// Neutral mesh (zero pose and expression) of a shape code.
inline Prediction neutral_prediction(const HeadModel& m, std::span<const double> beta) {
  const DenseArray v = neutral_vertices(m, beta);
  return {make_mesh(v, m.faces), eval_landmarks(m, v)};
}

inline ScanMesh neutral_scan(const HeadModel& m, std::span<const double> beta, std::string id) {
  const Prediction p = neutral_prediction(m, beta);
  ScanMesh s;
  s.image_id = std::move(id);
  s.subject = s.image_id;
  s.mesh = p.mesh;
  s.landmarks = p.landmarks;
  return s;
}

/// Predicted versus ground-truth neutral meshes of every observation.
inline EvalReport reconstruction_report(const HeadModel& m, const std::vector<std::vector<double>>& predicted,
                                        const Dataset& d, const EvalOptions& opt = {}) {
  if (predicted.size() != d.observations.size()) throw DimensionError("reconstruction_report: one prediction per observation");
  std::vector<std::optional<Prediction>> preds;
  std::vector<ScanMesh> scans;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    preds.emplace_back(neutral_prediction(m, predicted[i]));
    scans.push_back(neutral_scan(m, d.observations[i].truth.shape, "obs" + std::to_string(i)));
  }
  return evaluate(preds, scans, opt);
}

inline std::vector<std::vector<double>> predicted_shapes(const HeadModel& m, const EncoderWeights& w, const Dataset& d) {
  std::vector<std::vector<double>> out;
  for (const Observation& o : d.observations) out.push_back(infer(m, w, o.landmarks).shape);
  return out;
}

inline std::vector<std::size_t> labels_of(const Dataset& d) {
  std::vector<std::size_t> out;
  for (const Observation& o : d.observations) out.push_back(o.identity);
  return out;
}

struct AblationRow {
  std::size_t ring = 0;
  ErrorStats error;
  std::optional<ShapeConsistencyReport> consistency;  // absent without repeated validation identities
  double final_loss = 0.0;
};

/// One model per ring size under the same budget, seed and data; evaluated on
/// the validation observations.
inline std::vector<AblationRow> ablate_ring_size(const HeadModel& m, const Dataset& train_set, const Dataset& validation,
                                                 const std::vector<std::size_t>& rings, const TrainConfig& base,
                                                 const EvalOptions& eval = {}, std::size_t triples = 2000) {
  std::vector<AblationRow> rows;
  for (std::size_t r : rings) {
    if (r < 3) throw ValueError("ablate_ring_size: ring sizes must be at least 3");
    TrainConfig cfg = base;
    cfg.ring = r;
    const TrainResult res = train(m, train_set, cfg);
    const auto shapes = predicted_shapes(m, res.state.weights, validation);
    AblationRow row;
    row.ring = r;
    row.error = reconstruction_report(m, shapes, validation, eval).overall;
    const auto labels = labels_of(validation);
    std::map<std::size_t, std::size_t> counts;
    for (std::size_t l : labels) ++counts[l];
    const bool repeated = std::any_of(counts.begin(), counts.end(), [](const auto& c) { return c.second >= 2; });
    if (repeated && counts.size() >= 2) row.consistency = shape_consistency_metrics(shapes, labels, cfg.loss.margin, triples, cfg.seed);
    row.final_loss = res.history.empty() ? 0.0 : res.history.back().total;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace ringnet
