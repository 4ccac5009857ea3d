#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

#include "ringnet/adam.hpp"
#include "ringnet/encoder.hpp"
#include "ringnet/losses.hpp"
#include "ringnet/parallel.hpp"
#include "ringnet/ring_batch.hpp"
#include "ringnet/synth.hpp"

namespace ringnet {

struct TrainConfig {
  std::size_t ring = 6;    // R
  std::size_t slices = 8;  // n_b
  std::size_t epochs = 10;
  std::size_t steps = 0;  // overrides epochs when nonzero
  AdamConfig adam;
  LossWeights loss;
  EncoderConfig encoder;
  Augmentation augmentation;
  std::uint64_t seed = 0;
  std::size_t threads = 1;

  std::size_t steps_per_epoch(std::size_t observations) const {
    const std::size_t batch = ring * slices;
    return (observations + batch - 1) / batch;
  }
  std::size_t total_steps(std::size_t observations) const {
    return steps ? steps : epochs * steps_per_epoch(observations);
  }

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

/// Everything a checkpoint holds.
struct TrainState {
  TrainConfig config;
  EncoderWeights weights;
  AdamState optimizer;
  std::uint64_t step = 0;

  friend bool operator==(const TrainState&, const TrainState&) = default;
};

struct TrainResult {
  TrainState state;
  std::vector<LossBreakdown> history;
};

namespace detail {

inline std::vector<const DenseArray*> const_blocks(const EncoderWeights& w) {
  const auto b = w.blocks();
  return {b.begin(), b.end()};
}

inline std::vector<DenseArray*> mutable_blocks(EncoderWeights& w) {
  const auto b = w.blocks();
  return {b.begin(), b.end()};
}

inline constexpr std::uint64_t kInitStream = 0x696e6974;
inline constexpr std::uint64_t kStepStream = 0x73746570;

}  // namespace detail

/// Standardization constants are taken from the unaugmented features of the
/// training observations.
inline TrainState init_training(const HeadModel& m, const Dataset& d, const TrainConfig& cfg) {
  const std::size_t f = feature_dim(m.landmarks.size());
  DenseArray sample({d.observations.size(), f});
  for (std::size_t i = 0; i < d.observations.size(); ++i) {
    const Features x = extract_features(d.observations[i].landmarks, cfg.encoder.confidence_threshold);
    std::copy(x.values.storage().begin(), x.values.storage().end(), sample.data() + i * f);
  }
  std::mt19937_64 rng = derive_rng(cfg.seed, detail::kInitStream);
  TrainState s;
  s.config = cfg;
  s.weights = init_encoder(cfg.encoder, f, ParamLayout::of(m).size(), rng, &sample);
  s.optimizer = AdamState(cfg.adam, detail::const_blocks(s.weights));
  return s;
}

struct SliceOutcome {
  std::vector<DenseArray> grads;
  LossBreakdown loss;
};

/// Loss (already divided by n_b) and weight gradients of one ring slice.
inline SliceOutcome slice_gradients(const HeadModel& m, const Dataset& d, const EncoderWeights& w, const RingBatch& batch,
                                    std::size_t slice, const DropoutMasks& masks, const LossWeights& lw,
                                    const CameraFrame& frame) {
  const std::size_t ring = batch.ring;
  ad::Tape tape;
  const ad::EncoderVars vars(tape, w, true);
  DenseArray feats({ring, feature_dim(m.landmarks.size())});
  std::vector<ad::LandmarkTarget> targets;
  for (std::size_t e = 0; e < ring; ++e) {
    const std::size_t idx = slice * ring + e;
    const Landmarks2D& lm = d.observations[batch.observation[idx]].landmarks;
    DenseArray target = batch.crop[idx].apply(lm.positions);
    if (!batch.jitter.empty()) target += batch.jitter[idx];
    const DenseArray x = feature_row(target, lm.confidence, w.config.confidence_threshold);
    std::copy(x.storage().begin(), x.storage().end(), feats.data() + e * feats.cols());
    targets.push_back({std::move(target), lm.confidence});
  }
  const ad::Var params = ad::encode(vars, tape.constant(standardize(feats, w)), masks);
  const ModelTerms terms(tape, m);
  std::vector<ad::Var> projected;
  for (std::size_t e = 0; e < ring; ++e) projected.push_back(ad::projected_landmarks(terms, ad::slice_rows(params, e, e + 1), frame));
  const auto total = ad::total_loss(params, projected, targets, ParamLayout::of(m), lw, 1, ring);
  const double share = 1.0 / static_cast<double>(batch.slices);
  const ad::Var objective = ad::scale(total.total, share);
  const ad::Gradients g = tape.backward(objective);
  SliceOutcome out;
  for (const ad::Var& b : vars.blocks) out.grads.push_back(g.wrt(b));
  out.loss = total.values();
  out.loss.total *= share;
  out.loss.shape_consistency *= share;
  out.loss.projection *= share;
  out.loss.shape_reg *= share;
  out.loss.expression_reg *= share;
  return out;
}

/// One Adam step on a fresh ring batch; the batch and dropout depend only on (seed, step).
inline LossBreakdown train_step(const HeadModel& m, const Dataset& d, TrainState& s, const CameraFrame& frame) {
  const TrainConfig& cfg = s.config;
  std::mt19937_64 rng = derive_rng(cfg.seed, detail::kStepStream, s.step);
  const RingBatch batch = build_ring_batch(d, rng, cfg.ring, cfg.slices, cfg.augmentation, cfg.encoder.confidence_threshold);
  std::vector<DropoutMasks> masks;
  for (std::size_t i = 0; i < cfg.slices; ++i) masks.push_back(sample_dropout(cfg.encoder, cfg.ring, rng));
  std::vector<SliceOutcome> parts(cfg.slices);
  try {
    parallel_for(cfg.slices, cfg.threads, [&](std::size_t i) {
      parts[i] = slice_gradients(m, d, s.weights, batch, i, masks[i], cfg.loss, frame);
    });
  } catch (const NumericError& e) {
    throw NumericError("training diverged at step " + std::to_string(s.step) + ": " + e.what());
  }
  LossBreakdown loss;
  std::vector<DenseArray> grads = std::move(parts[0].grads);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0)
      for (std::size_t b = 0; b < grads.size(); ++b) grads[b] += parts[i].grads[b];
    loss.total += parts[i].loss.total;
    loss.shape_consistency += parts[i].loss.shape_consistency;
    loss.projection += parts[i].loss.projection;
    loss.shape_reg += parts[i].loss.shape_reg;
    loss.expression_reg += parts[i].loss.expression_reg;
  }
  const std::pair<const char*, double> terms[] = {{"shape consistency", loss.shape_consistency},
                                                  {"projection", loss.projection},
                                                  {"shape regularizer", loss.shape_reg},
                                                  {"expression regularizer", loss.expression_reg}};
  for (const auto& [name, v] : terms)
    if (!std::isfinite(v))
      throw NumericError("training diverged at step " + std::to_string(s.step) + ": non-finite " + name + " loss");
  s.optimizer.update(detail::mutable_blocks(s.weights), grads);
  if (!s.weights.problems().empty())
    throw NumericError("training diverged at step " + std::to_string(s.step) + ": non-finite weights");
  ++s.step;
  return loss;
}

using StepCallback = std::function<void(const TrainState&, const LossBreakdown&)>;

/// Continues `s` until it has taken `until` steps in total.
inline std::vector<LossBreakdown> resume_training(const HeadModel& m, const Dataset& d, TrainState& s, std::size_t until,
                                                  const StepCallback& on_step = {}) {
  if (d.num_identities < 2) throw ValueError("train: need at least 2 identities");
  const CameraFrame frame = model_frame(m);
  std::vector<LossBreakdown> history;
  while (s.step < until) {
    history.push_back(train_step(m, d, s, frame));
    if (on_step) on_step(s, history.back());
  }
  return history;
}

inline TrainResult train(const HeadModel& m, const Dataset& d, const TrainConfig& cfg, const StepCallback& on_step = {}) {
  TrainResult r;
  r.state = init_training(m, d, cfg);
  r.history = resume_training(m, d, r.state, cfg.total_steps(d.observations.size()), on_step);
  return r;
}

struct FitConfig {
  std::size_t iterations = 400;
  double learning_rate = 0.03;
  LossWeights loss;

  friend bool operator==(const FitConfig&, const FitConfig&) = default;
};

struct FitResult {
  ParamVector params;  // pixel frame
  double loss = 0.0;
  double mean_residual = 0.0;  // pixels, over confident landmarks
};

/// Mean Euclidean distance (pixels) between projected and observed confident landmarks.
inline double mean_landmark_residual(const HeadModel& m, const ParamVector& p, const Landmarks2D& lm, double threshold) {
  const DenseArray k = projected_landmarks(m, p);
  double total = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < lm.size(); ++i) {
    if (!(lm.confidence[i] > threshold)) continue;
    total += std::hypot(k(i, 0) - lm.positions(i, 0), k(i, 1) - lm.positions(i, 1));
    ++n;
  }
  return n ? total / static_cast<double>(n) : 0.0;
}

/// Direct Adam optimization of one ParamVector against one observation, in
/// the box-normalized frame with a cosine-decayed step. Returns the best iterate.
inline FitResult fit_single(const HeadModel& m, const Landmarks2D& lm, const std::optional<ParamVector>& init = std::nullopt,
                            const FitConfig& cfg = {}) {
  const double thr = cfg.loss.confidence_threshold;
  const std::size_t confident = static_cast<std::size_t>(
      std::count_if(lm.confidence.begin(), lm.confidence.end(), [&](double c) { return c > thr; }));
  if (confident < 6) throw ValueError("fit_single: need at least 6 confident landmarks, got " + std::to_string(confident));
  const ParamLayout layout = ParamLayout::of(m);
  const CameraFrame frame = model_frame(m);
  const BoxNormalization norm = BoxNormalization::of(bounding_box(lm, thr));
  const DenseArray target = norm.apply(lm.positions);
  DenseArray x = init ? DenseArray::row(to_normalized_params(*init, frame, norm)) : DenseArray::zeros(1, layout.size());
  if (x.cols() != layout.size()) throw DimensionError("fit_single: init layout does not match the model");

  AdamConfig ac;
  ac.learning_rate = cfg.learning_rate;
  AdamState adam(ac, {&x});
  DenseArray best = x;
  double best_loss = std::numeric_limits<double>::infinity();
  std::size_t best_iter = 0;
  for (std::size_t it = 0; it <= cfg.iterations; ++it) {
    ad::Tape tape;
    const ad::Var v = tape.variable(x);
    const ModelTerms terms(tape, m);
    const ad::Var proj = ad::projected_landmarks(terms, v, frame);
    const ad::Var beta = ad::slice_cols(v, ParamLayout::kShape, layout.expression_offset());
    const ad::Var psi = ad::slice_cols(v, layout.expression_offset(), layout.size());
    const ad::Var loss = ad::scale(ad::reprojection_loss(proj, target, lm.confidence, thr), cfg.loss.projection) +
                         ad::scale(ad::sum_squares(beta), cfg.loss.shape_reg) +
                         ad::scale(ad::sum_squares(psi), cfg.loss.expression_reg);
    const double value = loss.value().item();
    if (value < best_loss) {
      best_loss = value;
      best = x;
      best_iter = it;
    }
    if (it == cfg.iterations) break;
    adam.config.learning_rate =
        cfg.learning_rate * 0.5 * (1.0 + std::cos(std::numbers::pi * static_cast<double>(it) / static_cast<double>(cfg.iterations)));
    adam.update({&x}, {tape.backward(loss).wrt(v)});
  }
  FitResult r;
  r.params = (init && best_iter == 0) ? *init : to_pixel_params(best.values(), layout, frame, norm);
  r.loss = best_loss;
  r.mean_residual = mean_landmark_residual(m, r.params, lm, thr);
  return r;
}

struct ShapeConsistencyReport {
  double within_mean = 0.0;  // mean |beta_i - beta_j| over same-identity pairs
  double cross_mean = 0.0;   // over different-identity pairs
  double margin_fraction = 0.0;  // triples with |bj - bk|^2 + eta <= |bj - bu|^2
  std::size_t triples = 0;
};

inline ShapeConsistencyReport shape_consistency_metrics(const std::vector<std::vector<double>>& betas,
                                                        const std::vector<std::size_t>& labels, double margin,
                                                        std::size_t triples, std::uint64_t seed) {
  if (betas.size() != labels.size()) throw DimensionError("shape_consistency_metrics: one label per code");
  auto d2 = [&](std::size_t a, std::size_t b) {
    double s = 0.0;
    for (std::size_t c = 0; c < betas[a].size(); ++c) s += (betas[a][c] - betas[b][c]) * (betas[a][c] - betas[b][c]);
    return s;
  };
  ShapeConsistencyReport r;
  double within = 0.0, cross = 0.0;
  std::size_t nw = 0, nc = 0;
  for (std::size_t i = 0; i < betas.size(); ++i)
    for (std::size_t j = i + 1; j < betas.size(); ++j) {
      const double dist = std::sqrt(d2(i, j));
      if (labels[i] == labels[j]) within += dist, ++nw;
      else cross += dist, ++nc;
    }
  if (nw == 0 || nc == 0) throw ValueError("shape_consistency_metrics: need matched and unmatched pairs");
  r.within_mean = within / static_cast<double>(nw);
  r.cross_mean = cross / static_cast<double>(nc);

  std::map<std::size_t, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < labels.size(); ++i) groups[labels[i]].push_back(i);
  std::vector<std::size_t> usable;
  for (const auto& [label, idx] : groups)
    if (idx.size() >= 2) usable.push_back(label);
  if (usable.empty()) throw ValueError("shape_consistency_metrics: no identity has two codes");
  std::mt19937_64 rng = derive_rng(seed, 0x74726970);
  auto pick = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };
  std::size_t held = 0;
  for (std::size_t t = 0; t < triples; ++t) {
    const auto& same = groups[usable[pick(usable.size())]];
    const std::size_t a = pick(same.size());
    std::size_t b = pick(same.size() - 1);
    if (b >= a) ++b;
    std::size_t u;
    do u = pick(labels.size());
    while (labels[u] == labels[same[a]]);
    if (d2(same[a], same[b]) + margin <= d2(same[a], u)) ++held;
  }
  r.triples = triples;
  r.margin_fraction = triples ? static_cast<double>(held) / static_cast<double>(triples) : 0.0;
  return r;
}

}  // namespace ringnet
