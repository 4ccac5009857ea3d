#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "ringnet/autodiff.hpp"
#include "ringnet/camera.hpp"
#include "ringnet/head_model.hpp"

namespace ringnet {

struct EncoderConfig {
  std::size_t hidden = 512;
  double dropout = 0.2;
  std::size_t iterations = 3;  // T
  double output_init_scale = 0.01;
  double confidence_threshold = 0.41;

  friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

/// Regressor weights: two ReLU layers and a linear output of ParamVector
/// width, applied to [standardized features, current estimate].
struct EncoderWeights {
  EncoderConfig config;
  DenseArray w1, b1, w2, b2, w3, b3;
  DenseArray feature_mean;   // 1 x F
  DenseArray feature_scale;  // 1 x F, divides (feature - mean)

  std::size_t feature_dim() const { return feature_mean.cols(); }
  std::size_t output_dim() const { return b3.cols(); }

  static constexpr std::size_t kNumBlocks = 6;
  static const std::array<const char*, kNumBlocks>& block_names() {
    static const std::array<const char*, kNumBlocks> names = {"w1", "b1", "w2", "b2", "w3", "b3"};
    return names;
  }
  std::array<DenseArray*, kNumBlocks> blocks() { return {&w1, &b1, &w2, &b2, &w3, &b3}; }
  std::array<const DenseArray*, kNumBlocks> blocks() const { return {&w1, &b1, &w2, &b2, &w3, &b3}; }

  std::vector<std::string> problems() const {
    std::vector<std::string> out;
    const std::size_t f = feature_dim(), p = output_dim(), h = config.hidden;
    auto expect = [&](const DenseArray& a, Shape s, const char* name) {
      if (a.shape() != s) out.push_back(std::string(name) + " has shape " + shape_string(a.shape()) + ", expected " + shape_string(s));
      else if (!a.all_finite()) out.push_back(std::string(name) + " has non-finite entries");
    };
    expect(w1, {f + p, h}, "w1");
    expect(b1, {1, h}, "b1");
    expect(w2, {h, h}, "w2");
    expect(b2, {1, h}, "b2");
    expect(w3, {h, p}, "w3");
    expect(feature_scale, {1, f}, "feature_scale");
    if (!feature_mean.all_finite()) out.push_back("feature_mean has non-finite entries");
    for (double s : feature_scale.storage())
      if (!(s > 0.0)) {
        out.push_back("feature_scale has a non-positive entry");
        break;
      }
    if (config.iterations < 1) out.push_back("iterations must be at least 1");
    if (!(config.dropout >= 0.0 && config.dropout < 1.0)) out.push_back("dropout must lie in [0, 1)");
    return out;
  }

  void validate() const {
    const auto p = problems();
    if (p.empty()) return;
    std::string msg = "invalid encoder weights:";
    for (const auto& s : p) msg += "\n  " + s;
    throw InvariantError(msg);
  }

  friend bool operator==(const EncoderWeights&, const EncoderWeights&) = default;
};

/// Fixed-length encoder input of one observation.
struct Features {
  DenseArray values;            // 1 x 3L
  BoxNormalization normalization;
};

inline std::size_t feature_dim(std::size_t num_landmarks) { return 3 * num_landmarks; }

/// Feature stub: confident landmarks in the box-normalized frame (zero where
/// unconfident), followed by the raw confidences.
inline DenseArray feature_row(const DenseArray& normalized, const std::vector<double>& confidence, double threshold) {
  const std::size_t l = confidence.size();
  if (normalized.rows() != l || normalized.cols() != 2) throw DimensionError("extract_features: landmarks must be L x 2");
  DenseArray out({1, 3 * l});
  for (std::size_t i = 0; i < l; ++i) {
    if (confidence[i] > threshold) {
      out[2 * i] = normalized(i, 0);
      out[2 * i + 1] = normalized(i, 1);
    }
    out[2 * l + i] = confidence[i];
  }
  return out;
}

inline Features extract_features(const Landmarks2D& lm, double threshold, const BoxNormalization& norm) {
  return {feature_row(norm.apply(lm.positions), lm.confidence, threshold), norm};
}

inline Features extract_features(const Landmarks2D& lm, double threshold) {
  return extract_features(lm, threshold, BoxNormalization::of(bounding_box(lm, threshold)));
}

/// Random initialization; feature standardization constants come from
/// `sample_features` (rows of training features) when given.
inline EncoderWeights init_encoder(const EncoderConfig& cfg, std::size_t features, std::size_t outputs, std::mt19937_64& rng,
                                   const DenseArray* sample_features = nullptr) {
  EncoderWeights w;
  w.config = cfg;
  auto he = [&](std::size_t in, std::size_t out, double gain) {
    std::normal_distribution<double> normal(0.0, gain * std::sqrt(2.0 / static_cast<double>(in)));
    DenseArray a({in, out});
    for (double& v : a.storage()) v = normal(rng);
    return a;
  };
  w.w1 = he(features + outputs, cfg.hidden, 1.0);
  w.b1 = DenseArray::zeros(1, cfg.hidden);
  w.w2 = he(cfg.hidden, cfg.hidden, 1.0);
  w.b2 = DenseArray::zeros(1, cfg.hidden);
  w.w3 = he(cfg.hidden, outputs, cfg.output_init_scale);
  w.b3 = DenseArray::zeros(1, outputs);
  w.feature_mean = DenseArray::zeros(1, features);
  w.feature_scale = DenseArray({1, features}, 1.0);
  if (sample_features && sample_features->rows() > 0) {
    if (sample_features->cols() != features) throw DimensionError("init_encoder: sample feature width mismatch");
    const DenseArray& x = *sample_features;
    const std::size_t l = features / 3;
    for (std::size_t c = 0; c < features; ++c) {
      // Landmark coordinates only count where the landmark is confident.
      auto used = [&](std::size_t r) { return c >= 2 * l || x(r, 2 * l + c / 2) > cfg.confidence_threshold; };
      double mean = 0.0, sq = 0.0;
      std::size_t n = 0;
      for (std::size_t r = 0; r < x.rows(); ++r)
        if (used(r)) mean += x(r, c), ++n;
      if (n == 0) continue;
      mean /= static_cast<double>(n);
      for (std::size_t r = 0; r < x.rows(); ++r)
        if (used(r)) sq += (x(r, c) - mean) * (x(r, c) - mean);
      const double sd = std::sqrt(sq / static_cast<double>(n));
      w.feature_mean[c] = mean;
      w.feature_scale[c] = sd > 1e-3 ? sd : 1.0;
    }
  }
  w.validate();
  return w;
}

/// Inverted-dropout keep masks for one forward pass: [iteration][layer].
struct DropoutMasks {
  std::vector<std::array<DenseArray, 2>> masks;
  bool empty() const { return masks.empty(); }
};

inline DropoutMasks sample_dropout(const EncoderConfig& cfg, std::size_t rows, std::mt19937_64& rng) {
  DropoutMasks out;
  if (cfg.dropout <= 0.0) return out;
  std::bernoulli_distribution keep(1.0 - cfg.dropout);
  const double inv = 1.0 / (1.0 - cfg.dropout);
  for (std::size_t t = 0; t < cfg.iterations; ++t) {
    std::array<DenseArray, 2> layer;
    for (auto& m : layer) {
      m = DenseArray({rows, cfg.hidden});
      for (double& v : m.storage()) v = keep(rng) ? inv : 0.0;
    }
    out.masks.push_back(std::move(layer));
  }
  return out;
}

/// Per-column standardization of feature rows. Coordinates of unconfident
/// landmarks map to 0, the standardized mean.
inline DenseArray standardize(const DenseArray& features, const EncoderWeights& w) {
  const std::size_t f = w.feature_dim(), l = f / 3;
  if (features.cols() != f) throw DimensionError("standardize: feature width does not match the weights");
  DenseArray out = features;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    for (std::size_t c = 0; c < f; ++c) out(r, c) = (features(r, c) - w.feature_mean[c]) / w.feature_scale[c];
    for (std::size_t i = 0; i < l; ++i)
      if (!(features(r, 2 * l + i) > w.config.confidence_threshold)) out(r, 2 * i) = out(r, 2 * i + 1) = 0.0;
  }
  return out;
}

namespace ad {

struct EncoderVars {
  std::array<Var, EncoderWeights::kNumBlocks> blocks;
  EncoderConfig config;

  /// Registers the weights on a tape; blocks become variables when `trainable`.
  EncoderVars(Tape& tape, const EncoderWeights& w, bool trainable) : config(w.config) {
    const auto src = w.blocks();
    for (std::size_t i = 0; i < blocks.size(); ++i) blocks[i] = trainable ? tape.variable(*src[i]) : tape.constant(*src[i]);
  }
};

/// Iterative error feedback: f0 = 0, f_{t+1} = f_t + regressor([x, f_t]).
/// `features` is B x F, already standardized; returns B x P.
inline Var encode(const EncoderVars& w, Var features, const DropoutMasks& dropout = {}) {
  Tape& tape = features.tape();
  const std::size_t rows = features.rows();
  const std::size_t outputs = w.blocks[5].cols();
  if (w.config.iterations < 1) throw ValueError("encode: iterations must be at least 1");
  if (features.cols() + outputs != w.blocks[0].rows()) throw DimensionError("encode: feature width does not match the weights");
  if (!dropout.empty() && dropout.masks.size() != w.config.iterations) throw DimensionError("encode: dropout mask count mismatch");
  const Var standardized = features;
  Var estimate = tape.constant(DenseArray::zeros(rows, outputs));
  for (std::size_t t = 0; t < w.config.iterations; ++t) {
    Var h = relu(add_row(matmul(concat_cols({standardized, estimate}), w.blocks[0]), w.blocks[1]));
    if (!dropout.empty()) h = mask_mul(h, dropout.masks[t][0]);
    h = relu(add_row(matmul(h, w.blocks[2]), w.blocks[3]));
    if (!dropout.empty()) h = mask_mul(h, dropout.masks[t][1]);
    estimate = estimate + add_row(matmul(h, w.blocks[4]), w.blocks[5]);
  }
  return estimate;
}

}  // namespace ad

/// Inference without dropout: rows of features (B x F) to rows of parameters (B x P).
inline DenseArray encode(const DenseArray& features, const EncoderWeights& w) {
  ad::Tape tape;
  const ad::EncoderVars vars(tape, w, false);
  return ad::encode(vars, tape.constant(standardize(features, w))).value();
}

/// Normalized-frame parameter row of the encoder to a pixel-frame ParamVector.
inline ParamVector to_pixel_params(std::span<const double> row, const ParamLayout& layout, const CameraFrame& model,
                                   const BoxNormalization& norm) {
  ParamVector p = ParamVector::from_flat(row, layout);
  const CameraParams pixels = norm.to_pixels(model.camera(p.cam));
  p.cam = CameraFrame{}.encode(pixels);
  return p;
}

/// Pixel-frame ParamVector to the normalized-frame parameter row.
inline std::vector<double> to_normalized_params(const ParamVector& p, const CameraFrame& model, const BoxNormalization& norm) {
  ParamVector q = p;
  q.cam = model.encode(norm.from_pixels(CameraFrame{}.camera(p.cam)));
  return q.flat();
}

/// Encoder prediction for one observation as a pixel-frame ParamVector.
inline ParamVector infer(const HeadModel& m, const EncoderWeights& w, const Landmarks2D& lm) {
  const ParamLayout layout = ParamLayout::of(m);
  if (w.output_dim() != layout.size()) throw DimensionError("infer: encoder output width does not match the model");
  if (w.feature_dim() != feature_dim(m.landmarks.size())) throw DimensionError("infer: encoder feature width does not match the model");
  const Features f = extract_features(lm, w.config.confidence_threshold);
  const DenseArray row = encode(f.values, w);
  return to_pixel_params(row.values(), layout, model_frame(m), f.normalization);
}

}  // namespace ringnet
