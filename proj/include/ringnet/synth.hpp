#pragma once

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "ringnet/camera.hpp"
#include "ringnet/head_model.hpp"
#include "ringnet/rotation.hpp"

namespace ringnet {

struct Range {
  double lo = 0.0, hi = 0.0;
  friend bool operator==(const Range&, const Range&) = default;
};

struct SynthConfig {
  std::size_t identities = 8;   // G
  std::size_t images_per_identity = 8;  // M
  double shape_sd = 1.0;
  double expression_sd = 0.5;
  Range yaw{-40.0, 40.0};  // degrees
  Range pitch{-15.0, 15.0};
  Range roll{-15.0, 15.0};
  Range jaw{0.0, 20.0};
  Range scale{0.8, 1.2};  // pixels per mm
  Range tx{97.0, 127.0};
  Range ty{67.0, 97.0};
  double pixel_noise = 1.5;  // sigma_px
  double drop_probability = 0.1;
  std::uint64_t seed = 0;

  std::vector<std::string> problems() const {
    std::vector<std::string> out;
    if (!(shape_sd >= 0.0)) out.push_back("shape_sd must be >= 0");
    if (!(expression_sd >= 0.0)) out.push_back("expression_sd must be >= 0");
    if (!(pixel_noise >= 0.0)) out.push_back("pixel_noise must be >= 0");
    if (!(drop_probability >= 0.0 && drop_probability <= 1.0)) out.push_back("drop_probability must lie in [0, 1]");
    if (!(scale.lo > 0.0)) out.push_back("scale range must be positive");
    for (const Range* r : {&yaw, &pitch, &roll, &jaw, &scale, &tx, &ty})
      if (!(r->lo <= r->hi)) {
        out.push_back("a range has lo > hi");
        break;
      }
    return out;
  }

  friend bool operator==(const SynthConfig&, const SynthConfig&) = default;
};

/// One synthetic image: landmarks and identity label. `truth` is kept for
/// evaluation only (pixel frame, identity CameraFrame).
struct Observation {
  Landmarks2D landmarks;
  std::size_t identity = 0;
  ParamVector truth;

  friend bool operator==(const Observation&, const Observation&) = default;
};

struct Dataset {
  std::size_t num_identities = 0;
  std::vector<Observation> observations;

  std::vector<std::vector<std::size_t>> by_identity() const {
    std::vector<std::vector<std::size_t>> out(num_identities);
    for (std::size_t i = 0; i < observations.size(); ++i) out.at(observations[i].identity).push_back(i);
    return out;
  }

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Independent stream for (seed, a, b).
inline std::mt19937_64 derive_rng(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), static_cast<std::uint32_t>(a),
                    static_cast<std::uint32_t>(a >> 32), static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  return std::mt19937_64(seq);
}

inline std::vector<double> sample_identity(std::mt19937_64& rng, double shape_sd, std::size_t n) {
  if (!(shape_sd >= 0.0)) throw ValueError("sample_identity: shape_sd must be >= 0");
  std::vector<double> beta(n, 0.0);
  if (shape_sd == 0.0) return beta;
  std::normal_distribution<double> normal(0.0, shape_sd);
  for (double& b : beta) b = normal(rng);
  return beta;
}

inline Observation render_observation(const HeadModel& m, std::span<const double> beta, std::mt19937_64& rng,
                                      const SynthConfig& cfg) {
  if (beta.size() != m.num_shape()) throw DimensionError("render_observation: shape code length mismatch");
  auto uniform = [&](const Range& r) { return std::uniform_real_distribution<double>(r.lo, r.hi)(rng); };
  constexpr double kDeg = std::numbers::pi / 180.0;
  ParamVector p = ParamVector::zeros(ParamLayout::of(m));
  p.shape.assign(beta.begin(), beta.end());
  const double yaw = uniform(cfg.yaw), pitch = uniform(cfg.pitch), roll = uniform(cfg.roll);
  p.global_rot = axis_angle_from_euler(yaw, pitch, roll);
  p.jaw_rot = {uniform(cfg.jaw) * kDeg, 0.0, 0.0};
  if (cfg.expression_sd > 0.0) {
    std::normal_distribution<double> normal(0.0, cfg.expression_sd);
    for (double& e : p.expression) e = normal(rng);
  }
  const CameraParams cam{uniform(cfg.scale), uniform(cfg.tx), uniform(cfg.ty)};
  p.cam = CameraFrame{}.encode(cam);

  Observation obs;
  obs.truth = p;
  obs.landmarks.positions = projected_landmarks(m, p);
  obs.landmarks.confidence.assign(m.landmarks.size(), 1.0);
  std::normal_distribution<double> noise(0.0, cfg.pixel_noise > 0.0 ? cfg.pixel_noise : 1.0);
  std::bernoulli_distribution drop(cfg.drop_probability);
  for (std::size_t i = 0; i < obs.landmarks.size(); ++i) {
    if (cfg.pixel_noise > 0.0) {
      obs.landmarks.positions(i, 0) += noise(rng);
      obs.landmarks.positions(i, 1) += noise(rng);
    }
    if (drop(rng)) obs.landmarks.confidence[i] = 0.0;
  }
  return obs;
}

/// G identities x M images; identity g uses stream (seed, g), its image j (seed, g, j + 1).
inline Dataset make_dataset(const HeadModel& m, const SynthConfig& cfg) {
  if (cfg.identities < 2) throw ValueError("make_dataset: need at least 2 identities");
  if (const auto p = cfg.problems(); !p.empty()) throw ValueError("make_dataset: " + p.front());
  Dataset d;
  d.num_identities = cfg.identities;
  d.observations.reserve(cfg.identities * cfg.images_per_identity);
  for (std::size_t g = 0; g < cfg.identities; ++g) {
    std::mt19937_64 id_rng = derive_rng(cfg.seed, g);
    const std::vector<double> beta = sample_identity(id_rng, cfg.shape_sd, m.num_shape());
    for (std::size_t j = 0; j < cfg.images_per_identity; ++j) {
      std::mt19937_64 rng = derive_rng(cfg.seed, g, j + 1);
      Observation obs = render_observation(m, beta, rng, cfg);
      obs.identity = g;
      d.observations.push_back(std::move(obs));
    }
  }
  return d;
}

/// Splits off the last `held_out` images of every identity.
inline std::pair<Dataset, Dataset> split_per_identity(const Dataset& d, std::size_t held_out) {
  std::pair<Dataset, Dataset> out;
  out.first.num_identities = out.second.num_identities = d.num_identities;
  for (const auto& idx : d.by_identity()) {
    if (idx.size() <= held_out) throw ValueError("split_per_identity: identity has too few images");
    for (std::size_t i = 0; i < idx.size(); ++i)
      (i + held_out < idx.size() ? out.first : out.second).observations.push_back(d.observations[idx[i]]);
  }
  return out;
}

}  // namespace ringnet
