#pragma once

#include <filesystem>
#include <string>

#include "ringnet/config.hpp"
#include "ringnet/container.hpp"
#include "ringnet/trainer.hpp"

namespace ringnet {

inline constexpr const char* kCheckpointFormat = "ringnet-checkpoint";

/// Weights, optimizer moments and configuration, all as 64-bit floats so a
/// resumed run continues bit-identically.
inline Container checkpoint_container(const TrainState& s) {
  Container c;
  c.format = kCheckpointFormat;
  c.meta = {{"step", s.step},
            {"optimizer_step", s.optimizer.step},
            {"feature_dim", s.weights.feature_dim()},
            {"output_dim", s.weights.output_dim()},
            {"train", config_to_json(s.config)}};
  const auto blocks = s.weights.blocks();
  const auto& names = EncoderWeights::block_names();
  for (std::size_t b = 0; b < blocks.size(); ++b) c.add(names[b], *blocks[b], Dtype::kF64);
  c.add("feature_mean", s.weights.feature_mean, Dtype::kF64);
  c.add("feature_scale", s.weights.feature_scale, Dtype::kF64);
  if (s.optimizer.first.size() != blocks.size() || s.optimizer.second.size() != blocks.size())
    throw InvariantError("checkpoint: optimizer state does not match the weight blocks");
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    c.add(std::string("adam_m_") + names[b], s.optimizer.first[b], Dtype::kF64);
    c.add(std::string("adam_v_") + names[b], s.optimizer.second[b], Dtype::kF64);
  }
  return c;
}

inline TrainState checkpoint_from_container(const Container& c) {
  TrainState s;
  std::size_t f = 0, p = 0;
  try {
    s.config = config_from_json<TrainConfig>(c.meta.at("train"));
    s.step = c.meta.at("step").get<std::uint64_t>();
    s.optimizer.step = c.meta.at("optimizer_step").get<std::uint64_t>();
    f = c.meta.at("feature_dim").get<std::size_t>();
    p = c.meta.at("output_dim").get<std::size_t>();
  } catch (const Json::exception& e) {
    throw FormatError(std::string("checkpoint metadata: ") + e.what());
  }
  s.weights.config = s.config.encoder;
  s.optimizer.config = s.config.adam;
  const std::size_t h = s.config.encoder.hidden;
  const std::array<Shape, EncoderWeights::kNumBlocks> shapes = {Shape{f + p, h}, Shape{1, h}, Shape{h, h},
                                                                Shape{1, h},     Shape{h, p}, Shape{1, p}};
  const auto blocks = s.weights.blocks();
  const auto& names = EncoderWeights::block_names();
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    c.expect(names[b], Dtype::kF64, shapes[b]);
    c.expect(std::string("adam_m_") + names[b], Dtype::kF64, shapes[b]);
    c.expect(std::string("adam_v_") + names[b], Dtype::kF64, shapes[b]);
    *blocks[b] = c.get(names[b]);
    s.optimizer.first.push_back(c.get(std::string("adam_m_") + names[b]));
    s.optimizer.second.push_back(c.get(std::string("adam_v_") + names[b]));
  }
  c.expect("feature_mean", Dtype::kF64, {1, f});
  c.expect("feature_scale", Dtype::kF64, {1, f});
  s.weights.feature_mean = c.get("feature_mean");
  s.weights.feature_scale = c.get("feature_scale");
  s.weights.validate();
  return s;
}

inline void save_checkpoint(const TrainState& s, const std::filesystem::path& path) {
  save_container(checkpoint_container(s), path);
}

inline TrainState load_checkpoint(const std::filesystem::path& path) {
  return checkpoint_from_container(load_container(path, kCheckpointFormat));
}

}  // namespace ringnet
