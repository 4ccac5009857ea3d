#pragma once

#include <filesystem>

#include "ringnet/config.hpp"
#include "ringnet/container.hpp"
#include "ringnet/synth.hpp"

namespace ringnet {

inline constexpr const char* kDatasetFormat = "ringnet-dataset";

struct StoredDataset {
  Dataset data;
  SynthConfig config;
};

inline Container dataset_container(const Dataset& d, const SynthConfig& cfg) {
  Container c;
  c.format = kDatasetFormat;
  const std::size_t n = d.observations.size();
  const std::size_t l = n ? d.observations[0].landmarks.size() : 0;
  const ParamLayout layout = n ? d.observations[0].truth.layout() : ParamLayout{};
  DenseArray positions({n, l, 2}), confidence({n, l}), truth({n, layout.size()});
  std::vector<std::int64_t> identity;
  for (std::size_t i = 0; i < n; ++i) {
    const Observation& o = d.observations[i];
    if (o.landmarks.size() != l || o.truth.layout() != layout) throw DimensionError("save_dataset: observations differ in size");
    std::copy(o.landmarks.positions.data(), o.landmarks.positions.data() + 2 * l, positions.data() + 2 * l * i);
    std::copy(o.landmarks.confidence.begin(), o.landmarks.confidence.end(), confidence.data() + l * i);
    const std::vector<double> t = o.truth.flat();
    std::copy(t.begin(), t.end(), truth.data() + layout.size() * i);
    identity.push_back(static_cast<std::int64_t>(o.identity));
  }
  c.meta = {{"num_identities", d.num_identities},
            {"num_observations", n},
            {"num_landmarks", l},
            {"num_shape", layout.num_shape},
            {"num_expression", layout.num_expression},
            {"synth", config_to_json(cfg)}};
  c.add("positions", positions, Dtype::kF64);
  c.add("confidence", confidence, Dtype::kF64);
  c.add("truth", truth, Dtype::kF64);
  c.add_ints("identity", identity, {n});
  return c;
}

inline StoredDataset dataset_from_container(const Container& c) {
  StoredDataset out;
  std::size_t n = 0, l = 0;
  ParamLayout layout;
  try {
    out.data.num_identities = c.meta.at("num_identities").get<std::size_t>();
    n = c.meta.at("num_observations").get<std::size_t>();
    l = c.meta.at("num_landmarks").get<std::size_t>();
    layout = {c.meta.at("num_shape").get<std::size_t>(), c.meta.at("num_expression").get<std::size_t>()};
    out.config = config_from_json<SynthConfig>(c.meta.at("synth"));
  } catch (const Json::exception& e) {
    throw FormatError(std::string("dataset metadata: ") + e.what());
  }
  c.expect("positions", Dtype::kF64, {n, l, 2});
  c.expect("confidence", Dtype::kF64, {n, l});
  c.expect("truth", Dtype::kF64, {n, layout.size()});
  c.expect("identity", Dtype::kI32, {n});
  const DenseArray positions = c.get("positions"), confidence = c.get("confidence"), truth = c.get("truth");
  const std::vector<std::int64_t> identity = c.get_ints("identity");
  for (std::size_t i = 0; i < n; ++i) {
    Observation o;
    o.landmarks.positions = DenseArray({l, 2});
    std::copy(positions.data() + 2 * l * i, positions.data() + 2 * l * (i + 1), o.landmarks.positions.data());
    o.landmarks.confidence.assign(confidence.data() + l * i, confidence.data() + l * (i + 1));
    o.truth = ParamVector::from_flat(std::span<const double>(truth.data() + layout.size() * i, layout.size()), layout);
    if (identity[i] < 0 || static_cast<std::size_t>(identity[i]) >= out.data.num_identities)
      throw FormatError("dataset: identity label out of range at observation " + std::to_string(i));
    o.identity = static_cast<std::size_t>(identity[i]);
    out.data.observations.push_back(std::move(o));
  }
  return out;
}

inline void save_dataset(const Dataset& d, const SynthConfig& cfg, const std::filesystem::path& path) {
  save_container(dataset_container(d, cfg), path);
}

inline StoredDataset load_dataset(const std::filesystem::path& path) {
  return dataset_from_container(load_container(path, kDatasetFormat));
}

}  // namespace ringnet
