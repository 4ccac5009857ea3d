#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "ringnet/camera.hpp"
#include "ringnet/synth.hpp"

namespace ringnet {

/// Random crop jitter: box centre shift (fraction of box size), size scaling,
/// in-plane rotation (degrees) and landmark jitter (normalized units).
struct Augmentation {
  double shift = 0.05;
  double scale = 0.10;
  double rotation = 15.0;
  double jitter = 0.0;
  friend bool operator==(const Augmentation&, const Augmentation&) = default;
};

/// Box normalization followed by a rotation about the box centre.
struct CropTransform {
  BoxNormalization box;
  double angle = 0.0;  // radians

  DenseArray apply(const DenseArray& pixels) const {
    DenseArray out = box.apply(pixels);
    if (angle == 0.0) return out;
    const double c = std::cos(angle), s = std::sin(angle);
    for (std::size_t i = 0; i < out.rows(); ++i) {
      const double x = out(i, 0), y = out(i, 1);
      out(i, 0) = c * x - s * y;
      out(i, 1) = s * x + c * y;
    }
    return out;
  }
};

/// n_b slices of R elements, slice-major. Within a slice the first R - 1
/// elements share an identity and the last one has a different identity.
struct RingBatch {
  std::size_t ring = 0, slices = 0;
  std::vector<std::size_t> observation;  // dataset index per element
  std::vector<std::size_t> label;
  std::vector<CropTransform> crop;  // jittered normalization per element
  std::vector<DenseArray> jitter;    // L x 2 landmark offsets per element, empty without jitter

  std::size_t size() const { return observation.size(); }
};

inline CropTransform jitter(const BoxNormalization& n, const Augmentation& a, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  CropTransform out{n, 0.0};
  const double box = 2.0 * n.half_size;
  out.box.cx += a.shift * box * u(rng);
  out.box.cy += a.shift * box * u(rng);
  out.box.half_size *= 1.0 + a.scale * u(rng);
  out.angle = a.rotation * std::numbers::pi / 180.0 * u(rng);
  return out;
}

inline RingBatch build_ring_batch(const Dataset& d, std::mt19937_64& rng, std::size_t ring, std::size_t slices,
                                  const Augmentation& aug = {}, double threshold = 0.41) {
  if (ring < 2) throw ValueError("build_ring_batch: ring size must be at least 2");
  const auto groups = d.by_identity();
  std::vector<std::size_t> present;
  for (std::size_t g = 0; g < groups.size(); ++g)
    if (!groups[g].empty()) present.push_back(g);
  if (present.size() < 2) throw ValueError("build_ring_batch: need observations of at least 2 identities");
  RingBatch b;
  b.ring = ring;
  b.slices = slices;
  auto pick = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };
  auto push = [&](std::size_t obs, std::size_t label) {
    b.observation.push_back(obs);
    b.label.push_back(label);
    const Landmarks2D& lm = d.observations[obs].landmarks;
    b.crop.push_back(jitter(BoxNormalization::of(bounding_box(lm, threshold)), aug, rng));
    if (aug.jitter > 0.0) {
      std::normal_distribution<double> normal(0.0, aug.jitter);
      DenseArray offsets({lm.size(), 2});
      for (double& v : offsets.storage()) v = normal(rng);
      b.jitter.push_back(std::move(offsets));
    }
  };
  for (std::size_t s = 0; s < slices; ++s) {
    const std::size_t ci = pick(present.size());
    const std::size_t c = present[ci];
    const std::vector<std::size_t>& pool = groups[c];
    if (pool.size() >= ring - 1) {
      std::vector<std::size_t> order = pool;
      std::shuffle(order.begin(), order.end(), rng);
      for (std::size_t j = 0; j + 1 < ring; ++j) push(order[j], c);
    } else {
      for (std::size_t j = 0; j + 1 < ring; ++j) push(pool[pick(pool.size())], c);
    }
    std::size_t oi = pick(present.size() - 1);
    if (oi >= ci) ++oi;
    const std::size_t other = present[oi];
    push(groups[other][pick(groups[other].size())], other);
  }
  return b;
}

}  // namespace ringnet
