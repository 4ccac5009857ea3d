#pragma once

#include <cmath>
#include <vector>

#include "ringnet/dense_array.hpp"
#include "ringnet/error.hpp"

namespace ringnet {

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  friend bool operator==(const AdamConfig&, const AdamConfig&) = default;
};

/// Adam with bias-corrected moments, one moment pair per parameter block.
struct AdamState {
  AdamConfig config;
  std::uint64_t step = 0;
  std::vector<DenseArray> first, second;

  AdamState() = default;
  AdamState(const AdamConfig& c, const std::vector<const DenseArray*>& params) : config(c) {
    for (const DenseArray* p : params) {
      first.emplace_back(p->shape());
      second.emplace_back(p->shape());
    }
  }

  void update(const std::vector<DenseArray*>& params, const std::vector<DenseArray>& grads) {
    if (params.size() != first.size() || grads.size() != first.size()) throw DimensionError("Adam: block count mismatch");
    ++step;
    const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
    const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
    for (std::size_t b = 0; b < params.size(); ++b) {
      DenseArray& x = *params[b];
      const DenseArray& g = grads[b];
      g.require_same_shape(x, "Adam gradient");
      double* m = first[b].data();
      double* v = second[b].data();
      for (std::size_t i = 0; i < x.size(); ++i) {
        m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g[i];
        v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g[i] * g[i];
        x[i] -= config.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + config.epsilon);
      }
    }
  }

  friend bool operator==(const AdamState&, const AdamState&) = default;
};

}  // namespace ringnet
