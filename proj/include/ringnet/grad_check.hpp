#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "ringnet/autodiff.hpp"

namespace ringnet {

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

/// Compares the tape gradient of a scalar function against central finite
/// differences. `fn(tape, x)` must build the function on `tape` from leaf `x`.
/// Only the listed coordinates are checked (all when `coords` is empty).
/// Discrepancy per coordinate is |analytic - numeric| / max(1, |analytic|).
template <class Fn>
GradCheckResult grad_check(Fn&& fn, const DenseArray& point, double step = 1e-5,
                           std::vector<std::size_t> coords = {}) {
  if (!point.all_finite()) throw NumericError("grad_check: non-finite point");
  DenseArray analytic;
  {
    ad::Tape tape;
    const ad::Var x = tape.variable(point);
    const ad::Var y = fn(tape, x);
    analytic = tape.backward(y).wrt(x);
  }
  auto evaluate = [&](const DenseArray& p) {
    ad::Tape tape;
    const ad::Var x = tape.constant(p);
    return fn(tape, x).value().item();
  };
  if (coords.empty()) {
    coords.resize(point.size());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
  }
  GradCheckResult result;
  DenseArray probe = point;
  for (std::size_t i : coords) {
    const double orig = probe[i];
    probe[i] = orig + step;
    const double up = evaluate(probe);
    probe[i] = orig - step;
    const double down = evaluate(probe);
    probe[i] = orig;
    const double numeric = (up - down) / (2.0 * step);
    const double err = std::abs(analytic[i] - numeric) / std::max(1.0, std::abs(analytic[i]));
    if (err >= result.max_relative_error) {
      result = {err, i, analytic[i], numeric};
    }
  }
  return result;
}

}  // namespace ringnet
