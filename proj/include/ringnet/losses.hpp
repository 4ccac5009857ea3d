#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "ringnet/autodiff.hpp"
#include "ringnet/head_model.hpp"

namespace ringnet {

struct LossWeights {
  double shape_consistency = 1.0;  // lambda_SC
  double projection = 60.0;        // lambda_proj
  double shape_reg = 1e-4;         // lambda_beta
  double expression_reg = 1e-4;    // lambda_psi
  double margin = 0.5;             // eta
  double confidence_threshold = 0.41;

  friend bool operator==(const LossWeights&, const LossWeights&) = default;
};

struct LossBreakdown {
  double total = 0.0;
  double shape_consistency = 0.0;
  double projection = 0.0;
  double shape_reg = 0.0;
  double expression_reg = 0.0;
};

namespace detail {

inline double squared_distance(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

// Ring hinge over rows laid out slice-major (row = slice * R + element); the
// last element of each slice is the unmatched identity. Returns L_S (unnormalized)
// and optionally accumulates d L_S / d rows * scale into `grad`.
inline double ring_hinge(const double* rows, std::size_t slices, std::size_t ring, std::size_t dim, double margin,
                         double* grad, double scale) {
  double total = 0.0;
  for (std::size_t i = 0; i < slices; ++i) {
    const double* base = rows + i * ring * dim;
    const double* unmatched = base + (ring - 1) * dim;
    for (std::size_t j = 0; j + 1 < ring; ++j) {
      const double* bj = base + j * dim;
      const double d_unmatched = squared_distance(bj, unmatched, dim);
      for (std::size_t k = 0; k + 1 < ring; ++k) {
        const double* bk = base + k * dim;
        const double h = squared_distance(bj, bk, dim) - d_unmatched + margin;
        if (h <= 0.0) continue;
        total += h;
        if (!grad) continue;
        double* gj = grad + (i * ring + j) * dim;
        double* gk = grad + (i * ring + k) * dim;
        double* gr = grad + (i * ring + ring - 1) * dim;
        for (std::size_t c = 0; c < dim; ++c) {
          const double djk = bj[c] - bk[c];
          const double djr = bj[c] - unmatched[c];
          gj[c] += scale * 2.0 * (djk - djr);
          gk[c] -= scale * 2.0 * djk;
          gr[c] += scale * 2.0 * djr;
        }
      }
    }
  }
  return total;
}

}  // namespace detail

/// L_SC = L_S / (n_b R) for betas of shape n_b x R x |beta|, where
/// L_S = sum_i sum_{j,k < R} max(0, |b_ij - b_ik|^2 - |b_ij - b_iR|^2 + eta).
/// Diagonal terms j = k are included.
inline double shape_consistency_loss(const DenseArray& betas, double margin) {
  if (betas.rank() != 3) throw DimensionError("shape_consistency_loss: expected n_b x R x |beta|");
  const std::size_t nb = betas.shape()[0], ring = betas.shape()[1], dim = betas.shape()[2];
  if (ring < 2) throw ValueError("shape_consistency_loss: ring size must be at least 2");
  if (nb == 0) throw ValueError("shape_consistency_loss: empty batch");
  return ringnet::detail::ring_hinge(betas.data(), nb, ring, dim, margin, nullptr, 0.0) / static_cast<double>(nb * ring);
}

/// Mean over all 2L coordinates of w_i |k_p - k| with w_i = [confidence_i > threshold].
inline double reprojection_loss(const DenseArray& projected, const DenseArray& observed,
                                const std::vector<double>& confidence, double threshold) {
  const std::size_t l = confidence.size();
  if (l == 0) throw ValueError("reprojection_loss: no landmarks");
  if (projected.rows() != l || observed.rows() != l || projected.cols() != 2 || observed.cols() != 2) {
    throw DimensionError("reprojection_loss: landmark counts differ");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < l; ++i) {
    if (!(confidence[i] > threshold)) continue;
    s += std::abs(projected(i, 0) - observed(i, 0)) + std::abs(projected(i, 1) - observed(i, 1));
  }
  return s / static_cast<double>(2 * l);
}

namespace ad {

/// Tape version of the ring loss over a (n_b R) x |beta| matrix, rows slice-major.
inline Var shape_consistency_loss(Var betas, std::size_t slices, std::size_t ring, double margin) {
  if (ring < 2) throw ValueError("shape_consistency_loss: ring size must be at least 2");
  if (slices == 0) throw ValueError("shape_consistency_loss: empty batch");
  if (betas.rows() != slices * ring) throw DimensionError("shape_consistency_loss: expected n_b * R rows");
  const std::size_t dim = betas.cols();
  const double norm = 1.0 / static_cast<double>(slices * ring);
  const double value = ringnet::detail::ring_hinge(betas.value().data(), slices, ring, dim, margin, nullptr, 0.0) * norm;
  return betas.tape().record(OpKind::kCustom, "shape_consistency_loss", DenseArray::scalar(value), {betas},
                             [betas, slices, ring, dim, margin, norm](const DenseArray& g, Gradients& grads) {
                               if (!betas.requires_grad()) return;
                               ringnet::detail::ring_hinge(betas.value().data(), slices, ring, dim, margin,
                                                  grads.accumulator(betas).data(), g[0] * norm);
                             });
}

inline Var reprojection_loss(Var projected, const DenseArray& observed, const std::vector<double>& confidence,
                             double threshold) {
  const double value = ringnet::reprojection_loss(projected.value(), observed, confidence, threshold);
  return projected.tape().record(
      OpKind::kCustom, "reprojection_loss", DenseArray::scalar(value), {projected},
      [projected, observed, confidence, threshold](const DenseArray& g, Gradients& grads) {
        if (!projected.requires_grad()) return;
        DenseArray& gp = grads.accumulator(projected);
        const double s = g[0] / static_cast<double>(2 * confidence.size());
        for (std::size_t i = 0; i < confidence.size(); ++i) {
          if (!(confidence[i] > threshold)) continue;
          for (std::size_t c = 0; c < 2; ++c) {
            const double d = projected.value()(i, c) - observed(i, c);
            gp(i, c) += s * static_cast<double>((d > 0.0) - (d < 0.0));
          }
        }
      });
}

/// Target landmarks of one ring element, already in the loss frame.
struct LandmarkTarget {
  DenseArray positions;  // L x 2
  std::vector<double> confidence;
};

struct TotalLossVars {
  Var total;
  Var shape_consistency;
  Var projection;  // mean over ring elements
  Var shape_reg;   // mean over ring elements of |beta|^2
  Var expression_reg;

  LossBreakdown values() const {
    return {total.value().item(), shape_consistency.value().item(), projection.value().item(),
            shape_reg.value().item(), expression_reg.value().item()};
  }
};

/// L_tot = l_SC L_SC + l_proj mean_e L_proj,e + l_beta mean_e |beta_e|^2 + l_psi mean_e |psi_e|^2
/// for a (n_b R) x P parameter matrix and one projected-landmark array per row.
inline TotalLossVars total_loss(Var params, const std::vector<Var>& projected, const std::vector<LandmarkTarget>& targets,
                                const ParamLayout& layout, const LossWeights& w, std::size_t slices, std::size_t ring) {
  const std::size_t elements = params.rows();
  if (elements != slices * ring || projected.size() != elements || targets.size() != elements) {
    throw DimensionError("total_loss: expected one projection and target per ring element");
  }
  if (params.cols() != layout.size()) throw DimensionError("total_loss: parameter width mismatch");
  const Var betas = slice_cols(params, ParamLayout::kShape, layout.expression_offset());
  const Var psi = slice_cols(params, layout.expression_offset(), layout.size());
  TotalLossVars out;
  out.shape_consistency = shape_consistency_loss(betas, slices, ring, w.margin);
  std::vector<Var> per_element;
  per_element.reserve(elements);
  for (std::size_t e = 0; e < elements; ++e) {
    per_element.push_back(reprojection_loss(projected[e], targets[e].positions, targets[e].confidence, w.confidence_threshold));
  }
  const double inv = 1.0 / static_cast<double>(elements);
  out.projection = scale(sum(concat_rows(per_element)), inv);
  out.shape_reg = scale(sum_squares(betas), inv);
  out.expression_reg = scale(sum_squares(psi), inv);
  out.total = scale(out.shape_consistency, w.shape_consistency) + scale(out.projection, w.projection) +
              scale(out.shape_reg, w.shape_reg) + scale(out.expression_reg, w.expression_reg);
  return out;
}

}  // namespace ad
}  // namespace ringnet
