#pragma once

// Reverse-mode automatic differentiation over DenseArray values.
//
// A Tape records every operation in execution order, so parents always precede
// their children and a single reverse sweep visits each node once. Var is a
// lightweight handle (tape pointer + node index). Tapes are single-writer;
// use one tape per worker thread.

#include <Eigen/Core>

#include <cassert>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ringnet/dense_array.hpp"

namespace ringnet::ad {

enum class OpKind {
  kVariable,
  kConstant,
  kAdd,
  kSub,
  kMul,
  kScale,
  kAddScalar,
  kAddRow,
  kMatMul,
  kTranspose,
  kReshape,
  kSliceCols,
  kSliceRows,
  kConcatCols,
  kConcatRows,
  kRelu,
  kExp,
  kMaskMul,
  kSum,
  kSumSquares,
  kRowwiseMatVec,
  kCustom,
};

class Tape;
class Gradients;

class Var {
 public:
  Var() = default;
  Var(const Tape* tape, std::size_t index) : tape_(tape), index_(index) {}

  const DenseArray& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  bool requires_grad() const;

  Tape& tape() const { return const_cast<Tape&>(*tape_); }
  std::size_t index() const { return index_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  const Tape* tape_ = nullptr;
  std::size_t index_ = 0;
};

using BackwardFn = std::function<void(const DenseArray& upstream, Gradients& grads)>;

struct TapeNode {
  OpKind kind = OpKind::kConstant;
  std::string name;
  std::vector<std::size_t> parents;
  BackwardFn backward;
  DenseArray value;
  bool requires_grad = false;
};

/// Result of a backward sweep: one accumulator per node that received gradient.
class Gradients {
 public:
  explicit Gradients(const Tape& tape);

  /// Gradient buffer for v, created as zeros on first use.
  DenseArray& accumulator(Var v);

  /// Adds g into v's gradient when v participates in differentiation.
  void add(Var v, const DenseArray& g) {
    if (v.requires_grad()) accumulator(v) += g;
  }

  bool has(Var v) const { return grads_[v.index()].has_value(); }

  /// Gradient of the output with respect to v; zeros when v did not participate.
  DenseArray wrt(Var v) const {
    if (const auto& g = grads_[v.index()]) return *g;
    return DenseArray(v.shape());
  }

 private:
  friend class Tape;
  const Tape* tape_;
  std::vector<std::optional<DenseArray>> grads_;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf that gradients are taken with respect to.
  Var variable(DenseArray value) { return push(OpKind::kVariable, "variable", std::move(value), {}, {}, true); }

  /// Leaf that never receives gradient.
  Var constant(DenseArray value) { return push(OpKind::kConstant, "constant", std::move(value), {}, {}, false); }

  /// Appends an operation node. The backward closure is dropped when no parent
  /// requires gradient. Throws NumericError on non-finite results.
  Var record(OpKind kind, std::string name, DenseArray value, const std::vector<Var>& parents, BackwardFn fn) {
    bool needs = false;
    std::vector<std::size_t> ids;
    ids.reserve(parents.size());
    for (const Var& p : parents) {
      assert(p.valid() && &p.tape() == this && p.index() < nodes_.size());
      needs = needs || p.requires_grad();
      ids.push_back(p.index());
    }
    if (!value.all_finite()) throw NumericError("non-finite value produced by '" + name + "'");
    return push(kind, std::move(name), std::move(value), std::move(ids), needs ? std::move(fn) : BackwardFn{}, needs);
  }

  const TapeNode& node(std::size_t i) const { return nodes_[i]; }
  std::size_t size() const { return nodes_.size(); }

  /// Reverse sweep from a scalar output.
  Gradients backward(Var output) const {
    if (output.value().size() != 1) {
      throw DimensionError("backward: output must be scalar, got shape " + shape_string(output.shape()));
    }
    Gradients grads(*this);
    grads.grads_[output.index()] = DenseArray(output.shape(), 1.0);
    for (std::size_t i = output.index() + 1; i-- > 0;) {
      const TapeNode& n = nodes_[i];
      if (!grads.grads_[i] || !n.backward) continue;
      for (std::size_t p : n.parents) {
        assert(p < i && "tape must be topologically ordered");
        (void)p;
      }
      const DenseArray upstream = *grads.grads_[i];
      n.backward(upstream, grads);
    }
    return grads;
  }

 private:
  Var push(OpKind kind, std::string name, DenseArray value, std::vector<std::size_t> parents, BackwardFn fn,
           bool requires_grad) {
    nodes_.push_back(TapeNode{kind, std::move(name), std::move(parents), std::move(fn), std::move(value), requires_grad});
    return Var(this, nodes_.size() - 1);
  }

  std::vector<TapeNode> nodes_;
};

inline const DenseArray& Var::value() const { return tape_->node(index_).value; }
inline bool Var::requires_grad() const { return tape_->node(index_).requires_grad; }

inline Gradients::Gradients(const Tape& tape) : tape_(&tape), grads_(tape.size()) {}

inline DenseArray& Gradients::accumulator(Var v) {
  auto& slot = grads_[v.index()];
  if (!slot) slot = DenseArray(v.shape());
  return *slot;
}

// ---------------------------------------------------------------------------
// Operations

namespace detail {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using MutMap = Eigen::Map<RowMatrix>;

inline ConstMap as_matrix(const DenseArray& a) {
  return ConstMap(a.data(), static_cast<Eigen::Index>(a.rows()), static_cast<Eigen::Index>(a.cols()));
}
inline MutMap as_matrix(DenseArray& a) {
  return MutMap(a.data(), static_cast<Eigen::Index>(a.rows()), static_cast<Eigen::Index>(a.cols()));
}

inline void require_rank2(const Var& v, const char* op) {
  if (v.value().rank() != 2) throw DimensionError(std::string(op) + ": expected a rank-2 operand");
}

inline void require_same(const Var& a, const Var& b, const char* op) { a.value().require_same_shape(b.value(), op); }

}  // namespace detail

inline Var add(Var a, Var b) {
  detail::require_same(a, b, "add");
  return a.tape().record(OpKind::kAdd, "add", a.value() + b.value(), {a, b},
                         [a, b](const DenseArray& g, Gradients& grads) {
                           grads.add(a, g);
                           grads.add(b, g);
                         });
}

inline Var sub(Var a, Var b) {
  detail::require_same(a, b, "sub");
  return a.tape().record(OpKind::kSub, "sub", a.value() - b.value(), {a, b},
                         [a, b](const DenseArray& g, Gradients& grads) {
                           grads.add(a, g);
                           if (b.requires_grad()) grads.accumulator(b) -= g;
                         });
}

/// Elementwise product.
inline Var mul(Var a, Var b) {
  detail::require_same(a, b, "mul");
  DenseArray out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  return a.tape().record(OpKind::kMul, "mul", std::move(out), {a, b}, [a, b](const DenseArray& g, Gradients& grads) {
    if (a.requires_grad()) {
      DenseArray& ga = grads.accumulator(a);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * b.value()[i];
    }
    if (b.requires_grad()) {
      DenseArray& gb = grads.accumulator(b);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * a.value()[i];
    }
  });
}

inline Var scale(Var a, double s) {
  return a.tape().record(OpKind::kScale, "scale", a.value() * s, {a},
                         [a, s](const DenseArray& g, Gradients& grads) { grads.add(a, g * s); });
}

inline Var add_scalar(Var a, double s) {
  DenseArray out = a.value();
  for (double& v : out.storage()) v += s;
  return a.tape().record(OpKind::kAddScalar, "add_scalar", std::move(out), {a},
                         [a](const DenseArray& g, Gradients& grads) { grads.add(a, g); });
}

/// a (m x n) + row (1 x n) broadcast over rows.
inline Var add_row(Var a, Var row) {
  detail::require_rank2(a, "add_row");
  if (row.rows() != 1 || row.cols() != a.cols()) throw DimensionError("add_row: bias shape mismatch");
  DenseArray out = a.value();
  const std::size_t m = a.rows(), n = a.cols();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out(i, j) += row.value()[j];
  return a.tape().record(OpKind::kAddRow, "add_row", std::move(out), {a, row},
                         [a, row, m, n](const DenseArray& g, Gradients& grads) {
                           grads.add(a, g);
                           if (row.requires_grad()) {
                             DenseArray& gr = grads.accumulator(row);
                             for (std::size_t i = 0; i < m; ++i)
                               for (std::size_t j = 0; j < n; ++j) gr[j] += g(i, j);
                           }
                         });
}

inline Var matmul(Var a, Var b) {
  detail::require_rank2(a, "matmul");
  detail::require_rank2(b, "matmul");
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: " + shape_string(a.shape()) + " x " + shape_string(b.shape()));
  }
  DenseArray out = DenseArray::zeros(a.rows(), b.cols());
  detail::as_matrix(out).noalias() = detail::as_matrix(a.value()) * detail::as_matrix(b.value());
  return a.tape().record(OpKind::kMatMul, "matmul", std::move(out), {a, b},
                         [a, b](const DenseArray& g, Gradients& grads) {
                           const auto gm = detail::as_matrix(g);
                           if (a.requires_grad()) {
                             detail::as_matrix(grads.accumulator(a)).noalias() +=
                                 gm * detail::as_matrix(b.value()).transpose();
                           }
                           if (b.requires_grad()) {
                             detail::as_matrix(grads.accumulator(b)).noalias() +=
                                 detail::as_matrix(a.value()).transpose() * gm;
                           }
                         });
}

inline Var transpose(Var a) {
  detail::require_rank2(a, "transpose");
  DenseArray out = DenseArray::zeros(a.cols(), a.rows());
  detail::as_matrix(out) = detail::as_matrix(a.value()).transpose();
  return a.tape().record(OpKind::kTranspose, "transpose", std::move(out), {a},
                         [a](const DenseArray& g, Gradients& grads) {
                           if (a.requires_grad()) detail::as_matrix(grads.accumulator(a)) += detail::as_matrix(g).transpose();
                         });
}

inline Var reshape(Var a, Shape shape) {
  DenseArray out = a.value().reshaped(std::move(shape));
  return a.tape().record(OpKind::kReshape, "reshape", std::move(out), {a},
                         [a](const DenseArray& g, Gradients& grads) {
                           if (a.requires_grad()) grads.accumulator(a) += g.reshaped(a.shape());
                         });
}

/// Columns [begin, end) of a rank-2 array.
inline Var slice_cols(Var a, std::size_t begin, std::size_t end) {
  detail::require_rank2(a, "slice_cols");
  if (begin > end || end > a.cols()) throw DimensionError("slice_cols: range out of bounds");
  const std::size_t m = a.rows(), w = end - begin;
  DenseArray out = DenseArray::zeros(m, w);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < w; ++j) out(i, j) = a.value()(i, begin + j);
  return a.tape().record(OpKind::kSliceCols, "slice_cols", std::move(out), {a},
                         [a, begin, m, w](const DenseArray& g, Gradients& grads) {
                           if (!a.requires_grad()) return;
                           DenseArray& ga = grads.accumulator(a);
                           for (std::size_t i = 0; i < m; ++i)
                             for (std::size_t j = 0; j < w; ++j) ga(i, begin + j) += g(i, j);
                         });
}

/// Rows [begin, end) of a rank-2 array.
inline Var slice_rows(Var a, std::size_t begin, std::size_t end) {
  detail::require_rank2(a, "slice_rows");
  if (begin > end || end > a.rows()) throw DimensionError("slice_rows: range out of bounds");
  const std::size_t n = a.cols();
  std::vector<double> data(a.value().data() + begin * n, a.value().data() + end * n);
  return a.tape().record(OpKind::kSliceRows, "slice_rows", DenseArray({end - begin, n}, std::move(data)), {a},
                         [a, begin, n](const DenseArray& g, Gradients& grads) {
                           if (!a.requires_grad()) return;
                           DenseArray& ga = grads.accumulator(a);
                           for (std::size_t i = 0; i < g.size(); ++i) ga[begin * n + i] += g[i];
                         });
}

inline Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no operands");
  const std::size_t m = parts.front().rows();
  std::size_t total = 0;
  for (const Var& p : parts) {
    detail::require_rank2(p, "concat_cols");
    if (p.rows() != m) throw DimensionError("concat_cols: row count mismatch");
    total += p.cols();
  }
  DenseArray out = DenseArray::zeros(m, total);
  std::size_t offset = 0;
  for (const Var& p : parts) {
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < p.cols(); ++j) out(i, offset + j) = p.value()(i, j);
    offset += p.cols();
  }
  return parts.front().tape().record(OpKind::kConcatCols, "concat_cols", std::move(out), parts,
                                     [parts, m](const DenseArray& g, Gradients& grads) {
                                       std::size_t off = 0;
                                       for (const Var& p : parts) {
                                         const std::size_t w = p.cols();
                                         if (p.requires_grad()) {
                                           DenseArray& gp = grads.accumulator(p);
                                           for (std::size_t i = 0; i < m; ++i)
                                             for (std::size_t j = 0; j < w; ++j) gp(i, j) += g(i, off + j);
                                         }
                                         off += w;
                                       }
                                     });
}

inline Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw DimensionError("concat_rows: no operands");
  const std::size_t n = parts.front().cols();
  std::size_t total = 0;
  for (const Var& p : parts) {
    detail::require_rank2(p, "concat_rows");
    if (p.cols() != n) throw DimensionError("concat_rows: column count mismatch");
    total += p.rows();
  }
  std::vector<double> data;
  data.reserve(total * n);
  for (const Var& p : parts) data.insert(data.end(), p.value().storage().begin(), p.value().storage().end());
  return parts.front().tape().record(OpKind::kConcatRows, "concat_rows", DenseArray({total, n}, std::move(data)), parts,
                                     [parts](const DenseArray& g, Gradients& grads) {
                                       std::size_t off = 0;
                                       for (const Var& p : parts) {
                                         const std::size_t len = p.value().size();
                                         if (p.requires_grad()) {
                                           DenseArray& gp = grads.accumulator(p);
                                           for (std::size_t i = 0; i < len; ++i) gp[i] += g[off + i];
                                         }
                                         off += len;
                                       }
                                     });
}

inline Var relu(Var a) {
  DenseArray out = a.value();
  for (double& v : out.storage()) v = v > 0.0 ? v : 0.0;
  return a.tape().record(OpKind::kRelu, "relu", std::move(out), {a}, [a](const DenseArray& g, Gradients& grads) {
    if (!a.requires_grad()) return;
    DenseArray& ga = grads.accumulator(a);
    for (std::size_t i = 0; i < g.size(); ++i)
      if (a.value()[i] > 0.0) ga[i] += g[i];
  });
}

inline Var exp(Var a) {
  DenseArray out = a.value();
  for (double& v : out.storage()) v = std::exp(v);
  Tape& tape = a.tape();
  const std::size_t self = tape.size();
  return tape.record(OpKind::kExp, "exp", std::move(out), {a}, [a, self](const DenseArray& g, Gradients& grads) {
    if (!a.requires_grad()) return;
    const DenseArray& y = a.tape().node(self).value;
    DenseArray& ga = grads.accumulator(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i];
  });
}

/// Elementwise product with a constant mask (dropout, 0/1 weights).
inline Var mask_mul(Var a, DenseArray mask) {
  a.value().require_same_shape(mask, "mask_mul");
  DenseArray out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
  return a.tape().record(OpKind::kMaskMul, "mask_mul", std::move(out), {a},
                         [a, mask = std::move(mask)](const DenseArray& g, Gradients& grads) {
                           if (!a.requires_grad()) return;
                           DenseArray& ga = grads.accumulator(a);
                           for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * mask[i];
                         });
}

inline Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value().storage()) s += v;
  return a.tape().record(OpKind::kSum, "sum", DenseArray::scalar(s), {a}, [a](const DenseArray& g, Gradients& grads) {
    if (!a.requires_grad()) return;
    DenseArray& ga = grads.accumulator(a);
    const double gs = g[0];
    for (double& v : ga.storage()) v += gs;
  });
}

inline Var sum_squares(Var a) {
  double s = 0.0;
  for (double v : a.value().storage()) s += v * v;
  return a.tape().record(OpKind::kSumSquares, "sum_squares", DenseArray::scalar(s), {a},
                         [a](const DenseArray& g, Gradients& grads) {
                           if (!a.requires_grad()) return;
                           DenseArray& ga = grads.accumulator(a);
                           const double gs = 2.0 * g[0];
                           for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += gs * a.value()[i];
                         });
}

/// Per-row 3x3 transform: out_n = reshape(A_n, 3x3) * x_n for A (N x 9), x (N x 3).
inline Var rowwise_matvec(Var a, Var x) {
  if (a.value().rank() != 2 || a.cols() != 9 || x.value().rank() != 2 || x.cols() != 3 || a.rows() != x.rows()) {
    throw DimensionError("rowwise_matvec: expected N x 9 and N x 3 operands");
  }
  const std::size_t n = a.rows();
  DenseArray out = DenseArray::zeros(n, 3);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t r = 0; r < 3; ++r) {
      double acc = 0.0;
      for (std::size_t c = 0; c < 3; ++c) acc += a.value()(i, r * 3 + c) * x.value()(i, c);
      out(i, r) = acc;
    }
  return a.tape().record(OpKind::kRowwiseMatVec, "rowwise_matvec", std::move(out), {a, x},
                         [a, x, n](const DenseArray& g, Gradients& grads) {
                           if (a.requires_grad()) {
                             DenseArray& ga = grads.accumulator(a);
                             for (std::size_t i = 0; i < n; ++i)
                               for (std::size_t r = 0; r < 3; ++r)
                                 for (std::size_t c = 0; c < 3; ++c) ga(i, r * 3 + c) += g(i, r) * x.value()(i, c);
                           }
                           if (x.requires_grad()) {
                             DenseArray& gx = grads.accumulator(x);
                             for (std::size_t i = 0; i < n; ++i)
                               for (std::size_t c = 0; c < 3; ++c) {
                                 double acc = 0.0;
                                 for (std::size_t r = 0; r < 3; ++r) acc += a.value()(i, r * 3 + c) * g(i, r);
                                 gx(i, c) += acc;
                               }
                           }
                         });
}

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, double s) { return scale(a, s); }
inline Var operator*(double s, Var a) { return scale(a, s); }

}  // namespace ringnet::ad
