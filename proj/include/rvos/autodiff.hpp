#pragma once

// Reverse-mode automatic differentiation over dense row-major matrices.
//
// A Graph records every operation as a node holding its value and a backward
// closure. Nodes are addressed by index so closures stay valid while the node
// vector grows. Gradients are only propagated through nodes that depend on a
// leaf created with `Graph::leaf`; constant-only subgraphs carry no closures.

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rvos/errors.hpp"
#include "rvos/tensor.hpp"

namespace rvos::ad {

template <typename Scalar>
class Graph;

/// Handle to a node in a Graph. Cheap to copy; valid while the graph lives.
template <typename Scalar>
class Var {
 public:
  Var() = default;
  Var(Graph<Scalar>* g, int id) : graph_(g), id_(id) {}

  const MatrixX<Scalar>& value() const { return graph_->value(id_); }
  const MatrixX<Scalar>& grad() const { return graph_->grad(id_); }
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  bool requires_grad() const { return graph_->requires_grad(id_); }
  Graph<Scalar>* graph() const { return graph_; }
  int id() const { return id_; }
  bool valid() const { return graph_ != nullptr; }

 private:
  Graph<Scalar>* graph_ = nullptr;
  int id_ = -1;
};

template <typename Scalar>
class Graph {
 public:
  using Mat = MatrixX<Scalar>;
  using Var = ad::Var<Scalar>;

  using Backward = std::function<void(Graph&, int)>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Mat value) { return push(std::move(value), false, nullptr); }
  Var leaf(Mat value) { return push(std::move(value), true, nullptr); }

  /// Adds an op node. `inputs` decide whether the node tracks gradients.
  Var op(Mat value, std::initializer_list<Var> inputs, Backward back) {
    bool rg = false;
    for (const Var& v : inputs) rg = rg || v.requires_grad();
    return push(std::move(value), rg, rg ? std::move(back) : nullptr);
  }

  Var op(Mat value, const std::vector<Var>& inputs, Backward back) {
    bool rg = false;
    for (const Var& v : inputs) rg = rg || v.requires_grad();
    return push(std::move(value), rg, rg ? std::move(back) : nullptr);
  }

  const Mat& value(int id) const { return nodes_[id].value; }
  bool requires_grad(int id) const { return nodes_[id].requires_grad; }
  const Mat& grad(int id) const { return nodes_[id].grad; }

  /// Accumulates into an input's gradient; no-op for constants.
  template <typename Expr>
  void accumulate(int id, const Expr& g) {
    Node& n = nodes_[id];
    if (n.requires_grad) n.grad += g;
  }

  /// Seeds d(root)/d(root) = 1 for a 1×1 root and runs the tape backwards.
  void backward(const Var& root) {
    if (root.rows() != 1 || root.cols() != 1)
      throw DomainError("backward: root must be a 1x1 scalar");
    for (Node& n : nodes_)
      if (n.requires_grad) n.grad = Mat::Zero(n.value.rows(), n.value.cols());
    if (!nodes_[root.id()].requires_grad) return;
    nodes_[root.id()].grad(0, 0) = Scalar(1);
    for (int i = root.id(); i >= 0; --i) {
      Node& n = nodes_[i];
      if (n.back) n.back(*this, i);
    }
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Mat value;
    Mat grad;
    bool requires_grad = false;
    Backward back;
  };

  Var push(Mat value, bool rg, Backward back) {
    nodes_.push_back(Node{std::move(value), Mat(), rg, std::move(back)});
    return Var(this, static_cast<int>(nodes_.size()) - 1);
  }

  std::vector<Node> nodes_;
};

namespace detail {

inline void require(bool ok, const char* op, const std::string& msg) {
  if (!ok) throw DomainError(std::string(op) + ": " + msg);
}

template <typename Scalar>
std::string shape(const Var<Scalar>& v) {
  return std::to_string(v.rows()) + "x" + std::to_string(v.cols());
}

/// a * b with every output summed over the inner index in order, whatever the
/// shapes. Eigen picks different kernels by size, which reorders the sums;
/// this keeps a row's result independent of how many rows share the call and
/// of exact-zero terms interleaved in the inner dimension.
template <typename Scalar>
MatrixX<Scalar> ordered_product(const MatrixX<Scalar>& a, const MatrixX<Scalar>& b) {
  MatrixX<Scalar> out = MatrixX<Scalar>::Zero(a.rows(), b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index k = 0; k < a.cols(); ++k) out.row(i) += a(i, k) * b.row(k);
  return out;
}

template <typename Scalar>
Scalar ordered_sum(const MatrixX<Scalar>& m, Eigen::Index row) {
  Scalar s = 0;
  for (Eigen::Index j = 0; j < m.cols(); ++j) s += m(row, j);
  return s;
}

}  // namespace detail

// ---- arithmetic -------------------------------------------------------------

template <typename Scalar>
Var<Scalar> matmul(const Var<Scalar>& a, const Var<Scalar>& b) {
  detail::require(a.cols() == b.rows(), "matmul",
                  detail::shape<Scalar>(a) + " * " + detail::shape<Scalar>(b));
  auto& g = *a.graph();
  const int ia = a.id(), ib = b.id();
  return g.op(detail::ordered_product<Scalar>(a.value(), b.value()), {a, b}, [ia, ib](Graph<Scalar>& g, int self) {
    const auto& d = g.grad(self);
    if (g.requires_grad(ia)) g.accumulate(ia, d * g.value(ib).transpose());
    if (g.requires_grad(ib)) g.accumulate(ib, g.value(ia).transpose() * d);
  });
}

/// a * bᵀ
template <typename Scalar>
Var<Scalar> matmul_bt(const Var<Scalar>& a, const Var<Scalar>& b) {
  detail::require(a.cols() == b.cols(), "matmul_bt",
                  detail::shape<Scalar>(a) + " * (" + detail::shape<Scalar>(b) + ")^T");
  auto& g = *a.graph();
  const int ia = a.id(), ib = b.id();
  const MatrixX<Scalar> bt = b.value().transpose();
  return g.op(detail::ordered_product<Scalar>(a.value(), bt), {a, b}, [ia, ib](Graph<Scalar>& g, int self) {
    const auto& d = g.grad(self);
    if (g.requires_grad(ia)) g.accumulate(ia, d * g.value(ib));
    if (g.requires_grad(ib)) g.accumulate(ib, d.transpose() * g.value(ia));
  });
}

template <typename Scalar>
Var<Scalar> add(const Var<Scalar>& a, const Var<Scalar>& b) {
  detail::require(a.rows() == b.rows() && a.cols() == b.cols(), "add",
                  detail::shape<Scalar>(a) + " + " + detail::shape<Scalar>(b));
  auto& g = *a.graph();
  const int ia = a.id(), ib = b.id();
  return g.op(a.value() + b.value(), {a, b}, [ia, ib](Graph<Scalar>& g, int self) {
    g.accumulate(ia, g.grad(self));
    g.accumulate(ib, g.grad(self));
  });
}

template <typename Scalar>
Var<Scalar> sub(const Var<Scalar>& a, const Var<Scalar>& b) {
  detail::require(a.rows() == b.rows() && a.cols() == b.cols(), "sub",
                  detail::shape<Scalar>(a) + " - " + detail::shape<Scalar>(b));
  auto& g = *a.graph();
  const int ia = a.id(), ib = b.id();
  return g.op(a.value() - b.value(), {a, b}, [ia, ib](Graph<Scalar>& g, int self) {
    g.accumulate(ia, g.grad(self));
    g.accumulate(ib, -g.grad(self));
  });
}

/// a + broadcast(row) where row is 1×cols(a).
template <typename Scalar>
Var<Scalar> add_row(const Var<Scalar>& a, const Var<Scalar>& row) {
  detail::require(row.rows() == 1 && row.cols() == a.cols(), "add_row",
                  detail::shape<Scalar>(a) + " + " + detail::shape<Scalar>(row));
  auto& g = *a.graph();
  const int ia = a.id(), ir = row.id();
  typename Graph<Scalar>::Mat out = a.value().rowwise() + row.value().row(0);
  return g.op(std::move(out), {a, row}, [ia, ir](Graph<Scalar>& g, int self) {
    g.accumulate(ia, g.grad(self));
    if (g.requires_grad(ir)) g.accumulate(ir, g.grad(self).colwise().sum());
  });
}

/// Elementwise product.
template <typename Scalar>
Var<Scalar> mul(const Var<Scalar>& a, const Var<Scalar>& b) {
  detail::require(a.rows() == b.rows() && a.cols() == b.cols(), "mul",
                  detail::shape<Scalar>(a) + " .* " + detail::shape<Scalar>(b));
  auto& g = *a.graph();
  const int ia = a.id(), ib = b.id();
  typename Graph<Scalar>::Mat out = a.value().cwiseProduct(b.value());
  return g.op(std::move(out), {a, b}, [ia, ib](Graph<Scalar>& g, int self) {
    const auto& d = g.grad(self);
    if (g.requires_grad(ia)) g.accumulate(ia, d.cwiseProduct(g.value(ib)));
    if (g.requires_grad(ib)) g.accumulate(ib, d.cwiseProduct(g.value(ia)));
  });
}

/// Elementwise quotient.
template <typename Scalar>
Var<Scalar> div(const Var<Scalar>& a, const Var<Scalar>& b) {
  detail::require(a.rows() == b.rows() && a.cols() == b.cols(), "div",
                  detail::shape<Scalar>(a) + " ./ " + detail::shape<Scalar>(b));
  auto& g = *a.graph();
  const int ia = a.id(), ib = b.id();
  typename Graph<Scalar>::Mat out = a.value().cwiseQuotient(b.value());
  return g.op(std::move(out), {a, b}, [ia, ib](Graph<Scalar>& g, int self) {
    const auto& d = g.grad(self);
    const auto& bv = g.value(ib);
    if (g.requires_grad(ia)) g.accumulate(ia, d.cwiseQuotient(bv));
    if (g.requires_grad(ib))
      g.accumulate(ib, -d.cwiseProduct(g.value(self)).cwiseQuotient(bv));
  });
}

template <typename Scalar>
Var<Scalar> scale(const Var<Scalar>& a, Scalar s) {
  auto& g = *a.graph();
  const int ia = a.id();
  return g.op(a.value() * s, {a}, [ia, s](Graph<Scalar>& g, int self) {
    g.accumulate(ia, g.grad(self) * s);
  });
}

template <typename Scalar>
Var<Scalar> add_scalar(const Var<Scalar>& a, Scalar s) {
  auto& g = *a.graph();
  const int ia = a.id();
  typename Graph<Scalar>::Mat out = a.value().array() + s;
  return g.op(std::move(out), {a}, [ia](Graph<Scalar>& g, int self) {
    g.accumulate(ia, g.grad(self));
  });
}

/// a + c for a constant matrix c (e.g. an additive attention mask).
template <typename Scalar>
Var<Scalar> add_constant(const Var<Scalar>& a, const typename Graph<Scalar>::Mat& c) {
  detail::require(a.rows() == c.rows() && a.cols() == c.cols(), "add_constant", "shape mismatch");
  auto& g = *a.graph();
  const int ia = a.id();
  return g.op(a.value() + c, {a}, [ia](Graph<Scalar>& g, int self) {
    g.accumulate(ia, g.grad(self));
  });
}

template <typename Scalar>
Var<Scalar> transpose(const Var<Scalar>& a) {
  auto& g = *a.graph();
  const int ia = a.id();
  typename Graph<Scalar>::Mat out = a.value().transpose();
  return g.op(std::move(out), {a}, [ia](Graph<Scalar>& g, int self) {
    g.accumulate(ia, g.grad(self).transpose());
  });
}

// ---- nonlinearities ---------------------------------------------------------

template <typename Scalar>
Var<Scalar> sigmoid(const Var<Scalar>& a) {
  auto& g = *a.graph();
  const int ia = a.id();
  typename Graph<Scalar>::Mat out =
      a.value().unaryExpr([](Scalar x) { return Scalar(1) / (Scalar(1) + std::exp(-x)); });
  return g.op(std::move(out), {a}, [ia](Graph<Scalar>& g, int self) {
    const auto& s = g.value(self);
    g.accumulate(ia, g.grad(self).cwiseProduct(s.cwiseProduct((Scalar(1) - s.array()).matrix())));
  });
}

/// x * sigmoid(x); smooth, so finite-difference checks stay clean.
template <typename Scalar>
Var<Scalar> silu(const Var<Scalar>& a) {
  auto& g = *a.graph();
  const int ia = a.id();
  typename Graph<Scalar>::Mat out =
      a.value().unaryExpr([](Scalar x) { return x / (Scalar(1) + std::exp(-x)); });
  return g.op(std::move(out), {a}, [ia](Graph<Scalar>& g, int self) {
    const auto& x = g.value(ia);
    typename Graph<Scalar>::Mat dx = x.unaryExpr([](Scalar v) {
      const Scalar s = Scalar(1) / (Scalar(1) + std::exp(-v));
      return s * (Scalar(1) + v * (Scalar(1) - s));
    });
    g.accumulate(ia, g.grad(self).cwiseProduct(dx));
  });
}

/// Row-wise softmax.
template <typename Scalar>
Var<Scalar> softmax_rows(const Var<Scalar>& a) {
  auto& g = *a.graph();
  const int ia = a.id();
  typename Graph<Scalar>::Mat out(a.rows(), a.cols());
  const auto& x = a.value();
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const Scalar m = x.row(r).maxCoeff();
    // Scalar exp: the packet version rounds differently from the tail.
    for (Eigen::Index j = 0; j < x.cols(); ++j) out(r, j) = std::exp(x(r, j) - m);
    out.row(r) /= detail::ordered_sum<Scalar>(out, r);
  }
  return g.op(std::move(out), {a}, [ia](Graph<Scalar>& g, int self) {
    const auto& s = g.value(self);
    const auto& d = g.grad(self);
    typename Graph<Scalar>::Mat dx(s.rows(), s.cols());
    for (Eigen::Index r = 0; r < s.rows(); ++r) {
      const Scalar dot = d.row(r).dot(s.row(r));
      dx.row(r) = s.row(r).cwiseProduct((d.row(r).array() - dot).matrix());
    }
    g.accumulate(ia, dx);
  });
}

/// Row-wise layer normalization with affine gamma/beta (both 1×cols).
template <typename Scalar>
Var<Scalar> layer_norm(const Var<Scalar>& x, const Var<Scalar>& gamma, const Var<Scalar>& beta,
                       Scalar eps = Scalar(1e-5)) {
  detail::require(gamma.rows() == 1 && gamma.cols() == x.cols() && beta.rows() == 1 &&
                      beta.cols() == x.cols(),
                  "layer_norm", "affine parameters must be 1x" + std::to_string(x.cols()));
  using Mat = typename Graph<Scalar>::Mat;
  auto& g = *x.graph();
  const Eigen::Index n = x.rows(), c = x.cols();
  Mat xhat(n, c);
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> inv_std(n);
  const auto& xv = x.value();
  for (Eigen::Index r = 0; r < n; ++r) {
    const Scalar mu = xv.row(r).mean();
    const auto centered = (xv.row(r).array() - mu).matrix();
    const Scalar var = centered.squaredNorm() / Scalar(c);
    inv_std(r) = Scalar(1) / std::sqrt(var + eps);
    xhat.row(r) = centered * inv_std(r);
  }
  Mat out = (xhat.array().rowwise() * gamma.value().row(0).array()).matrix();
  out.rowwise() += beta.value().row(0);
  const int ix = x.id(), ig = gamma.id(), ib = beta.id();
  return g.op(std::move(out), {x, gamma, beta},
              [ix, ig, ib, xhat = std::move(xhat), inv_std = std::move(inv_std), c](
                  Graph<Scalar>& g, int self) {
                const auto& d = g.grad(self);
                if (g.requires_grad(ig)) g.accumulate(ig, d.cwiseProduct(xhat).colwise().sum());
                if (g.requires_grad(ib)) g.accumulate(ib, d.colwise().sum());
                if (!g.requires_grad(ix)) return;
                Mat dxhat = (d.array().rowwise() * g.value(ig).row(0).array()).matrix();
                Mat dx(d.rows(), d.cols());
                for (Eigen::Index r = 0; r < d.rows(); ++r) {
                  const Scalar m1 = dxhat.row(r).sum() / Scalar(c);
                  const Scalar m2 = dxhat.row(r).dot(xhat.row(r)) / Scalar(c);
                  dx.row(r) = inv_std(r) *
                              ((dxhat.row(r).array() - m1) - xhat.row(r).array() * m2).matrix();
                }
                g.accumulate(ix, dx);
              });
}

// ---- reductions -------------------------------------------------------------

template <typename Scalar>
Var<Scalar> sum(const Var<Scalar>& a) {
  auto& g = *a.graph();
  const int ia = a.id();
  typename Graph<Scalar>::Mat out(1, 1);
  out(0, 0) = a.value().sum();
  return g.op(std::move(out), {a}, [ia](Graph<Scalar>& g, int self) {
    const auto& v = g.value(ia);
    g.accumulate(ia, Graph<Scalar>::Mat::Constant(v.rows(), v.cols(), g.grad(self)(0, 0)));
  });
}

template <typename Scalar>
Var<Scalar> mean(const Var<Scalar>& a) {
  return scale(sum(a), Scalar(1) / Scalar(a.rows() * a.cols()));
}

/// Averages each consecutive group of `group` rows: (G*group)×c → G×c.
template <typename Scalar>
Var<Scalar> group_mean_rows(const Var<Scalar>& a, Eigen::Index group) {
  detail::require(group > 0 && a.rows() % group == 0, "group_mean_rows",
                  std::to_string(a.rows()) + " rows not divisible by " + std::to_string(group));
  using Mat = typename Graph<Scalar>::Mat;
  auto& g = *a.graph();
  const Eigen::Index groups = a.rows() / group;
  Mat out(groups, a.cols());
  for (Eigen::Index i = 0; i < groups; ++i)
    out.row(i) = a.value().middleRows(i * group, group).colwise().sum() / Scalar(group);
  const int ia = a.id();
  return g.op(std::move(out), {a}, [ia, group, groups](Graph<Scalar>& g, int self) {
    const auto& d = g.grad(self);
    Mat dx(groups * group, d.cols());
    for (Eigen::Index i = 0; i < groups; ++i)
      dx.middleRows(i * group, group).rowwise() = d.row(i) / Scalar(group);
    g.accumulate(ia, dx);
  });
}

/// Mean binary cross-entropy between logits and constant {0,1} targets.
template <typename Scalar>
Var<Scalar> bce_with_logits(const Var<Scalar>& logits, const typename Graph<Scalar>::Mat& target) {
  detail::require(logits.rows() == target.rows() && logits.cols() == target.cols(),
                  "bce_with_logits", "target shape mismatch");
  auto& g = *logits.graph();
  const auto& z = logits.value();
  const Scalar n = Scalar(z.size());
  Scalar total = 0;
  for (Eigen::Index i = 0; i < z.rows(); ++i)
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
      const Scalar v = z(i, j);
      total += std::max(v, Scalar(0)) - v * target(i, j) + std::log1p(std::exp(-std::abs(v)));
    }
  typename Graph<Scalar>::Mat out(1, 1);
  out(0, 0) = total / n;
  const int il = logits.id();
  return g.op(std::move(out), {logits}, [il, target, n](Graph<Scalar>& g, int self) {
    const auto& z = g.value(il);
    typename Graph<Scalar>::Mat p =
        z.unaryExpr([](Scalar x) { return Scalar(1) / (Scalar(1) + std::exp(-x)); });
    g.accumulate(il, (p - target) * (g.grad(self)(0, 0) / n));
  });
}

// ---- structural -------------------------------------------------------------

template <typename Scalar>
Var<Scalar> rows(const Var<Scalar>& a, Eigen::Index start, Eigen::Index count) {
  detail::require(start >= 0 && count >= 0 && start + count <= a.rows(), "rows", "range out of bounds");
  auto& g = *a.graph();
  const int ia = a.id();
  typename Graph<Scalar>::Mat out = a.value().middleRows(start, count);
  return g.op(std::move(out), {a}, [ia, start, count](Graph<Scalar>& g, int self) {
    if (!g.requires_grad(ia)) return;
    const auto& v = g.value(ia);
    typename Graph<Scalar>::Mat dx = Graph<Scalar>::Mat::Zero(v.rows(), v.cols());
    dx.middleRows(start, count) = g.grad(self);
    g.accumulate(ia, dx);
  });
}

template <typename Scalar>
Var<Scalar> cols(const Var<Scalar>& a, Eigen::Index start, Eigen::Index count) {
  detail::require(start >= 0 && count >= 0 && start + count <= a.cols(), "cols", "range out of bounds");
  auto& g = *a.graph();
  const int ia = a.id();
  typename Graph<Scalar>::Mat out = a.value().middleCols(start, count);
  return g.op(std::move(out), {a}, [ia, start, count](Graph<Scalar>& g, int self) {
    if (!g.requires_grad(ia)) return;
    const auto& v = g.value(ia);
    typename Graph<Scalar>::Mat dx = Graph<Scalar>::Mat::Zero(v.rows(), v.cols());
    dx.middleCols(start, count) = g.grad(self);
    g.accumulate(ia, dx);
  });
}

/// Vertical concatenation.
template <typename Scalar>
Var<Scalar> vcat(const std::vector<Var<Scalar>>& parts) {
  detail::require(!parts.empty(), "vcat", "no inputs");
  Eigen::Index total = 0;
  const Eigen::Index c = parts.front().cols();
  for (const auto& p : parts) {
    detail::require(p.cols() == c, "vcat", "column mismatch");
    total += p.rows();
  }
  typename Graph<Scalar>::Mat out(total, c);
  std::vector<std::pair<int, Eigen::Index>> spans;
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    out.middleRows(at, p.rows()) = p.value();
    spans.emplace_back(p.id(), at);
    at += p.rows();
  }
  auto& g = *parts.front().graph();
  return g.op(std::move(out), parts, [spans = std::move(spans)](Graph<Scalar>& g, int self) {
    for (const auto& [id, start] : spans)
      if (g.requires_grad(id)) g.accumulate(id, g.grad(self).middleRows(start, g.value(id).rows()));
  });
}

/// Horizontal concatenation.
template <typename Scalar>
Var<Scalar> hcat(const std::vector<Var<Scalar>>& parts) {
  detail::require(!parts.empty(), "hcat", "no inputs");
  Eigen::Index total = 0;
  const Eigen::Index r = parts.front().rows();
  for (const auto& p : parts) {
    detail::require(p.rows() == r, "hcat", "row mismatch");
    total += p.cols();
  }
  typename Graph<Scalar>::Mat out(r, total);
  std::vector<std::pair<int, Eigen::Index>> spans;
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    out.middleCols(at, p.cols()) = p.value();
    spans.emplace_back(p.id(), at);
    at += p.cols();
  }
  auto& g = *parts.front().graph();
  return g.op(std::move(out), parts, [spans = std::move(spans)](Graph<Scalar>& g, int self) {
    for (const auto& [id, start] : spans)
      if (g.requires_grad(id)) g.accumulate(id, g.grad(self).middleCols(start, g.value(id).cols()));
  });
}

/// Row gather into `blocks` column blocks: output row r, block b holds input row
/// index[r*blocks + b], or zeros when that index is -1. With blocks = 1 this is a
/// plain row gather; with blocks = k*k it is the im2col step of a patch convolution.
template <typename Scalar>
Var<Scalar> gather_rows(const Var<Scalar>& a, std::vector<int> index, Eigen::Index blocks = 1) {
  detail::require(blocks > 0 && static_cast<Eigen::Index>(index.size()) % blocks == 0,
                  "gather_rows", "index size not divisible by block count");
  const Eigen::Index c = a.cols();
  const Eigen::Index out_rows = static_cast<Eigen::Index>(index.size()) / blocks;
  typename Graph<Scalar>::Mat out = Graph<Scalar>::Mat::Zero(out_rows, c * blocks);
  const auto& v = a.value();
  for (Eigen::Index r = 0; r < out_rows; ++r)
    for (Eigen::Index b = 0; b < blocks; ++b) {
      const int src = index[r * blocks + b];
      detail::require(src >= -1 && src < v.rows(), "gather_rows", "index out of range");
      if (src >= 0) out.block(r, b * c, 1, c) = v.row(src);
    }
  auto& g = *a.graph();
  const int ia = a.id();
  return g.op(std::move(out), {a},
              [ia, index = std::move(index), blocks, c, out_rows](Graph<Scalar>& g, int self) {
                if (!g.requires_grad(ia)) return;
                const auto& d = g.grad(self);
                typename Graph<Scalar>::Mat dx =
                    Graph<Scalar>::Mat::Zero(g.value(ia).rows(), c);
                for (Eigen::Index r = 0; r < out_rows; ++r)
                  for (Eigen::Index b = 0; b < blocks; ++b) {
                    const int src = index[r * blocks + b];
                    if (src >= 0) dx.row(src) += d.block(r, b * c, 1, c);
                  }
                g.accumulate(ia, dx);
              });
}

/// Stacks `times` copies of `a` vertically.
template <typename Scalar>
Var<Scalar> repeat_rows(const Var<Scalar>& a, Eigen::Index times) {
  std::vector<int> index;
  index.reserve(static_cast<std::size_t>(a.rows() * times));
  for (Eigen::Index t = 0; t < times; ++t)
    for (Eigen::Index r = 0; r < a.rows(); ++r) index.push_back(static_cast<int>(r));
  return gather_rows(a, std::move(index));
}

template <typename Scalar>
Var<Scalar> operator+(const Var<Scalar>& a, const Var<Scalar>& b) {
  return add(a, b);
}

template <typename Scalar>
Var<Scalar> operator-(const Var<Scalar>& a, const Var<Scalar>& b) {
  return sub(a, b);
}

}  // namespace rvos::ad
