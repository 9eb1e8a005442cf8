#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "psep/tensor.hpp"

/// Reverse-mode differentiation over dense tensors.
///
/// A Graph is an append-only tape: every op records its output value and a
/// closure that pushes the output gradient back to its parents. Creation
/// order is a topological order, so backward() is a single reverse sweep.
/// Graphs are cheap to build and are meant to be discarded after one
/// evaluation.
namespace psep::ad {

struct Var {
  std::size_t id = static_cast<std::size_t>(-1);
};

enum class ConvMode {
  Causal,    // output t reads inputs t, t-d, ..., t-(k-1)d
  Centered,  // taps symmetric around t
};

class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  /// Leaf nodes. Non-finite values are rejected.
  Var input(Tensor value, bool requires_grad = true);
  Var constant(Tensor value);

  const Tensor& value(Var v) const;
  /// Gradient of the last backward() output w.r.t. v; zeros if v did not influence it.
  Tensor grad(Var v) const;
  bool requires_grad(Var v) const;
  std::size_t size() const { return nodes_.size(); }

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var affine(Var a, double scale, double shift);  // scale * a + shift
  Var exp(Var a);
  Var log(Var a);
  Var tanh(Var a);
  Var sigmoid(Var a);
  Var sum(Var a);          // -> scalar
  Var sum_squares(Var a);  // -> scalar, sum of a^2

  /// x (C, T) with per-channel vector v of shape (C).
  Var add_channel(Var x, Var v);
  Var mul_channel(Var x, Var v);

  /// Channel slicing. even/odd pick alternating channels; interleave is the inverse.
  Var even_channels(Var x);
  Var odd_channels(Var x);
  Var interleave_channels(Var even, Var odd);
  Var channel_range(Var x, std::size_t begin, std::size_t count);

  /// (C, T) -> (2C, T/2): out[2c + r][t] = in[c][2t + r]. Requires even T.
  Var squeeze(Var x);
  /// Inverse of squeeze.
  Var unsqueeze(Var x);

  /// 1-D convolution with "same" output length. w is (Cout, Cin, K), bias (Cout).
  Var conv1d(Var x, Var w, std::optional<Var> bias, std::size_t dilation, ConvMode mode);

  /// Sum over time of -log softmax(logits[:, t])[targets[t]]. logits is (V, T).
  Var softmax_cross_entropy(Var logits, std::span<const int> targets);

  /// Reverse sweep from a scalar node. Clears any previous gradients.
  void backward(Var output);

 private:
  using BackwardFn = std::function<void(Graph&, std::size_t self)>;

  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    BackwardFn backward;
  };

  Var push(Tensor value, bool requires_grad, BackwardFn backward);
  Var unary(Var a, Tensor value, std::function<void(const Tensor& out, const Tensor& in, const Tensor& g, Tensor& gin)> fn);
  Tensor& grad_buffer(std::size_t id);
  const Node& node(Var v) const;

  std::vector<Node> nodes_;
};

/// Plain forward convolution, shared with the graph op. Exposed for tests/benchmarks.
void conv1d_forward(const Tensor& x, const Tensor& w, const Tensor* bias, std::size_t dilation, ConvMode mode,
                    Tensor& out);

/// Worst-case relative error between an analytic gradient and central
/// differences of f at `point` with step `epsilon`. The denominator per
/// coordinate is max(|analytic|, |numeric|) + 1e-6 * max|analytic| + 1e-12.
double finite_diff_check(const std::function<double(const Tensor&)>& f, const Tensor& analytic_grad,
                         const Tensor& point, double epsilon);

/// Convenience form: `build` maps an input var to a scalar var inside a fresh graph.
double finite_diff_check(const std::function<Var(Graph&, Var)>& build, const Tensor& point, double epsilon);

}  // namespace psep::ad
