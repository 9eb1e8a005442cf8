#include "psep/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Core>

#include "psep/errors.hpp"
#include "vmath.hpp"

namespace psep::ad {

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
  }
}

void require_rank2(const Tensor& a, const char* op) {
  if (a.rank() != 2) throw ShapeError(std::string(op) + ": expected (channels, time), got " + shape_string(a.shape()));
}

void require_channel_vector(const Tensor& x, const Tensor& v, const char* op) {
  require_rank2(x, op);
  if (v.size() != x.channels()) {
    throw ShapeError(std::string(op) + ": channel vector of size " + std::to_string(v.size()) + " for " +
                     std::to_string(x.channels()) + " channels");
  }
}

std::ptrdiff_t conv_left_pad(std::size_t kernel, std::size_t dilation, ConvMode mode) {
  const auto span = static_cast<std::ptrdiff_t>((kernel - 1) * dilation);
  return mode == ConvMode::Causal ? span : span / 2;
}

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMatrixMap = Eigen::Map<RowMatrix>;
using ConstRowMatrixMap = Eigen::Map<const RowMatrix>;

// Tap k of a (Cout, Cin, K) weight as a contiguous Cout x Cin matrix.
RowMatrix weight_tap(const Tensor& w, std::size_t k) {
  const std::size_t cout = w.dim(0), cin = w.dim(1), kernel = w.dim(2);
  RowMatrix m(static_cast<Eigen::Index>(cout), static_cast<Eigen::Index>(cin));
  for (std::size_t co = 0; co < cout; ++co) {
    for (std::size_t ci = 0; ci < cin; ++ci) {
      m(static_cast<Eigen::Index>(co), static_cast<Eigen::Index>(ci)) = w[(co * cin + ci) * kernel + k];
    }
  }
  return m;
}

}  // namespace

void conv1d_forward(const Tensor& x, const Tensor& w, const Tensor* bias, std::size_t dilation, ConvMode mode,
                    Tensor& out) {
  require_rank2(x, "conv1d");
  if (w.rank() != 3 || w.dim(1) != x.channels()) {
    throw ShapeError("conv1d: weight " + shape_string(w.shape()) + " incompatible with input " +
                     shape_string(x.shape()));
  }
  if (dilation == 0) throw ShapeError("conv1d: dilation must be positive");
  const std::size_t cout = w.dim(0), cin = w.dim(1), kernel = w.dim(2), len = x.length();
  if (bias && bias->size() != cout) throw ShapeError("conv1d: bias size mismatch");
  out = Tensor({cout, len});
  const std::ptrdiff_t left = conv_left_pad(kernel, dilation, mode);
  const auto T = static_cast<std::ptrdiff_t>(len);
  RowMatrixMap y(out.data(), static_cast<Eigen::Index>(cout), T);
  if (bias) {
    for (std::size_t co = 0; co < cout; ++co) y.row(static_cast<Eigen::Index>(co)).setConstant((*bias)[co]);
  }
  const ConstRowMatrixMap xm(x.data(), static_cast<Eigen::Index>(cin), T);
  for (std::size_t k = 0; k < kernel; ++k) {
    const std::ptrdiff_t off = static_cast<std::ptrdiff_t>(k * dilation) - left;
    const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, -off);
    const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(T, T - off);
    if (hi <= lo) continue;
    const RowMatrix wk = weight_tap(w, k);
    y.middleCols(lo, hi - lo).noalias() += wk * xm.middleCols(lo + off, hi - lo);
  }
}

const Graph::Node& Graph::node(Var v) const {
  if (v.id >= nodes_.size()) throw Error("autodiff: invalid variable handle");
  return nodes_[v.id];
}

Var Graph::push(Tensor value, bool requires_grad, BackwardFn backward) {
  nodes_.push_back(Node{std::move(value), Tensor{}, requires_grad, requires_grad ? std::move(backward) : BackwardFn{}});
  return Var{nodes_.size() - 1};
}

Tensor& Graph::grad_buffer(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.shape() != n.value.shape()) n.grad = Tensor(n.value.shape());
  return n.grad;
}

Var Graph::input(Tensor value, bool requires_grad) {
  if (!value.all_finite()) throw NumericalError("autodiff: non-finite value at graph input");
  return push(std::move(value), requires_grad, [](Graph&, std::size_t) {});
}

Var Graph::constant(Tensor value) { return input(std::move(value), false); }

const Tensor& Graph::value(Var v) const { return node(v).value; }

bool Graph::requires_grad(Var v) const { return node(v).requires_grad; }

Tensor Graph::grad(Var v) const {
  const Node& n = node(v);
  if (n.grad.shape() == n.value.shape()) return n.grad;
  return Tensor(n.value.shape());
}

Var Graph::unary(Var a, Tensor value,
                 std::function<void(const Tensor& out, const Tensor& in, const Tensor& g, Tensor& gin)> fn) {
  const bool rg = requires_grad(a);
  const std::size_t ia = a.id;
  return push(std::move(value), rg, [ia, fn = std::move(fn)](Graph& g, std::size_t self) {
    Tensor& gin = g.grad_buffer(ia);
    fn(g.nodes_[self].value, g.nodes_[ia].value, g.nodes_[self].grad, gin);
  });
}

Var Graph::add(Var a, Var b) {
  const Tensor& va = value(a);
  const Tensor& vb = value(b);
  require_same_shape(va, vb, "add");
  Tensor out = va;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += vb[i];
  const std::size_t ia = a.id, ib = b.id;
  return push(std::move(out), requires_grad(a) || requires_grad(b), [ia, ib](Graph& g, std::size_t self) {
    const Tensor& go = g.nodes_[self].grad;
    for (std::size_t p : {ia, ib}) {
      if (!g.nodes_[p].requires_grad) continue;
      Tensor& gp = g.grad_buffer(p);
      for (std::size_t i = 0; i < go.size(); ++i) gp[i] += go[i];
    }
  });
}

Var Graph::sub(Var a, Var b) {
  const Tensor& va = value(a);
  const Tensor& vb = value(b);
  require_same_shape(va, vb, "sub");
  Tensor out = va;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= vb[i];
  const std::size_t ia = a.id, ib = b.id;
  return push(std::move(out), requires_grad(a) || requires_grad(b), [ia, ib](Graph& g, std::size_t self) {
    const Tensor& go = g.nodes_[self].grad;
    if (g.nodes_[ia].requires_grad) {
      Tensor& ga = g.grad_buffer(ia);
      for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i];
    }
    if (g.nodes_[ib].requires_grad) {
      Tensor& gb = g.grad_buffer(ib);
      for (std::size_t i = 0; i < go.size(); ++i) gb[i] -= go[i];
    }
  });
}

Var Graph::mul(Var a, Var b) {
  const Tensor& va = value(a);
  const Tensor& vb = value(b);
  require_same_shape(va, vb, "mul");
  Tensor out = va;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= vb[i];
  const std::size_t ia = a.id, ib = b.id;
  return push(std::move(out), requires_grad(a) || requires_grad(b), [ia, ib](Graph& g, std::size_t self) {
    const Tensor& go = g.nodes_[self].grad;
    if (g.nodes_[ia].requires_grad) {
      Tensor& ga = g.grad_buffer(ia);
      const Tensor& vb = g.nodes_[ib].value;
      for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * vb[i];
    }
    if (g.nodes_[ib].requires_grad) {
      Tensor& gb = g.grad_buffer(ib);
      const Tensor& va = g.nodes_[ia].value;
      for (std::size_t i = 0; i < go.size(); ++i) gb[i] += go[i] * va[i];
    }
  });
}

Var Graph::affine(Var a, double scale, double shift) {
  Tensor out = value(a);
  for (double& v : out.values()) v = scale * v + shift;
  return unary(a, std::move(out), [scale](const Tensor&, const Tensor&, const Tensor& g, Tensor& gin) {
    for (std::size_t i = 0; i < g.size(); ++i) gin[i] += scale * g[i];
  });
}

Var Graph::exp(Var a) {
  const Tensor& in = value(a);
  Tensor out(in.shape());
  vmath::exp(in.data(), out.data(), in.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!std::isfinite(out[i])) throw DomainError("exp overflow at input " + std::to_string(in[i]));
  }
  return unary(a, std::move(out), [](const Tensor& out, const Tensor&, const Tensor& g, Tensor& gin) {
    for (std::size_t i = 0; i < g.size(); ++i) gin[i] += g[i] * out[i];
  });
}

Var Graph::log(Var a) {
  Tensor out = value(a);
  for (double& v : out.values()) {
    if (!(v > 0.0)) throw DomainError("log of non-positive value " + std::to_string(v));
    v = std::log(v);
  }
  return unary(a, std::move(out), [](const Tensor&, const Tensor& in, const Tensor& g, Tensor& gin) {
    for (std::size_t i = 0; i < g.size(); ++i) gin[i] += g[i] / in[i];
  });
}

Var Graph::tanh(Var a) {
  const Tensor& in = value(a);
  Tensor out(in.shape());
  vmath::tanh(in.data(), out.data(), in.size());
  return unary(a, std::move(out), [](const Tensor& out, const Tensor&, const Tensor& g, Tensor& gin) {
    for (std::size_t i = 0; i < g.size(); ++i) gin[i] += g[i] * (1.0 - out[i] * out[i]);
  });
}

Var Graph::sigmoid(Var a) {
  const Tensor& in = value(a);
  Tensor out(in.shape());
  vmath::sigmoid(in.data(), out.data(), in.size());
  return unary(a, std::move(out), [](const Tensor& out, const Tensor&, const Tensor& g, Tensor& gin) {
    for (std::size_t i = 0; i < g.size(); ++i) gin[i] += g[i] * out[i] * (1.0 - out[i]);
  });
}

Var Graph::sum(Var a) {
  double total = 0.0;
  const Tensor& va = value(a);
  const std::size_t n = va.size();
  #pragma omp simd reduction(+ : total)
  for (std::size_t i = 0; i < n; ++i) total += va[i];
  return unary(a, Tensor::scalar(total), [](const Tensor&, const Tensor&, const Tensor& g, Tensor& gin) {
    const double go = g[0];
    for (double& v : gin.values()) v += go;
  });
}

Var Graph::sum_squares(Var a) {
  double total = 0.0;
  const Tensor& va = value(a);
  const std::size_t n = va.size();
  #pragma omp simd reduction(+ : total)
  for (std::size_t i = 0; i < n; ++i) total += va[i] * va[i];
  return unary(a, Tensor::scalar(total), [](const Tensor&, const Tensor& in, const Tensor& g, Tensor& gin) {
    const double go = 2.0 * g[0];
    for (std::size_t i = 0; i < in.size(); ++i) gin[i] += go * in[i];
  });
}

Var Graph::add_channel(Var x, Var v) {
  const Tensor& vx = value(x);
  const Tensor& vv = value(v);
  require_channel_vector(vx, vv, "add_channel");
  Tensor out = vx;
  const std::size_t len = vx.length();
  for (std::size_t c = 0; c < vx.channels(); ++c) {
    double* r = out.row(c);
    for (std::size_t t = 0; t < len; ++t) r[t] += vv[c];
  }
  const std::size_t ix = x.id, iv = v.id;
  return push(std::move(out), requires_grad(x) || requires_grad(v), [ix, iv](Graph& g, std::size_t self) {
    const Tensor& go = g.nodes_[self].grad;
    if (g.nodes_[ix].requires_grad) {
      Tensor& gx = g.grad_buffer(ix);
      for (std::size_t i = 0; i < go.size(); ++i) gx[i] += go[i];
    }
    if (g.nodes_[iv].requires_grad) {
      Tensor& gv = g.grad_buffer(iv);
      for (std::size_t c = 0; c < go.channels(); ++c) {
        const double* r = go.row(c);
        double acc = 0.0;
        #pragma omp simd reduction(+ : acc)
        for (std::size_t t = 0; t < go.length(); ++t) acc += r[t];
        gv[c] += acc;
      }
    }
  });
}

Var Graph::mul_channel(Var x, Var v) {
  const Tensor& vx = value(x);
  const Tensor& vv = value(v);
  require_channel_vector(vx, vv, "mul_channel");
  Tensor out = vx;
  const std::size_t len = vx.length();
  for (std::size_t c = 0; c < vx.channels(); ++c) {
    double* r = out.row(c);
    for (std::size_t t = 0; t < len; ++t) r[t] *= vv[c];
  }
  const std::size_t ix = x.id, iv = v.id;
  return push(std::move(out), requires_grad(x) || requires_grad(v), [ix, iv](Graph& g, std::size_t self) {
    const Tensor& go = g.nodes_[self].grad;
    const Tensor& vx = g.nodes_[ix].value;
    const Tensor& vv = g.nodes_[iv].value;
    const std::size_t len = go.length();
    if (g.nodes_[ix].requires_grad) {
      Tensor& gx = g.grad_buffer(ix);
      for (std::size_t c = 0; c < go.channels(); ++c) {
        const double* r = go.row(c);
        double* gr = gx.row(c);
        for (std::size_t t = 0; t < len; ++t) gr[t] += r[t] * vv[c];
      }
    }
    if (g.nodes_[iv].requires_grad) {
      Tensor& gv = g.grad_buffer(iv);
      for (std::size_t c = 0; c < go.channels(); ++c) {
        const double* r = go.row(c);
        const double* xr = vx.row(c);
        double acc = 0.0;
        #pragma omp simd reduction(+ : acc)
        for (std::size_t t = 0; t < len; ++t) acc += r[t] * xr[t];
        gv[c] += acc;
      }
    }
  });
}

namespace {

// Copies channels first, first+stride, ... of x (count of them).
Tensor gather_channels(const Tensor& x, std::size_t first, std::size_t stride, std::size_t count) {
  Tensor out({count, x.length()});
  for (std::size_t i = 0; i < count; ++i) std::copy_n(x.row(first + i * stride), x.length(), out.row(i));
  return out;
}

}  // namespace

Var Graph::channel_range(Var x, std::size_t begin, std::size_t count) {
  const Tensor& vx = value(x);
  require_rank2(vx, "channel_range");
  if (begin + count > vx.channels() || count == 0) throw ShapeError("channel_range: out of bounds");
  const std::size_t ix = x.id;
  return push(gather_channels(vx, begin, 1, count), requires_grad(x), [ix, begin](Graph& g, std::size_t self) {
    const Tensor& go = g.nodes_[self].grad;
    Tensor& gx = g.grad_buffer(ix);
    for (std::size_t c = 0; c < go.channels(); ++c) {
      const double* r = go.row(c);
      double* gr = gx.row(begin + c);
      for (std::size_t t = 0; t < go.length(); ++t) gr[t] += r[t];
    }
  });
}

Var Graph::even_channels(Var x) {
  const Tensor& vx = value(x);
  require_rank2(vx, "even_channels");
  if (vx.channels() % 2 != 0) throw ShapeError("even_channels: odd channel count");
  const std::size_t ix = x.id;
  return push(gather_channels(vx, 0, 2, vx.channels() / 2), requires_grad(x), [ix](Graph& g, std::size_t self) {
    const Tensor& go = g.nodes_[self].grad;
    Tensor& gx = g.grad_buffer(ix);
    for (std::size_t c = 0; c < go.channels(); ++c) {
      const double* r = go.row(c);
      double* gr = gx.row(2 * c);
      for (std::size_t t = 0; t < go.length(); ++t) gr[t] += r[t];
    }
  });
}

Var Graph::odd_channels(Var x) {
  const Tensor& vx = value(x);
  require_rank2(vx, "odd_channels");
  if (vx.channels() % 2 != 0) throw ShapeError("odd_channels: odd channel count");
  const std::size_t ix = x.id;
  return push(gather_channels(vx, 1, 2, vx.channels() / 2), requires_grad(x), [ix](Graph& g, std::size_t self) {
    const Tensor& go = g.nodes_[self].grad;
    Tensor& gx = g.grad_buffer(ix);
    for (std::size_t c = 0; c < go.channels(); ++c) {
      const double* r = go.row(c);
      double* gr = gx.row(2 * c + 1);
      for (std::size_t t = 0; t < go.length(); ++t) gr[t] += r[t];
    }
  });
}

Var Graph::interleave_channels(Var even, Var odd) {
  const Tensor& ve = value(even);
  const Tensor& vo = value(odd);
  require_rank2(ve, "interleave_channels");
  require_same_shape(ve, vo, "interleave_channels");
  const std::size_t half = ve.channels(), len = ve.length();
  Tensor out({2 * half, len});
  for (std::size_t c = 0; c < half; ++c) {
    std::copy_n(ve.row(c), len, out.row(2 * c));
    std::copy_n(vo.row(c), len, out.row(2 * c + 1));
  }
  const std::size_t ie = even.id, io = odd.id;
  return push(std::move(out), requires_grad(even) || requires_grad(odd), [ie, io](Graph& g, std::size_t self) {
    const Tensor& go = g.nodes_[self].grad;
    const std::size_t len = go.length();
    for (std::size_t parity = 0; parity < 2; ++parity) {
      const std::size_t p = parity == 0 ? ie : io;
      if (!g.nodes_[p].requires_grad) continue;
      Tensor& gp = g.grad_buffer(p);
      for (std::size_t c = 0; c < gp.channels(); ++c) {
        const double* r = go.row(2 * c + parity);
        double* gr = gp.row(c);
        for (std::size_t t = 0; t < len; ++t) gr[t] += r[t];
      }
    }
  });
}

Var Graph::squeeze(Var x) {
  const Tensor& vx = value(x);
  require_rank2(vx, "squeeze");
  if (vx.length() % 2 != 0) throw ShapeError("squeeze: odd time length " + std::to_string(vx.length()));
  const std::size_t ch = vx.channels(), half = vx.length() / 2;
  Tensor out({2 * ch, half});
  for (std::size_t c = 0; c < ch; ++c) {
    const double* r = vx.row(c);
    double* e = out.row(2 * c);
    double* o = out.row(2 * c + 1);
    for (std::size_t t = 0; t < half; ++t) {
      e[t] = r[2 * t];
      o[t] = r[2 * t + 1];
    }
  }
  const std::size_t ix = x.id;
  return push(std::move(out), requires_grad(x), [ix](Graph& g, std::size_t self) {
    const Tensor& go = g.nodes_[self].grad;
    Tensor& gx = g.grad_buffer(ix);
    const std::size_t half = go.length();
    for (std::size_t c = 0; c < gx.channels(); ++c) {
      double* r = gx.row(c);
      const double* e = go.row(2 * c);
      const double* o = go.row(2 * c + 1);
      for (std::size_t t = 0; t < half; ++t) {
        r[2 * t] += e[t];
        r[2 * t + 1] += o[t];
      }
    }
  });
}

Var Graph::unsqueeze(Var x) {
  const Tensor& vx = value(x);
  require_rank2(vx, "unsqueeze");
  if (vx.channels() % 2 != 0) throw ShapeError("unsqueeze: odd channel count");
  const std::size_t ch = vx.channels() / 2, half = vx.length();
  Tensor out({ch, 2 * half});
  for (std::size_t c = 0; c < ch; ++c) {
    double* r = out.row(c);
    const double* e = vx.row(2 * c);
    const double* o = vx.row(2 * c + 1);
    for (std::size_t t = 0; t < half; ++t) {
      r[2 * t] = e[t];
      r[2 * t + 1] = o[t];
    }
  }
  const std::size_t ix = x.id;
  return push(std::move(out), requires_grad(x), [ix](Graph& g, std::size_t self) {
    const Tensor& go = g.nodes_[self].grad;
    Tensor& gx = g.grad_buffer(ix);
    const std::size_t half = gx.length();
    for (std::size_t c = 0; c < go.channels(); ++c) {
      const double* r = go.row(c);
      double* e = gx.row(2 * c);
      double* o = gx.row(2 * c + 1);
      for (std::size_t t = 0; t < half; ++t) {
        e[t] += r[2 * t];
        o[t] += r[2 * t + 1];
      }
    }
  });
}

Var Graph::conv1d(Var x, Var w, std::optional<Var> bias, std::size_t dilation, ConvMode mode) {
  Tensor out;
  conv1d_forward(value(x), value(w), bias ? &value(*bias) : nullptr, dilation, mode, out);
  const bool rg = requires_grad(x) || requires_grad(w) || (bias && requires_grad(*bias));
  const std::size_t ix = x.id, iw = w.id;
  const std::optional<std::size_t> ib = bias ? std::optional<std::size_t>(bias->id) : std::nullopt;
  return push(std::move(out), rg, [ix, iw, ib, dilation, mode](Graph& g, std::size_t self) {
    const Tensor& dy = g.nodes_[self].grad;
    const Tensor& vx = g.nodes_[ix].value;
    const Tensor& vw = g.nodes_[iw].value;
    const std::size_t cout = vw.dim(0), cin = vw.dim(1), kernel = vw.dim(2);
    const auto T = static_cast<std::ptrdiff_t>(vx.length());
    const std::ptrdiff_t left = conv_left_pad(kernel, dilation, mode);
    const bool need_x = g.nodes_[ix].requires_grad;
    const bool need_w = g.nodes_[iw].requires_grad;
    Tensor* gx = need_x ? &g.grad_buffer(ix) : nullptr;
    Tensor* gw = need_w ? &g.grad_buffer(iw) : nullptr;
    const ConstRowMatrixMap dym(dy.data(), static_cast<Eigen::Index>(cout), T);
    const ConstRowMatrixMap xm(vx.data(), static_cast<Eigen::Index>(cin), T);
    for (std::size_t k = 0; k < kernel; ++k) {
      const std::ptrdiff_t off = static_cast<std::ptrdiff_t>(k * dilation) - left;
      const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, -off);
      const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(T, T - off);
      if (hi <= lo) continue;
      if (need_w) {
        const RowMatrix gk = dym.middleCols(lo, hi - lo) * xm.middleCols(lo + off, hi - lo).transpose();
        for (std::size_t co = 0; co < cout; ++co) {
          for (std::size_t ci = 0; ci < cin; ++ci) {
            (*gw)[(co * cin + ci) * kernel + k] += gk(static_cast<Eigen::Index>(co), static_cast<Eigen::Index>(ci));
          }
        }
      }
      if (need_x) {
        RowMatrixMap gxm(gx->data(), static_cast<Eigen::Index>(cin), T);
        gxm.middleCols(lo + off, hi - lo).noalias() += weight_tap(vw, k).transpose() * dym.middleCols(lo, hi - lo);
      }
    }
    if (ib && g.nodes_[*ib].requires_grad) {
      Tensor& gb = g.grad_buffer(*ib);
      for (std::size_t co = 0; co < cout; ++co) {
        const double* dyr = dy.row(co);
        double acc = 0.0;
        #pragma omp simd reduction(+ : acc)
        for (std::ptrdiff_t t = 0; t < T; ++t) acc += dyr[t];
        gb[co] += acc;
      }
    }
  });
}

Var Graph::softmax_cross_entropy(Var logits, std::span<const int> targets) {
  const Tensor& vl = value(logits);
  require_rank2(vl, "softmax_cross_entropy");
  const std::size_t classes = vl.channels(), len = vl.length();
  if (targets.size() != len) throw ShapeError("softmax_cross_entropy: target length mismatch");
  // probs kept for backward
  Tensor probs({classes, len});
  double total = 0.0;
  for (std::size_t t = 0; t < len; ++t) {
    const int target = targets[t];
    if (target < 0 || static_cast<std::size_t>(target) >= classes) {
      throw ShapeError("softmax_cross_entropy: target class " + std::to_string(target) + " out of range");
    }
    double mx = vl.at(0, t);
    for (std::size_t c = 1; c < classes; ++c) mx = std::max(mx, vl.at(c, t));
    double z = 0.0;
    for (std::size_t c = 0; c < classes; ++c) {
      const double e = std::exp(vl.at(c, t) - mx);
      probs.at(c, t) = e;
      z += e;
    }
    for (std::size_t c = 0; c < classes; ++c) probs.at(c, t) /= z;
    total += -(vl.at(static_cast<std::size_t>(target), t) - mx - std::log(z));
  }
  const std::size_t il = logits.id;
  std::vector<int> tgt(targets.begin(), targets.end());
  return push(Tensor::scalar(total), requires_grad(logits),
              [il, probs = std::move(probs), tgt = std::move(tgt)](Graph& g, std::size_t self) {
                const double go = g.nodes_[self].grad[0];
                Tensor& gl = g.grad_buffer(il);
                for (std::size_t c = 0; c < probs.channels(); ++c) {
                  const double* p = probs.row(c);
                  double* r = gl.row(c);
                  for (std::size_t t = 0; t < probs.length(); ++t) r[t] += go * p[t];
                }
                for (std::size_t t = 0; t < tgt.size(); ++t) gl.at(static_cast<std::size_t>(tgt[t]), t) -= go;
              });
}

void Graph::backward(Var output) {
  const Node& out = node(output);
  if (out.value.size() != 1) throw ShapeError("backward: output must be scalar, got " + shape_string(out.value.shape()));
  for (Node& n : nodes_) n.grad = Tensor{};
  if (!out.requires_grad) return;
  grad_buffer(output.id)[0] = 1.0;
  for (std::size_t i = output.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || n.grad.shape() != n.value.shape() || !n.backward) continue;
    n.backward(*this, i);
  }
}

double finite_diff_check(const std::function<double(const Tensor&)>& f, const Tensor& analytic_grad,
                         const Tensor& point, double epsilon) {
  if (!analytic_grad.same_shape(point)) throw ShapeError("finite_diff_check: gradient shape mismatch");
  double scale = 0.0;
  for (double v : analytic_grad.values()) scale = std::max(scale, std::abs(v));
  double worst = 0.0;
  Tensor probe = point;
  for (std::size_t i = 0; i < point.size(); ++i) {
    const double x0 = point[i];
    probe[i] = x0 + epsilon;
    const double fp = f(probe);
    probe[i] = x0 - epsilon;
    const double fm = f(probe);
    probe[i] = x0;
    const double numeric = (fp - fm) / (2.0 * epsilon);
    const double a = analytic_grad[i];
    const double denom = std::max(std::abs(a), std::abs(numeric)) + 1e-6 * scale + 1e-12;
    worst = std::max(worst, std::abs(a - numeric) / denom);
  }
  return worst;
}

double finite_diff_check(const std::function<Var(Graph&, Var)>& build, const Tensor& point, double epsilon) {
  Graph g;
  const Var x = g.input(point);
  g.backward(build(g, x));
  const Tensor analytic = g.grad(x);
  auto f = [&](const Tensor& p) {
    Graph h;
    return h.value(build(h, h.input(p, false))).item();
  };
  return finite_diff_check(f, analytic, point, epsilon);
}

}  // namespace psep::ad
