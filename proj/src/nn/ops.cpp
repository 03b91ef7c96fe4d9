// SPDX-License-Identifier: Apache-2.0
#include "tivgan/nn/ops.hpp"

#include <algorithm>
#include <cmath>

#include "kernels.hpp"

namespace tivgan::nn {

using detail::accumulate;
using detail::as_matrix;
using detail::shape_fail;

namespace {

template <typename S>
void require_same(const char* op, const Var<S>& a, const Var<S>& b) {
  if (a.shape() != b.shape())
    shape_fail(op, "operand shapes differ: " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
}

/// Unary elementwise op where dy/dx is a function of (x, y).
template <typename S, typename Fwd, typename Deriv>
Var<S> unary(const Var<S>& x, Fwd fwd, Deriv deriv) {
  auto& g = x.graph();
  const auto& xv = x.value();
  Tensor<S> out(xv.shape());
  const S* px = xv.data();
  S* po = out.data();
  for (std::int64_t i = 0; i < xv.numel(); ++i) po[i] = fwd(px[i]);
  const int ix = x.index();
  return g.record(std::move(out), {x}, [ix, deriv](Graph<S>& gr, int self) {
    const auto& go = gr.grad(self);
    const auto& xv2 = gr.value(ix);
    const auto& yv = gr.value(self);
    auto& gx = gr.grad(ix);
    for (std::int64_t i = 0; i < go.numel(); ++i) gx[i] += go[i] * deriv(xv2[i], yv[i]);
  });
}

}  // namespace

template <typename S>
Var<S> add(const Var<S>& a, const Var<S>& b) {
  require_same("add", a, b);
  Tensor<S> out = a.value();
  accumulate(out, b.value());
  const int ia = a.index(), ib = b.index();
  return a.graph().record(std::move(out), {a, b}, [ia, ib](Graph<S>& g, int self) {
    const auto& go = g.grad(self);
    if (g.requires_grad(ia)) accumulate(g.grad(ia), go);
    if (g.requires_grad(ib)) accumulate(g.grad(ib), go);
  });
}

template <typename S>
Var<S> sub(const Var<S>& a, const Var<S>& b) {
  require_same("sub", a, b);
  Tensor<S> out = a.value();
  const auto& bv = b.value();
  for (std::int64_t i = 0; i < out.numel(); ++i) out[i] -= bv[i];
  const int ia = a.index(), ib = b.index();
  return a.graph().record(std::move(out), {a, b}, [ia, ib](Graph<S>& g, int self) {
    const auto& go = g.grad(self);
    if (g.requires_grad(ia)) accumulate(g.grad(ia), go);
    if (g.requires_grad(ib)) {
      auto& gb = g.grad(ib);
      for (std::int64_t i = 0; i < go.numel(); ++i) gb[i] -= go[i];
    }
  });
}

template <typename S>
Var<S> mul(const Var<S>& a, const Var<S>& b) {
  require_same("mul", a, b);
  Tensor<S> out = a.value();
  const auto& bv = b.value();
  for (std::int64_t i = 0; i < out.numel(); ++i) out[i] *= bv[i];
  const int ia = a.index(), ib = b.index();
  return a.graph().record(std::move(out), {a, b}, [ia, ib](Graph<S>& g, int self) {
    const auto& go = g.grad(self);
    if (g.requires_grad(ia)) {
      auto& ga = g.grad(ia);
      const auto& bv2 = g.value(ib);
      for (std::int64_t i = 0; i < go.numel(); ++i) ga[i] += go[i] * bv2[i];
    }
    if (g.requires_grad(ib)) {
      auto& gb = g.grad(ib);
      const auto& av2 = g.value(ia);
      for (std::int64_t i = 0; i < go.numel(); ++i) gb[i] += go[i] * av2[i];
    }
  });
}

template <typename S>
Var<S> affine(const Var<S>& x, double scale, double shift) {
  const S a = static_cast<S>(scale), b = static_cast<S>(shift);
  return unary<S>(
      x, [a, b](S v) { return a * v + b; }, [a](S, S) { return a; });
}

template <typename S>
Var<S> sigmoid(const Var<S>& x) {
  return unary<S>(
      x,
      [](S v) {
        if (v >= 0) return S{1} / (S{1} + std::exp(-v));
        const S e = std::exp(v);
        return e / (S{1} + e);
      },
      [](S, S y) { return y * (S{1} - y); });
}

template <typename S>
Var<S> log_sigmoid(const Var<S>& x) {
  return unary<S>(
      x, [](S v) { return v < 0 ? v - std::log1p(std::exp(v)) : -std::log1p(std::exp(-v)); },
      [](S v, S) {
        if (v >= 0) return std::exp(-v) / (S{1} + std::exp(-v));
        return S{1} / (S{1} + std::exp(v));
      });
}

template <typename S>
Var<S> tanh(const Var<S>& x) {
  return unary<S>(
      x, [](S v) { return std::tanh(v); }, [](S, S y) { return S{1} - y * y; });
}

template <typename S>
Var<S> relu(const Var<S>& x) {
  return unary<S>(
      x, [](S v) { return v > 0 ? v : S{0}; }, [](S v, S) { return v > 0 ? S{1} : S{0}; });
}

template <typename S>
Var<S> leaky_relu(const Var<S>& x, double slope) {
  const S k = static_cast<S>(slope);
  return unary<S>(
      x, [k](S v) { return v > 0 ? v : k * v; }, [k](S v, S) { return v > 0 ? S{1} : k; });
}

template <typename S>
Var<S> log(const Var<S>& x) {
  for (S v : x.value().values())
    if (!(v > 0)) throw NumericError("log: non-positive or non-finite input " + std::to_string(v));
  return unary<S>(
      x, [](S v) { return std::log(v); }, [](S v, S) { return S{1} / v; });
}

template <typename S>
Var<S> clamp(const Var<S>& x, double lo, double hi) {
  const S l = static_cast<S>(lo), h = static_cast<S>(hi);
  return unary<S>(
      x, [l, h](S v) { return std::min(std::max(v, l), h); },
      [l, h](S v, S) { return (v >= l && v <= h) ? S{1} : S{0}; });
}

template <typename S>
Var<S> sum(const Var<S>& x) {
  S acc{0};
  for (S v : x.value().values()) acc += v;
  const int ix = x.index();
  return x.graph().record(Tensor<S>({1}, acc), {x}, [ix](Graph<S>& g, int self) {
    const S go = g.grad(self)[0];
    auto& gx = g.grad(ix);
    for (std::int64_t i = 0; i < gx.numel(); ++i) gx[i] += go;
  });
}

template <typename S>
Var<S> mean(const Var<S>& x) {
  const S n = static_cast<S>(x.value().numel());
  S acc{0};
  for (S v : x.value().values()) acc += v;
  const int ix = x.index();
  return x.graph().record(Tensor<S>({1}, acc / n), {x}, [ix, n](Graph<S>& g, int self) {
    const S go = g.grad(self)[0] / n;
    auto& gx = g.grad(ix);
    for (std::int64_t i = 0; i < gx.numel(); ++i) gx[i] += go;
  });
}

template <typename S>
Var<S> spatial_mean(const Var<S>& x) {
  const auto& shp = x.shape();
  if (shp.size() < 3) shape_fail("spatial_mean", "expected rank >= 3, got " + shape_string(shp));
  const std::int64_t planes = shp[0] * shp[1];
  const std::int64_t area = x.value().numel() / planes;
  Tensor<S> out({shp[0], shp[1]});
  const S* px = x.value().data();
  for (std::int64_t p = 0; p < planes; ++p) {
    S acc{0};
    for (std::int64_t i = 0; i < area; ++i) acc += px[p * area + i];
    out[p] = acc / static_cast<S>(area);
  }
  const int ix = x.index();
  return x.graph().record(std::move(out), {x}, [ix, planes, area](Graph<S>& g, int self) {
    const auto& go = g.grad(self);
    auto& gx = g.grad(ix);
    for (std::int64_t p = 0; p < planes; ++p) {
      const S v = go[p] / static_cast<S>(area);
      for (std::int64_t i = 0; i < area; ++i) gx[p * area + i] += v;
    }
  });
}

template <typename S>
Var<S> broadcast_spatial(const Var<S>& x, std::int64_t h, std::int64_t w) {
  const auto& shp = x.shape();
  if (shp.size() != 2) shape_fail("broadcast_spatial", "expected [N, D], got " + shape_string(shp));
  const std::int64_t rows = shp[0] * shp[1], area = h * w;
  Tensor<S> out({shp[0], shp[1], h, w});
  for (std::int64_t r = 0; r < rows; ++r)
    std::fill_n(out.data() + r * area, area, x.value()[r]);
  const int ix = x.index();
  return x.graph().record(std::move(out), {x}, [ix, rows, area](Graph<S>& g, int self) {
    const auto& go = g.grad(self);
    auto& gx = g.grad(ix);
    for (std::int64_t r = 0; r < rows; ++r) {
      S acc{0};
      for (std::int64_t i = 0; i < area; ++i) acc += go[r * area + i];
      gx[r] += acc;
    }
  });
}

template <typename S>
Var<S> reshape(const Var<S>& x, Shape shape) {
  if (shape_numel(shape) != x.value().numel())
    shape_fail("reshape", shape_string(x.shape()) + " -> " + shape_string(shape));
  Tensor<S> out = x.value().reshaped(std::move(shape));
  const int ix = x.index();
  return x.graph().record(std::move(out), {x}, [ix](Graph<S>& g, int self) {
    const auto& go = g.grad(self);
    auto& gx = g.grad(ix);
    for (std::int64_t i = 0; i < go.numel(); ++i) gx[i] += go[i];
  });
}

template <typename S>
Var<S> concat(const std::vector<Var<S>>& xs, std::size_t axis) {
  if (xs.empty()) shape_fail("concat", "no inputs");
  const Shape& first = xs.front().shape();
  if (axis >= first.size()) shape_fail("concat", "axis " + std::to_string(axis) + " out of range");
  Shape out_shape = first;
  out_shape[axis] = 0;
  for (const auto& x : xs) {
    const auto& s = x.shape();
    bool ok = s.size() == first.size();
    for (std::size_t d = 0; ok && d < s.size(); ++d) ok = d == axis || s[d] == first[d];
    if (!ok) shape_fail("concat", "incompatible shapes " + shape_string(first) + " and " + shape_string(s));
    out_shape[axis] += s[axis];
  }
  std::int64_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= first[d];
  for (std::size_t d = axis + 1; d < first.size(); ++d) inner *= first[d];
  const std::int64_t out_block = out_shape[axis] * inner;

  std::vector<std::int64_t> blocks, offsets;
  std::vector<int> ids;
  std::int64_t off = 0;
  for (const auto& x : xs) {
    blocks.push_back(x.shape()[axis] * inner);
    offsets.push_back(off);
    ids.push_back(x.index());
    off += blocks.back();
  }
  Tensor<S> out(out_shape);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const S* src = xs[i].value().data();
    for (std::int64_t o = 0; o < outer; ++o)
      std::copy_n(src + o * blocks[i], blocks[i], out.data() + o * out_block + offsets[i]);
  }
  return xs.front().graph().record(
      std::move(out), xs, [ids, blocks, offsets, outer, out_block](Graph<S>& g, int self) {
        const auto& go = g.grad(self);
        for (std::size_t i = 0; i < ids.size(); ++i) {
          if (!g.requires_grad(ids[i])) continue;
          auto& gx = g.grad(ids[i]);
          for (std::int64_t o = 0; o < outer; ++o) {
            const S* src = go.data() + o * out_block + offsets[i];
            S* dst = gx.data() + o * blocks[i];
            for (std::int64_t k = 0; k < blocks[i]; ++k) dst[k] += src[k];
          }
        }
      });
}

template <typename S>
Var<S> index_select(const Var<S>& x, const std::vector<std::int64_t>& rows) {
  const auto& shp = x.shape();
  if (shp.empty()) shape_fail("index_select", "scalar input");
  const std::int64_t row = x.value().numel() / shp[0];
  for (auto r : rows)
    if (r < 0 || r >= shp[0])
      shape_fail("index_select", "row " + std::to_string(r) + " out of range for " + shape_string(shp));
  Shape out_shape = shp;
  out_shape[0] = static_cast<std::int64_t>(rows.size());
  Tensor<S> out(out_shape);
  for (std::size_t i = 0; i < rows.size(); ++i)
    std::copy_n(x.value().data() + rows[i] * row, row, out.data() + static_cast<std::int64_t>(i) * row);
  const int ix = x.index();
  return x.graph().record(std::move(out), {x}, [ix, rows, row](Graph<S>& g, int self) {
    const auto& go = g.grad(self);
    auto& gx = g.grad(ix);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const S* src = go.data() + static_cast<std::int64_t>(i) * row;
      S* dst = gx.data() + rows[i] * row;
      for (std::int64_t k = 0; k < row; ++k) dst[k] += src[k];
    }
  });
}

template <typename S>
Var<S> linear(const Var<S>& x, const Var<S>& weight, const Var<S>& bias) {
  const auto& xs = x.shape();
  const auto& ws = weight.shape();
  if (xs.size() != 2 || ws.size() != 2 || xs[1] != ws[1])
    shape_fail("linear", "input " + shape_string(xs) + " incompatible with weight " + shape_string(ws));
  const std::int64_t n = xs[0], in = xs[1], outd = ws[0];
  if (bias.valid() && bias.shape() != Shape{outd})
    shape_fail("linear", "bias " + shape_string(bias.shape()) + " does not match out dim " + std::to_string(outd));
  Tensor<S> out({n, outd});
  as_matrix(out.data(), n, outd).noalias() =
      as_matrix(x.value().data(), n, in) * as_matrix(weight.value().data(), outd, in).transpose();
  if (bias.valid())
    for (std::int64_t r = 0; r < n; ++r)
      for (std::int64_t c = 0; c < outd; ++c) out[r * outd + c] += bias.value()[c];

  const int ix = x.index(), iw = weight.index(), ib = bias.valid() ? bias.index() : -1;
  std::vector<Var<S>> parents{x, weight};
  if (bias.valid()) parents.push_back(bias);
  return x.graph().record(std::move(out), parents, [=](Graph<S>& g, int self) {
    const auto& go = g.grad(self);
    auto gom = as_matrix(go.data(), n, outd);
    if (g.requires_grad(ix))
      as_matrix(g.grad(ix).data(), n, in).noalias() += gom * as_matrix(g.value(iw).data(), outd, in);
    if (g.requires_grad(iw))
      as_matrix(g.grad(iw).data(), outd, in).noalias() += gom.transpose() * as_matrix(g.value(ix).data(), n, in);
    if (ib >= 0 && g.requires_grad(ib)) {
      auto& gb = g.grad(ib);
      for (std::int64_t r = 0; r < n; ++r)
        for (std::int64_t c = 0; c < outd; ++c) gb[c] += go[r * outd + c];
    }
  });
}

template <typename S>
Var<S> linear(const Var<S>& x, const Var<S>& weight) {
  return linear(x, weight, Var<S>());
}

template <typename S>
Var<S> instance_norm(const Var<S>& x, double eps) {
  const auto& shp = x.shape();
  if (shp.size() < 3) shape_fail("instance_norm", "expected rank >= 3, got " + shape_string(shp));
  const std::int64_t planes = shp[0] * shp[1];
  const std::int64_t area = x.value().numel() / planes;
  Tensor<S> out(shp);
  std::vector<S> inv_std(static_cast<std::size_t>(planes));
  const S* px = x.value().data();
  for (std::int64_t p = 0; p < planes; ++p) {
    const S* src = px + p * area;
    S mu{0};
    for (std::int64_t i = 0; i < area; ++i) mu += src[i];
    mu /= static_cast<S>(area);
    S var{0};
    for (std::int64_t i = 0; i < area; ++i) var += (src[i] - mu) * (src[i] - mu);
    var /= static_cast<S>(area);
    const S is = S{1} / std::sqrt(var + static_cast<S>(eps));
    inv_std[static_cast<std::size_t>(p)] = is;
    for (std::int64_t i = 0; i < area; ++i) out[p * area + i] = (src[i] - mu) * is;
  }
  const int ix = x.index();
  return x.graph().record(std::move(out), {x}, [ix, planes, area, inv_std](Graph<S>& g, int self) {
    const auto& go = g.grad(self);
    const auto& y = g.value(self);
    auto& gx = g.grad(ix);
    for (std::int64_t p = 0; p < planes; ++p) {
      const std::int64_t base = p * area;
      S mg{0}, mgy{0};
      for (std::int64_t i = 0; i < area; ++i) {
        mg += go[base + i];
        mgy += go[base + i] * y[base + i];
      }
      mg /= static_cast<S>(area);
      mgy /= static_cast<S>(area);
      const S is = inv_std[static_cast<std::size_t>(p)];
      for (std::int64_t i = 0; i < area; ++i) gx[base + i] += is * (go[base + i] - mg - y[base + i] * mgy);
    }
  });
}

template <typename S>
Var<S> softmax_cross_entropy(const Var<S>& logits, const std::vector<int>& labels) {
  const auto& shp = logits.shape();
  if (shp.size() != 2 || shp[0] != static_cast<std::int64_t>(labels.size()))
    shape_fail("softmax_cross_entropy",
               "logits " + shape_string(shp) + " vs " + std::to_string(labels.size()) + " labels");
  const std::int64_t n = shp[0], k = shp[1];
  Tensor<S> probs(shp);
  S loss{0};
  for (std::int64_t r = 0; r < n; ++r) {
    const S* row = logits.value().data() + r * k;
    const int lab = labels[static_cast<std::size_t>(r)];
    if (lab < 0 || lab >= k) throw InvalidInput("softmax_cross_entropy: label out of range");
    const S mx = *std::max_element(row, row + k);
    S z{0};
    for (std::int64_t c = 0; c < k; ++c) z += std::exp(row[c] - mx);
    for (std::int64_t c = 0; c < k; ++c) probs[r * k + c] = std::exp(row[c] - mx) / z;
    loss += -(row[lab] - mx - std::log(z));
  }
  loss /= static_cast<S>(n);
  const int il = logits.index();
  return logits.graph().record(Tensor<S>({1}, loss), {logits}, [il, probs, labels, n, k](Graph<S>& g, int self) {
    const S go = g.grad(self)[0] / static_cast<S>(n);
    auto& gl = g.grad(il);
    for (std::int64_t r = 0; r < n; ++r)
      for (std::int64_t c = 0; c < k; ++c) {
        const S target = c == labels[static_cast<std::size_t>(r)] ? S{1} : S{0};
        gl[r * k + c] += go * (probs[r * k + c] - target);
      }
  });
}

#define TIVGAN_INSTANTIATE_OPS(S)                                                           \
  template Var<S> add(const Var<S>&, const Var<S>&);                                        \
  template Var<S> sub(const Var<S>&, const Var<S>&);                                        \
  template Var<S> mul(const Var<S>&, const Var<S>&);                                        \
  template Var<S> affine(const Var<S>&, double, double);                                    \
  template Var<S> sigmoid(const Var<S>&);                                                   \
  template Var<S> log_sigmoid(const Var<S>&);                                               \
  template Var<S> tanh(const Var<S>&);                                                      \
  template Var<S> relu(const Var<S>&);                                                      \
  template Var<S> leaky_relu(const Var<S>&, double);                                        \
  template Var<S> log(const Var<S>&);                                                       \
  template Var<S> clamp(const Var<S>&, double, double);                                     \
  template Var<S> sum(const Var<S>&);                                                       \
  template Var<S> mean(const Var<S>&);                                                      \
  template Var<S> spatial_mean(const Var<S>&);                                              \
  template Var<S> broadcast_spatial(const Var<S>&, std::int64_t, std::int64_t);             \
  template Var<S> reshape(const Var<S>&, Shape);                                            \
  template Var<S> concat(const std::vector<Var<S>>&, std::size_t);                          \
  template Var<S> index_select(const Var<S>&, const std::vector<std::int64_t>&);            \
  template Var<S> linear(const Var<S>&, const Var<S>&, const Var<S>&);                      \
  template Var<S> linear(const Var<S>&, const Var<S>&);                                     \
  template Var<S> instance_norm(const Var<S>&, double);                                     \
  template Var<S> softmax_cross_entropy(const Var<S>&, const std::vector<int>&);

TIVGAN_INSTANTIATE_OPS(float)
TIVGAN_INSTANTIATE_OPS(double)

}  // namespace tivgan::nn
