// SPDX-License-Identifier: Apache-2.0
// Convolutions lowered to im2col + GEMM. 2-D convs run through the 3-D
// lowering with a unit depth axis.
#include <algorithm>

#include "kernels.hpp"
#include "tivgan/nn/ops.hpp"

namespace tivgan::nn {

using detail::as_matrix;
using detail::shape_fail;

namespace {

struct Geometry {
  std::int64_t c, d, h, w;     // input volume
  std::int64_t kd, kh, kw;     // kernel
  std::int64_t sd, sh, sw;     // stride
  std::int64_t pd, ph, pw;     // padding
  std::int64_t od, oh, ow;     // output volume

  std::int64_t rows() const { return c * kd * kh * kw; }
  std::int64_t in_area() const { return d * h * w; }
  std::int64_t out_area() const { return od * oh * ow; }
};

std::int64_t out_extent(std::int64_t in, std::int64_t k, std::int64_t s, std::int64_t p) {
  const std::int64_t span = in + 2 * p - k;
  return span < 0 ? 0 : span / s + 1;
}

// cols[row, n * out_area + o] = x[n, c, id, ih, iw] (zero outside the volume).
template <typename S, bool Accumulate>
void lower(const Geometry& g, std::int64_t batch, S* x, S* cols) {
  const std::int64_t ncols = batch * g.out_area();
  for (std::int64_t c = 0; c < g.c; ++c)
    for (std::int64_t a = 0; a < g.kd; ++a)
      for (std::int64_t b = 0; b < g.kh; ++b)
        for (std::int64_t e = 0; e < g.kw; ++e) {
          const std::int64_t row = ((c * g.kd + a) * g.kh + b) * g.kw + e;
          S* col = cols + row * ncols;
          for (std::int64_t n = 0; n < batch; ++n) {
            S* vol = x + (n * g.c + c) * g.in_area();
            S* dst = col + n * g.out_area();
            for (std::int64_t z = 0; z < g.od; ++z) {
              const std::int64_t iz = z * g.sd - g.pd + a;
              S* plane_dst = dst + z * g.oh * g.ow;
              if (iz < 0 || iz >= g.d) {
                if constexpr (!Accumulate) std::fill_n(plane_dst, g.oh * g.ow, S{0});
                continue;
              }
              for (std::int64_t y = 0; y < g.oh; ++y) {
                const std::int64_t iy = y * g.sh - g.ph + b;
                S* row_dst = plane_dst + y * g.ow;
                if (iy < 0 || iy >= g.h) {
                  if constexpr (!Accumulate) std::fill_n(row_dst, g.ow, S{0});
                  continue;
                }
                S* src = vol + (iz * g.h + iy) * g.w;
                for (std::int64_t q = 0; q < g.ow; ++q) {
                  const std::int64_t ix = q * g.sw - g.pw + e;
                  const bool inside = ix >= 0 && ix < g.w;
                  if constexpr (Accumulate) {
                    if (inside) src[ix] += row_dst[q];
                  } else {
                    row_dst[q] = inside ? src[ix] : S{0};
                  }
                }
              }
            }
          }
        }
}

template <typename S>
void im2col(const Geometry& g, std::int64_t batch, const S* x, S* cols) {
  lower<S, false>(g, batch, const_cast<S*>(x), cols);
}

// Adjoint of im2col: x += scatter(cols).
template <typename S>
void col2im(const Geometry& g, std::int64_t batch, const S* cols, S* x) {
  lower<S, true>(g, batch, x, const_cast<S*>(cols));
}

// [N, C, A] -> [C, N * A]
template <typename S>
void to_channel_major(const S* src, std::int64_t n, std::int64_t c, std::int64_t a, S* dst) {
  for (std::int64_t i = 0; i < n; ++i)
    for (std::int64_t k = 0; k < c; ++k) std::copy_n(src + (i * c + k) * a, a, dst + k * n * a + i * a);
}

// [C, N * A] -> [N, C, A], accumulating into dst.
template <typename S>
void from_channel_major_add(const S* src, std::int64_t n, std::int64_t c, std::int64_t a, S* dst) {
  for (std::int64_t i = 0; i < n; ++i)
    for (std::int64_t k = 0; k < c; ++k) {
      const S* s = src + k * n * a + i * a;
      S* d = dst + (i * c + k) * a;
      for (std::int64_t j = 0; j < a; ++j) d[j] += s[j];
    }
}

template <typename S>
Var<S> conv_nd(const char* op, const Var<S>& x, const Var<S>& weight, const Var<S>& bias, const Geometry& g,
               const Shape& out_shape) {
  const std::int64_t batch = x.shape()[0];
  const std::int64_t cout = weight.shape()[0];
  const std::int64_t rows = g.rows(), oa = g.out_area(), ncols = batch * oa;
  if (g.od <= 0 || g.oh <= 0 || g.ow <= 0)
    shape_fail(op, "kernel larger than padded input " + shape_string(x.shape()));
  if (bias.valid() && bias.shape() != Shape{cout})
    shape_fail(op, "bias " + shape_string(bias.shape()) + " does not match " + std::to_string(cout) + " outputs");

  std::vector<S> cols(static_cast<std::size_t>(rows * ncols));
  im2col(g, batch, x.value().data(), cols.data());
  std::vector<S> outm(static_cast<std::size_t>(cout * ncols));
  as_matrix(outm.data(), cout, ncols).noalias() =
      as_matrix(weight.value().data(), cout, rows) * as_matrix(static_cast<const S*>(cols.data()), rows, ncols);
  cols = {};
  Tensor<S> out(out_shape);
  from_channel_major_add(outm.data(), batch, cout, oa, out.data());
  if (bias.valid())
    for (std::int64_t n = 0; n < batch; ++n)
      for (std::int64_t k = 0; k < cout; ++k) {
        S* p = out.data() + (n * cout + k) * oa;
        const S bk = bias.value()[k];
        for (std::int64_t j = 0; j < oa; ++j) p[j] += bk;
      }

  const int ix = x.index(), iw = weight.index(), ib = bias.valid() ? bias.index() : -1;
  std::vector<Var<S>> parents{x, weight};
  if (bias.valid()) parents.push_back(bias);
  return x.graph().record(std::move(out), parents, [=](Graph<S>& gr, int self) {
    const auto& go = gr.grad(self);
    std::vector<S> gom(static_cast<std::size_t>(cout * ncols));
    to_channel_major(go.data(), batch, cout, oa, gom.data());
    auto gmat = as_matrix(static_cast<const S*>(gom.data()), cout, ncols);
    if (gr.requires_grad(iw)) {
      std::vector<S> c2(static_cast<std::size_t>(rows * ncols));
      im2col(g, batch, gr.value(ix).data(), c2.data());
      as_matrix(gr.grad(iw).data(), cout, rows).noalias() +=
          gmat * as_matrix(static_cast<const S*>(c2.data()), rows, ncols).transpose();
    }
    if (gr.requires_grad(ix)) {
      std::vector<S> dcols(static_cast<std::size_t>(rows * ncols));
      as_matrix(dcols.data(), rows, ncols).noalias() =
          as_matrix(gr.value(iw).data(), cout, rows).transpose() * gmat;
      col2im(g, batch, dcols.data(), gr.grad(ix).data());
    }
    if (ib >= 0 && gr.requires_grad(ib)) {
      auto& gb = gr.grad(ib);
      for (std::int64_t k = 0; k < cout; ++k) {
        S acc{0};
        for (std::int64_t j = 0; j < ncols; ++j) acc += gom[static_cast<std::size_t>(k * ncols + j)];
        gb[k] += acc;
      }
    }
  });
}

}  // namespace

template <typename S>
Var<S> conv2d(const Var<S>& x, const Var<S>& weight, const Var<S>& bias, Conv2dOptions opt) {
  const auto& xs = x.shape();
  const auto& ws = weight.shape();
  if (xs.size() != 4 || ws.size() != 4 || xs[1] != ws[1] || ws[2] != ws[3])
    shape_fail("conv2d", "input " + shape_string(xs) + " incompatible with weight " + shape_string(ws));
  if (opt.stride < 1 || opt.padding < 0) shape_fail("conv2d", "invalid stride/padding");
  const std::int64_t k = ws[2];
  Geometry g{xs[1], 1, xs[2], xs[3], 1, k, k, 1, opt.stride, opt.stride, 0, opt.padding, opt.padding, 1,
             out_extent(xs[2], k, opt.stride, opt.padding), out_extent(xs[3], k, opt.stride, opt.padding)};
  return conv_nd<S>("conv2d", x, weight, bias, g, Shape{xs[0], ws[0], g.oh, g.ow});
}

template <typename S>
Var<S> conv3d(const Var<S>& x, const Var<S>& weight, const Var<S>& bias, Conv3dOptions opt) {
  const auto& xs = x.shape();
  const auto& ws = weight.shape();
  if (xs.size() != 5 || ws.size() != 5 || xs[1] != ws[1])
    shape_fail("conv3d", "input " + shape_string(xs) + " incompatible with weight " + shape_string(ws));
  for (int i = 0; i < 3; ++i)
    if (opt.stride[i] < 1 || opt.padding[i] < 0) shape_fail("conv3d", "invalid stride/padding");
  Geometry g{xs[1],
             xs[2],
             xs[3],
             xs[4],
             ws[2],
             ws[3],
             ws[4],
             opt.stride[0],
             opt.stride[1],
             opt.stride[2],
             opt.padding[0],
             opt.padding[1],
             opt.padding[2],
             out_extent(xs[2], ws[2], opt.stride[0], opt.padding[0]),
             out_extent(xs[3], ws[3], opt.stride[1], opt.padding[1]),
             out_extent(xs[4], ws[4], opt.stride[2], opt.padding[2])};
  return conv_nd<S>("conv3d", x, weight, bias, g, Shape{xs[0], ws[0], g.od, g.oh, g.ow});
}

template <typename S>
Var<S> conv_transpose2d(const Var<S>& x, const Var<S>& weight, const Var<S>& bias, Conv2dOptions opt) {
  const auto& xs = x.shape();
  const auto& ws = weight.shape();
  if (xs.size() != 4 || ws.size() != 4 || xs[1] != ws[0] || ws[2] != ws[3])
    shape_fail("conv_transpose2d",
               "input " + shape_string(xs) + " incompatible with weight " + shape_string(ws));
  if (opt.stride < 1 || opt.padding < 0) shape_fail("conv_transpose2d", "invalid stride/padding");
  const std::int64_t batch = xs[0], cin = xs[1], hin = xs[2], win = xs[3];
  const std::int64_t cout = ws[1], k = ws[2], s = opt.stride, p = opt.padding;
  const std::int64_t hout = (hin - 1) * s - 2 * p + k, wout = (win - 1) * s - 2 * p + k;
  if (hout <= 0 || wout <= 0) shape_fail("conv_transpose2d", "non-positive output size");
  if (bias.valid() && bias.shape() != Shape{cout})
    shape_fail("conv_transpose2d", "bias " + shape_string(bias.shape()) + " does not match " +
                                       std::to_string(cout) + " outputs");
  // The convolution this op is the adjoint of: maps the output volume back to x.
  const Geometry g{cout, 1, hout, wout, 1, k, k, 1, s, s, 0, p, p, 1, hin, win};
  const std::int64_t rows = g.rows(), ia = hin * win, ncols = batch * ia;

  std::vector<S> xm(static_cast<std::size_t>(cin * ncols));
  to_channel_major(x.value().data(), batch, cin, ia, xm.data());
  std::vector<S> cols(static_cast<std::size_t>(rows * ncols));
  as_matrix(cols.data(), rows, ncols).noalias() =
      as_matrix(weight.value().data(), cin, rows).transpose() * as_matrix(static_cast<const S*>(xm.data()), cin, ncols);
  Tensor<S> out({batch, cout, hout, wout});
  col2im(g, batch, cols.data(), out.data());
  if (bias.valid())
    for (std::int64_t n = 0; n < batch; ++n)
      for (std::int64_t c = 0; c < cout; ++c) {
        S* pp = out.data() + (n * cout + c) * hout * wout;
        const S bc = bias.value()[c];
        for (std::int64_t j = 0; j < hout * wout; ++j) pp[j] += bc;
      }

  const int ix = x.index(), iw = weight.index(), ib = bias.valid() ? bias.index() : -1;
  std::vector<Var<S>> parents{x, weight};
  if (bias.valid()) parents.push_back(bias);
  return x.graph().record(std::move(out), parents, [=](Graph<S>& gr, int self) {
    const auto& go = gr.grad(self);
    std::vector<S> dcols(static_cast<std::size_t>(rows * ncols));
    im2col(g, batch, go.data(), dcols.data());
    auto dmat = as_matrix(static_cast<const S*>(dcols.data()), rows, ncols);
    if (gr.requires_grad(ix)) {
      std::vector<S> dxm(static_cast<std::size_t>(cin * ncols));
      as_matrix(dxm.data(), cin, ncols).noalias() = as_matrix(gr.value(iw).data(), cin, rows) * dmat;
      from_channel_major_add(dxm.data(), batch, cin, ia, gr.grad(ix).data());
    }
    if (gr.requires_grad(iw)) {
      std::vector<S> xm2(static_cast<std::size_t>(cin * ncols));
      to_channel_major(gr.value(ix).data(), batch, cin, ia, xm2.data());
      as_matrix(gr.grad(iw).data(), cin, rows).noalias() +=
          as_matrix(static_cast<const S*>(xm2.data()), cin, ncols) * dmat.transpose();
    }
    if (ib >= 0 && gr.requires_grad(ib)) {
      auto& gb = gr.grad(ib);
      const std::int64_t oa = hout * wout;
      for (std::int64_t n = 0; n < batch; ++n)
        for (std::int64_t c = 0; c < cout; ++c) {
          const S* pp = go.data() + (n * cout + c) * oa;
          S acc{0};
          for (std::int64_t j = 0; j < oa; ++j) acc += pp[j];
          gb[c] += acc;
        }
    }
  });
}

#define TIVGAN_INSTANTIATE_CONV(S)                                                                   \
  template Var<S> conv2d(const Var<S>&, const Var<S>&, const Var<S>&, Conv2dOptions);                \
  template Var<S> conv3d(const Var<S>&, const Var<S>&, const Var<S>&, Conv3dOptions);                \
  template Var<S> conv_transpose2d(const Var<S>&, const Var<S>&, const Var<S>&, Conv2dOptions);

TIVGAN_INSTANTIATE_CONV(float)
TIVGAN_INSTANTIATE_CONV(double)

}  // namespace tivgan::nn
