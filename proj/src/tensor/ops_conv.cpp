// Copyright (c) 2026 The casp authors
// SPDX-License-Identifier: Apache-2.0

#include <vector>

#include "casp/ops.hpp"
#include "tensor_util.hpp"

namespace casp {

namespace {

struct ConvDims {
  std::size_t B, Cin, H, W, Cout, kh, kw, Ho, Wo, stride, pad;
};

// cols[Cin*kh*kw, Ho*Wo] for one image; out-of-range taps read zero.
template <class T>
void im2col(const T* x, const ConvDims& d, T* cols) {
  const std::size_t hw = d.Ho * d.Wo;
  for (std::size_t c = 0; c < d.Cin; ++c)
    for (std::size_t ki = 0; ki < d.kh; ++ki)
      for (std::size_t kj = 0; kj < d.kw; ++kj) {
        T* row = cols + ((c * d.kh + ki) * d.kw + kj) * hw;
        for (std::size_t oy = 0; oy < d.Ho; ++oy) {
          const long iy = static_cast<long>(oy * d.stride + ki) - static_cast<long>(d.pad);
          for (std::size_t ox = 0; ox < d.Wo; ++ox) {
            const long ix = static_cast<long>(ox * d.stride + kj) - static_cast<long>(d.pad);
            T v = T(0);
            if (iy >= 0 && iy < static_cast<long>(d.H) && ix >= 0 && ix < static_cast<long>(d.W))
              v = x[(c * d.H + iy) * d.W + ix];
            row[oy * d.Wo + ox] = v;
          }
        }
      }
}

// Scatter-add of cols back onto the image, the adjoint of im2col.
template <class T>
void col2im(const T* cols, const ConvDims& d, T* x) {
  const std::size_t hw = d.Ho * d.Wo;
  for (std::size_t c = 0; c < d.Cin; ++c)
    for (std::size_t ki = 0; ki < d.kh; ++ki)
      for (std::size_t kj = 0; kj < d.kw; ++kj) {
        const T* row = cols + ((c * d.kh + ki) * d.kw + kj) * hw;
        for (std::size_t oy = 0; oy < d.Ho; ++oy) {
          const long iy = static_cast<long>(oy * d.stride + ki) - static_cast<long>(d.pad);
          if (iy < 0 || iy >= static_cast<long>(d.H)) continue;
          for (std::size_t ox = 0; ox < d.Wo; ++ox) {
            const long ix = static_cast<long>(ox * d.stride + kj) - static_cast<long>(d.pad);
            if (ix < 0 || ix >= static_cast<long>(d.W)) continue;
            x[(c * d.H + iy) * d.W + ix] += row[oy * d.Wo + ox];
          }
        }
      }
}

}  // namespace

template <class T>
TensorT<T> conv2d(const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>* bias,
                  std::size_t stride, std::size_t pad) {
  if (x.rank() != 4 || w.rank() != 4)
    throw ShapeError("conv2d expects x[B,C,H,W] and w[Cout,Cin,kh,kw], got " +
                     shape_str(x.shape()) + " and " + shape_str(w.shape()));
  ConvDims d;
  d.B = x.dim(0);
  d.Cin = x.dim(1);
  d.H = x.dim(2);
  d.W = x.dim(3);
  d.Cout = w.dim(0);
  d.kh = w.dim(2);
  d.kw = w.dim(3);
  d.stride = stride;
  d.pad = pad;
  if (w.dim(1) != d.Cin)
    throw ShapeError("conv2d channel mismatch: " + shape_str(x.shape()) + " vs " +
                     shape_str(w.shape()));
  if (d.kh % 2 == 0 || d.kw % 2 == 0) throw ShapeError("conv2d kernel extents must be odd");
  if (stride == 0) throw ShapeError("conv2d stride must be positive");
  const long ho = (static_cast<long>(d.H + 2 * pad) - static_cast<long>(d.kh)) /
                      static_cast<long>(stride) + 1;
  const long wo = (static_cast<long>(d.W + 2 * pad) - static_cast<long>(d.kw)) /
                      static_cast<long>(stride) + 1;
  if (ho < 1 || wo < 1 || d.H + 2 * pad < d.kh || d.W + 2 * pad < d.kw)
    throw ShapeError("conv2d output would be empty");
  d.Ho = static_cast<std::size_t>(ho);
  d.Wo = static_cast<std::size_t>(wo);
  if (bias != nullptr && bias->shape() != std::vector<std::size_t>{d.Cout})
    throw ShapeError("conv2d bias must be [Cout]");

  const std::size_t ckk = d.Cin * d.kh * d.kw;
  const std::size_t hw = d.Ho * d.Wo;
  TensorT<T> out({d.B, d.Cout, d.Ho, d.Wo});
  std::vector<T> cols(ckk * hw);
  T* o = out.mutable_data();
  for (std::size_t b = 0; b < d.B; ++b) {
    im2col(x.data() + b * d.Cin * d.H * d.W, d, cols.data());
    kernels::gemm<T>(false, d.Cout, hw, ckk, w.data(), ckk, cols.data(), hw,
                     o + b * d.Cout * hw, hw);
  }
  if (bias != nullptr) {
    const T* pb = bias->data();
    for (std::size_t b = 0; b < d.B; ++b)
      for (std::size_t c = 0; c < d.Cout; ++c) {
        T* row = o + (b * d.Cout + c) * hw;
        for (std::size_t i = 0; i < hw; ++i) row[i] += pb[c];
      }
  }

  Tape<T>* tape = nullptr;
  for (const TensorT<T>* t : {&x, &w, bias})
    if (t != nullptr && t->tracked()) {
      if (tape != nullptr && tape != t->tape())
        throw UsageError("operands live on different tapes");
      tape = t->tape();
    }
  if (tape == nullptr) return out;

  const int nx = x.tracked() ? x.node() : -1;
  const int nw = w.tracked() ? w.node() : -1;
  const int nbias = (bias != nullptr && bias->tracked()) ? bias->node() : -1;
  TensorT<T> xd = x.detached();
  TensorT<T> wd = w.detached();
  return tape->track(std::move(out), [nx, nw, nbias, xd, wd, d, ckk, hw](const TensorT<T>& up,
                                                                         Tape<T>& t) {
    const T* gy = up.data();
    std::vector<T> cols(ckk * hw);
    if (nw >= 0) {
      TensorT<T> gw(wd.shape());
      T* pgw = gw.mutable_data();
      std::vector<T> colst(hw * ckk);
      for (std::size_t b = 0; b < d.B; ++b) {
        im2col(xd.data() + b * d.Cin * d.H * d.W, d, cols.data());
        detail::transpose_2d(cols.data(), ckk, hw, colst.data());
        kernels::gemm<T>(true, d.Cout, ckk, hw, gy + b * d.Cout * hw, hw, colst.data(), ckk,
                         pgw, ckk);
      }
      t.accumulate(nw, gw);
    }
    if (nx >= 0) {
      TensorT<T> gx(xd.shape());
      T* pgx = gx.mutable_data();
      std::vector<T> wt(ckk * d.Cout);
      detail::transpose_2d(wd.data(), d.Cout, ckk, wt.data());
      for (std::size_t b = 0; b < d.B; ++b) {
        kernels::gemm<T>(false, ckk, hw, d.Cout, wt.data(), d.Cout, gy + b * d.Cout * hw, hw,
                         cols.data(), hw);
        col2im(cols.data(), d, pgx + b * d.Cin * d.H * d.W);
      }
      t.accumulate(nx, gx);
    }
    if (nbias >= 0) {
      TensorT<T> gb({d.Cout});
      T* pgb = gb.mutable_data();
      for (std::size_t b = 0; b < d.B; ++b)
        for (std::size_t c = 0; c < d.Cout; ++c)
          pgb[c] += kernels::sum(gy + (b * d.Cout + c) * hw, hw);
      t.accumulate(nbias, gb);
    }
  });
}

template <class T>
TensorT<T> conv2d(const TensorT<T>& x, const TensorT<T>& w, std::size_t stride, std::size_t pad) {
  return conv2d<T>(x, w, nullptr, stride, pad);
}

#define CASP_INSTANTIATE_CONV(T)                                                        \
  template TensorT<T> conv2d<T>(const TensorT<T>&, const TensorT<T>&, const TensorT<T>*, \
                                std::size_t, std::size_t);                               \
  template TensorT<T> conv2d<T>(const TensorT<T>&, const TensorT<T>&, std::size_t, std::size_t);

CASP_INSTANTIATE_CONV(float)
CASP_INSTANTIATE_CONV(double)
#undef CASP_INSTANTIATE_CONV

}  // namespace casp
