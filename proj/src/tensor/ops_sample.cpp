// Copyright (c) 2026 The casp authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "casp/ops.hpp"
#include "tensor_util.hpp"

namespace casp {

namespace {

template <class T>
inline T tap(const T* img, long H, long W, long y, long x) {
  if (y < 0 || y >= H || x < 0 || x >= W) return T(0);
  return img[y * W + x];
}

}  // namespace

template <class T>
TensorT<T> bilinear_sample(const TensorT<T>& value, const TensorT<T>& points) {
  if (value.rank() != 4)
    throw ShapeError("bilinear_sample expects value[B,C,H,W], got " + shape_str(value.shape()));
  if (points.rank() != 3 || points.dim(2) != 2)
    throw ShapeError("bilinear_sample expects points[B,P,2], got " + shape_str(points.shape()));
  if (points.dim(0) != value.dim(0))
    throw ShapeError("bilinear_sample batch mismatch: " + shape_str(value.shape()) + " vs " +
                     shape_str(points.shape()));
  const std::size_t B = value.dim(0), C = value.dim(1), H = value.dim(2), W = value.dim(3);
  const std::size_t P = points.dim(1);

  TensorT<T> out({B, P, C});
  T* o = out.mutable_data();
  const T* v = value.data();
  const T* pt = points.data();
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t p = 0; p < P; ++p) {
      const T xp = pt[(b * P + p) * 2 + 0] * static_cast<T>(W) - T(0.5);
      const T yp = pt[(b * P + p) * 2 + 1] * static_cast<T>(H) - T(0.5);
      const long x0 = static_cast<long>(std::floor(xp));
      const long y0 = static_cast<long>(std::floor(yp));
      const T fx = xp - static_cast<T>(x0);
      const T fy = yp - static_cast<T>(y0);
      const T w00 = (T(1) - fx) * (T(1) - fy), w10 = fx * (T(1) - fy);
      const T w01 = (T(1) - fx) * fy, w11 = fx * fy;
      for (std::size_t c = 0; c < C; ++c) {
        const T* img = v + (b * C + c) * H * W;
        o[(b * P + p) * C + c] =
            w00 * tap(img, H, W, y0, x0) + w10 * tap(img, H, W, y0, x0 + 1) +
            w01 * tap(img, H, W, y0 + 1, x0) + w11 * tap(img, H, W, y0 + 1, x0 + 1);
      }
    }

  if (value.tracked() && points.tracked() && value.tape() != points.tape())
    throw UsageError("operands live on different tapes");
  Tape<T>* tape = value.tracked() ? value.tape() : (points.tracked() ? points.tape() : nullptr);
  if (tape == nullptr) return out;

  const int nv = value.tracked() ? value.node() : -1;
  const int np = points.tracked() ? points.node() : -1;
  TensorT<T> vd = value.detached();
  TensorT<T> pd = points.detached();
  return tape->track(std::move(out), [nv, np, vd, pd, B, C, H, W, P](const TensorT<T>& up,
                                                                     Tape<T>& t) {
    const T* gu = up.data();
    const T* v = vd.data();
    const T* pt = pd.data();
    TensorT<T> gv = nv >= 0 ? TensorT<T>(vd.shape()) : TensorT<T>();
    TensorT<T> gp = np >= 0 ? TensorT<T>(pd.shape()) : TensorT<T>();
    T* pgv = nv >= 0 ? gv.mutable_data() : nullptr;
    T* pgp = np >= 0 ? gp.mutable_data() : nullptr;
    const long lh = static_cast<long>(H), lw = static_cast<long>(W);
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t p = 0; p < P; ++p) {
        const T xp = pt[(b * P + p) * 2 + 0] * static_cast<T>(W) - T(0.5);
        const T yp = pt[(b * P + p) * 2 + 1] * static_cast<T>(H) - T(0.5);
        const long x0 = static_cast<long>(std::floor(xp));
        const long y0 = static_cast<long>(std::floor(yp));
        const T fx = xp - static_cast<T>(x0);
        const T fy = yp - static_cast<T>(y0);
        const T w00 = (T(1) - fx) * (T(1) - fy), w10 = fx * (T(1) - fy);
        const T w01 = (T(1) - fx) * fy, w11 = fx * fy;
        T gx = T(0), gy = T(0);
        for (std::size_t c = 0; c < C; ++c) {
          const T g = gu[(b * P + p) * C + c];
          const T* img = v + (b * C + c) * H * W;
          const T v00 = tap(img, lh, lw, y0, x0), v10 = tap(img, lh, lw, y0, x0 + 1);
          const T v01 = tap(img, lh, lw, y0 + 1, x0), v11 = tap(img, lh, lw, y0 + 1, x0 + 1);
          if (pgv != nullptr) {
            T* gimg = pgv + (b * C + c) * H * W;
            auto put = [&](long y, long x, T wgt) {
              if (y >= 0 && y < lh && x >= 0 && x < lw) gimg[y * lw + x] += wgt * g;
            };
            put(y0, x0, w00);
            put(y0, x0 + 1, w10);
            put(y0 + 1, x0, w01);
            put(y0 + 1, x0 + 1, w11);
          }
          gx += g * ((v10 - v00) * (T(1) - fy) + (v11 - v01) * fy);
          gy += g * ((v01 - v00) * (T(1) - fx) + (v11 - v10) * fx);
        }
        if (pgp != nullptr) {
          pgp[(b * P + p) * 2 + 0] += gx * static_cast<T>(W);
          pgp[(b * P + p) * 2 + 1] += gy * static_cast<T>(H);
        }
      }
    if (nv >= 0) t.accumulate(nv, gv);
    if (np >= 0) t.accumulate(np, gp);
  });
}

template TensorT<float> bilinear_sample<float>(const TensorT<float>&, const TensorT<float>&);
template TensorT<double> bilinear_sample<double>(const TensorT<double>&, const TensorT<double>&);

}  // namespace casp
