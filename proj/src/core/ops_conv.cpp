#include "core/ops.hpp"

namespace cet {

namespace {

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw DimensionError(msg);
}

}  // namespace

template <typename T>
Tensor<T> conv2d(Tape<T>* tape, const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>* bias,
                 const ConvSpec& spec) {
  const std::int64_t N = x.dim(0), Cin = x.dim(1), H = x.dim(2), W = x.dim(3);
  const std::int64_t Cout = w.dim(0), Cil = w.dim(1), kh = w.dim(2), kw = w.dim(3);
  const std::int64_t s = spec.stride, p = spec.pad, G = spec.groups;
  if (s < 1 || p < 0 || G < 1) throw ConfigError("conv2d: invalid stride/pad/groups");
  if (Cin % G != 0 || Cout % G != 0) {
    throw ConfigError("conv2d: channels (" + std::to_string(Cin) + "->" + std::to_string(Cout) +
                      ") not divisible by groups " + std::to_string(G));
  }
  require(Cil == Cin / G, "conv2d: weight " + shape_str(w.shape()) + " expects " +
                              std::to_string(Cil * G) + " input channels, got " +
                              std::to_string(Cin));
  require(H + 2 * p >= kh && W + 2 * p >= kw,
          "conv2d: kernel " + std::to_string(kh) + "x" + std::to_string(kw) +
              " larger than padded input " + shape_str(x.shape()));
  if (bias) {
    require(bias->shape() == Shape4{Cout, 1, 1, 1},
            "conv2d: bias " + shape_str(bias->shape()) + " must be (" + std::to_string(Cout) +
                ",1,1,1)");
  }
  const std::int64_t Ho = (H + 2 * p - kh) / s + 1;
  const std::int64_t Wo = (W + 2 * p - kw) / s + 1;
  Tensor<T> y = Tensor<T>::zeros({N, Cout, Ho, Wo});
  const T* px = x.data();
  const T* pw = w.data();
  const T* pb = bias ? bias->data() : nullptr;
  T* py = y.data();

  const bool one_by_one = (kh == 1 && kw == 1 && s == 1 && p == 0 && G == 1);
  const bool depthwise = (G == Cin && G == Cout && Cil == 1);

  if (one_by_one) {
    // Pointwise: y[n,co,:] = b[co] + sum_ci w[co,ci] * x[n,ci,:], streamed over
    // the spatial plane with a fixed ci order.
    const std::int64_t hw = H * W;
    for (std::int64_t n = 0; n < N; ++n) {
      const T* xn = px + n * Cin * hw;
      T* yn = py + n * Cout * hw;
      for (std::int64_t co = 0; co < Cout; ++co) {
        T* yp = yn + co * hw;
        const T b = pb ? pb[co] : T(0);
        for (std::int64_t i = 0; i < hw; ++i) yp[i] = b;
        const T* wr = pw + co * Cin;
        for (std::int64_t ci = 0; ci < Cin; ++ci) {
          const T f = wr[ci];
          const T* xp = xn + ci * hw;
          for (std::int64_t i = 0; i < hw; ++i) yp[i] += f * xp[i];
        }
      }
    }
  } else if (depthwise) {
    for (std::int64_t n = 0; n < N; ++n)
      for (std::int64_t c = 0; c < Cin; ++c) {
        const T* xp = px + (n * Cin + c) * H * W;
        const T* wr = pw + c * kh * kw;
        T* yp = py + (n * Cout + c) * Ho * Wo;
        const T b = pb ? pb[c] : T(0);
        for (std::int64_t oh = 0; oh < Ho; ++oh)
          for (std::int64_t ow = 0; ow < Wo; ++ow) {
            T acc = b;
            const std::int64_t ih0 = oh * s - p, iw0 = ow * s - p;
            for (std::int64_t u = 0; u < kh; ++u) {
              const std::int64_t ih = ih0 + u;
              if (ih < 0 || ih >= H) continue;
              for (std::int64_t v = 0; v < kw; ++v) {
                const std::int64_t iw = iw0 + v;
                if (iw < 0 || iw >= W) continue;
                acc += xp[ih * W + iw] * wr[u * kw + v];
              }
            }
            yp[oh * Wo + ow] = acc;
          }
      }
  } else {
    const std::int64_t co_per_g = Cout / G;
    for (std::int64_t n = 0; n < N; ++n)
      for (std::int64_t co = 0; co < Cout; ++co) {
        const std::int64_t g = co / co_per_g;
        const T* wco = pw + co * Cil * kh * kw;
        T* yp = py + (n * Cout + co) * Ho * Wo;
        const T b = pb ? pb[co] : T(0);
        for (std::int64_t oh = 0; oh < Ho; ++oh)
          for (std::int64_t ow = 0; ow < Wo; ++ow) {
            T acc = b;
            const std::int64_t ih0 = oh * s - p, iw0 = ow * s - p;
            for (std::int64_t cl = 0; cl < Cil; ++cl) {
              const T* xp = px + (n * Cin + g * Cil + cl) * H * W;
              const T* wr = wco + cl * kh * kw;
              for (std::int64_t u = 0; u < kh; ++u) {
                const std::int64_t ih = ih0 + u;
                if (ih < 0 || ih >= H) continue;
                for (std::int64_t v = 0; v < kw; ++v) {
                  const std::int64_t iw = iw0 + v;
                  if (iw < 0 || iw >= W) continue;
                  acc += xp[ih * W + iw] * wr[u * kw + v];
                }
              }
            }
            yp[oh * Wo + ow] = acc;
          }
      }
  }

  const bool need = tape && (x.requires_grad() || w.requires_grad() ||
                             (bias && bias->requires_grad()));
  if (need) {
    const std::int64_t ix = tape->input_node(x);
    const std::int64_t iw_ = tape->input_node(w);
    const std::int64_t ib = bias ? tape->input_node(*bias) : -1;
    Tensor<T> xc = x, wc = w;
    tape->record(y, [ix, iw_, ib, xc, wc, N, Cin, H, W, Cout, Cil, kh, kw, s, p, G, Ho,
                     Wo](const std::vector<T>& gy, Tape<T>& tp) {
      // One fused scatter pass in forward loop order; each accumulation target
      // is touched in a fixed sequence.
      const T* px2 = xc.data();
      const T* pw2 = wc.data();
      T* gx = nullptr;
      T* gw = nullptr;
      T* gb = nullptr;
      if (ix >= 0) gx = tp.grad_accum(ix).data();
      if (iw_ >= 0) gw = tp.grad_accum(iw_).data();
      if (ib >= 0) gb = tp.grad_accum(ib).data();
      const std::int64_t co_per_g = Cout / G;
      for (std::int64_t n = 0; n < N; ++n)
        for (std::int64_t co = 0; co < Cout; ++co) {
          const std::int64_t g = co / co_per_g;
          const T* wco = pw2 + co * Cil * kh * kw;
          const T* gyp = gy.data() + (n * Cout + co) * Ho * Wo;
          for (std::int64_t oh = 0; oh < Ho; ++oh)
            for (std::int64_t ow = 0; ow < Wo; ++ow) {
              const T gout = gyp[oh * Wo + ow];
              if (gb) gb[co] += gout;
              const std::int64_t ih0 = oh * s - p, iw0 = ow * s - p;
              for (std::int64_t cl = 0; cl < Cil; ++cl) {
                const std::int64_t ci = g * Cil + cl;
                const std::int64_t xbase = (n * Cin + ci) * H * W;
                const std::int64_t wbase = cl * kh * kw;
                for (std::int64_t u = 0; u < kh; ++u) {
                  const std::int64_t ih = ih0 + u;
                  if (ih < 0 || ih >= H) continue;
                  for (std::int64_t v = 0; v < kw; ++v) {
                    const std::int64_t iw2 = iw0 + v;
                    if (iw2 < 0 || iw2 >= W) continue;
                    if (gw) gw[co * Cil * kh * kw + wbase + u * kw + v] +=
                        gout * px2[xbase + ih * W + iw2];
                    if (gx) gx[xbase + ih * W + iw2] += gout * wco[wbase + u * kw + v];
                  }
                }
              }
            }
        }
    });
  }
  return y;
}

template Tensor<float> conv2d(Tape<float>*, const Tensor<float>&, const Tensor<float>&,
                              const Tensor<float>*, const ConvSpec&);
template Tensor<double> conv2d(Tape<double>*, const Tensor<double>&, const Tensor<double>&,
                               const Tensor<double>*, const ConvSpec&);

}  // namespace cet
