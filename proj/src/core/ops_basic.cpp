#include <cmath>

#include "core/ops.hpp"

namespace cet {

namespace {

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw DimensionError(msg);
}

}  // namespace

// ------------------------------------------------------------ elementwise

template <typename T>
Tensor<T> add(Tape<T>* tape, const Tensor<T>& a, const Tensor<T>& b) {
  require(a.shape() == b.shape(),
          "add: shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  const std::int64_t n = a.numel();
  Tensor<T> y = Tensor<T>::zeros(a.shape());
  const T* pa = a.data();
  const T* pb = b.data();
  T* py = y.data();
  for (std::int64_t i = 0; i < n; ++i) py[i] = pa[i] + pb[i];
  if (tape && (a.requires_grad() || b.requires_grad())) {
    const std::int64_t ia = tape->input_node(a);
    const std::int64_t ib = tape->input_node(b);
    tape->record(y, [ia, ib, n](const std::vector<T>& gy, Tape<T>& tp) {
      if (ia >= 0) {
        auto& ga = tp.grad_accum(ia);
        for (std::int64_t i = 0; i < n; ++i) ga[static_cast<std::size_t>(i)] += gy[static_cast<std::size_t>(i)];
      }
      if (ib >= 0) {
        auto& gb = tp.grad_accum(ib);
        for (std::int64_t i = 0; i < n; ++i) gb[static_cast<std::size_t>(i)] += gy[static_cast<std::size_t>(i)];
      }
    });
  }
  return y;
}

template <typename T>
Tensor<T> mul(Tape<T>* tape, const Tensor<T>& a, const Tensor<T>& b) {
  require(a.shape() == b.shape(),
          "mul: shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  const std::int64_t n = a.numel();
  Tensor<T> y = Tensor<T>::zeros(a.shape());
  const T* pa = a.data();
  const T* pb = b.data();
  T* py = y.data();
  for (std::int64_t i = 0; i < n; ++i) py[i] = pa[i] * pb[i];
  if (tape && (a.requires_grad() || b.requires_grad())) {
    const std::int64_t ia = tape->input_node(a);
    const std::int64_t ib = tape->input_node(b);
    Tensor<T> ac = a, bc = b;
    tape->record(y, [ia, ib, n, ac, bc](const std::vector<T>& gy, Tape<T>& tp) {
      if (ia >= 0) {
        auto& ga = tp.grad_accum(ia);
        const T* pb2 = bc.data();
        for (std::int64_t i = 0; i < n; ++i)
          ga[static_cast<std::size_t>(i)] += gy[static_cast<std::size_t>(i)] * pb2[i];
      }
      if (ib >= 0) {
        auto& gb = tp.grad_accum(ib);
        const T* pa2 = ac.data();
        for (std::int64_t i = 0; i < n; ++i)
          gb[static_cast<std::size_t>(i)] += gy[static_cast<std::size_t>(i)] * pa2[i];
      }
    });
  }
  return y;
}

template <typename T>
Tensor<T> scale(Tape<T>* tape, const Tensor<T>& a, T s) {
  const std::int64_t n = a.numel();
  Tensor<T> y = Tensor<T>::zeros(a.shape());
  const T* pa = a.data();
  T* py = y.data();
  for (std::int64_t i = 0; i < n; ++i) py[i] = pa[i] * s;
  if (tape && a.requires_grad()) {
    const std::int64_t ia = tape->input_node(a);
    tape->record(y, [ia, n, s](const std::vector<T>& gy, Tape<T>& tp) {
      auto& ga = tp.grad_accum(ia);
      for (std::int64_t i = 0; i < n; ++i)
        ga[static_cast<std::size_t>(i)] += gy[static_cast<std::size_t>(i)] * s;
    });
  }
  return y;
}

template <typename T>
Tensor<T> add_bias(Tape<T>* tape, const Tensor<T>& x, const Tensor<T>& bias, int axis) {
  require(axis >= 0 && axis < 4, "add_bias: axis out of range");
  const std::int64_t len = x.dim(axis);
  require(bias.shape() == Shape4{len, 1, 1, 1},
          "add_bias: bias " + shape_str(bias.shape()) + " does not match axis length " +
              std::to_string(len));
  // Decompose the flat index as (outer, len, inner).
  std::int64_t inner = 1;
  for (int a2 = axis + 1; a2 < 4; ++a2) inner *= x.dim(a2);
  const std::int64_t outer = x.numel() / (len * inner);
  Tensor<T> y = Tensor<T>::zeros(x.shape());
  const T* px = x.data();
  const T* pb = bias.data();
  T* py = y.data();
  for (std::int64_t o = 0; o < outer; ++o)
    for (std::int64_t c = 0; c < len; ++c) {
      const T b = pb[c];
      const std::int64_t base = (o * len + c) * inner;
      for (std::int64_t i = 0; i < inner; ++i) py[base + i] = px[base + i] + b;
    }
  if (tape && (x.requires_grad() || bias.requires_grad())) {
    const std::int64_t ix = tape->input_node(x);
    const std::int64_t ib = tape->input_node(bias);
    tape->record(y, [ix, ib, outer, len, inner](const std::vector<T>& gy, Tape<T>& tp) {
      if (ix >= 0) {
        auto& gx = tp.grad_accum(ix);
        const std::size_t n = gy.size();
        for (std::size_t i = 0; i < n; ++i) gx[i] += gy[i];
      }
      if (ib >= 0) {
        auto& gb = tp.grad_accum(ib);
        for (std::int64_t o = 0; o < outer; ++o)
          for (std::int64_t c = 0; c < len; ++c) {
            const std::int64_t base = (o * len + c) * inner;
            T s = T(0);
            for (std::int64_t i = 0; i < inner; ++i) s += gy[static_cast<std::size_t>(base + i)];
            gb[static_cast<std::size_t>(c)] += s;
          }
      }
    });
  }
  return y;
}

template <typename T>
Tensor<T> mul_channel(Tape<T>* tape, const Tensor<T>& x, const Tensor<T>& s) {
  const std::int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  require(s.shape() == Shape4{N, C, 1, 1},
          "mul_channel: scale " + shape_str(s.shape()) + " does not match map " +
              shape_str(x.shape()));
  const std::int64_t hw = H * W;
  Tensor<T> y = Tensor<T>::zeros(x.shape());
  const T* px = x.data();
  const T* ps = s.data();
  T* py = y.data();
  for (std::int64_t nc = 0; nc < N * C; ++nc) {
    const T f = ps[nc];
    const std::int64_t base = nc * hw;
    for (std::int64_t i = 0; i < hw; ++i) py[base + i] = px[base + i] * f;
  }
  if (tape && (x.requires_grad() || s.requires_grad())) {
    const std::int64_t ix = tape->input_node(x);
    const std::int64_t is = tape->input_node(s);
    Tensor<T> xc = x, sc = s;
    tape->record(y, [ix, is, xc, sc, N, C, hw](const std::vector<T>& gy, Tape<T>& tp) {
      if (ix >= 0) {
        auto& gx = tp.grad_accum(ix);
        const T* ps2 = sc.data();
        for (std::int64_t nc = 0; nc < N * C; ++nc) {
          const T f = ps2[nc];
          const std::int64_t base = nc * hw;
          for (std::int64_t i = 0; i < hw; ++i)
            gx[static_cast<std::size_t>(base + i)] += gy[static_cast<std::size_t>(base + i)] * f;
        }
      }
      if (is >= 0) {
        auto& gs = tp.grad_accum(is);
        const T* px2 = xc.data();
        for (std::int64_t nc = 0; nc < N * C; ++nc) {
          const std::int64_t base = nc * hw;
          T acc = T(0);
          for (std::int64_t i = 0; i < hw; ++i)
            acc += gy[static_cast<std::size_t>(base + i)] * px2[base + i];
          gs[static_cast<std::size_t>(nc)] += acc;
        }
      }
    });
  }
  return y;
}

namespace {

// Shared scaffold for elementwise activations with a pointwise derivative
// computed from the stored input.
template <typename T, typename Fwd, typename Bwd>
Tensor<T> pointwise(Tape<T>* tape, const Tensor<T>& x, Fwd fwd, Bwd bwd) {
  const std::int64_t n = x.numel();
  Tensor<T> y = Tensor<T>::zeros(x.shape());
  const T* px = x.data();
  T* py = y.data();
  for (std::int64_t i = 0; i < n; ++i) py[i] = fwd(px[i]);
  if (tape && x.requires_grad()) {
    const std::int64_t ix = tape->input_node(x);
    Tensor<T> xc = x;
    tape->record(y, [ix, n, xc, bwd](const std::vector<T>& gy, Tape<T>& tp) {
      auto& gx = tp.grad_accum(ix);
      const T* px2 = xc.data();
      for (std::int64_t i = 0; i < n; ++i)
        gx[static_cast<std::size_t>(i)] += gy[static_cast<std::size_t>(i)] * bwd(px2[i]);
    });
  }
  return y;
}

template <typename T>
inline T sigmoid_val(T v) {
  return T(1) / (T(1) + std::exp(-v));
}

}  // namespace

template <typename T>
Tensor<T> gelu(Tape<T>* tape, const Tensor<T>& x) {
  constexpr double kRoot2OverPi = 0.7978845608028654;
  constexpr double kCubic = 0.044715;
  auto fwd = [](T v) {
    const double vd = static_cast<double>(v);
    const double u = kRoot2OverPi * (vd + kCubic * vd * vd * vd);
    return static_cast<T>(0.5 * vd * (1.0 + std::tanh(u)));
  };
  auto bwd = [](T v) {
    const double vd = static_cast<double>(v);
    const double u = kRoot2OverPi * (vd + kCubic * vd * vd * vd);
    const double t = std::tanh(u);
    const double du = kRoot2OverPi * (1.0 + 3.0 * kCubic * vd * vd);
    return static_cast<T>(0.5 * (1.0 + t) + 0.5 * vd * (1.0 - t * t) * du);
  };
  return pointwise(tape, x, fwd, bwd);
}

template <typename T>
Tensor<T> silu(Tape<T>* tape, const Tensor<T>& x) {
  auto fwd = [](T v) { return v * sigmoid_val(v); };
  auto bwd = [](T v) {
    const T s = sigmoid_val(v);
    return s * (T(1) + v * (T(1) - s));
  };
  return pointwise(tape, x, fwd, bwd);
}

template <typename T>
Tensor<T> sigmoid(Tape<T>* tape, const Tensor<T>& x) {
  auto fwd = [](T v) { return sigmoid_val(v); };
  auto bwd = [](T v) {
    const T s = sigmoid_val(v);
    return s * (T(1) - s);
  };
  return pointwise(tape, x, fwd, bwd);
}

// --------------------------------------------------------------- layout

template <typename T>
Tensor<T> reshape(Tape<T>* tape, const Tensor<T>& x, const Shape4& shape) {
  require(shape_numel(shape) == x.numel(), "reshape: " + shape_str(x.shape()) + " -> " +
                                               shape_str(shape) + " changes element count");
  // Element order is identical, so the output aliases the input storage; the
  // tape node is a flat identity.
  Tensor<T> y = x.aliased_with_shape(shape);
  if (tape && x.requires_grad()) {
    const std::int64_t ix = tape->input_node(x);
    tape->record(y, [ix](const std::vector<T>& gy, Tape<T>& tp) {
      auto& gx = tp.grad_accum(ix);
      const std::size_t n = gy.size();
      for (std::size_t i = 0; i < n; ++i) gx[i] += gy[i];
    });
  }
  return y;
}

template <typename T>
Tensor<T> permute(Tape<T>* tape, const Tensor<T>& x, const std::array<int, 4>& perm) {
  {
    std::array<bool, 4> seen{false, false, false, false};
    for (int a : perm) {
      require(a >= 0 && a < 4 && !seen[static_cast<std::size_t>(a)],
              "permute: invalid axis permutation");
      seen[static_cast<std::size_t>(a)] = true;
    }
  }
  const Shape4 in = x.shape();
  Shape4 out_shape;
  for (int k = 0; k < 4; ++k)
    out_shape[static_cast<std::size_t>(k)] = in[static_cast<std::size_t>(perm[static_cast<std::size_t>(k)])];
  Tensor<T> y = Tensor<T>::zeros(out_shape);

  // Strides of the input, then reordered so stride_for_out_axis[k] walks the
  // input as out axis k increments.
  std::array<std::int64_t, 4> istr{in[1] * in[2] * in[3], in[2] * in[3], in[3], 1};
  std::array<std::int64_t, 4> str;
  for (int k = 0; k < 4; ++k)
    str[static_cast<std::size_t>(k)] = istr[static_cast<std::size_t>(perm[static_cast<std::size_t>(k)])];

  const T* px = x.data();
  T* py = y.data();
  std::int64_t o = 0;
  for (std::int64_t i0 = 0; i0 < out_shape[0]; ++i0)
    for (std::int64_t i1 = 0; i1 < out_shape[1]; ++i1)
      for (std::int64_t i2 = 0; i2 < out_shape[2]; ++i2) {
        std::int64_t base = i0 * str[0] + i1 * str[1] + i2 * str[2];
        for (std::int64_t i3 = 0; i3 < out_shape[3]; ++i3)
          py[o++] = px[base + i3 * str[3]];
      }

  if (tape && x.requires_grad()) {
    const std::int64_t ix = tape->input_node(x);
    tape->record(y, [ix, out_shape, str](const std::vector<T>& gy, Tape<T>& tp) {
      auto& gx = tp.grad_accum(ix);
      std::int64_t o2 = 0;
      for (std::int64_t i0 = 0; i0 < out_shape[0]; ++i0)
        for (std::int64_t i1 = 0; i1 < out_shape[1]; ++i1)
          for (std::int64_t i2 = 0; i2 < out_shape[2]; ++i2) {
            std::int64_t base = i0 * str[0] + i1 * str[1] + i2 * str[2];
            for (std::int64_t i3 = 0; i3 < out_shape[3]; ++i3)
              gx[static_cast<std::size_t>(base + i3 * str[3])] +=
                  gy[static_cast<std::size_t>(o2++)];
          }
    });
  }
  return y;
}

template <typename T>
Tensor<T> cyclic_shift(Tape<T>* tape, const Tensor<T>& x, int dh, int dw) {
  const std::int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  auto mod = [](std::int64_t a, std::int64_t m) { return ((a % m) + m) % m; };
  Tensor<T> y = Tensor<T>::zeros(x.shape());
  const T* px = x.data();
  T* py = y.data();
  for (std::int64_t nc = 0; nc < N * C; ++nc) {
    const std::int64_t base = nc * H * W;
    for (std::int64_t h = 0; h < H; ++h) {
      const std::int64_t sh = mod(h - dh, H);
      for (std::int64_t w = 0; w < W; ++w)
        py[base + h * W + w] = px[base + sh * W + mod(w - dw, W)];
    }
  }
  if (tape && x.requires_grad()) {
    const std::int64_t ix = tape->input_node(x);
    tape->record(y, [ix, N, C, H, W, dh, dw, mod](const std::vector<T>& gy, Tape<T>& tp) {
      auto& gx = tp.grad_accum(ix);
      for (std::int64_t nc = 0; nc < N * C; ++nc) {
        const std::int64_t base = nc * H * W;
        for (std::int64_t h = 0; h < H; ++h) {
          const std::int64_t sh = mod(h - dh, H);
          for (std::int64_t w = 0; w < W; ++w)
            gx[static_cast<std::size_t>(base + sh * W + mod(w - dw, W))] +=
                gy[static_cast<std::size_t>(base + h * W + w)];
        }
      }
    });
  }
  return y;
}

template <typename T>
Tensor<T> pad_hw(Tape<T>* tape, const Tensor<T>& x, int ph, int pw) {
  require(ph >= 0 && pw >= 0, "pad_hw: negative padding");
  const std::int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const std::int64_t Ho = H + ph, Wo = W + pw;
  Tensor<T> y = Tensor<T>::zeros({N, C, Ho, Wo});
  const T* px = x.data();
  T* py = y.data();
  for (std::int64_t nc = 0; nc < N * C; ++nc)
    for (std::int64_t h = 0; h < H; ++h) {
      const std::int64_t src = (nc * H + h) * W;
      const std::int64_t dst = (nc * Ho + h) * Wo;
      for (std::int64_t w = 0; w < W; ++w) py[dst + w] = px[src + w];
    }
  if (tape && x.requires_grad()) {
    const std::int64_t ix = tape->input_node(x);
    tape->record(y, [ix, N, C, H, W, Ho, Wo](const std::vector<T>& gy, Tape<T>& tp) {
      auto& gx = tp.grad_accum(ix);
      for (std::int64_t nc = 0; nc < N * C; ++nc)
        for (std::int64_t h = 0; h < H; ++h) {
          const std::int64_t src = (nc * Ho + h) * Wo;
          const std::int64_t dst = (nc * H + h) * W;
          for (std::int64_t w = 0; w < W; ++w)
            gx[static_cast<std::size_t>(dst + w)] += gy[static_cast<std::size_t>(src + w)];
        }
    });
  }
  return y;
}

template <typename T>
Tensor<T> crop_hw(Tape<T>* tape, const Tensor<T>& x, std::int64_t H, std::int64_t W) {
  const std::int64_t N = x.dim(0), C = x.dim(1), Hi = x.dim(2), Wi = x.dim(3);
  require(H <= Hi && W <= Wi && H > 0 && W > 0,
          "crop_hw: target " + std::to_string(H) + "x" + std::to_string(W) +
              " exceeds source " + shape_str(x.shape()));
  Tensor<T> y = Tensor<T>::zeros({N, C, H, W});
  const T* px = x.data();
  T* py = y.data();
  for (std::int64_t nc = 0; nc < N * C; ++nc)
    for (std::int64_t h = 0; h < H; ++h) {
      const std::int64_t src = (nc * Hi + h) * Wi;
      const std::int64_t dst = (nc * H + h) * W;
      for (std::int64_t w = 0; w < W; ++w) py[dst + w] = px[src + w];
    }
  if (tape && x.requires_grad()) {
    const std::int64_t ix = tape->input_node(x);
    tape->record(y, [ix, N, C, H, W, Hi, Wi](const std::vector<T>& gy, Tape<T>& tp) {
      auto& gx = tp.grad_accum(ix);
      for (std::int64_t nc = 0; nc < N * C; ++nc)
        for (std::int64_t h = 0; h < H; ++h) {
          const std::int64_t dst = (nc * Hi + h) * Wi;
          const std::int64_t src = (nc * H + h) * W;
          for (std::int64_t w = 0; w < W; ++w)
            gx[static_cast<std::size_t>(dst + w)] += gy[static_cast<std::size_t>(src + w)];
        }
    });
  }
  return y;
}

template <typename T>
Tensor<T> to_tokens(Tape<T>* tape, const Tensor<T>& x) {
  const std::int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  Tensor<T> nhwc = permute(tape, x, {0, 2, 3, 1});
  return reshape(tape, nhwc, {N, H * W, C, 1});
}

template <typename T>
Tensor<T> to_image(Tape<T>* tape, const Tensor<T>& x, std::int64_t H, std::int64_t W) {
  const std::int64_t N = x.dim(0), L = x.dim(1), C = x.dim(2);
  require(L == H * W && x.dim(3) == 1,
          "to_image: tokens " + shape_str(x.shape()) + " do not cover " + std::to_string(H) +
              "x" + std::to_string(W));
  Tensor<T> nhwc = reshape(tape, x, {N, H, W, C});
  return permute(tape, nhwc, {0, 3, 1, 2});
}

// ------------------------------------------------------------ reductions

template <typename T>
Tensor<T> sum_all(Tape<T>* tape, const Tensor<T>& x) {
  const std::int64_t n = x.numel();
  const T* px = x.data();
  T acc = T(0);
  for (std::int64_t i = 0; i < n; ++i) acc += px[i];
  Tensor<T> y = Tensor<T>::scalar(acc);
  if (tape && x.requires_grad()) {
    const std::int64_t ix = tape->input_node(x);
    tape->record(y, [ix, n](const std::vector<T>& gy, Tape<T>& tp) {
      auto& gx = tp.grad_accum(ix);
      const T g = gy[0];
      for (std::int64_t i = 0; i < n; ++i) gx[static_cast<std::size_t>(i)] += g;
    });
  }
  return y;
}

template <typename T>
Tensor<T> mean_tokens(Tape<T>* tape, const Tensor<T>& x) {
  const std::int64_t N = x.dim(0), L = x.dim(1), C = x.dim(2);
  require(x.dim(3) == 1, "mean_tokens: expected tokens (N,L,C,1), got " + shape_str(x.shape()));
  Tensor<T> y = Tensor<T>::zeros({N, 1, C, 1});
  const T* px = x.data();
  T* py = y.data();
  const T inv = T(1) / static_cast<T>(L);
  for (std::int64_t n = 0; n < N; ++n)
    for (std::int64_t c = 0; c < C; ++c) {
      T acc = T(0);
      for (std::int64_t l = 0; l < L; ++l) acc += px[(n * L + l) * C + c];
      py[n * C + c] = acc * inv;
    }
  if (tape && x.requires_grad()) {
    const std::int64_t ix = tape->input_node(x);
    tape->record(y, [ix, N, L, C, inv](const std::vector<T>& gy, Tape<T>& tp) {
      auto& gx = tp.grad_accum(ix);
      for (std::int64_t n = 0; n < N; ++n)
        for (std::int64_t l = 0; l < L; ++l)
          for (std::int64_t c = 0; c < C; ++c)
            gx[static_cast<std::size_t>((n * L + l) * C + c)] +=
                gy[static_cast<std::size_t>(n * C + c)] * inv;
    });
  }
  return y;
}

template <typename T>
Tensor<T> global_avg_pool(Tape<T>* tape, const Tensor<T>& x) {
  const std::int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const std::int64_t hw = H * W;
  Tensor<T> y = Tensor<T>::zeros({N, C, 1, 1});
  const T* px = x.data();
  T* py = y.data();
  const T inv = T(1) / static_cast<T>(hw);
  for (std::int64_t nc = 0; nc < N * C; ++nc) {
    T acc = T(0);
    const std::int64_t base = nc * hw;
    for (std::int64_t i = 0; i < hw; ++i) acc += px[base + i];
    py[nc] = acc * inv;
  }
  if (tape && x.requires_grad()) {
    const std::int64_t ix = tape->input_node(x);
    tape->record(y, [ix, N, C, hw, inv](const std::vector<T>& gy, Tape<T>& tp) {
      auto& gx = tp.grad_accum(ix);
      for (std::int64_t nc = 0; nc < N * C; ++nc) {
        const T g = gy[static_cast<std::size_t>(nc)] * inv;
        const std::int64_t base = nc * hw;
        for (std::int64_t i = 0; i < hw; ++i) gx[static_cast<std::size_t>(base + i)] += g;
      }
    });
  }
  return y;
}

// ------------------------------------------------- explicit instantiations

#define CET_INSTANTIATE_BASIC(T)                                                            \
  template Tensor<T> add(Tape<T>*, const Tensor<T>&, const Tensor<T>&);                     \
  template Tensor<T> mul(Tape<T>*, const Tensor<T>&, const Tensor<T>&);                     \
  template Tensor<T> scale(Tape<T>*, const Tensor<T>&, T);                                  \
  template Tensor<T> add_bias(Tape<T>*, const Tensor<T>&, const Tensor<T>&, int);           \
  template Tensor<T> mul_channel(Tape<T>*, const Tensor<T>&, const Tensor<T>&);             \
  template Tensor<T> gelu(Tape<T>*, const Tensor<T>&);                                      \
  template Tensor<T> silu(Tape<T>*, const Tensor<T>&);                                      \
  template Tensor<T> sigmoid(Tape<T>*, const Tensor<T>&);                                   \
  template Tensor<T> reshape(Tape<T>*, const Tensor<T>&, const Shape4&);                    \
  template Tensor<T> permute(Tape<T>*, const Tensor<T>&, const std::array<int, 4>&);        \
  template Tensor<T> cyclic_shift(Tape<T>*, const Tensor<T>&, int, int);                    \
  template Tensor<T> pad_hw(Tape<T>*, const Tensor<T>&, int, int);                          \
  template Tensor<T> crop_hw(Tape<T>*, const Tensor<T>&, std::int64_t, std::int64_t);       \
  template Tensor<T> to_tokens(Tape<T>*, const Tensor<T>&);                                 \
  template Tensor<T> to_image(Tape<T>*, const Tensor<T>&, std::int64_t, std::int64_t);      \
  template Tensor<T> sum_all(Tape<T>*, const Tensor<T>&);                                   \
  template Tensor<T> mean_tokens(Tape<T>*, const Tensor<T>&);                               \
  template Tensor<T> global_avg_pool(Tape<T>*, const Tensor<T>&);

CET_INSTANTIATE_BASIC(float)
CET_INSTANTIATE_BASIC(double)

}  // namespace cet
