#include <cmath>

#include "core/ops.hpp"

namespace cet {

namespace {

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw DimensionError(msg);
}

}  // namespace

template <typename T>
Tensor<T> layer_norm(Tape<T>* tape, const Tensor<T>& x, const Tensor<T>& gamma,
                     const Tensor<T>& beta, T eps) {
  if (!(eps > T(0))) throw ConfigError("layer_norm: eps must be positive");
  const std::int64_t C = x.dim(2);
  require(x.dim(3) == 1, "layer_norm: expected tokens (A,L,C,1), got " + shape_str(x.shape()));
  require(gamma.shape() == Shape4{C, 1, 1, 1} && beta.shape() == Shape4{C, 1, 1, 1},
          "layer_norm: affine shapes " + shape_str(gamma.shape()) + "/" +
              shape_str(beta.shape()) + " must be (" + std::to_string(C) + ",1,1,1)");
  const std::int64_t rows = x.dim(0) * x.dim(1);
  Tensor<T> y = Tensor<T>::zeros(x.shape());
  std::vector<T> mean(static_cast<std::size_t>(rows));
  std::vector<T> rstd(static_cast<std::size_t>(rows));
  const T* px = x.data();
  const T* pg = gamma.data();
  const T* pbta = beta.data();
  T* py = y.data();
  const T invC = T(1) / static_cast<T>(C);
  for (std::int64_t r = 0; r < rows; ++r) {
    const T* xr = px + r * C;
    T mu = T(0);
    for (std::int64_t c = 0; c < C; ++c) mu += xr[c];
    mu *= invC;
    T var = T(0);
    for (std::int64_t c = 0; c < C; ++c) {
      const T d = xr[c] - mu;
      var += d * d;
    }
    var *= invC;
    const T rs = T(1) / std::sqrt(var + eps);
    mean[static_cast<std::size_t>(r)] = mu;
    rstd[static_cast<std::size_t>(r)] = rs;
    T* yr = py + r * C;
    for (std::int64_t c = 0; c < C; ++c) yr[c] = (xr[c] - mu) * rs * pg[c] + pbta[c];
  }

  const bool need =
      tape && (x.requires_grad() || gamma.requires_grad() || beta.requires_grad());
  if (need) {
    const std::int64_t ix = tape->input_node(x);
    const std::int64_t ig = tape->input_node(gamma);
    const std::int64_t ib = tape->input_node(beta);
    Tensor<T> xc = x, gc = gamma;
    tape->record(y, [ix, ig, ib, xc, gc, rows, C, invC, mean = std::move(mean),
                     rstd = std::move(rstd)](const std::vector<T>& gy, Tape<T>& tp) {
      const T* px2 = xc.data();
      const T* pg2 = gc.data();
      T* gx = ix >= 0 ? tp.grad_accum(ix).data() : nullptr;
      T* gg = ig >= 0 ? tp.grad_accum(ig).data() : nullptr;
      T* gb = ib >= 0 ? tp.grad_accum(ib).data() : nullptr;
      for (std::int64_t r = 0; r < rows; ++r) {
        const T* xr = px2 + r * C;
        const T* gyr = gy.data() + r * C;
        const T mu = mean[static_cast<std::size_t>(r)];
        const T rs = rstd[static_cast<std::size_t>(r)];
        if (gg || gb) {
          for (std::int64_t c = 0; c < C; ++c) {
            if (gg) gg[c] += gyr[c] * (xr[c] - mu) * rs;
            if (gb) gb[c] += gyr[c];
          }
        }
        if (gx) {
          T sum_a = T(0), sum_ax = T(0);
          for (std::int64_t c = 0; c < C; ++c) {
            const T a = gyr[c] * pg2[c];
            sum_a += a;
            sum_ax += a * (xr[c] - mu) * rs;
          }
          const T ma = sum_a * invC;
          const T max_ = sum_ax * invC;
          for (std::int64_t c = 0; c < C; ++c) {
            const T xh = (xr[c] - mu) * rs;
            gx[r * C + c] += rs * (gyr[c] * pg2[c] - ma - xh * max_);
          }
        }
      }
    });
  }
  return y;
}

template <typename T>
Tensor<T> batch_norm(Tape<T>* tape, const Tensor<T>& x, const Tensor<T>& gamma,
                     const Tensor<T>& beta, Tensor<T>& running_mean, Tensor<T>& running_var,
                     bool training, T momentum, T eps) {
  const std::int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const Shape4 cs{C, 1, 1, 1};
  require(gamma.shape() == cs && beta.shape() == cs && running_mean.shape() == cs &&
              running_var.shape() == cs,
          "batch_norm: per-channel tensors must be (" + std::to_string(C) + ",1,1,1)");
  if (running_mean.requires_grad() || running_var.requires_grad()) {
    throw UsageError("batch_norm: running statistics must not require grad");
  }
  const std::int64_t hw = H * W;
  const std::int64_t count = N * hw;
  Tensor<T> y = Tensor<T>::zeros(x.shape());
  const T* px = x.data();
  const T* pg = gamma.data();
  const T* pb = beta.data();
  T* py = y.data();

  std::vector<T> mean(static_cast<std::size_t>(C));
  std::vector<T> rstd(static_cast<std::size_t>(C));
  if (training) {
    require(count > 0, "batch_norm: empty batch");
    const T inv = T(1) / static_cast<T>(count);
    for (std::int64_t c = 0; c < C; ++c) {
      T mu = T(0);
      for (std::int64_t n = 0; n < N; ++n) {
        const T* xp = px + (n * C + c) * hw;
        for (std::int64_t i = 0; i < hw; ++i) mu += xp[i];
      }
      mu *= inv;
      T var = T(0);
      for (std::int64_t n = 0; n < N; ++n) {
        const T* xp = px + (n * C + c) * hw;
        for (std::int64_t i = 0; i < hw; ++i) {
          const T d = xp[i] - mu;
          var += d * d;
        }
      }
      var *= inv;  // biased, used for normalization
      mean[static_cast<std::size_t>(c)] = mu;
      rstd[static_cast<std::size_t>(c)] = T(1) / std::sqrt(var + eps);
      // Running stats keep the unbiased variance.
      const T unbiased =
          count > 1 ? var * static_cast<T>(count) / static_cast<T>(count - 1) : var;
      running_mean.data()[c] = (T(1) - momentum) * running_mean.data()[c] + momentum * mu;
      running_var.data()[c] = (T(1) - momentum) * running_var.data()[c] + momentum * unbiased;
    }
  } else {
    for (std::int64_t c = 0; c < C; ++c) {
      mean[static_cast<std::size_t>(c)] = running_mean.data()[c];
      rstd[static_cast<std::size_t>(c)] = T(1) / std::sqrt(running_var.data()[c] + eps);
    }
  }

  for (std::int64_t n = 0; n < N; ++n)
    for (std::int64_t c = 0; c < C; ++c) {
      const T mu = mean[static_cast<std::size_t>(c)];
      const T rs = rstd[static_cast<std::size_t>(c)];
      const T g = pg[c], b = pb[c];
      const T* xp = px + (n * C + c) * hw;
      T* yp = py + (n * C + c) * hw;
      for (std::int64_t i = 0; i < hw; ++i) yp[i] = (xp[i] - mu) * rs * g + b;
    }

  const bool need =
      tape && (x.requires_grad() || gamma.requires_grad() || beta.requires_grad());
  if (need) {
    const std::int64_t ix = tape->input_node(x);
    const std::int64_t ig = tape->input_node(gamma);
    const std::int64_t ib = tape->input_node(beta);
    Tensor<T> xc = x, gc = gamma;
    tape->record(y, [ix, ig, ib, xc, gc, N, C, hw, count, training, mean = std::move(mean),
                     rstd = std::move(rstd)](const std::vector<T>& gy, Tape<T>& tp) {
      const T* px2 = xc.data();
      const T* pg2 = gc.data();
      T* gx = ix >= 0 ? tp.grad_accum(ix).data() : nullptr;
      T* gg = ig >= 0 ? tp.grad_accum(ig).data() : nullptr;
      T* gb = ib >= 0 ? tp.grad_accum(ib).data() : nullptr;
      const T inv = T(1) / static_cast<T>(count);
      for (std::int64_t c = 0; c < C; ++c) {
        const T mu = mean[static_cast<std::size_t>(c)];
        const T rs = rstd[static_cast<std::size_t>(c)];
        T sum_g = T(0), sum_gx = T(0);
        for (std::int64_t n = 0; n < N; ++n) {
          const T* xp = px2 + (n * C + c) * hw;
          const T* gp = gy.data() + (n * C + c) * hw;
          for (std::int64_t i = 0; i < hw; ++i) {
            sum_g += gp[i];
            sum_gx += gp[i] * (xp[i] - mu) * rs;
          }
        }
        if (gg) gg[c] += sum_gx;
        if (gb) gb[c] += sum_g;
        if (gx) {
          const T g = pg2[c];
          if (training) {
            // Batch statistics depend on x: full affine-normalization backward.
            const T mg = sum_g * inv;
            const T mgx = sum_gx * inv;
            for (std::int64_t n = 0; n < N; ++n) {
              const T* xp = px2 + (n * C + c) * hw;
              const T* gp = gy.data() + (n * C + c) * hw;
              T* gxp = gx + (n * C + c) * hw;
              for (std::int64_t i = 0; i < hw; ++i) {
                const T xh = (xp[i] - mu) * rs;
                gxp[i] += g * rs * (gp[i] - mg - xh * mgx);
              }
            }
          } else {
            // Running statistics are constants: plain per-channel affine.
            for (std::int64_t n = 0; n < N; ++n) {
              const T* gp = gy.data() + (n * C + c) * hw;
              T* gxp = gx + (n * C + c) * hw;
              for (std::int64_t i = 0; i < hw; ++i) gxp[i] += g * rs * gp[i];
            }
          }
        }
      }
    });
  }
  return y;
}

template <typename T>
Tensor<T> softmax_last(Tape<T>* tape, const Tensor<T>& x) {
  const std::int64_t cols = x.dim(3);
  const std::int64_t rows = x.numel() / cols;
  Tensor<T> y = Tensor<T>::zeros(x.shape());
  const T* px = x.data();
  T* py = y.data();
  for (std::int64_t r = 0; r < rows; ++r) {
    const T* xr = px + r * cols;
    T* yr = py + r * cols;
    T m = xr[0];
    for (std::int64_t c = 1; c < cols; ++c) m = std::max(m, xr[c]);
    T sum = T(0);
    for (std::int64_t c = 0; c < cols; ++c) {
      yr[c] = std::exp(xr[c] - m);
      sum += yr[c];
    }
    const T invs = T(1) / sum;
    for (std::int64_t c = 0; c < cols; ++c) yr[c] *= invs;
  }
  if (tape && x.requires_grad()) {
    const std::int64_t ix = tape->input_node(x);
    Tensor<T> yc = y;
    tape->record(y, [ix, yc, rows, cols](const std::vector<T>& gy, Tape<T>& tp) {
      auto& gx = tp.grad_accum(ix);
      const T* py2 = yc.data();
      for (std::int64_t r = 0; r < rows; ++r) {
        const T* yr = py2 + r * cols;
        const T* gyr = gy.data() + r * cols;
        T dot = T(0);
        for (std::int64_t c = 0; c < cols; ++c) dot += gyr[c] * yr[c];
        T* gxr = gx.data() + r * cols;
        for (std::int64_t c = 0; c < cols; ++c) gxr[c] += yr[c] * (gyr[c] - dot);
      }
    });
  }
  return y;
}

template <typename T>
Tensor<T> log_softmax(Tape<T>* tape, const Tensor<T>& x) {
  const std::int64_t K = x.dim(2);
  require(x.dim(3) == 1, "log_softmax: expected logits (N,1,K,1), got " + shape_str(x.shape()));
  const std::int64_t rows = x.dim(0) * x.dim(1);
  Tensor<T> y = Tensor<T>::zeros(x.shape());
  const T* px = x.data();
  T* py = y.data();
  for (std::int64_t r = 0; r < rows; ++r) {
    const T* xr = px + r * K;
    T* yr = py + r * K;
    T m = xr[0];
    for (std::int64_t c = 1; c < K; ++c) m = std::max(m, xr[c]);
    T sum = T(0);
    for (std::int64_t c = 0; c < K; ++c) sum += std::exp(xr[c] - m);
    const T lse = m + std::log(sum);
    for (std::int64_t c = 0; c < K; ++c) yr[c] = xr[c] - lse;
  }
  if (tape && x.requires_grad()) {
    const std::int64_t ix = tape->input_node(x);
    Tensor<T> yc = y;
    tape->record(y, [ix, yc, rows, K](const std::vector<T>& gy, Tape<T>& tp) {
      auto& gx = tp.grad_accum(ix);
      const T* py2 = yc.data();
      for (std::int64_t r = 0; r < rows; ++r) {
        const T* yr = py2 + r * K;
        const T* gyr = gy.data() + r * K;
        T sum = T(0);
        for (std::int64_t c = 0; c < K; ++c) sum += gyr[c];
        T* gxr = gx.data() + r * K;
        for (std::int64_t c = 0; c < K; ++c) gxr[c] += gyr[c] - std::exp(yr[c]) * sum;
      }
    });
  }
  return y;
}

#define CET_INSTANTIATE_NORM(T)                                                              \
  template Tensor<T> layer_norm(Tape<T>*, const Tensor<T>&, const Tensor<T>&,                \
                                const Tensor<T>&, T);                                        \
  template Tensor<T> batch_norm(Tape<T>*, const Tensor<T>&, const Tensor<T>&,                \
                                const Tensor<T>&, Tensor<T>&, Tensor<T>&, bool, T, T);       \
  template Tensor<T> softmax_last(Tape<T>*, const Tensor<T>&);                               \
  template Tensor<T> log_softmax(Tape<T>*, const Tensor<T>&);

CET_INSTANTIATE_NORM(float)
CET_INSTANTIATE_NORM(double)

}  // namespace cet
