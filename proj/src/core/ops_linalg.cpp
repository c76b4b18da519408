#include "core/ops.hpp"

namespace cet {

namespace {

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw DimensionError(msg);
}

}  // namespace

template <typename T>
Tensor<T> linear(Tape<T>* tape, const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>* bias) {
  const std::int64_t Cin = x.dim(2);
  const std::int64_t Cout = w.dim(0);
  require(x.dim(3) == 1, "linear: expected features on axis 2, got " + shape_str(x.shape()));
  require(w.shape() == Shape4{Cout, Cin, 1, 1},
          "linear: weight " + shape_str(w.shape()) + " incompatible with input " +
              shape_str(x.shape()));
  if (bias) {
    require(bias->shape() == Shape4{Cout, 1, 1, 1},
            "linear: bias " + shape_str(bias->shape()) + " must be (" + std::to_string(Cout) +
                ",1,1,1)");
  }
  const std::int64_t rows = x.dim(0) * x.dim(1);
  Tensor<T> y = Tensor<T>::zeros({x.dim(0), x.dim(1), Cout, 1});
  const T* px = x.data();
  const T* pw = w.data();
  const T* pb = bias ? bias->data() : nullptr;
  T* py = y.data();
  // Both the input row and the weight row are contiguous over Cin.
  for (std::int64_t r = 0; r < rows; ++r) {
    const T* xr = px + r * Cin;
    T* yr = py + r * Cout;
    for (std::int64_t o = 0; o < Cout; ++o) {
      const T* wr = pw + o * Cin;
      T acc = pb ? pb[o] : T(0);
      for (std::int64_t i = 0; i < Cin; ++i) acc += xr[i] * wr[i];
      yr[o] = acc;
    }
  }

  const bool need = tape && (x.requires_grad() || w.requires_grad() ||
                             (bias && bias->requires_grad()));
  if (need) {
    const std::int64_t ix = tape->input_node(x);
    const std::int64_t iw = tape->input_node(w);
    const std::int64_t ib = bias ? tape->input_node(*bias) : -1;
    Tensor<T> xc = x, wc = w;
    tape->record(y, [ix, iw, ib, xc, wc, rows, Cin, Cout](const std::vector<T>& gy, Tape<T>& tp) {
      if (ix >= 0) {
        auto& gx = tp.grad_accum(ix);
        const T* pw2 = wc.data();
        for (std::int64_t r = 0; r < rows; ++r) {
          T* gxr = gx.data() + r * Cin;
          const T* gyr = gy.data() + r * Cout;
          for (std::int64_t o = 0; o < Cout; ++o) {
            const T g = gyr[o];
            const T* wr = pw2 + o * Cin;
            for (std::int64_t i = 0; i < Cin; ++i) gxr[i] += g * wr[i];
          }
        }
      }
      if (iw >= 0) {
        auto& gw = tp.grad_accum(iw);
        const T* px2 = xc.data();
        for (std::int64_t r = 0; r < rows; ++r) {
          const T* xr = px2 + r * Cin;
          const T* gyr = gy.data() + r * Cout;
          for (std::int64_t o = 0; o < Cout; ++o) {
            const T g = gyr[o];
            T* gwr = gw.data() + o * Cin;
            for (std::int64_t i = 0; i < Cin; ++i) gwr[i] += g * xr[i];
          }
        }
      }
      if (ib >= 0) {
        auto& gb = tp.grad_accum(ib);
        for (std::int64_t r = 0; r < rows; ++r) {
          const T* gyr = gy.data() + r * Cout;
          for (std::int64_t o = 0; o < Cout; ++o) gb[static_cast<std::size_t>(o)] += gyr[o];
        }
      }
    });
  }
  return y;
}

template <typename T>
Tensor<T> bmm(Tape<T>* tape, const Tensor<T>& x, const Tensor<T>& m, bool trans_m) {
  const std::int64_t B0 = x.dim(0), B1 = x.dim(1), R = x.dim(2), K = x.dim(3);
  require(m.dim(0) == B0 && m.dim(1) == B1,
          "bmm: batch axes differ, " + shape_str(x.shape()) + " vs " + shape_str(m.shape()));
  const std::int64_t Cc = trans_m ? m.dim(2) : m.dim(3);
  require((trans_m ? m.dim(3) : m.dim(2)) == K,
          "bmm: inner dimension mismatch, " + shape_str(x.shape()) + " vs " +
              shape_str(m.shape()) + (trans_m ? " (transposed)" : ""));
  Tensor<T> y = Tensor<T>::zeros({B0, B1, R, Cc});
  const std::int64_t batches = B0 * B1;
  const T* px = x.data();
  const T* pm = m.data();
  T* py = y.data();
  const std::int64_t msz = trans_m ? Cc * K : K * Cc;
  for (std::int64_t b = 0; b < batches; ++b) {
    const T* xb = px + b * R * K;
    const T* mb = pm + b * msz;
    T* yb = py + b * R * Cc;
    if (trans_m) {
      // Both operands contiguous over k: per-pair dot products.
      for (std::int64_t i = 0; i < R; ++i) {
        const T* xi = xb + i * K;
        T* yi = yb + i * Cc;
        for (std::int64_t j = 0; j < Cc; ++j) {
          const T* mj = mb + j * K;
          T acc = T(0);
          for (std::int64_t k = 0; k < K; ++k) acc += xi[k] * mj[k];
          yi[j] = acc;
        }
      }
    } else {
      // Stream rows of m: y[i,:] += x[i,k] * m[k,:], fixed k order.
      for (std::int64_t i = 0; i < R; ++i) {
        const T* xi = xb + i * K;
        T* yi = yb + i * Cc;
        for (std::int64_t k = 0; k < K; ++k) {
          const T f = xi[k];
          const T* mk = mb + k * Cc;
          for (std::int64_t j = 0; j < Cc; ++j) yi[j] += f * mk[j];
        }
      }
    }
  }

  if (tape && (x.requires_grad() || m.requires_grad())) {
    const std::int64_t ix = tape->input_node(x);
    const std::int64_t im = tape->input_node(m);
    Tensor<T> xc = x, mc = m;
    tape->record(y, [ix, im, xc, mc, batches, R, K, Cc, msz,
                     trans_m](const std::vector<T>& gy, Tape<T>& tp) {
      // dX[i,k] = sum_j gy[i,j] * M[k,j]  (or M^T: m[j,k])
      if (ix >= 0) {
        auto& gx = tp.grad_accum(ix);
        const T* pm2 = mc.data();
        for (std::int64_t b = 0; b < batches; ++b) {
          const T* gyb = gy.data() + b * R * Cc;
          const T* mb = pm2 + b * msz;
          T* gxb = gx.data() + b * R * K;
          for (std::int64_t i = 0; i < R; ++i) {
            const T* gyi = gyb + i * Cc;
            T* gxi = gxb + i * K;
            if (trans_m) {
              for (std::int64_t j = 0; j < Cc; ++j) {
                const T g = gyi[j];
                const T* mj = mb + j * K;
                for (std::int64_t k = 0; k < K; ++k) gxi[k] += g * mj[k];
              }
            } else {
              for (std::int64_t k = 0; k < K; ++k) {
                const T* mk = mb + k * Cc;
                T acc = T(0);
                for (std::int64_t j = 0; j < Cc; ++j) acc += gyi[j] * mk[j];
                gxi[k] += acc;
              }
            }
          }
        }
      }
      // dM[k,j] = sum_i x[i,k] * gy[i,j]  (transposed: dM[j,k])
      if (im >= 0) {
        auto& gm = tp.grad_accum(im);
        const T* px2 = xc.data();
        for (std::int64_t b = 0; b < batches; ++b) {
          const T* gyb = gy.data() + b * R * Cc;
          const T* xb = px2 + b * R * K;
          T* gmb = gm.data() + b * msz;
          for (std::int64_t i = 0; i < R; ++i) {
            const T* gyi = gyb + i * Cc;
            const T* xi = xb + i * K;
            if (trans_m) {
              for (std::int64_t j = 0; j < Cc; ++j) {
                const T g = gyi[j];
                T* gmj = gmb + j * K;
                for (std::int64_t k = 0; k < K; ++k) gmj[k] += g * xi[k];
              }
            } else {
              for (std::int64_t k = 0; k < K; ++k) {
                const T f = xi[k];
                T* gmk = gmb + k * Cc;
                for (std::int64_t j = 0; j < Cc; ++j) gmk[j] += f * gyi[j];
              }
            }
          }
        }
      }
    });
  }
  return y;
}

#define CET_INSTANTIATE_LINALG(T)                                                          \
  template Tensor<T> linear(Tape<T>*, const Tensor<T>&, const Tensor<T>&, const Tensor<T>*); \
  template Tensor<T> bmm(Tape<T>*, const Tensor<T>&, const Tensor<T>&, bool);

CET_INSTANTIATE_LINALG(float)
CET_INSTANTIATE_LINALG(double)

}  // namespace cet
