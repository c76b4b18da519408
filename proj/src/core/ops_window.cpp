#include "core/ops.hpp"

namespace cet {

namespace {

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw DimensionError(msg);
}

}  // namespace

// Index map shared by partition and reverse: token (mh, mw) of window (wh, ww)
// of image n  <->  token (wh*M+mh)*W + (ww*M+mw) of image n.
template <typename T>
Tensor<T> window_partition(Tape<T>* tape, const Tensor<T>& x, std::int64_t H, std::int64_t W,
                           int M) {
  const std::int64_t N = x.dim(0), L = x.dim(1), C = x.dim(2);
  require(x.dim(3) == 1 && L == H * W,
          "window_partition: tokens " + shape_str(x.shape()) + " do not cover " +
              std::to_string(H) + "x" + std::to_string(W));
  require(M > 0 && H % M == 0 && W % M == 0,
          "window_partition: " + std::to_string(H) + "x" + std::to_string(W) +
              " not divisible by window " + std::to_string(M));
  const std::int64_t nh = H / M, nw = W / M;
  Tensor<T> y = Tensor<T>::zeros({N * nh * nw, static_cast<std::int64_t>(M) * M, C, 1});
  const T* px = x.data();
  T* py = y.data();
  std::int64_t o = 0;
  for (std::int64_t n = 0; n < N; ++n)
    for (std::int64_t wh = 0; wh < nh; ++wh)
      for (std::int64_t ww = 0; ww < nw; ++ww)
        for (std::int64_t mh = 0; mh < M; ++mh)
          for (std::int64_t mw = 0; mw < M; ++mw) {
            const std::int64_t l = (wh * M + mh) * W + (ww * M + mw);
            const T* src = px + (n * L + l) * C;
            for (std::int64_t c = 0; c < C; ++c) py[o++] = src[c];
          }
  if (tape && x.requires_grad()) {
    const std::int64_t ix = tape->input_node(x);
    tape->record(y, [ix, N, L, C, H, W, M, nh, nw](const std::vector<T>& gy, Tape<T>& tp) {
      (void)H;
      auto& gx = tp.grad_accum(ix);
      std::int64_t o2 = 0;
      for (std::int64_t n = 0; n < N; ++n)
        for (std::int64_t wh = 0; wh < nh; ++wh)
          for (std::int64_t ww = 0; ww < nw; ++ww)
            for (std::int64_t mh = 0; mh < M; ++mh)
              for (std::int64_t mw = 0; mw < M; ++mw) {
                const std::int64_t l = (wh * M + mh) * W + (ww * M + mw);
                T* dst = gx.data() + (n * L + l) * C;
                for (std::int64_t c = 0; c < C; ++c)
                  dst[c] += gy[static_cast<std::size_t>(o2++)];
              }
    });
  }
  return y;
}

template <typename T>
Tensor<T> window_reverse(Tape<T>* tape, const Tensor<T>& wins, std::int64_t H, std::int64_t W,
                         int M) {
  const std::int64_t NW = wins.dim(0), L = wins.dim(1), C = wins.dim(2);
  require(wins.dim(3) == 1 && L == static_cast<std::int64_t>(M) * M,
          "window_reverse: windows " + shape_str(wins.shape()) + " do not match window size " +
              std::to_string(M));
  require(M > 0 && H % M == 0 && W % M == 0,
          "window_reverse: map " + std::to_string(H) + "x" + std::to_string(W) +
              " not divisible by window " + std::to_string(M));
  const std::int64_t nh = H / M, nw = W / M;
  require(NW % (nh * nw) == 0, "window_reverse: window count " + std::to_string(NW) +
                                   " not a multiple of windows per image " +
                                   std::to_string(nh * nw));
  const std::int64_t N = NW / (nh * nw);
  Tensor<T> y = Tensor<T>::zeros({N, H * W, C, 1});
  const T* px = wins.data();
  T* py = y.data();
  std::int64_t i = 0;
  for (std::int64_t n = 0; n < N; ++n)
    for (std::int64_t wh = 0; wh < nh; ++wh)
      for (std::int64_t ww = 0; ww < nw; ++ww)
        for (std::int64_t mh = 0; mh < M; ++mh)
          for (std::int64_t mw = 0; mw < M; ++mw) {
            const std::int64_t l = (wh * M + mh) * W + (ww * M + mw);
            T* dst = py + (n * H * W + l) * C;
            for (std::int64_t c = 0; c < C; ++c) dst[c] = px[i++];
          }
  if (tape && wins.requires_grad()) {
    const std::int64_t ix = tape->input_node(wins);
    tape->record(y, [ix, N, C, H, W, M, nh, nw](const std::vector<T>& gy, Tape<T>& tp) {
      auto& gx = tp.grad_accum(ix);
      std::int64_t i2 = 0;
      for (std::int64_t n = 0; n < N; ++n)
        for (std::int64_t wh = 0; wh < nh; ++wh)
          for (std::int64_t ww = 0; ww < nw; ++ww)
            for (std::int64_t mh = 0; mh < M; ++mh)
              for (std::int64_t mw = 0; mw < M; ++mw) {
                const std::int64_t l = (wh * M + mh) * W + (ww * M + mw);
                const T* src = gy.data() + (n * H * W + l) * C;
                for (std::int64_t c = 0; c < C; ++c)
                  gx[static_cast<std::size_t>(i2++)] += src[c];
              }
    });
  }
  return y;
}

template <typename T>
Tensor<T> unfold_patches(Tape<T>* tape, const Tensor<T>& x, int p) {
  const std::int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  require(p > 0 && H % p == 0 && W % p == 0,
          "unfold_patches: map " + shape_str(x.shape()) + " not divisible by patch " +
              std::to_string(p));
  const std::int64_t oh = H / p, ow = W / p;
  const std::int64_t F = C * p * p;
  Tensor<T> y = Tensor<T>::zeros({N, oh * ow, F, 1});
  const T* px = x.data();
  T* py = y.data();
  for (std::int64_t n = 0; n < N; ++n)
    for (std::int64_t i = 0; i < oh; ++i)
      for (std::int64_t j = 0; j < ow; ++j) {
        T* dst = py + (n * oh * ow + i * ow + j) * F;
        for (std::int64_t py_ = 0; py_ < p; ++py_)
          for (std::int64_t px_ = 0; px_ < p; ++px_)
            for (std::int64_t c = 0; c < C; ++c)
              dst[(py_ * p + px_) * C + c] =
                  px[((n * C + c) * H + i * p + py_) * W + j * p + px_];
      }
  if (tape && x.requires_grad()) {
    const std::int64_t ix = tape->input_node(x);
    tape->record(y, [ix, N, C, H, W, p, oh, ow, F](const std::vector<T>& gy, Tape<T>& tp) {
      auto& gx = tp.grad_accum(ix);
      for (std::int64_t n = 0; n < N; ++n)
        for (std::int64_t i = 0; i < oh; ++i)
          for (std::int64_t j = 0; j < ow; ++j) {
            const T* src = gy.data() + (n * oh * ow + i * ow + j) * F;
            for (std::int64_t py_ = 0; py_ < p; ++py_)
              for (std::int64_t px_ = 0; px_ < p; ++px_)
                for (std::int64_t c = 0; c < C; ++c)
                  gx[static_cast<std::size_t>(((n * C + c) * H + i * p + py_) * W + j * p +
                                              px_)] += src[(py_ * p + px_) * C + c];
          }
    });
  }
  return y;
}

template <typename T>
Tensor<T> add_window_bias(Tape<T>* tape, const Tensor<T>& logits, const Tensor<T>& table,
                          const std::vector<int>& index, const Tensor<T>* mask) {
  const std::int64_t NW = logits.dim(0), Hh = logits.dim(1), L = logits.dim(2);
  require(logits.dim(3) == L,
          "add_window_bias: logits " + shape_str(logits.shape()) + " must be square over tokens");
  const std::int64_t TS = table.dim(0);
  require(table.shape() == Shape4{TS, Hh, 1, 1},
          "add_window_bias: table " + shape_str(table.shape()) + " must be (" +
              std::to_string(TS) + "," + std::to_string(Hh) + ",1,1)");
  require(static_cast<std::int64_t>(index.size()) == L * L,
          "add_window_bias: index size " + std::to_string(index.size()) + " != " +
              std::to_string(L * L));
  for (int idx : index) {
    require(idx >= 0 && idx < TS, "add_window_bias: index entry out of table range");
  }
  std::int64_t nw_img = 0;
  if (mask) {
    nw_img = mask->dim(0);
    require(mask->shape() == Shape4{nw_img, L, L, 1} && nw_img > 0 && NW % nw_img == 0,
            "add_window_bias: mask " + shape_str(mask->shape()) +
                " incompatible with logits " + shape_str(logits.shape()));
    if (mask->requires_grad()) {
      throw UsageError("add_window_bias: the attention mask is a constant");
    }
  }
  Tensor<T> y = Tensor<T>::zeros(logits.shape());
  const T* px = logits.data();
  const T* pt = table.data();
  const T* pmask = mask ? mask->data() : nullptr;
  T* py = y.data();
  for (std::int64_t w = 0; w < NW; ++w) {
    const T* mw = pmask ? pmask + (w % nw_img) * L * L : nullptr;
    for (std::int64_t h = 0; h < Hh; ++h) {
      const T* xr = px + (w * Hh + h) * L * L;
      T* yr = py + (w * Hh + h) * L * L;
      for (std::int64_t ij = 0; ij < L * L; ++ij) {
        T v = xr[ij] + pt[static_cast<std::int64_t>(index[static_cast<std::size_t>(ij)]) * Hh + h];
        if (mw) v += mw[ij];
        yr[ij] = v;
      }
    }
  }
  if (tape && (logits.requires_grad() || table.requires_grad())) {
    const std::int64_t il = tape->input_node(logits);
    const std::int64_t it = tape->input_node(table);
    tape->record(y, [il, it, NW, Hh, L, index](const std::vector<T>& gy, Tape<T>& tp) {
      if (il >= 0) {
        auto& gl = tp.grad_accum(il);
        const std::size_t n = gy.size();
        for (std::size_t i = 0; i < n; ++i) gl[i] += gy[i];
      }
      if (it >= 0) {
        auto& gt = tp.grad_accum(it);
        for (std::int64_t w = 0; w < NW; ++w)
          for (std::int64_t h = 0; h < Hh; ++h) {
            const T* gyr = gy.data() + (w * Hh + h) * L * L;
            for (std::int64_t ij = 0; ij < L * L; ++ij)
              gt[static_cast<std::size_t>(
                  static_cast<std::int64_t>(index[static_cast<std::size_t>(ij)]) * Hh + h)] +=
                  gyr[ij];
          }
      }
    });
  }
  return y;
}

#define CET_INSTANTIATE_WINDOW(T)                                                        \
  template Tensor<T> window_partition(Tape<T>*, const Tensor<T>&, std::int64_t,          \
                                      std::int64_t, int);                                \
  template Tensor<T> window_reverse(Tape<T>*, const Tensor<T>&, std::int64_t,            \
                                    std::int64_t, int);                                  \
  template Tensor<T> unfold_patches(Tape<T>*, const Tensor<T>&, int);                    \
  template Tensor<T> add_window_bias(Tape<T>*, const Tensor<T>&, const Tensor<T>&,       \
                                     const std::vector<int>&, const Tensor<T>*);

CET_INSTANTIATE_WINDOW(float)
CET_INSTANTIATE_WINDOW(double)

}  // namespace cet
