#pragma once

#include <array>
#include <vector>

#include "core/tensor.hpp"

// Differentiable tensor operations.  Every op takes the tape as its first
// argument (nullptr = no recording), validates shapes, computes the result
// with a fixed single-threaded loop order, and — when recording — registers a
// backward closure that accumulates input gradients in a fixed order.  Two
// runs of the same graph on the same data are bit-identical.
namespace cet {

// ------------------------------------------------------------ elementwise

// y = a + b, identical shapes.
template <typename T>
Tensor<T> add(Tape<T>* tape, const Tensor<T>& a, const Tensor<T>& b);

// y = a * b, identical shapes (Hadamard).
template <typename T>
Tensor<T> mul(Tape<T>* tape, const Tensor<T>& a, const Tensor<T>& b);

// y = s * a.
template <typename T>
Tensor<T> scale(Tape<T>* tape, const Tensor<T>& a, T s);

// y = x + bias broadcast along `axis`; bias shape (len_axis, 1, 1, 1).
template <typename T>
Tensor<T> add_bias(Tape<T>* tape, const Tensor<T>& x, const Tensor<T>& bias, int axis);

// x (N,C,H,W) scaled per channel by s (N,C,1,1): y[n,c,h,w] = x[n,c,h,w]*s[n,c].
template <typename T>
Tensor<T> mul_channel(Tape<T>* tape, const Tensor<T>& x, const Tensor<T>& s);

// GELU, tanh approximation: 0.5*x*(1 + tanh(0.79788456*(x + 0.044715*x^3))).
template <typename T>
Tensor<T> gelu(Tape<T>* tape, const Tensor<T>& x);

// SiLU: x * sigmoid(x).
template <typename T>
Tensor<T> silu(Tape<T>* tape, const Tensor<T>& x);

template <typename T>
Tensor<T> sigmoid(Tape<T>* tape, const Tensor<T>& x);

// --------------------------------------------------------------- layout

// Same element order, new shape (element count preserved).
template <typename T>
Tensor<T> reshape(Tape<T>* tape, const Tensor<T>& x, const Shape4& shape);

// y[i0,i1,i2,i3] = x at the permuted index: out axis k reads input axis
// perm[k].  perm is a permutation of {0,1,2,3}.
template <typename T>
Tensor<T> permute(Tape<T>* tape, const Tensor<T>& x, const std::array<int, 4>& perm);

// Circular roll of an image map (N,C,H,W) by (dh, dw):
// y[n,c,h,w] = x[n,c,(h-dh) mod H,(w-dw) mod W].
template <typename T>
Tensor<T> cyclic_shift(Tape<T>* tape, const Tensor<T>& x, int dh, int dw);

// Zero-pad bottom/right of (N,C,H,W) to (H+ph, W+pw); crop is the inverse
// (keeps the top-left H x W region).
template <typename T>
Tensor<T> pad_hw(Tape<T>* tape, const Tensor<T>& x, int ph, int pw);
template <typename T>
Tensor<T> crop_hw(Tape<T>* tape, const Tensor<T>& x, std::int64_t H, std::int64_t W);

// (N,C,H,W) -> tokens (N, H*W, C, 1) and back.
template <typename T>
Tensor<T> to_tokens(Tape<T>* tape, const Tensor<T>& x);
template <typename T>
Tensor<T> to_image(Tape<T>* tape, const Tensor<T>& x, std::int64_t H, std::int64_t W);

// ------------------------------------------------------------ reductions

// Sum of all elements -> (1,1,1,1).
template <typename T>
Tensor<T> sum_all(Tape<T>* tape, const Tensor<T>& x);

// Mean over the token axis: (N,L,C,1) -> (N,1,C,1).
template <typename T>
Tensor<T> mean_tokens(Tape<T>* tape, const Tensor<T>& x);

// Mean over H,W: (N,C,H,W) -> (N,C,1,1).
template <typename T>
Tensor<T> global_avg_pool(Tape<T>* tape, const Tensor<T>& x);

// ---------------------------------------------------------------- linalg

// Row-wise affine map over the feature axis 2: x (A,B,Cin,1) with weight
// (Cout,Cin,1,1) and optional bias (Cout,1,1,1) -> (A,B,Cout,1).
template <typename T>
Tensor<T> linear(Tape<T>* tape, const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>* bias);

// Batched matmul over the two leading axes:
// y[a,b,i,j] = sum_k x[a,b,i,k] * (trans_y ? m[a,b,j,k] : m[a,b,k,j]).
template <typename T>
Tensor<T> bmm(Tape<T>* tape, const Tensor<T>& x, const Tensor<T>& m, bool trans_m);

// ------------------------------------------------------------------ conv

struct ConvSpec {
  int stride = 1;
  int pad = 0;
  int groups = 1;
};

// Cross-correlation (no kernel flip).  x (N,Cin,H,W), w (Cout,Cin/groups,kh,kw),
// optional bias (Cout,1,1,1).  Output spatial size: (H + 2*pad - kh)/stride + 1.
template <typename T>
Tensor<T> conv2d(Tape<T>* tape, const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>* bias,
                 const ConvSpec& spec);

// ----------------------------------------------------------------- norms

// LayerNorm over the feature axis 2 of tokens (A,L,C,1); gamma/beta (C,1,1,1).
template <typename T>
Tensor<T> layer_norm(Tape<T>* tape, const Tensor<T>& x, const Tensor<T>& gamma,
                     const Tensor<T>& beta, T eps);

// BatchNorm over (N,H,W) per channel of (N,C,H,W).  In training mode uses
// batch statistics and updates running_mean/running_var in place (they are
// plain buffers, never taped); in eval mode normalizes with the running
// statistics.  gamma/beta/running_* all have shape (C,1,1,1).
template <typename T>
Tensor<T> batch_norm(Tape<T>* tape, const Tensor<T>& x, const Tensor<T>& gamma,
                     const Tensor<T>& beta, Tensor<T>& running_mean, Tensor<T>& running_var,
                     bool training, T momentum, T eps);

// Softmax over the innermost axis 3.
template <typename T>
Tensor<T> softmax_last(Tape<T>* tape, const Tensor<T>& x);

// Log-softmax over the feature axis 2 of (N,1,K,1) logits.
template <typename T>
Tensor<T> log_softmax(Tape<T>* tape, const Tensor<T>& x);

// --------------------------------------------------------------- windows

// Tokens (N, H*W, C, 1) -> per-window tokens (N*(H/M)*(W/M), M*M, C, 1).
// Window (wh, ww) of image n lands at batch index (n*(H/M)+wh)*(W/M)+ww; token
// (mh, mw) inside a window lands at row mh*M+mw.  H and W must be divisible
// by M (pad first if not).
template <typename T>
Tensor<T> window_partition(Tape<T>* tape, const Tensor<T>& x, std::int64_t H, std::int64_t W,
                           int M);

// Inverse of window_partition.
template <typename T>
Tensor<T> window_reverse(Tape<T>* tape, const Tensor<T>& wins, std::int64_t H, std::int64_t W,
                         int M);

// Non-overlapping p x p patch extraction: (N,C,H,W) -> (N, (H/p)*(W/p), C*p*p, 1).
// Feature index of input pixel (py, px) of channel c is (py*p + px)*C + c.
template <typename T>
Tensor<T> unfold_patches(Tape<T>* tape, const Tensor<T>& x, int p);

// Adds the relative-position bias (gathered from `table` through `index`) and
// an optional additive attention mask to window attention logits.
//   logits (NW, heads, L, L); table (table_size, heads, 1, 1);
//   index: L*L entries in [0, table_size); mask (nw_img, L, L, 1), applied to
//   window w as mask[w % nw_img] (the mask pattern repeats per image).
// The mask is a constant: it never receives gradient.
template <typename T>
Tensor<T> add_window_bias(Tape<T>* tape, const Tensor<T>& logits, const Tensor<T>& table,
                          const std::vector<int>& index, const Tensor<T>* mask);

}  // namespace cet
