#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "core/error.hpp"

namespace cet {

// All tensors are rank-4, row-major, contiguous.  Axis meaning is contextual:
// image maps are (N, C, H, W); token sequences are (N, L, C, 1); attention
// logits are (windows, heads, len, len); scalars are (1, 1, 1, 1).
using Shape4 = std::array<std::int64_t, 4>;

inline std::int64_t shape_numel(const Shape4& s) {
  return s[0] * s[1] * s[2] * s[3];
}

std::string shape_str(const Shape4& s);

template <typename T>
class Tape;

namespace detail {

template <typename T>
struct TensorStorage {
  std::vector<T> data;
  // Gradient buffer, same element count as data.  Allocated lazily; shared by
  // every tensor copy so parameter handles held by modules and by the
  // optimizer observe the same gradients.
  std::shared_ptr<std::vector<T>> grad;
  bool requires_grad = false;
  // Link to the tape node that produced (or registered) this tensor.  A link
  // is valid only for the tape generation it was created under.
  Tape<T>* tape = nullptr;
  std::int64_t node = -1;
  std::uint64_t generation = 0;
};

}  // namespace detail

// Value-semantic handle: copies share storage (and gradient).  No tensor op
// mutates data in place once the tensor has been recorded on a tape.
template <typename T>
class Tensor {
 public:
  Tensor() : shape_{0, 0, 0, 0} {}

  static Tensor zeros(const Shape4& s);
  static Tensor full(const Shape4& s, T value);
  static Tensor scalar(T value) { return full({1, 1, 1, 1}, value); }
  static Tensor from_vector(const Shape4& s, std::vector<T> values);

  bool defined() const { return static_cast<bool>(st_); }
  const Shape4& shape() const { return shape_; }
  std::int64_t dim(int axis) const { return shape_[static_cast<std::size_t>(axis)]; }
  std::int64_t numel() const { return shape_numel(shape_); }

  T* data() { return st_->data.data(); }
  const T* data() const { return st_->data.data(); }
  std::vector<T>& vec() { return st_->data; }
  const std::vector<T>& vec() const { return st_->data; }

  T& at(std::int64_t i, std::int64_t j, std::int64_t k, std::int64_t l) {
    return st_->data[static_cast<std::size_t>(offset(i, j, k, l))];
  }
  T at(std::int64_t i, std::int64_t j, std::int64_t k, std::int64_t l) const {
    return st_->data[static_cast<std::size_t>(offset(i, j, k, l))];
  }

  bool requires_grad() const { return st_ && st_->requires_grad; }
  // Marks a leaf (parameter or probed input).  Must be set before the tensor
  // is used in a taped op.
  void set_requires_grad(bool flag) { storage().requires_grad = flag; }

  bool has_grad() const { return st_ && st_->grad; }
  // Gradient buffer, allocated (zero-filled) on first access.
  std::vector<T>& grad();
  const std::vector<T>* grad_if() const { return st_ ? st_->grad.get() : nullptr; }
  void zero_grad();

  // Deep copy of the values; no grad flag, no tape link.
  Tensor detached_copy() const;

  // A tensor that shares this tensor's storage but reports a different shape.
  // Internal building block for the taped reshape op (element order is
  // unchanged, so data and gradient buffers can be shared safely).
  Tensor aliased_with_shape(const Shape4& s) const;

  detail::TensorStorage<T>& storage() {
    ensure_storage();
    return *st_;
  }
  const detail::TensorStorage<T>* storage_if() const { return st_.get(); }

 private:
  std::int64_t offset(std::int64_t i, std::int64_t j, std::int64_t k, std::int64_t l) const {
    return ((i * shape_[1] + j) * shape_[2] + k) * shape_[3] + l;
  }
  void ensure_storage();

  std::shared_ptr<detail::TensorStorage<T>> st_;
  Shape4 shape_;
};

// Reverse-mode tape.  Ops append nodes in execution order; backward replays
// them once, newest to oldest, accumulating gradients in a fixed order so that
// repeated runs are bit-identical.
template <typename T>
class Tape {
 public:
  using BackwardFn = std::function<void(const std::vector<T>& gy, Tape&)>;

  Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Resolves the node id an op should route gradients to for input `t`:
  // -1 when the input does not require grad, otherwise the existing node or a
  // freshly registered leaf node whose grad buffer aliases the tensor's.
  std::int64_t input_node(const Tensor<T>& t);

  // Registers `out` as the product of a recorded op.  `backward` receives the
  // output gradient and accumulates into input nodes via grad_accum().
  void record(Tensor<T>& out, BackwardFn backward);

  // Runs reverse accumulation from a scalar loss.  Single use per tape.
  void backward(const Tensor<T>& loss);

  // Gradient buffer of a node, zero-allocated on first touch.
  std::vector<T>& grad_accum(std::int64_t node);

  std::int64_t size() const { return static_cast<std::int64_t>(nodes_.size()); }
  bool consumed() const { return consumed_; }

 private:
  struct Node {
    BackwardFn backward;  // empty for leaves
    std::int64_t numel = 0;
    std::shared_ptr<std::vector<T>> grad;  // for leaves, aliases the tensor's buffer
  };

  bool links_here(const detail::TensorStorage<T>& st) const {
    return st.tape == this && st.generation == generation_;
  }

  std::vector<Node> nodes_;
  bool consumed_ = false;
  std::uint64_t generation_ = 0;
};

// Execution context threaded through module forwards: which tape to record on
// (nullptr = no recording) and whether batch-norm style layers are in
// training mode.
template <typename T>
struct Ctx {
  Tape<T>* tape = nullptr;
  bool training = false;
};

extern template class Tensor<float>;
extern template class Tensor<double>;
extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace cet
