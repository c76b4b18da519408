#include "core/tensor.hpp"

#include <atomic>

namespace cet {

std::string shape_str(const Shape4& s) {
  std::string out = "(";
  for (int i = 0; i < 4; ++i) {
    out += std::to_string(s[static_cast<std::size_t>(i)]);
    out += (i == 3) ? ")" : ",";
  }
  return out;
}

namespace {
std::atomic<std::uint64_t> g_tape_generation{1};
}

// ----------------------------------------------------------------- Tensor

template <typename T>
Tensor<T> Tensor<T>::zeros(const Shape4& s) {
  Tensor t;
  t.shape_ = s;
  t.st_ = std::make_shared<detail::TensorStorage<T>>();
  t.st_->data.assign(static_cast<std::size_t>(shape_numel(s)), T(0));
  return t;
}

template <typename T>
Tensor<T> Tensor<T>::full(const Shape4& s, T value) {
  Tensor t = zeros(s);
  for (auto& v : t.st_->data) v = value;
  return t;
}

template <typename T>
Tensor<T> Tensor<T>::from_vector(const Shape4& s, std::vector<T> values) {
  if (static_cast<std::int64_t>(values.size()) != shape_numel(s)) {
    throw DimensionError("from_vector: " + std::to_string(values.size()) +
                         " values for shape " + shape_str(s));
  }
  Tensor t;
  t.shape_ = s;
  t.st_ = std::make_shared<detail::TensorStorage<T>>();
  t.st_->data = std::move(values);
  return t;
}

template <typename T>
std::vector<T>& Tensor<T>::grad() {
  auto& st = storage();
  if (!st.grad) {
    st.grad = std::make_shared<std::vector<T>>(static_cast<std::size_t>(numel()), T(0));
  }
  return *st.grad;
}

template <typename T>
void Tensor<T>::zero_grad() {
  if (st_ && st_->grad) {
    for (auto& v : *st_->grad) v = T(0);
  }
}

template <typename T>
Tensor<T> Tensor<T>::detached_copy() const {
  Tensor t;
  t.shape_ = shape_;
  t.st_ = std::make_shared<detail::TensorStorage<T>>();
  if (st_) t.st_->data = st_->data;
  return t;
}

template <typename T>
Tensor<T> Tensor<T>::aliased_with_shape(const Shape4& s) const {
  if (shape_numel(s) != numel()) {
    throw DimensionError("aliased_with_shape: " + shape_str(shape_) + " -> " + shape_str(s) +
                         " changes element count");
  }
  Tensor t;
  t.shape_ = s;
  t.st_ = st_;
  return t;
}

template <typename T>
void Tensor<T>::ensure_storage() {
  if (!st_) {
    st_ = std::make_shared<detail::TensorStorage<T>>();
    st_->data.assign(static_cast<std::size_t>(numel()), T(0));
  }
}

// ------------------------------------------------------------------- Tape

template <typename T>
Tape<T>::Tape() : generation_(g_tape_generation.fetch_add(1)) {}

template <typename T>
std::int64_t Tape<T>::input_node(const Tensor<T>& t) {
  if (!t.requires_grad()) return -1;
  auto& st = const_cast<Tensor<T>&>(t).storage();
  if (links_here(st)) return st.node;
  // First taped use under this tape: register a leaf whose grad buffer is the
  // tensor's own, so accumulation lands directly where the optimizer looks.
  Node leaf;
  leaf.numel = t.numel();
  auto& grad = const_cast<Tensor<T>&>(t).grad();
  if (static_cast<std::int64_t>(grad.size()) != leaf.numel) {
    throw UsageError("gradient buffer size mismatch for leaf tensor");
  }
  leaf.grad = st.grad;
  nodes_.push_back(std::move(leaf));
  st.tape = this;
  st.generation = generation_;
  st.node = static_cast<std::int64_t>(nodes_.size()) - 1;
  return st.node;
}

template <typename T>
void Tape<T>::record(Tensor<T>& out, BackwardFn backward) {
  Node node;
  node.backward = std::move(backward);
  node.numel = out.numel();
  nodes_.push_back(std::move(node));
  auto& st = out.storage();
  st.requires_grad = true;
  st.tape = this;
  st.generation = generation_;
  st.node = static_cast<std::int64_t>(nodes_.size()) - 1;
}

template <typename T>
void Tape<T>::backward(const Tensor<T>& loss) {
  if (consumed_) {
    throw UsageError("backward: tape already consumed");
  }
  if (loss.numel() != 1) {
    throw UsageError("backward: loss must be a scalar, got shape " + shape_str(loss.shape()));
  }
  const auto* st = loss.storage_if();
  if (!st || !links_here(*st) || st->node < 0) {
    throw UsageError("backward: loss is not a node of this tape");
  }
  consumed_ = true;
  grad_accum(st->node)[0] = T(1);
  for (std::int64_t id = st->node; id >= 0; --id) {
    Node& node = nodes_[static_cast<std::size_t>(id)];
    if (!node.grad) continue;     // not on the path from the loss
    if (node.backward) {
      node.backward(*node.grad, *this);
      node.grad.reset();          // interior gradient no longer needed
    }
    // Leaves keep their buffer: it aliases the tensor's grad.
  }
}

template <typename T>
std::vector<T>& Tape<T>::grad_accum(std::int64_t node) {
  if (node < 0 || node >= size()) {
    throw UsageError("grad_accum: node id out of range");
  }
  Node& n = nodes_[static_cast<std::size_t>(node)];
  if (!n.grad) {
    n.grad = std::make_shared<std::vector<T>>(static_cast<std::size_t>(n.numel), T(0));
  }
  return *n.grad;
}

template class Tensor<float>;
template class Tensor<double>;
template class Tape<float>;
template class Tape<double>;

}  // namespace cet
