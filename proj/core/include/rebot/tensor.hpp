#pragma once

#include <cstdint>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "rebot/memory.hpp"

namespace rebot {

using Shape = std::vector<std::int64_t>;

std::int64_t numel_of(const Shape& shape);
std::string to_string(const Shape& shape);

template <typename T>
using Buffer = std::vector<T, memory::TrackingAllocator<T>>;

template <typename T>
struct TensorImpl {
  Shape shape;
  Buffer<T> values;
  Buffer<T> grad;  // empty until a backward pass reaches this tensor
  bool requires_grad = false;
};

// Dense row-major tensor. Copies are shallow handles onto the same storage,
// which is what the tape and the optimizer rely on; use clone() for a deep
// copy. Images are laid out batch x channel x height x width.
template <typename T>
class BasicTensor {
 public:
  using Scalar = T;
  using Impl = TensorImpl<T>;

  BasicTensor() = default;
  explicit BasicTensor(Shape shape);
  BasicTensor(Shape shape, std::span<const T> values);
  BasicTensor(Shape shape, std::initializer_list<T> values);

  static BasicTensor zeros(Shape shape) { return BasicTensor(std::move(shape)); }
  static BasicTensor full(Shape shape, T value);
  static BasicTensor scalar(T value) { return full({1}, value); }

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const;
  int rank() const { return static_cast<int>(shape().size()); }
  std::int64_t dim(int axis) const;
  std::int64_t numel() const;

  std::span<T> data();
  std::span<const T> data() const;
  T item() const;

  bool requires_grad() const { return impl_ && impl_->requires_grad; }
  BasicTensor& set_requires_grad(bool on);
  bool has_grad() const { return impl_ && !impl_->grad.empty(); }
  std::span<const T> grad() const;
  std::span<T> mutable_grad();
  void zero_grad();

  // Fresh storage, no tape history.
  BasicTensor clone() const;
  BasicTensor detach() const { return clone(); }

  const std::shared_ptr<Impl>& impl() const { return impl_; }
  static BasicTensor wrap(std::shared_ptr<Impl> impl);

 private:
  std::shared_ptr<Impl> impl_;
};

using Tensor = BasicTensor<float>;
using TensorD = BasicTensor<double>;

// Exact element equality (used by determinism contracts).
template <typename T>
bool bit_equal(const BasicTensor<T>& a, const BasicTensor<T>& b);

// Converts between precisions, e.g. to run a float model's weights in the
// 64-bit verification path.
template <typename To, typename From>
BasicTensor<To> cast(const BasicTensor<From>& src);

extern template class BasicTensor<float>;
extern template class BasicTensor<double>;

}  // namespace rebot
