#include "rebot/tape.hpp"

#include <algorithm>
#include <cstring>
#include <sstream>

#include "rebot/errors.hpp"

namespace rebot {

std::int64_t numel_of(const Shape& shape) {
  std::int64_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

namespace {

void check_shape(const Shape& shape) {
  for (auto d : shape) {
    if (d <= 0) throw DimensionError("tensor dimensions must be positive: " + to_string(shape));
  }
}

}  // namespace

template <typename T>
BasicTensor<T>::BasicTensor(Shape shape) : impl_(std::make_shared<Impl>()) {
  check_shape(shape);
  impl_->values.assign(static_cast<std::size_t>(numel_of(shape)), T(0));
  impl_->shape = std::move(shape);
}

template <typename T>
BasicTensor<T>::BasicTensor(Shape shape, std::span<const T> values)
    : impl_(std::make_shared<Impl>()) {
  check_shape(shape);
  if (static_cast<std::int64_t>(values.size()) != numel_of(shape)) {
    throw DimensionError("value count " + std::to_string(values.size()) +
                         " does not match shape " + to_string(shape));
  }
  impl_->values.assign(values.begin(), values.end());
  impl_->shape = std::move(shape);
}

template <typename T>
BasicTensor<T>::BasicTensor(Shape shape, std::initializer_list<T> values)
    : BasicTensor(std::move(shape), std::span<const T>(values.begin(), values.size())) {}

template <typename T>
BasicTensor<T> BasicTensor<T>::full(Shape shape, T value) {
  BasicTensor t(std::move(shape));
  std::fill(t.impl_->values.begin(), t.impl_->values.end(), value);
  return t;
}

template <typename T>
const Shape& BasicTensor<T>::shape() const {
  static const Shape kEmpty;
  return impl_ ? impl_->shape : kEmpty;
}

template <typename T>
std::int64_t BasicTensor<T>::dim(int axis) const {
  const auto& s = shape();
  if (axis < 0) axis += static_cast<int>(s.size());
  if (axis < 0 || axis >= static_cast<int>(s.size())) {
    throw DimensionError("axis out of range for shape " + to_string(s));
  }
  return s[static_cast<std::size_t>(axis)];
}

template <typename T>
std::int64_t BasicTensor<T>::numel() const {
  return impl_ ? static_cast<std::int64_t>(impl_->values.size()) : 0;
}

template <typename T>
std::span<T> BasicTensor<T>::data() {
  if (!impl_) return {};
  return {impl_->values.data(), impl_->values.size()};
}

template <typename T>
std::span<const T> BasicTensor<T>::data() const {
  if (!impl_) return {};
  return {impl_->values.data(), impl_->values.size()};
}

template <typename T>
T BasicTensor<T>::item() const {
  if (numel() != 1) throw DimensionError("item() on tensor of shape " + to_string(shape()));
  return impl_->values[0];
}

template <typename T>
BasicTensor<T>& BasicTensor<T>::set_requires_grad(bool on) {
  if (!impl_) throw UsageError("set_requires_grad on undefined tensor");
  impl_->requires_grad = on;
  return *this;
}

template <typename T>
std::span<const T> BasicTensor<T>::grad() const {
  if (!impl_) return {};
  return {impl_->grad.data(), impl_->grad.size()};
}

template <typename T>
std::span<T> BasicTensor<T>::mutable_grad() {
  if (!impl_) return {};
  if (impl_->grad.empty()) impl_->grad.assign(impl_->values.size(), T(0));
  return {impl_->grad.data(), impl_->grad.size()};
}

template <typename T>
void BasicTensor<T>::zero_grad() {
  if (impl_) {
    impl_->grad.clear();
    impl_->grad.shrink_to_fit();
  }
}

template <typename T>
BasicTensor<T> BasicTensor<T>::clone() const {
  if (!impl_) return {};
  return BasicTensor(impl_->shape, std::span<const T>(impl_->values));
}

template <typename T>
BasicTensor<T> BasicTensor<T>::wrap(std::shared_ptr<Impl> impl) {
  BasicTensor t;
  t.impl_ = std::move(impl);
  return t;
}

template <typename T>
bool bit_equal(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  if (a.shape() != b.shape()) return false;
  auto da = a.data();
  auto db = b.data();
  return da.empty() || std::memcmp(da.data(), db.data(), da.size_bytes()) == 0;
}

template <typename To, typename From>
BasicTensor<To> cast(const BasicTensor<From>& src) {
  BasicTensor<To> out(src.shape());
  auto in = src.data();
  auto o = out.data();
  for (std::size_t i = 0; i < in.size(); ++i) o[i] = static_cast<To>(in[i]);
  return out;
}

template class BasicTensor<float>;
template class BasicTensor<double>;
template bool bit_equal(const BasicTensor<float>&, const BasicTensor<float>&);
template bool bit_equal(const BasicTensor<double>&, const BasicTensor<double>&);
template BasicTensor<float> cast(const BasicTensor<float>&);
template BasicTensor<float> cast(const BasicTensor<double>&);
template BasicTensor<double> cast(const BasicTensor<float>&);
template BasicTensor<double> cast(const BasicTensor<double>&);

// ---------------------------------------------------------------------------
// Tape

namespace {

template <typename T>
Tape<T>*& tape_slot() {
  thread_local Tape<T>* slot = nullptr;
  return slot;
}

}  // namespace

template <typename T>
Tape<T>* active_tape() {
  return tape_slot<T>();
}

template <typename T>
void Tape<T>::record(std::string_view op, std::vector<ImplPtr> inputs, ImplPtr output,
                     BackwardFn backward) {
  nodes_.push_back(Node{op, std::move(inputs), std::move(output), std::move(backward)});
}

template <typename T>
void Tape<T>::backward(const BasicTensor<T>& loss) {
  if (loss.numel() != 1) {
    throw UsageError("backward() needs a scalar loss, got shape " + to_string(loss.shape()));
  }
  if (nodes_.empty()) throw UsageError("backward() on an empty tape");
  const auto& root = loss.impl();
  root->grad.assign(1, T(1));
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    if (it->output->grad.empty()) continue;
    it->backward();
    // Node outputs are never leaves; drop their gradient once propagated.
    it->output->grad.clear();
    it->output->grad.shrink_to_fit();
  }
  nodes_.clear();
}

template <typename T>
TapeScope<T>::TapeScope(Tape<T>& tape) : previous_(tape_slot<T>()) {
  tape_slot<T>() = &tape;
}

template <typename T>
TapeScope<T>::~TapeScope() {
  tape_slot<T>() = previous_;
}

template <typename T>
NoGradScope<T>::NoGradScope() : previous_(tape_slot<T>()) {
  tape_slot<T>() = nullptr;
}

template <typename T>
NoGradScope<T>::~NoGradScope() {
  tape_slot<T>() = previous_;
}

template class Tape<float>;
template class Tape<double>;
template class TapeScope<float>;
template class TapeScope<double>;
template class NoGradScope<float>;
template class NoGradScope<double>;
template Tape<float>* active_tape<float>();
template Tape<double>* active_tape<double>();

}  // namespace rebot
