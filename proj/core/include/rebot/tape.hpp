#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string_view>
#include <vector>

#include "rebot/tensor.hpp"

namespace rebot {

// Reverse-mode recording of the ops executed while a TapeScope is active.
// Nodes are appended in execution order, so the list is topologically sorted
// by construction. One forward/backward pass at a time per tape.
template <typename T>
class Tape {
 public:
  using ImplPtr = std::shared_ptr<TensorImpl<T>>;
  using BackwardFn = std::function<void()>;

  struct Node {
    std::string_view op;
    std::vector<ImplPtr> inputs;
    ImplPtr output;
    BackwardFn backward;
  };

  void record(std::string_view op, std::vector<ImplPtr> inputs, ImplPtr output,
              BackwardFn backward);

  // Seeds d(loss)/d(loss) = 1 and visits every node once in reverse order.
  // Gradients accumulate additively into leaves with requires_grad. The tape
  // is cleared afterwards; intermediate gradients are released.
  void backward(const BasicTensor<T>& loss);

  void clear() { nodes_.clear(); }
  std::size_t size() const { return nodes_.size(); }
  bool empty() const { return nodes_.empty(); }
  const std::vector<Node>& nodes() const { return nodes_; }

 private:
  std::vector<Node> nodes_;
};

// Installs a tape as the recording target for the current thread.
template <typename T>
class TapeScope {
 public:
  explicit TapeScope(Tape<T>& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape<T>* previous_;
};

template <typename T>
Tape<T>* active_tape();

// Suspends recording for the current thread (inference paths).
template <typename T>
class NoGradScope {
 public:
  NoGradScope();
  ~NoGradScope();
  NoGradScope(const NoGradScope&) = delete;
  NoGradScope& operator=(const NoGradScope&) = delete;

 private:
  Tape<T>* previous_;
};

extern template class Tape<float>;
extern template class Tape<double>;
extern template class TapeScope<float>;
extern template class TapeScope<double>;
extern template class NoGradScope<float>;
extern template class NoGradScope<double>;

}  // namespace rebot
