#include "rebot/runtime/loss.hpp"

#include "rebot/ops.hpp"

namespace rebot {

template <typename T>
BasicTensor<T> charbonnier_loss(const BasicTensor<T>& pred, const BasicTensor<T>& target,
                                double eps) {
  return ops::charbonnier(pred, target, eps);
}

template Tensor charbonnier_loss(const Tensor&, const Tensor&, double);
template TensorD charbonnier_loss(const TensorD&, const TensorD&, double);

}  // namespace rebot
