#pragma once

#include "rebot/tensor.hpp"

namespace rebot {

inline constexpr double kCharbonnierEps = 1e-3;

// mean(sqrt((pred - target)^2 + eps^2)); recorded on the active tape.
template <typename T>
BasicTensor<T> charbonnier_loss(const BasicTensor<T>& pred, const BasicTensor<T>& target,
                                double eps = kCharbonnierEps);

}  // namespace rebot
