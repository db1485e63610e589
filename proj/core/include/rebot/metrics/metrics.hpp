#pragma once

#include "rebot/tensor.hpp"

namespace rebot {

// 10*log10(1/MSE) over every element; +infinity for identical inputs.
template <typename T>
double psnr(const BasicTensor<T>& pred, const BasicTensor<T>& target);

inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimC1 = 0.01 * 0.01;
inline constexpr double kSsimC2 = 0.03 * 0.03;

// Mean local SSIM over [C,H,W] frames: Gaussian 11x11 window (sigma 1.5),
// valid positions only, per channel and then averaged over channels.
// Frames smaller than the window raise MetricError.
template <typename T>
double ssim(const BasicTensor<T>& pred, const BasicTensor<T>& target);

}  // namespace rebot
