#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rebot/tensor.hpp"

// Forward kernels with reverse-mode rules. Every op records itself on the
// active tape when at least one input requires a gradient; otherwise it is a
// plain forward computation. Dimension problems raise DimensionError.
namespace rebot::ops {

inline constexpr int kDepthwiseKernel = 7;
inline constexpr int kDepthwisePadding = 3;
inline constexpr double kLayerNormEps = 1e-6;

// input [B,Cin,H,W], weight [Cout,Cin,kh,kw], bias [Cout] or undefined.
// Zero padding; output [B,Cout,(H+2p-kh)/s+1,(W+2p-kw)/s+1].
template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& input, const BasicTensor<T>& weight,
                      const BasicTensor<T>& bias, int stride, int padding);

// Per-channel 7x7 filter, stride 1, zero padding 3. weight [C,1,7,7].
template <typename T>
BasicTensor<T> depthwise_conv2d(const BasicTensor<T>& input,
                                const BasicTensor<T>& weight,
                                const BasicTensor<T>& bias);

// Adjoint of conv2d with the same (stride, padding). weight [Cin,Cout,kh,kw];
// output [B,Cout,(H-1)s-2p+kh,(W-1)s-2p+kw].
template <typename T>
BasicTensor<T> transposed_conv2d(const BasicTensor<T>& input,
                                 const BasicTensor<T>& weight,
                                 const BasicTensor<T>& bias, int stride,
                                 int padding);

// Normalizes over the last axis.
template <typename T>
BasicTensor<T> layer_norm(const BasicTensor<T>& input, const BasicTensor<T>& gamma,
                          const BasicTensor<T>& beta, double eps = kLayerNormEps);

// Same normalization applied over axis 1 of a [B,C,H,W] map, i.e. per spatial
// position across channels.
template <typename T>
BasicTensor<T> channel_layer_norm(const BasicTensor<T>& input,
                                  const BasicTensor<T>& gamma,
                                  const BasicTensor<T>& beta,
                                  double eps = kLayerNormEps);

// x * Phi(x), erf form.
template <typename T>
BasicTensor<T> gelu(const BasicTensor<T>& input);

// Non-overlapping pooling: window must equal stride and divide H and W.
template <typename T>
BasicTensor<T> maxpool2d(const BasicTensor<T>& input, int window, int stride);

// Affine map over the last axis; weight [Dout,Din], bias [Dout] or undefined.
template <typename T>
BasicTensor<T> linear(const BasicTensor<T>& input, const BasicTensor<T>& weight,
                      const BasicTensor<T>& bias);

template <typename T>
BasicTensor<T> add(const BasicTensor<T>& a, const BasicTensor<T>& b);
template <typename T>
BasicTensor<T> sub(const BasicTensor<T>& a, const BasicTensor<T>& b);
template <typename T>
BasicTensor<T> mul(const BasicTensor<T>& a, const BasicTensor<T>& b);
template <typename T>
BasicTensor<T> scale(const BasicTensor<T>& a, double factor);
template <typename T>
BasicTensor<T> sum(const BasicTensor<T>& a);
template <typename T>
BasicTensor<T> mean(const BasicTensor<T>& a);

// Same element order, new shape.
template <typename T>
BasicTensor<T> reshape(const BasicTensor<T>& a, Shape shape);

// Swaps the last two axes: [..., M, N] -> [..., N, M].
template <typename T>
BasicTensor<T> transpose_last2(const BasicTensor<T>& a);

// [B,C,H,W] -> [B,H*W,C] and back.
template <typename T>
BasicTensor<T> tokens_from_map(const BasicTensor<T>& map);
template <typename T>
BasicTensor<T> map_from_tokens(const BasicTensor<T>& tokens, std::int64_t height,
                               std::int64_t width);

template <typename T>
BasicTensor<T> concat(std::span<const BasicTensor<T>> parts, int axis);
template <typename T>
BasicTensor<T> concat(const BasicTensor<T>& a, const BasicTensor<T>& b, int axis);
template <typename T>
BasicTensor<T> slice(const BasicTensor<T>& a, int axis, std::int64_t start,
                     std::int64_t length);

// mean(sqrt((pred - target)^2 + eps^2)); differentiable in pred.
template <typename T>
BasicTensor<T> charbonnier(const BasicTensor<T>& pred, const BasicTensor<T>& target,
                           double eps);

// Not recorded; used only on final inference outputs.
template <typename T>
BasicTensor<T> clamp(const BasicTensor<T>& a, T lo, T hi);

// Sum of elementwise products, accumulated in double.
template <typename T>
double dot(const BasicTensor<T>& a, const BasicTensor<T>& b);

}  // namespace rebot::ops
