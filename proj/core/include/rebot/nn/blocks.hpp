#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rebot/tensor.hpp"

namespace rebot::nn {

template <typename T>
struct NamedTensor {
  std::string name;
  BasicTensor<T> value;
};

// Flat, ordered view of a model's trainable tensors. Handles are shallow, so
// writing through an entry updates the owning block.
template <typename T>
using ParamList = std::vector<NamedTensor<T>>;

// Fills a freshly allocated parameter set: entries named *.gamma get ones,
// *.beta and *.bias get zeros, everything else truncated normal(0, std).
template <typename T>
void init_params(ParamList<T>& params, std::uint64_t seed, double stddev = 0.02);

template <typename T>
std::int64_t count_params(const ParamList<T>& params);

template <typename T>
struct Linear {
  BasicTensor<T> weight;  // [out, in]
  BasicTensor<T> bias;    // [out]

  Linear() = default;
  Linear(std::int64_t in, std::int64_t out);
  BasicTensor<T> operator()(const BasicTensor<T>& x) const;
  void collect(const std::string& prefix, ParamList<T>& out) const;
};

template <typename T>
struct Norm {
  BasicTensor<T> gamma;
  BasicTensor<T> beta;

  Norm() = default;
  explicit Norm(std::int64_t channels);
  // Over the last axis of a token matrix.
  BasicTensor<T> tokens(const BasicTensor<T>& x) const;
  // Over axis 1 of a feature map.
  BasicTensor<T> map(const BasicTensor<T>& x) const;
  void collect(const std::string& prefix, ParamList<T>& out) const;
};

// Convolution weight + bias, 1x1 or spatial.
template <typename T>
struct Conv {
  BasicTensor<T> weight;
  BasicTensor<T> bias;
  int stride = 1;
  int padding = 0;

  Conv() = default;
  Conv(std::int64_t in, std::int64_t out, int kernel, int stride, int padding);
  BasicTensor<T> operator()(const BasicTensor<T>& x) const;
  void collect(const std::string& prefix, ParamList<T>& out) const;
};

// x + pw2(gelu(pw1(norm(dw7x7(x))))).
template <typename T>
struct ConvNextBlock {
  BasicTensor<T> dw_weight;  // [C,1,7,7]
  BasicTensor<T> dw_bias;
  Norm<T> norm;
  Conv<T> pw1;  // C -> expansion*C
  Conv<T> pw2;  // expansion*C -> C

  ConvNextBlock() = default;
  ConvNextBlock(std::int64_t channels, int expansion);
  BasicTensor<T> operator()(const BasicTensor<T>& x) const;
  void collect(const std::string& prefix, ParamList<T>& out) const;
};

// Channel norm then 2x2 stride-2 conv; halves H and W.
template <typename T>
struct Downsample {
  Norm<T> norm;
  Conv<T> conv;

  Downsample() = default;
  Downsample(std::int64_t in, std::int64_t out);
  BasicTensor<T> operator()(const BasicTensor<T>& x) const;
  void collect(const std::string& prefix, ParamList<T>& out) const;
};

// Per-pixel embedding of one RGB frame, non-overlapping max-pool down to the
// bottleneck grid, then a projection to the bottleneck width.
// [B,3,H,W] -> [B,(H/pool)(W/pool),C].
template <typename T>
struct ImageTokenizer {
  Conv<T> embed;  // 1x1, 3 -> embed_dim
  Linear<T> proj;  // embed_dim -> C
  int pool = 16;

  ImageTokenizer() = default;
  ImageTokenizer(std::int64_t embed_dim, std::int64_t channels, int pool);
  BasicTensor<T> operator()(const BasicTensor<T>& frame) const;
  void collect(const std::string& prefix, ParamList<T>& out) const;
};

// tokens [B,N,C]:
//   mixed = tokens + token_mlp(norm1(tokens)^T)^T
//   out   = mixed  + channel_mlp(norm2(mixed))
template <typename T>
struct MixerBlock {
  Norm<T> norm1;
  Linear<T> token_fc1;  // N -> hidden
  Linear<T> token_fc2;  // hidden -> N
  Norm<T> norm2;
  Linear<T> channel_fc1;  // C -> hidden
  Linear<T> channel_fc2;  // hidden -> C

  MixerBlock() = default;
  MixerBlock(std::int64_t tokens, std::int64_t channels, std::int64_t token_hidden,
             std::int64_t channel_hidden);
  BasicTensor<T> operator()(const BasicTensor<T>& tokens) const;
  void collect(const std::string& prefix, ParamList<T>& out) const;
};

// Stride-2 transposed conv, then norm + GELU unless this is the output stage.
template <typename T>
struct DecoderStage {
  BasicTensor<T> weight;  // [in, out, k, k]
  BasicTensor<T> bias;
  Norm<T> norm;
  int padding = 1;
  bool use_norm = true;
  bool is_output = false;

  DecoderStage() = default;
  DecoderStage(std::int64_t in, std::int64_t out, int kernel, bool use_norm, bool is_output);
  BasicTensor<T> operator()(const BasicTensor<T>& x) const;
  void collect(const std::string& prefix, ParamList<T>& out) const;
};

}  // namespace rebot::nn
