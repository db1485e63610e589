#include "rebot/nn/blocks.hpp"

#include <string_view>

#include "rebot/errors.hpp"
#include "rebot/ops.hpp"
#include "rebot/rng.hpp"

namespace rebot::nn {

namespace {

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

}  // namespace

template <typename T>
void init_params(ParamList<T>& params, std::uint64_t seed, double stddev) {
  Rng rng(seed);
  for (auto& p : params) {
    auto values = p.value.data();
    if (ends_with(p.name, ".gamma")) {
      std::fill(values.begin(), values.end(), T(1));
    } else if (ends_with(p.name, ".beta") || ends_with(p.name, ".bias")) {
      std::fill(values.begin(), values.end(), T(0));
    } else {
      for (auto& v : values) v = static_cast<T>(rng.truncated_normal(stddev));
    }
  }
}

template <typename T>
std::int64_t count_params(const ParamList<T>& params) {
  std::int64_t n = 0;
  for (const auto& p : params) n += p.value.numel();
  return n;
}

// Linear ------------------------------------------------------------------

template <typename T>
Linear<T>::Linear(std::int64_t in, std::int64_t out)
    : weight(Shape{out, in}), bias(Shape{out}) {}

template <typename T>
BasicTensor<T> Linear<T>::operator()(const BasicTensor<T>& x) const {
  return ops::linear(x, weight, bias);
}

template <typename T>
void Linear<T>::collect(const std::string& prefix, ParamList<T>& out) const {
  out.push_back({prefix + ".weight", weight});
  out.push_back({prefix + ".bias", bias});
}

// Norm --------------------------------------------------------------------

template <typename T>
Norm<T>::Norm(std::int64_t channels)
    : gamma(BasicTensor<T>::full({channels}, T(1))), beta(Shape{channels}) {}

template <typename T>
BasicTensor<T> Norm<T>::tokens(const BasicTensor<T>& x) const {
  return ops::layer_norm(x, gamma, beta);
}

template <typename T>
BasicTensor<T> Norm<T>::map(const BasicTensor<T>& x) const {
  return ops::channel_layer_norm(x, gamma, beta);
}

template <typename T>
void Norm<T>::collect(const std::string& prefix, ParamList<T>& out) const {
  out.push_back({prefix + ".gamma", gamma});
  out.push_back({prefix + ".beta", beta});
}

// Conv --------------------------------------------------------------------

template <typename T>
Conv<T>::Conv(std::int64_t in, std::int64_t out, int kernel, int stride_, int padding_)
    : weight(Shape{out, in, kernel, kernel}), bias(Shape{out}), stride(stride_),
      padding(padding_) {}

template <typename T>
BasicTensor<T> Conv<T>::operator()(const BasicTensor<T>& x) const {
  return ops::conv2d(x, weight, bias, stride, padding);
}

template <typename T>
void Conv<T>::collect(const std::string& prefix, ParamList<T>& out) const {
  out.push_back({prefix + ".weight", weight});
  out.push_back({prefix + ".bias", bias});
}

// ConvNextBlock -----------------------------------------------------------

template <typename T>
ConvNextBlock<T>::ConvNextBlock(std::int64_t channels, int expansion)
    : dw_weight(Shape{channels, 1, ops::kDepthwiseKernel, ops::kDepthwiseKernel}),
      dw_bias(Shape{channels}),
      norm(channels),
      pw1(channels, channels * expansion, 1, 1, 0),
      pw2(channels * expansion, channels, 1, 1, 0) {}

template <typename T>
BasicTensor<T> ConvNextBlock<T>::operator()(const BasicTensor<T>& x) const {
  auto y = ops::depthwise_conv2d(x, dw_weight, dw_bias);
  y = norm.map(y);
  y = ops::gelu(pw1(y));
  y = pw2(y);
  return ops::add(x, y);
}

template <typename T>
void ConvNextBlock<T>::collect(const std::string& prefix, ParamList<T>& out) const {
  out.push_back({prefix + ".dw.weight", dw_weight});
  out.push_back({prefix + ".dw.bias", dw_bias});
  norm.collect(prefix + ".norm", out);
  pw1.collect(prefix + ".pw1", out);
  pw2.collect(prefix + ".pw2", out);
}

// Downsample --------------------------------------------------------------

template <typename T>
Downsample<T>::Downsample(std::int64_t in, std::int64_t out)
    : norm(in), conv(in, out, 2, 2, 0) {}

template <typename T>
BasicTensor<T> Downsample<T>::operator()(const BasicTensor<T>& x) const {
  if (x.rank() == 4 && (x.dim(2) % 2 != 0 || x.dim(3) % 2 != 0)) {
    throw DimensionError("downsample: spatial dims must be even, got " + to_string(x.shape()));
  }
  return conv(norm.map(x));
}

template <typename T>
void Downsample<T>::collect(const std::string& prefix, ParamList<T>& out) const {
  norm.collect(prefix + ".norm", out);
  conv.collect(prefix + ".conv", out);
}

// ImageTokenizer ----------------------------------------------------------

template <typename T>
ImageTokenizer<T>::ImageTokenizer(std::int64_t embed_dim, std::int64_t channels, int pool_)
    : embed(3, embed_dim, 1, 1, 0), proj(embed_dim, channels), pool(pool_) {}

template <typename T>
BasicTensor<T> ImageTokenizer<T>::operator()(const BasicTensor<T>& frame) const {
  auto pooled = ops::maxpool2d(embed(frame), pool, pool);
  return proj(ops::tokens_from_map(pooled));
}

template <typename T>
void ImageTokenizer<T>::collect(const std::string& prefix, ParamList<T>& out) const {
  embed.collect(prefix + ".embed", out);
  proj.collect(prefix + ".proj", out);
}

// MixerBlock --------------------------------------------------------------

template <typename T>
MixerBlock<T>::MixerBlock(std::int64_t tokens, std::int64_t channels, std::int64_t token_hidden,
                          std::int64_t channel_hidden)
    : norm1(channels),
      token_fc1(tokens, token_hidden),
      token_fc2(token_hidden, tokens),
      norm2(channels),
      channel_fc1(channels, channel_hidden),
      channel_fc2(channel_hidden, channels) {}

template <typename T>
BasicTensor<T> MixerBlock<T>::operator()(const BasicTensor<T>& tokens) const {
  if (tokens.rank() != 3 || tokens.dim(1) != token_fc1.weight.dim(1) ||
      tokens.dim(2) != norm1.gamma.dim(0)) {
    throw DimensionError("mixer_block: expected [B," + std::to_string(token_fc1.weight.dim(1)) +
                         "," + std::to_string(norm1.gamma.dim(0)) + "] tokens, got " +
                         to_string(tokens.shape()));
  }
  auto across = ops::transpose_last2(norm1.tokens(tokens));  // [B,C,N]
  across = token_fc2(ops::gelu(token_fc1(across)));
  auto mixed = ops::add(tokens, ops::transpose_last2(across));
  auto per_token = channel_fc2(ops::gelu(channel_fc1(norm2.tokens(mixed))));
  return ops::add(mixed, per_token);
}

template <typename T>
void MixerBlock<T>::collect(const std::string& prefix, ParamList<T>& out) const {
  norm1.collect(prefix + ".norm1", out);
  token_fc1.collect(prefix + ".token_fc1", out);
  token_fc2.collect(prefix + ".token_fc2", out);
  norm2.collect(prefix + ".norm2", out);
  channel_fc1.collect(prefix + ".channel_fc1", out);
  channel_fc2.collect(prefix + ".channel_fc2", out);
}

// DecoderStage ------------------------------------------------------------

template <typename T>
DecoderStage<T>::DecoderStage(std::int64_t in, std::int64_t out, int kernel, bool use_norm_,
                              bool is_output_)
    : weight(Shape{in, out, kernel, kernel}),
      bias(Shape{out}),
      padding((kernel - 2) / 2),
      use_norm(use_norm_ && !is_output_),
      is_output(is_output_) {
  if (kernel < 2 || kernel % 2 != 0) {
    throw ConfigError("decoder kernel " + std::to_string(kernel) +
                      " does not give exact 2x upsampling");
  }
  if (use_norm) norm = Norm<T>(out);
}

template <typename T>
BasicTensor<T> DecoderStage<T>::operator()(const BasicTensor<T>& x) const {
  auto y = ops::transposed_conv2d(x, weight, bias, 2, padding);
  if (is_output) return y;
  if (use_norm) y = norm.map(y);
  return ops::gelu(y);
}

template <typename T>
void DecoderStage<T>::collect(const std::string& prefix, ParamList<T>& out) const {
  out.push_back({prefix + ".weight", weight});
  out.push_back({prefix + ".bias", bias});
  if (use_norm) norm.collect(prefix + ".norm", out);
}

#define REBOT_INSTANTIATE_NN(T)                                        \
  template void init_params(ParamList<T>&, std::uint64_t, double);     \
  template std::int64_t count_params(const ParamList<T>&);            \
  template struct Linear<T>;                                           \
  template struct Norm<T>;                                             \
  template struct Conv<T>;                                             \
  template struct ConvNextBlock<T>;                                    \
  template struct Downsample<T>;                                       \
  template struct ImageTokenizer<T>;                                   \
  template struct MixerBlock<T>;                                       \
  template struct DecoderStage<T>;

REBOT_INSTANTIATE_NN(float)
REBOT_INSTANTIATE_NN(double)

}  // namespace rebot::nn
