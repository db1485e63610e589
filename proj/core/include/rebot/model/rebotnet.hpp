#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "rebot/model/config.hpp"
#include "rebot/nn/blocks.hpp"

namespace rebot {

// Two-frame enhancement network: (previous output, current frame) -> frame.
//
// Branch I stacks both frames along channels and runs a ConvNext encoder
// (stem, 4 levels, each followed by a stride-2 downsample) whose 1/16 map is
// flattened into tokens and mixed. Branch II tokenizes each frame on its own,
// concatenates the two token sets, mixes them and averages the halves. The
// branches are summed and decoded back to full resolution by 4 transposed
// conv stages.
template <typename T>
class ReBotNet {
 public:
  struct Level {
    std::vector<nn::ConvNextBlock<T>> blocks;
    nn::Downsample<T> down;
  };

  // Deterministic in (config, seed). Throws ConfigError on invalid config.
  static ReBotNet build(const ModelConfig& config, std::uint64_t seed);

  // y_prev, x_cur: [B,3,H,W] at the configured resolution. Output is not
  // clamped.
  BasicTensor<T> forward(const BasicTensor<T>& y_prev, const BasicTensor<T>& x_cur) const;

  // Token matrices entering the fusion, exposed for shape checks.
  BasicTensor<T> encode_clip_tokens(const BasicTensor<T>& y_prev,
                                    const BasicTensor<T>& x_cur) const;
  BasicTensor<T> encode_image_tokens(const BasicTensor<T>& y_prev,
                                     const BasicTensor<T>& x_cur) const;

  const ModelConfig& config() const { return config_; }
  // Ordered parameters (names are stable across builds of one config).
  const nn::ParamList<T>& params() const { return params_; }
  // Looks a parameter up by name; throws UsageError if absent.
  BasicTensor<T> param(std::string_view name) const;
  std::int64_t count_params() const { return nn::count_params(params_); }

  nn::Conv<T> stem;
  std::vector<Level> levels;
  std::vector<nn::MixerBlock<T>> clip_mixers;
  nn::ImageTokenizer<T> tokenizer;
  std::vector<nn::MixerBlock<T>> image_mixers;
  std::vector<nn::DecoderStage<T>> decoder;

 private:
  void check_inputs(const BasicTensor<T>& y_prev, const BasicTensor<T>& x_cur) const;
  void collect();

  ModelConfig config_;
  nn::ParamList<T> params_;
};

extern template class ReBotNet<float>;
extern template class ReBotNet<double>;

}  // namespace rebot
