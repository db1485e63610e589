#include "rebot/model/rebotnet.hpp"

#include <string>

#include "rebot/errors.hpp"
#include "rebot/ops.hpp"

namespace rebot {

template <typename T>
ReBotNet<T> ReBotNet<T>::build(const ModelConfig& config, std::uint64_t seed) {
  validate(config);
  ReBotNet net;
  net.config_ = config;
  const auto& d = config.dims;
  const std::int64_t c = config.bottleneck_dim();
  const std::int64_t n = config.tokens();

  net.stem = nn::Conv<T>(3 * config.frames, d[0], config.stem_kernel, 1, config.stem_kernel / 2);
  for (int l = 0; l < 4; ++l) {
    Level level;
    for (int b = 0; b < config.depths[l]; ++b) level.blocks.emplace_back(d[l], config.expansion);
    level.down = nn::Downsample<T>(d[l], d[std::min(l + 1, 3)]);
    net.levels.push_back(std::move(level));
  }
  for (int i = 0; i < config.bottleneck_depth; ++i) {
    net.clip_mixers.emplace_back(n, c, config.mixer_hidden, config.mixer_hidden);
  }
  net.tokenizer = nn::ImageTokenizer<T>(config.branch2_embed, c, ModelConfig::kReduction);
  for (int i = 0; i < config.bottleneck_depth; ++i) {
    net.image_mixers.emplace_back(config.frames * n, c, config.mixer_hidden, config.mixer_hidden);
  }
  const std::int64_t widths[] = {d[3], d[2], d[1], d[0], 3};
  for (int s = 0; s < 4; ++s) {
    net.decoder.emplace_back(widths[s], widths[s + 1], config.decoder_kernel,
                             config.decoder_norm, s == 3);
  }
  net.collect();
  nn::init_params(net.params_, seed);
  return net;
}

template <typename T>
void ReBotNet<T>::collect() {
  params_.clear();
  stem.collect("stem", params_);
  for (std::size_t l = 0; l < levels.size(); ++l) {
    const std::string prefix = "encoder." + std::to_string(l);
    for (std::size_t b = 0; b < levels[l].blocks.size(); ++b) {
      levels[l].blocks[b].collect(prefix + ".block." + std::to_string(b), params_);
    }
    levels[l].down.collect(prefix + ".down", params_);
  }
  for (std::size_t i = 0; i < clip_mixers.size(); ++i) {
    clip_mixers[i].collect("clip_mixer." + std::to_string(i), params_);
  }
  tokenizer.collect("tokenizer", params_);
  for (std::size_t i = 0; i < image_mixers.size(); ++i) {
    image_mixers[i].collect("image_mixer." + std::to_string(i), params_);
  }
  for (std::size_t s = 0; s < decoder.size(); ++s) {
    decoder[s].collect("decoder." + std::to_string(s), params_);
  }
}

template <typename T>
BasicTensor<T> ReBotNet<T>::param(std::string_view name) const {
  for (const auto& p : params_) {
    if (p.name == name) return p.value;
  }
  throw UsageError("no parameter named '" + std::string(name) + "'");
}

template <typename T>
void ReBotNet<T>::check_inputs(const BasicTensor<T>& y_prev, const BasicTensor<T>& x_cur) const {
  if (y_prev.shape() != x_cur.shape()) {
    throw DimensionError("forward: previous output " + to_string(y_prev.shape()) +
                         " and current frame " + to_string(x_cur.shape()) + " differ");
  }
  if (x_cur.rank() != 4 || x_cur.dim(1) != 3 || x_cur.dim(2) != config_.height ||
      x_cur.dim(3) != config_.width) {
    throw DimensionError("forward: expected [B,3," + std::to_string(config_.height) + "," +
                         std::to_string(config_.width) + "] frames, got " +
                         to_string(x_cur.shape()));
  }
}

template <typename T>
BasicTensor<T> ReBotNet<T>::encode_clip_tokens(const BasicTensor<T>& y_prev,
                                               const BasicTensor<T>& x_cur) const {
  check_inputs(y_prev, x_cur);
  auto f = stem(ops::concat(y_prev, x_cur, 1));
  for (const auto& level : levels) {
    for (const auto& block : level.blocks) f = block(f);
    f = level.down(f);
  }
  auto tokens = ops::tokens_from_map(f);
  for (const auto& m : clip_mixers) tokens = m(tokens);
  return tokens;
}

template <typename T>
BasicTensor<T> ReBotNet<T>::encode_image_tokens(const BasicTensor<T>& y_prev,
                                                const BasicTensor<T>& x_cur) const {
  check_inputs(y_prev, x_cur);
  const std::int64_t n = config_.tokens();
  auto tokens = ops::concat(tokenizer(y_prev), tokenizer(x_cur), 1);  // [B,2N,C]
  for (const auto& m : image_mixers) tokens = m(tokens);
  auto sum = ops::add(ops::slice(tokens, 1, 0, n), ops::slice(tokens, 1, n, n));
  return ops::scale(sum, 0.5);
}

template <typename T>
BasicTensor<T> ReBotNet<T>::forward(const BasicTensor<T>& y_prev,
                                    const BasicTensor<T>& x_cur) const {
  auto fused = ops::add(encode_clip_tokens(y_prev, x_cur), encode_image_tokens(y_prev, x_cur));
  auto y = ops::map_from_tokens(fused, config_.grid_h(), config_.grid_w());
  for (const auto& stage : decoder) y = stage(y);
  return y;
}

template class ReBotNet<float>;
template class ReBotNet<double>;

}  // namespace rebot
