#include "rebot/model/flops.hpp"

#include <algorithm>

#include "rebot/errors.hpp"

namespace rebot {
namespace {

constexpr std::int64_t kNormPerElement = 5;
constexpr std::int64_t kGeluPerElement = 10;

std::int64_t mixer_flops(std::int64_t n, std::int64_t c, std::int64_t hidden) {
  std::int64_t f = 0;
  f += kNormPerElement * n * c;
  f += 2 * n * hidden * c;          // token fc1, applied to C rows
  f += kGeluPerElement * hidden * c;
  f += 2 * hidden * n * c;          // token fc2
  f += kNormPerElement * n * c;
  f += 2 * c * hidden * n;          // channel fc1, applied to N rows
  f += kGeluPerElement * hidden * n;
  f += 2 * hidden * c * n;          // channel fc2
  return f;
}

}  // namespace

std::vector<FlopsEntry> flops_by_section(const ModelConfig& config, int frames) {
  if (frames < 1) throw UsageError("count_flops: frames must be >= 1");
  const auto& d = config.dims;
  const std::int64_t c = config.bottleneck_dim();
  const std::int64_t n = config.tokens();
  const std::int64_t hidden = config.mixer_hidden;
  std::int64_t h = config.height, w = config.width;

  std::vector<FlopsEntry> out;
  const std::int64_t k = config.stem_kernel;
  out.push_back({"stem", 2 * d[0] * 3 * frames * k * k * h * w});

  std::int64_t encoder = 0;
  for (int l = 0; l < 4; ++l) {
    const std::int64_t ch = d[l], wide = ch * config.expansion, hw = h * w;
    const std::int64_t block = 2 * ch * 49 * hw + kNormPerElement * ch * hw +
                               2 * ch * wide * hw + kGeluPerElement * wide * hw +
                               2 * wide * ch * hw;
    encoder += config.depths[l] * block;
    h /= 2;
    w /= 2;
    const std::int64_t next = d[std::min(l + 1, 3)];
    encoder += kNormPerElement * ch * hw + 2 * next * ch * 4 * h * w;
  }
  out.push_back({"encoder", encoder});
  out.push_back({"clip_mixers", config.bottleneck_depth * mixer_flops(n, c, hidden)});

  const std::int64_t pixels = static_cast<std::int64_t>(config.height) * config.width;
  const std::int64_t embed = config.branch2_embed;
  out.push_back({"tokenizer", frames * (2 * 3 * embed * pixels + 2 * embed * c * n)});
  out.push_back({"image_mixers", config.bottleneck_depth * mixer_flops(frames * n, c, hidden)});

  const std::int64_t widths[] = {d[3], d[2], d[1], d[0], 3};
  const std::int64_t kk = static_cast<std::int64_t>(config.decoder_kernel) * config.decoder_kernel;
  std::int64_t decoder = 0;
  h = config.grid_h();
  w = config.grid_w();
  for (int s = 0; s < 4; ++s) {
    decoder += 2 * widths[s] * widths[s + 1] * kk * h * w;
    h *= 2;
    w *= 2;
    if (s < 3) {
      const std::int64_t elems = widths[s + 1] * h * w;
      decoder += (config.decoder_norm ? kNormPerElement * elems : 0) + kGeluPerElement * elems;
    }
  }
  out.push_back({"decoder", decoder});
  return out;
}

std::int64_t count_flops(const ModelConfig& config, int frames) {
  std::int64_t total = 0;
  for (const auto& e : flops_by_section(config, frames)) total += e.flops;
  return total;
}

}  // namespace rebot
