#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>

namespace rebot {

struct ModelConfig {
  std::string preset = "custom";
  std::array<int, 4> depths{4, 4, 4, 4};
  std::array<int, 4> dims{28, 36, 48, 64};
  int patch_size = 1;
  int branch2_embed = 256;
  int bottleneck_depth = 4;
  int mixer_hidden = 256;  // both token and channel MLPs
  int expansion = 3;       // ConvNext pointwise expansion
  int stem_kernel = 3;
  int decoder_kernel = 4;
  bool decoder_norm = true;
  int frames = 2;
  int height = 384;
  int width = 384;

  // Encoder reduces each spatial dim by this factor.
  static constexpr int kReduction = 16;

  std::int64_t grid_h() const { return height / kReduction; }
  std::int64_t grid_w() const { return width / kReduction; }
  std::int64_t tokens() const { return grid_h() * grid_w(); }
  int bottleneck_dim() const { return dims[3]; }
};

// S, M, L or tiny. Throws ConfigError for anything else.
ModelConfig preset_config(std::string_view name);

// Throws ConfigError when the architecture cannot be built as configured.
void validate(const ModelConfig& config);

// Canonical key=value lines in a fixed order.
std::string serialize(const ModelConfig& config);
ModelConfig parse_model_config(std::string_view text);

// FNV-1a (32-bit) of the canonical serialization, preset label excluded.
std::uint32_t fingerprint(const ModelConfig& config);

// Parses "HxW".
std::pair<int, int> parse_resolution(std::string_view text);

}  // namespace rebot
