#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rebot/model/config.hpp"

namespace rebot {

struct FlopsEntry {
  std::string section;
  std::int64_t flops = 0;
};

// Analytic operation count for one forward pass over `frames` frames at the
// configured resolution. Convolutions and linear layers count 2 per
// multiply-accumulate, layer norm 5 per element, GELU 10 per element.
// Biases, residual adds, pooling and the branch fusion are free.
std::vector<FlopsEntry> flops_by_section(const ModelConfig& config, int frames = 2);
std::int64_t count_flops(const ModelConfig& config, int frames = 2);

}  // namespace rebot
