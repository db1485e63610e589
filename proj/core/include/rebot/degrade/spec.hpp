#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace rebot {

enum DegradeStage : std::uint32_t {
  kStageBlur = 1u << 0,
  kStageResample = 1u << 1,
  kStageNoise = 1u << 2,
  kStageCompress = 1u << 3,
  kStageJitter = 1u << 4,
};
inline constexpr std::uint32_t kAllStages = 0x1f;

// Parameter ranges for sampling.
struct DegradeRanges {
  static constexpr double kSigmaMin = 0.1, kSigmaMax = 3.0;
  static constexpr double kResampleMin = 0.8, kResampleMax = 2.5;
  static constexpr double kNoiseMin = 0.0, kNoiseMax = 0.1;
  static constexpr int kQualityMin = 70, kQualityMax = 100;
  static constexpr double kJitterMin = 0.8, kJitterMax = 1.1;
  static constexpr double kHueMin = -0.05, kHueMax = 0.05;
  static constexpr double kIsotropicProbability = 0.5;
  static constexpr double kStageProbability = 0.5;
  static constexpr int kKernelSize = 15;
};

// One clip's degradation parameters. Values of disabled stages are still
// sampled (so the draw sequence is fixed) but have no effect.
struct DegradationSpec {
  std::uint32_t stage_mask = 0;
  bool isotropic = true;
  double blur_sigma = 1.0;  // isotropic
  double sigma_x = 1.0;     // anisotropic
  double sigma_y = 1.0;
  double angle = 0.0;  // radians
  int kernel_size = DegradeRanges::kKernelSize;
  double resample_factor = 1.0;  // resolution divisor; < 1 enlarges
  double noise_amp = 0.0;        // Gaussian standard deviation
  int quality = 100;
  double brightness = 1.0;
  double contrast = 1.0;
  double saturation = 1.0;
  double hue = 0.0;  // fraction of a full turn
  std::uint64_t noise_seed = 0;

  bool enabled(DegradeStage s) const { return (stage_mask & s) != 0; }
  bool operator==(const DegradationSpec&) const = default;
};

DegradationSpec sample_spec(std::uint64_t seed);

// Throws SpecError if an enabled stage's parameters leave their ranges.
void validate(const DegradationSpec& spec);

// Canonical key=value block, one parameter per line, fixed key order.
// Floating values round-trip exactly.
std::string serialize(const DegradationSpec& spec);
DegradationSpec parse_spec(std::string_view text);

}  // namespace rebot
