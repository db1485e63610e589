#include "rebot/degrade/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "rebot/degrade/filters.hpp"
#include "rebot/errors.hpp"
#include "rebot/rng.hpp"

namespace rebot {

Tensor degrade_frame(const Tensor& frame, const DegradationSpec& spec) {
  validate(spec);
  if (frame.rank() != 3 || frame.dim(0) != 3) {
    throw DimensionError("degrade_frame: expected [3,H,W], got " + to_string(frame.shape()));
  }
  Tensor x = frame.clone();
  if (spec.stage_mask == 0) return x;
  const std::int64_t h = frame.dim(1), w = frame.dim(2);

  if (spec.enabled(kStageBlur)) {
    x = spec.isotropic ? degrade::gaussian_blur(x, spec.blur_sigma, spec.kernel_size)
                       : degrade::gaussian_blur(x, spec.sigma_x, spec.sigma_y, spec.angle,
                                                spec.kernel_size);
    degrade::clamp_unit(x);
  }
  if (spec.enabled(kStageResample)) {
    const auto sh = std::max<std::int64_t>(1, std::llround(h / spec.resample_factor));
    const auto sw = std::max<std::int64_t>(1, std::llround(w / spec.resample_factor));
    x = degrade::resize_bilinear(x, sh, sw);
    degrade::clamp_unit(x);
  }
  if (spec.enabled(kStageNoise)) {
    const auto bytes = frame.data();
    const auto seed = derive_seed(spec.noise_seed, fnv1a64(bytes.data(), bytes.size_bytes()));
    x = degrade::add_gaussian_noise(x, spec.noise_amp, seed);
    degrade::clamp_unit(x);
  }
  if (spec.enabled(kStageCompress)) {
    x = degrade::compress_blockdct(x, spec.quality);
    degrade::clamp_unit(x);
  }
  if (spec.enabled(kStageJitter)) {
    x = degrade::color_jitter(x, spec.brightness, spec.contrast, spec.saturation, spec.hue);
    degrade::clamp_unit(x);
  }
  if (x.dim(1) != h || x.dim(2) != w) {
    x = degrade::resize_bilinear(x, h, w);
    degrade::clamp_unit(x);
  }
  return x;
}

std::vector<Tensor> degrade_clip(const std::vector<Tensor>& frames, const DegradationSpec& spec) {
  std::vector<Tensor> out;
  out.reserve(frames.size());
  for (const auto& f : frames) {
    if (f.shape() != frames.front().shape()) throw DataError("clip frames differ in shape");
    out.push_back(degrade_frame(f, spec));
  }
  return out;
}

}  // namespace rebot
