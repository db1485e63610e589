#include "rebot/degrade/spec.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>
#include <vector>

#include "rebot/errors.hpp"
#include "rebot/rng.hpp"

namespace rebot {

using R = DegradeRanges;

DegradationSpec sample_spec(std::uint64_t seed) {
  Rng rng(seed);
  DegradationSpec s;
  for (std::uint32_t bit = 0; bit < 5; ++bit) {
    if (rng.bernoulli(R::kStageProbability)) s.stage_mask |= 1u << bit;
  }
  const auto forced = static_cast<std::uint32_t>(rng.uniform_int(0, 4));
  if (s.stage_mask == 0) s.stage_mask = 1u << forced;

  s.isotropic = rng.bernoulli(R::kIsotropicProbability);
  s.blur_sigma = rng.uniform(R::kSigmaMin, R::kSigmaMax);
  s.sigma_x = rng.uniform(R::kSigmaMin, R::kSigmaMax);
  s.sigma_y = rng.uniform(R::kSigmaMin, R::kSigmaMax);
  s.angle = rng.uniform(0.0, std::numbers::pi);
  s.resample_factor = rng.uniform(R::kResampleMin, R::kResampleMax);
  s.noise_amp = rng.uniform(R::kNoiseMin, R::kNoiseMax);
  s.quality = static_cast<int>(rng.uniform_int(R::kQualityMin, R::kQualityMax));
  s.brightness = rng.uniform(R::kJitterMin, R::kJitterMax);
  s.contrast = rng.uniform(R::kJitterMin, R::kJitterMax);
  s.saturation = rng.uniform(R::kJitterMin, R::kJitterMax);
  s.hue = rng.uniform(R::kHueMin, R::kHueMax);
  s.noise_seed = rng.next_u64();
  return s;
}

void validate(const DegradationSpec& s) {
  auto check = [](bool ok, const char* what) {
    if (!ok) throw SpecError(std::string("degradation spec: ") + what);
  };
  check((s.stage_mask & ~kAllStages) == 0, "unknown stage bits");
  check(s.kernel_size == R::kKernelSize, "kernel_size must be 15");
  auto sigma_ok = [](double v) { return v >= R::kSigmaMin && v <= R::kSigmaMax; };
  if (s.enabled(kStageBlur)) {
    if (s.isotropic) {
      check(sigma_ok(s.blur_sigma), "blur_sigma outside [0.1, 3]");
    } else {
      check(sigma_ok(s.sigma_x) && sigma_ok(s.sigma_y), "sigma_x/sigma_y outside [0.1, 3]");
      check(std::isfinite(s.angle), "angle must be finite");
    }
  }
  if (s.enabled(kStageResample)) {
    check(s.resample_factor >= R::kResampleMin && s.resample_factor <= R::kResampleMax,
          "resample_factor outside [0.8, 2.5]");
  }
  if (s.enabled(kStageNoise)) {
    check(s.noise_amp >= R::kNoiseMin && s.noise_amp <= R::kNoiseMax,
          "noise_amp outside [0, 0.1]");
  }
  if (s.enabled(kStageCompress)) check(s.quality >= 1 && s.quality <= 100, "quality outside [1, 100]");
  if (s.enabled(kStageJitter)) {
    for (double f : {s.brightness, s.contrast, s.saturation}) {
      check(f >= R::kJitterMin && f <= R::kJitterMax, "jitter factor outside [0.8, 1.1]");
    }
    check(s.hue >= R::kHueMin && s.hue <= R::kHueMax, "hue outside [-0.05, 0.05]");
  }
}

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename U>
U parse_number(const std::string& key, const std::string& value) {
  U v{};
  auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || p != value.data() + value.size()) {
    throw SpecError("degradation spec: bad value for " + key + ": '" + value + "'");
  }
  return v;
}

}  // namespace

std::string serialize(const DegradationSpec& s) {
  std::ostringstream os;
  os << "stage_mask=" << s.stage_mask << '\n'
     << "blur_enabled=" << s.enabled(kStageBlur) << '\n'
     << "resample_enabled=" << s.enabled(kStageResample) << '\n'
     << "noise_enabled=" << s.enabled(kStageNoise) << '\n'
     << "compress_enabled=" << s.enabled(kStageCompress) << '\n'
     << "jitter_enabled=" << s.enabled(kStageJitter) << '\n'
     << "isotropic=" << s.isotropic << '\n'
     << "blur_sigma=" << fmt(s.blur_sigma) << '\n'
     << "sigma_x=" << fmt(s.sigma_x) << '\n'
     << "sigma_y=" << fmt(s.sigma_y) << '\n'
     << "angle=" << fmt(s.angle) << '\n'
     << "kernel_size=" << s.kernel_size << '\n'
     << "resample_factor=" << fmt(s.resample_factor) << '\n'
     << "noise_amp=" << fmt(s.noise_amp) << '\n'
     << "quality=" << s.quality << '\n'
     << "brightness=" << fmt(s.brightness) << '\n'
     << "contrast=" << fmt(s.contrast) << '\n'
     << "saturation=" << fmt(s.saturation) << '\n'
     << "hue=" << fmt(s.hue) << '\n'
     << "noise_seed=" << s.noise_seed << '\n';
  return os.str();
}

DegradationSpec parse_spec(std::string_view text) {
  DegradationSpec s;
  std::istringstream in{std::string(text)};
  std::string line;
  std::uint32_t flags = 0;
  bool saw_flags = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw SpecError("degradation spec: expected key=value: " + line);
    const std::string key = line.substr(0, eq), value = line.substr(eq + 1);
    auto flag = [&](DegradeStage st) {
      saw_flags = true;
      if (parse_number<int>(key, value) != 0) flags |= st;
    };
    if (key == "stage_mask") s.stage_mask = parse_number<std::uint32_t>(key, value);
    else if (key == "blur_enabled") flag(kStageBlur);
    else if (key == "resample_enabled") flag(kStageResample);
    else if (key == "noise_enabled") flag(kStageNoise);
    else if (key == "compress_enabled") flag(kStageCompress);
    else if (key == "jitter_enabled") flag(kStageJitter);
    else if (key == "isotropic") s.isotropic = parse_number<int>(key, value) != 0;
    else if (key == "blur_sigma") s.blur_sigma = parse_number<double>(key, value);
    else if (key == "sigma_x") s.sigma_x = parse_number<double>(key, value);
    else if (key == "sigma_y") s.sigma_y = parse_number<double>(key, value);
    else if (key == "angle") s.angle = parse_number<double>(key, value);
    else if (key == "kernel_size") s.kernel_size = parse_number<int>(key, value);
    else if (key == "resample_factor") s.resample_factor = parse_number<double>(key, value);
    else if (key == "noise_amp") s.noise_amp = parse_number<double>(key, value);
    else if (key == "quality") s.quality = parse_number<int>(key, value);
    else if (key == "brightness") s.brightness = parse_number<double>(key, value);
    else if (key == "contrast") s.contrast = parse_number<double>(key, value);
    else if (key == "saturation") s.saturation = parse_number<double>(key, value);
    else if (key == "hue") s.hue = parse_number<double>(key, value);
    else if (key == "noise_seed") s.noise_seed = parse_number<std::uint64_t>(key, value);
    else throw SpecError("degradation spec: unknown key '" + key + "'");
  }
  if (saw_flags && flags != s.stage_mask) {
    throw SpecError("degradation spec: stage flags disagree with stage_mask");
  }
  validate(s);
  return s;
}

}  // namespace rebot
