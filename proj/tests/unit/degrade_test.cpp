#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "rebot/degrade/filters.hpp"
#include "rebot/degrade/pipeline.hpp"
#include "rebot/degrade/spec.hpp"
#include "rebot/errors.hpp"
#include "rebot/metrics/metrics.hpp"

namespace rebot {
namespace {

using namespace rebot::degrade;

Tensor constant_frame(int h, int w, float v) { return Tensor::full({3, h, w}, v); }

// Smooth gradients plus mild texture, closer to photographs than white noise.
Tensor natural_frame(int h, int w, std::uint64_t seed) {
  Tensor f({3, h, w});
  Rng rng(seed);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const double v = 0.5 + 0.25 * std::sin(0.11 * x + 0.7 * c) * std::cos(0.07 * y) +
                         0.1 * std::sin(0.5 * x + 0.3 * y) + 0.02 * rng.normal();
        f.data()[(c * h + y) * w + x] = static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
  return f;
}

double max_diff(const Tensor& a, const Tensor& b) {
  return testing::max_abs_diff(testing::values(a), testing::values(b));
}

TEST(SampleSpec, DeterministicInSeed) {
  EXPECT_EQ(sample_spec(17), sample_spec(17));
  EXPECT_FALSE(sample_spec(17) == sample_spec(18));
}

TEST(SampleSpec, RangesAndIsotropicFraction) {
  using R = DegradeRanges;
  int isotropic = 0;
  const int n = 10000;
  for (int s = 0; s < n; ++s) {
    const auto spec = sample_spec(static_cast<std::uint64_t>(s));
    ASSERT_NE(spec.stage_mask, 0u);
    ASSERT_EQ(spec.stage_mask & ~kAllStages, 0u);
    ASSERT_GE(spec.blur_sigma, R::kSigmaMin);
    ASSERT_LE(spec.blur_sigma, R::kSigmaMax);
    ASSERT_GE(spec.sigma_x, R::kSigmaMin);
    ASSERT_LE(spec.sigma_y, R::kSigmaMax);
    ASSERT_GE(spec.resample_factor, R::kResampleMin);
    ASSERT_LE(spec.resample_factor, R::kResampleMax);
    ASSERT_GE(spec.noise_amp, R::kNoiseMin);
    ASSERT_LE(spec.noise_amp, R::kNoiseMax);
    ASSERT_GE(spec.quality, R::kQualityMin);
    ASSERT_LE(spec.quality, R::kQualityMax);
    for (double f : {spec.brightness, spec.contrast, spec.saturation}) {
      ASSERT_GE(f, R::kJitterMin);
      ASSERT_LE(f, R::kJitterMax);
    }
    ASSERT_GE(spec.hue, R::kHueMin);
    ASSERT_LE(spec.hue, R::kHueMax);
    ASSERT_EQ(spec.kernel_size, 15);
    isotropic += spec.isotropic;
  }
  EXPECT_NEAR(static_cast<double>(isotropic) / n, 0.5, 0.02);
}

TEST(SampleSpec, EachStageEnabledAboutHalfTheTime) {
  int on[5] = {};
  const int n = 4000;
  for (int s = 0; s < n; ++s) {
    const auto m = sample_spec(static_cast<std::uint64_t>(s) + 1000000).stage_mask;
    for (int b = 0; b < 5; ++b) on[b] += (m >> b) & 1;
  }
  // The forced stage nudges the rate up slightly above 0.5.
  for (int b = 0; b < 5; ++b) EXPECT_NEAR(static_cast<double>(on[b]) / n, 0.5, 0.05) << b;
}

TEST(SpecText, RoundTripAndErrors) {
  for (std::uint64_t s : {1u, 2u, 3u, 99u}) {
    const auto spec = sample_spec(s);
    EXPECT_EQ(parse_spec(serialize(spec)), spec);
  }
  const auto text = serialize(sample_spec(5));
  EXPECT_EQ(text.substr(0, 11), "stage_mask=");
  EXPECT_THROW(parse_spec(text + "bogus=1\n"), SpecError);
  auto spec = sample_spec(5);
  spec.stage_mask = kAllStages;
  spec.quality = 101;
  EXPECT_THROW(validate(spec), SpecError);
  spec = sample_spec(5);
  spec.stage_mask = kAllStages;
  spec.isotropic = true;
  spec.blur_sigma = 5;
  EXPECT_THROW(validate(spec), SpecError);
}

TEST(Pipeline, EmptyMaskIsIdentity) {
  DegradationSpec spec;
  const auto f = natural_frame(20, 24, 1);
  EXPECT_TRUE(bit_equal(degrade_frame(f, spec), f));
}

TEST(Pipeline, NoiseOnlyVarianceMatchesAmplitude) {
  DegradationSpec spec;
  spec.stage_mask = kStageNoise;
  spec.noise_amp = 0.05;
  spec.noise_seed = 3;
  const auto f = constant_frame(128, 128, 0.5f);
  const auto out = degrade_frame(f, spec);
  double mse = 0;
  for (std::int64_t i = 0; i < f.numel(); ++i) mse += std::pow(out.data()[i] - 0.5, 2);
  mse /= static_cast<double>(f.numel());
  EXPECT_NEAR(mse, 0.05 * 0.05, 0.05 * 0.05 * 0.05);
}

TEST(Pipeline, DeterministicAndPerClip) {
  for (std::uint64_t seed : {1u, 7u, 21u, 42u}) {
    const auto spec = sample_spec(seed);
    const auto f = natural_frame(40, 36, seed);
    const auto a = degrade_clip({f, f}, spec);
    const auto b = degrade_clip({f, f}, spec);
    EXPECT_TRUE(bit_equal(a[0], b[0]));
    // Identical frames inside one clip degrade identically.
    EXPECT_TRUE(bit_equal(a[0], a[1]));
    EXPECT_EQ(a[0].shape(), f.shape());
    for (float v : a[0].data()) {
      ASSERT_GE(v, 0.0f);
      ASSERT_LE(v, 1.0f);
    }
  }
}

TEST(Pipeline, AllStagesReduceFidelity) {
  DegradationSpec spec = sample_spec(11);
  spec.stage_mask = kAllStages;
  spec.noise_amp = 0.05;
  const auto f = natural_frame(48, 48, 2);
  EXPECT_LT(psnr(degrade_frame(f, spec), f), 40.0);
}

TEST(Pipeline, ResampleFactorBelowOneStillReturnsInputSize) {
  DegradationSpec spec;
  spec.stage_mask = kStageResample;
  spec.resample_factor = 0.8;
  const auto f = natural_frame(30, 22, 3);
  EXPECT_EQ(degrade_frame(f, spec).shape(), f.shape());
}

TEST(Blur, ConstantFrameUnchanged) {
  const auto f = constant_frame(20, 20, 0.3f);
  EXPECT_LT(max_diff(gaussian_blur(f, 2.0), f), 1e-6);
  EXPECT_LT(max_diff(gaussian_blur(f, 2.5, 0.7, 0.6), f), 1e-6);
}

TEST(Blur, TinySigmaIsNearIdentity) {
  const auto f = testing::random_tensor<float>({3, 20, 20}, 4, 0, 1);
  EXPECT_LT(max_diff(gaussian_blur(f, 0.1), f), 1e-2);
}

TEST(Blur, IsotropicCommutesWithRotation) {
  const auto f = testing::random_tensor<float>({3, 16, 16}, 5, 0, 1);
  auto rot90 = [](const Tensor& t) {
    const auto n = t.dim(1);
    Tensor r(t.shape());
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) r.data()[(c * n + x) * n + (n - 1 - y)] = t.data()[(c * n + y) * n + x];
    return r;
  };
  EXPECT_LT(max_diff(gaussian_blur(rot90(f), 1.3), rot90(gaussian_blur(f, 1.3))), 1e-6);
}

TEST(Blur, KernelsNormalizedAndOriented) {
  double s = 0;
  for (double t : gaussian_taps(1.5, 15)) s += t;
  EXPECT_NEAR(s, 1.0, 1e-12);
  const auto k = anisotropic_kernel(3.0, 0.5, 0.0, 15);
  s = 0;
  for (double t : k) s += t;
  EXPECT_NEAR(s, 1.0, 1e-12);
  // Wide along x at angle 0: the horizontal neighbour outweighs the vertical one.
  EXPECT_GT(k[7 * 15 + 8], k[8 * 15 + 7]);
  EXPECT_THROW(gaussian_blur(Tensor({3, 4, 4}), 0.05), SpecError);
  EXPECT_THROW(gaussian_blur(Tensor({3, 4, 4}), 3.5), SpecError);
}

TEST(Resize, HalfPixelCentersAndIdentity) {
  const auto f = testing::random_tensor<float>({3, 6, 5}, 6, 0, 1);
  EXPECT_TRUE(bit_equal(resize_bilinear(f, 6, 5), f));
  Tensor row({3, 1, 2}, {0, 1, 0, 1, 0, 1});
  const auto up = resize_bilinear(row, 1, 4);
  // Output centers at 0.25, 0.75, 1.25, 1.75 in input pixel units, minus 0.5.
  EXPECT_NEAR(up.data()[0], 0.0, 1e-7);
  EXPECT_NEAR(up.data()[1], 0.25, 1e-7);
  EXPECT_NEAR(up.data()[2], 0.75, 1e-7);
  EXPECT_NEAR(up.data()[3], 1.0, 1e-7);
}

// Textbook 8x8 DCT with the JPEG quality scaling, straight from the formula.
std::vector<double> reference_blockdct(const Tensor& f, int quality) {
  static const int base[64] = {16, 11, 10, 16, 24,  40,  51,  61,  12, 12, 14, 19, 26,  58,  60,  55,
                               14, 13, 16, 24, 40,  57,  69,  56,  14, 17, 22, 29, 51,  87,  80,  62,
                               18, 22, 37, 56, 68,  109, 103, 77,  24, 35, 55, 64, 81,  104, 113, 92,
                               49, 64, 78, 87, 103, 121, 120, 101, 72, 92, 95, 98, 112, 100, 103, 99};
  const double scale = quality < 50 ? std::floor(5000.0 / quality) : 200 - 2 * quality;
  const auto h = f.dim(1), w = f.dim(2);
  std::vector<double> out(f.numel());
  auto cf = [](int u) { return u == 0 ? 1 / std::sqrt(2.0) : 1.0; };
  const double pi = std::numbers::pi;
  for (int c = 0; c < 3; ++c)
    for (int by = 0; by < h; by += 8)
      for (int bx = 0; bx < w; bx += 8) {
        double px[8][8], coef[8][8];
        for (int y = 0; y < 8; ++y)
          for (int x = 0; x < 8; ++x) {
            const auto sy = std::min<std::int64_t>(by + y, h - 1), sx = std::min<std::int64_t>(bx + x, w - 1);
            px[y][x] = 255.0 * f.data()[(c * h + sy) * w + sx] - 128;
          }
        for (int u = 0; u < 8; ++u)
          for (int v = 0; v < 8; ++v) {
            double s = 0;
            for (int y = 0; y < 8; ++y)
              for (int x = 0; x < 8; ++x)
                s += px[y][x] * std::cos((2 * y + 1) * u * pi / 16) * std::cos((2 * x + 1) * v * pi / 16);
            s *= 0.25 * cf(u) * cf(v);
            const double q = std::clamp(std::floor((base[u * 8 + v] * scale + 50) / 100), 1.0, 255.0);
            coef[u][v] = std::nearbyint(s / q) * q;
          }
        for (int y = 0; y < 8 && by + y < h; ++y)
          for (int x = 0; x < 8 && bx + x < w; ++x) {
            double s = 0;
            for (int u = 0; u < 8; ++u)
              for (int v = 0; v < 8; ++v)
                s += 0.25 * cf(u) * cf(v) * coef[u][v] * std::cos((2 * y + 1) * u * pi / 16) *
                     std::cos((2 * x + 1) * v * pi / 16);
            out[(c * h + by + y) * w + bx + x] = (s + 128) / 255.0;
          }
      }
  return out;
}

TEST(BlockDct, MatchesTextbookDefinition) {
  for (auto [h, w, q] : {std::tuple{8, 8, 75}, std::tuple{13, 10, 90}, std::tuple{16, 24, 30}}) {
    const auto f = natural_frame(h, w, 7);
    EXPECT_LT(testing::max_abs_diff(testing::values(compress_blockdct(f, q)), reference_blockdct(f, q)),
              1e-5)
        << h << "x" << w << " q" << q;
  }
}

TEST(BlockDct, QuantTableScaling) {
  const auto q50 = quant_table(50);
  EXPECT_EQ(q50[0], 16);
  EXPECT_EQ(q50[63], 99);
  for (int v : quant_table(100)) EXPECT_EQ(v, 1);
  EXPECT_EQ(quant_table(10)[0], 80);
  EXPECT_THROW(quant_table(0), SpecError);
  EXPECT_THROW(compress_blockdct(Tensor({3, 8, 8}), 101), SpecError);
}

TEST(BlockDct, QualityOrderingAndNearLossless) {
  const auto f = natural_frame(64, 64, 8);
  const double p100 = psnr(compress_blockdct(f, 100), f);
  const double p95 = psnr(compress_blockdct(f, 95), f);
  const double p70 = psnr(compress_blockdct(f, 70), f);
  EXPECT_GT(p100, 45.0);
  EXPECT_LT(p70, p95);
  const auto c = constant_frame(16, 16, 0.4f);
  EXPECT_LT(max_diff(compress_blockdct(c, 70), c), 0.5 / 255 * 8);
}

TEST(ColorJitter, NeutralBrightnessAndDesaturate) {
  const auto f = testing::random_tensor<float>({3, 5, 5}, 9, 0, 1);
  EXPECT_TRUE(bit_equal(color_jitter(f, 1, 1, 1, 0), f));
  const auto half = constant_frame(4, 4, 0.5f);
  EXPECT_LT(max_diff(color_jitter(half, 0.8, 1, 1, 0), constant_frame(4, 4, 0.4f)), 1e-7);
  const auto gray = color_jitter(f, 1, 1, 0, 0);
  for (int i = 0; i < 25; ++i) {
    EXPECT_FLOAT_EQ(gray.data()[i], gray.data()[25 + i]);
    EXPECT_FLOAT_EQ(gray.data()[i], gray.data()[50 + i]);
    const double y = kLumaR * f.data()[i] + kLumaG * f.data()[25 + i] + kLumaB * f.data()[50 + i];
    EXPECT_NEAR(gray.data()[i], y, 1e-6);
  }
}

TEST(ColorJitter, HueRotationByThirdPermutesPrimaries) {
  Tensor red({3, 1, 1}, {1, 0, 0});
  const auto g = color_jitter(red, 1, 1, 1, 1.0 / 3);
  EXPECT_NEAR(g.data()[0], 0, 1e-6);
  EXPECT_NEAR(g.data()[1], 1, 1e-6);
  EXPECT_NEAR(g.data()[2], 0, 1e-6);
}

TEST(ColorJitter, ContrastBlendsTowardMeanLuma) {
  Tensor f({3, 1, 2}, {0.2f, 0.6f, 0.2f, 0.6f, 0.2f, 0.6f});
  const auto out = color_jitter(f, 1, 0.5, 1, 0);
  EXPECT_NEAR(out.data()[0], 0.3, 1e-6);
  EXPECT_NEAR(out.data()[1], 0.5, 1e-6);
}

}  // namespace
}  // namespace rebot
