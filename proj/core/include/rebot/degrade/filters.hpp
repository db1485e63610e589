#pragma once

#include <cstdint>
#include <vector>

#include "rebot/tensor.hpp"

// Single-frame image operations on [3,H,W] float frames with values in [0,1].
namespace rebot::degrade {

// Normalized 1-D Gaussian taps, `size` odd.
std::vector<double> gaussian_taps(double sigma, int size);
// Normalized size x size kernel with principal deviations sigma_x, sigma_y
// rotated by `angle` radians, row-major.
std::vector<double> anisotropic_kernel(double sigma_x, double sigma_y, double angle, int size);

// Reflect padding at borders (edge pixel not repeated). Sigmas must lie in
// [0.1, 3], otherwise SpecError.
Tensor gaussian_blur(const Tensor& frame, double sigma, int size = 15);
Tensor gaussian_blur(const Tensor& frame, double sigma_x, double sigma_y, double angle,
                     int size = 15);

// Bilinear resampling with half-pixel centers.
Tensor resize_bilinear(const Tensor& frame, std::int64_t height, std::int64_t width);

// Adds N(0, amp^2) per element from a generator seeded with `seed`.
Tensor add_gaussian_noise(const Tensor& frame, double amp, std::uint64_t seed);

// 8x8 block DCT quantization with the standard luminance table scaled by
// quality (1..100). Partial edge blocks are padded by replication.
Tensor compress_blockdct(const Tensor& frame, int quality);
// The quantization table used for `quality`, row-major 8x8.
std::vector<int> quant_table(int quality);

// Brightness (scale), contrast (blend with frame mean luminance),
// saturation (blend with per-pixel luminance), hue (HSV rotation by a
// fraction of a turn). Neutral factors are skipped exactly.
Tensor color_jitter(const Tensor& frame, double brightness, double contrast, double saturation,
                    double hue);

// In place.
void clamp_unit(Tensor& frame);

// Rec.601 luma.
inline constexpr double kLumaR = 0.299, kLumaG = 0.587, kLumaB = 0.114;

}  // namespace rebot::degrade
