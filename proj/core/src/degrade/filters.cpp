#include "rebot/degrade/filters.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "rebot/errors.hpp"
#include "rebot/rng.hpp"

namespace rebot::degrade {
namespace {

void check_frame(const Tensor& frame, const char* op) {
  if (frame.rank() != 3 || frame.dim(0) != 3) {
    throw DimensionError(std::string(op) + ": expected [3,H,W], got " + to_string(frame.shape()));
  }
}

void check_sigma(double s) {
  if (!(s >= 0.1 && s <= 3.0)) {
    throw SpecError("blur sigma " + std::to_string(s) + " outside [0.1, 3]");
  }
}

void check_size(int size) {
  if (size < 1 || size % 2 == 0) throw SpecError("blur kernel size must be odd");
}

std::int64_t reflect(std::int64_t i, std::int64_t n) {
  if (n == 1) return 0;
  const std::int64_t period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

}  // namespace

void clamp_unit(Tensor& frame) {
  for (auto& v : frame.data()) v = std::clamp(v, 0.0f, 1.0f);
}

std::vector<double> gaussian_taps(double sigma, int size) {
  check_sigma(sigma);
  check_size(size);
  std::vector<double> taps(size);
  const int r = size / 2;
  double total = 0;
  for (int i = -r; i <= r; ++i) {
    taps[i + r] = std::exp(-0.5 * i * i / (sigma * sigma));
    total += taps[i + r];
  }
  for (auto& t : taps) t /= total;
  return taps;
}

std::vector<double> anisotropic_kernel(double sigma_x, double sigma_y, double angle, int size) {
  check_sigma(sigma_x);
  check_sigma(sigma_y);
  check_size(size);
  // Inverse covariance of R diag(sx^2, sy^2) R^T.
  const double c = std::cos(angle), s = std::sin(angle);
  const double ix = 1.0 / (sigma_x * sigma_x), iy = 1.0 / (sigma_y * sigma_y);
  const double a = c * c * ix + s * s * iy;
  const double b = c * s * (ix - iy);
  const double d = s * s * ix + c * c * iy;
  const int r = size / 2;
  std::vector<double> k(static_cast<std::size_t>(size) * size);
  double total = 0;
  for (int y = -r; y <= r; ++y) {
    for (int x = -r; x <= r; ++x) {
      const double v = std::exp(-0.5 * (a * x * x + 2 * b * x * y + d * y * y));
      k[(y + r) * size + (x + r)] = v;
      total += v;
    }
  }
  for (auto& v : k) v /= total;
  return k;
}

Tensor gaussian_blur(const Tensor& frame, double sigma, int size) {
  check_frame(frame, "gaussian_blur");
  const auto taps = gaussian_taps(sigma, size);
  const std::int64_t h = frame.dim(1), w = frame.dim(2);
  const int r = size / 2;
  Tensor out(frame.shape());
  std::vector<double> tmp(static_cast<std::size_t>(h * w));
  for (std::int64_t c = 0; c < 3; ++c) {
    const float* src = frame.data().data() + c * h * w;
    for (std::int64_t y = 0; y < h; ++y) {
      for (std::int64_t x = 0; x < w; ++x) {
        double acc = 0;
        for (int k = -r; k <= r; ++k) acc += taps[k + r] * src[y * w + reflect(x + k, w)];
        tmp[y * w + x] = acc;
      }
    }
    float* dst = out.data().data() + c * h * w;
    for (std::int64_t y = 0; y < h; ++y) {
      for (std::int64_t x = 0; x < w; ++x) {
        double acc = 0;
        for (int k = -r; k <= r; ++k) acc += taps[k + r] * tmp[reflect(y + k, h) * w + x];
        dst[y * w + x] = static_cast<float>(acc);
      }
    }
  }
  return out;
}

Tensor gaussian_blur(const Tensor& frame, double sigma_x, double sigma_y, double angle,
                     int size) {
  check_frame(frame, "gaussian_blur");
  const auto kernel = anisotropic_kernel(sigma_x, sigma_y, angle, size);
  const std::int64_t h = frame.dim(1), w = frame.dim(2);
  const int r = size / 2;
  Tensor out(frame.shape());
  for (std::int64_t c = 0; c < 3; ++c) {
    const float* src = frame.data().data() + c * h * w;
    float* dst = out.data().data() + c * h * w;
    for (std::int64_t y = 0; y < h; ++y) {
      for (std::int64_t x = 0; x < w; ++x) {
        double acc = 0;
        for (int ky = -r; ky <= r; ++ky) {
          const float* row = src + reflect(y + ky, h) * w;
          const double* krow = kernel.data() + (ky + r) * size + r;
          for (int kx = -r; kx <= r; ++kx) acc += krow[kx] * row[reflect(x + kx, w)];
        }
        dst[y * w + x] = static_cast<float>(acc);
      }
    }
  }
  return out;
}

Tensor resize_bilinear(const Tensor& frame, std::int64_t height, std::int64_t width) {
  check_frame(frame, "resize_bilinear");
  if (height <= 0 || width <= 0) throw DimensionError("resize_bilinear: target must be positive");
  const std::int64_t h = frame.dim(1), w = frame.dim(2);
  if (h == height && w == width) return frame.clone();

  struct Tap {
    std::int64_t i0, i1;
    double frac;
  };
  auto taps = [](std::int64_t in, std::int64_t out) {
    std::vector<Tap> t(static_cast<std::size_t>(out));
    const double scale = static_cast<double>(in) / static_cast<double>(out);
    for (std::int64_t o = 0; o < out; ++o) {
      const double src = std::clamp((o + 0.5) * scale - 0.5, 0.0, static_cast<double>(in - 1));
      const auto i0 = static_cast<std::int64_t>(std::floor(src));
      t[o] = {i0, std::min(i0 + 1, in - 1), src - static_cast<double>(i0)};
    }
    return t;
  };
  const auto ty = taps(h, height), tx = taps(w, width);
  Tensor out({3, height, width});
  for (std::int64_t c = 0; c < 3; ++c) {
    const float* src = frame.data().data() + c * h * w;
    float* dst = out.data().data() + c * height * width;
    for (std::int64_t y = 0; y < height; ++y) {
      const auto& a = ty[y];
      for (std::int64_t x = 0; x < width; ++x) {
        const auto& b = tx[x];
        const double top = src[a.i0 * w + b.i0] * (1 - b.frac) + src[a.i0 * w + b.i1] * b.frac;
        const double bot = src[a.i1 * w + b.i0] * (1 - b.frac) + src[a.i1 * w + b.i1] * b.frac;
        dst[y * width + x] = static_cast<float>(top * (1 - a.frac) + bot * a.frac);
      }
    }
  }
  return out;
}

Tensor add_gaussian_noise(const Tensor& frame, double amp, std::uint64_t seed) {
  Tensor out = frame.clone();
  if (amp == 0) return out;
  Rng rng(seed);
  for (auto& v : out.data()) v = static_cast<float>(v + amp * rng.normal());
  return out;
}

std::vector<int> quant_table(int quality) {
  if (quality < 1 || quality > 100) {
    throw SpecError("compression quality " + std::to_string(quality) + " outside [1, 100]");
  }
  static constexpr std::array<int, 64> kLuminance = {
      16, 11, 10, 16, 24,  40,  51,  61,  12, 12, 14, 19, 26,  58,  60,  55,
      14, 13, 16, 24, 40,  57,  69,  56,  14, 17, 22, 29, 51,  87,  80,  62,
      18, 22, 37, 56, 68,  109, 103, 77,  24, 35, 55, 64, 81,  104, 113, 92,
      49, 64, 78, 87, 103, 121, 120, 101, 72, 92, 95, 98, 112, 100, 103, 99};
  const int scale = quality < 50 ? 5000 / quality : 200 - 2 * quality;
  std::vector<int> q(64);
  for (int i = 0; i < 64; ++i) q[i] = std::clamp((kLuminance[i] * scale + 50) / 100, 1, 255);
  return q;
}

Tensor compress_blockdct(const Tensor& frame, int quality) {
  check_frame(frame, "compress_blockdct");
  const auto q = quant_table(quality);
  // Orthonormal DCT-II basis: basis[u][x].
  static const auto basis = [] {
    std::array<double, 64> b{};
    for (int u = 0; u < 8; ++u) {
      const double cu = u == 0 ? std::sqrt(1.0 / 8) : std::sqrt(2.0 / 8);
      for (int x = 0; x < 8; ++x) b[u * 8 + x] = cu * std::cos((2 * x + 1) * u * std::numbers::pi / 16);
    }
    return b;
  }();

  const std::int64_t h = frame.dim(1), w = frame.dim(2);
  Tensor out(frame.shape());
  std::array<double, 64> block{}, tmp{}, coef{};
  for (std::int64_t c = 0; c < 3; ++c) {
    const float* src = frame.data().data() + c * h * w;
    float* dst = out.data().data() + c * h * w;
    for (std::int64_t by = 0; by < h; by += 8) {
      for (std::int64_t bx = 0; bx < w; bx += 8) {
        for (int y = 0; y < 8; ++y) {
          const std::int64_t sy = std::min(by + y, h - 1);
          for (int x = 0; x < 8; ++x) {
            const std::int64_t sx = std::min(bx + x, w - 1);
            block[y * 8 + x] = src[sy * w + sx] * 255.0 - 128.0;
          }
        }
        // coef = B * block * B^T
        for (int u = 0; u < 8; ++u) {
          for (int x = 0; x < 8; ++x) {
            double s = 0;
            for (int y = 0; y < 8; ++y) s += basis[u * 8 + y] * block[y * 8 + x];
            tmp[u * 8 + x] = s;
          }
        }
        for (int u = 0; u < 8; ++u) {
          for (int v = 0; v < 8; ++v) {
            double s = 0;
            for (int x = 0; x < 8; ++x) s += tmp[u * 8 + x] * basis[v * 8 + x];
            coef[u * 8 + v] = std::nearbyint(s / q[u * 8 + v]) * q[u * 8 + v];
          }
        }
        // block = B^T * coef * B
        for (int y = 0; y < 8; ++y) {
          for (int v = 0; v < 8; ++v) {
            double s = 0;
            for (int u = 0; u < 8; ++u) s += basis[u * 8 + y] * coef[u * 8 + v];
            tmp[y * 8 + v] = s;
          }
        }
        for (int y = 0; y < 8 && by + y < h; ++y) {
          for (int x = 0; x < 8 && bx + x < w; ++x) {
            double s = 0;
            for (int v = 0; v < 8; ++v) s += tmp[y * 8 + v] * basis[v * 8 + x];
            dst[(by + y) * w + bx + x] = static_cast<float>((s + 128.0) / 255.0);
          }
        }
      }
    }
  }
  return out;
}

namespace {

void rgb_to_hsv(double r, double g, double b, double& h, double& s, double& v) {
  const double mx = std::max({r, g, b}), mn = std::min({r, g, b});
  const double d = mx - mn;
  v = mx;
  s = mx > 0 ? d / mx : 0;
  if (d == 0) {
    h = 0;
  } else if (mx == r) {
    h = std::fmod((g - b) / d, 6.0) / 6.0;
  } else if (mx == g) {
    h = ((b - r) / d + 2.0) / 6.0;
  } else {
    h = ((r - g) / d + 4.0) / 6.0;
  }
  if (h < 0) h += 1.0;
}

void hsv_to_rgb(double h, double s, double v, double& r, double& g, double& b) {
  const double hh = h * 6.0;
  const int sector = static_cast<int>(std::floor(hh)) % 6;
  const double f = hh - std::floor(hh);
  const double p = v * (1 - s), q = v * (1 - s * f), t = v * (1 - s * (1 - f));
  switch (sector) {
    case 0: r = v; g = t; b = p; break;
    case 1: r = q; g = v; b = p; break;
    case 2: r = p; g = v; b = t; break;
    case 3: r = p; g = q; b = v; break;
    case 4: r = t; g = p; b = v; break;
    default: r = v; g = p; b = q; break;
  }
}

}  // namespace

Tensor color_jitter(const Tensor& frame, double brightness, double contrast, double saturation,
                    double hue) {
  check_frame(frame, "color_jitter");
  Tensor out = frame.clone();
  const std::int64_t plane = frame.dim(1) * frame.dim(2);
  float* r = out.data().data();
  float* g = r + plane;
  float* b = g + plane;
  auto luma = [&](std::int64_t i) { return kLumaR * r[i] + kLumaG * g[i] + kLumaB * b[i]; };

  if (brightness != 1.0) {
    for (auto& v : out.data()) v = std::clamp(static_cast<float>(v * brightness), 0.0f, 1.0f);
  }
  if (contrast != 1.0) {
    double mean = 0;
    for (std::int64_t i = 0; i < plane; ++i) mean += luma(i);
    mean /= static_cast<double>(plane);
    for (auto& v : out.data()) {
      v = std::clamp(static_cast<float>(contrast * v + (1 - contrast) * mean), 0.0f, 1.0f);
    }
  }
  if (saturation != 1.0) {
    for (std::int64_t i = 0; i < plane; ++i) {
      const double y = luma(i);
      for (float* ch : {r, g, b}) {
        ch[i] = std::clamp(static_cast<float>(saturation * ch[i] + (1 - saturation) * y), 0.0f,
                           1.0f);
      }
    }
  }
  if (hue != 0.0) {
    for (std::int64_t i = 0; i < plane; ++i) {
      double hh, s, v, rr, gg, bb;
      rgb_to_hsv(r[i], g[i], b[i], hh, s, v);
      hh = std::fmod(hh + hue, 1.0);
      if (hh < 0) hh += 1.0;
      hsv_to_rgb(hh, s, v, rr, gg, bb);
      r[i] = std::clamp(static_cast<float>(rr), 0.0f, 1.0f);
      g[i] = std::clamp(static_cast<float>(gg), 0.0f, 1.0f);
      b[i] = std::clamp(static_cast<float>(bb), 0.0f, 1.0f);
    }
  }
  return out;
}

}  // namespace rebot::degrade
