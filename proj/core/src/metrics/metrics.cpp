#include "rebot/metrics/metrics.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "rebot/errors.hpp"

namespace rebot {

template <typename T>
double psnr(const BasicTensor<T>& pred, const BasicTensor<T>& target) {
  if (pred.shape() != target.shape()) {
    throw DimensionError("psnr: shape mismatch " + to_string(pred.shape()) + " vs " +
                         to_string(target.shape()));
  }
  double se = 0;
  const auto a = pred.data();
  const auto b = target.data();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    se += d * d;
  }
  if (se == 0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(static_cast<double>(a.size()) / se);
}

namespace {

// Valid-region separable filtering of one plane.
std::vector<double> filter_valid(const std::vector<double>& plane, std::int64_t h, std::int64_t w,
                                 const std::vector<double>& taps) {
  const int k = static_cast<int>(taps.size());
  const std::int64_t oh = h - k + 1, ow = w - k + 1;
  std::vector<double> rows(static_cast<std::size_t>(h * ow));
  for (std::int64_t y = 0; y < h; ++y) {
    for (std::int64_t x = 0; x < ow; ++x) {
      double s = 0;
      for (int i = 0; i < k; ++i) s += taps[i] * plane[y * w + x + i];
      rows[y * ow + x] = s;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(oh * ow));
  for (std::int64_t y = 0; y < oh; ++y) {
    for (std::int64_t x = 0; x < ow; ++x) {
      double s = 0;
      for (int i = 0; i < k; ++i) s += taps[i] * rows[(y + i) * ow + x];
      out[y * ow + x] = s;
    }
  }
  return out;
}

}  // namespace

template <typename T>
double ssim(const BasicTensor<T>& pred, const BasicTensor<T>& target) {
  if (pred.shape() != target.shape()) {
    throw DimensionError("ssim: shape mismatch " + to_string(pred.shape()) + " vs " +
                         to_string(target.shape()));
  }
  if (pred.rank() != 3) throw DimensionError("ssim: expected [C,H,W], got " + to_string(pred.shape()));
  const std::int64_t channels = pred.dim(0), h = pred.dim(1), w = pred.dim(2);
  if (h < kSsimWindow || w < kSsimWindow) {
    throw MetricError("ssim: frame " + std::to_string(h) + "x" + std::to_string(w) +
                      " is smaller than the 11x11 window");
  }
  std::vector<double> taps(kSsimWindow);
  double total = 0;
  for (int i = 0; i < kSsimWindow; ++i) {
    const double d = i - kSsimWindow / 2;
    taps[i] = std::exp(-0.5 * d * d / (kSsimSigma * kSsimSigma));
    total += taps[i];
  }
  for (auto& t : taps) t /= total;

  const std::int64_t plane = h * w;
  double sum = 0;
  for (std::int64_t c = 0; c < channels; ++c) {
    std::vector<double> x(plane), y(plane), xx(plane), yy(plane), xy(plane);
    for (std::int64_t i = 0; i < plane; ++i) {
      x[i] = pred.data()[c * plane + i];
      y[i] = target.data()[c * plane + i];
      xx[i] = x[i] * x[i];
      yy[i] = y[i] * y[i];
      xy[i] = x[i] * y[i];
    }
    const auto mx = filter_valid(x, h, w, taps), my = filter_valid(y, h, w, taps);
    const auto sxx = filter_valid(xx, h, w, taps), syy = filter_valid(yy, h, w, taps);
    const auto sxy = filter_valid(xy, h, w, taps);
    double acc = 0;
    for (std::size_t i = 0; i < mx.size(); ++i) {
      const double vx = sxx[i] - mx[i] * mx[i];
      const double vy = syy[i] - my[i] * my[i];
      const double cov = sxy[i] - mx[i] * my[i];
      const double num = (2 * mx[i] * my[i] + kSsimC1) * (2 * cov + kSsimC2);
      const double den = (mx[i] * mx[i] + my[i] * my[i] + kSsimC1) * (vx + vy + kSsimC2);
      acc += num / den;
    }
    sum += acc / static_cast<double>(mx.size());
  }
  return sum / static_cast<double>(channels);
}

template double psnr(const Tensor&, const Tensor&);
template double psnr(const TensorD&, const TensorD&);
template double ssim(const Tensor&, const Tensor&);
template double ssim(const TensorD&, const TensorD&);

}  // namespace rebot
