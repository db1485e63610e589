#include "rebot/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "rebot/errors.hpp"
#include "rebot/tape.hpp"

namespace rebot::ops {
namespace {

template <typename T>
using ImplPtr = std::shared_ptr<TensorImpl<T>>;

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using Mat = Eigen::Map<RowMat<T>>;
template <typename T>
using CMat = Eigen::Map<const RowMat<T>>;

template <typename T>
Tape<T>* recording_tape(std::initializer_list<const BasicTensor<T>*> inputs) {
  Tape<T>* tape = active_tape<T>();
  if (tape == nullptr) return nullptr;
  for (const auto* t : inputs) {
    if (t != nullptr && t->requires_grad()) return tape;
  }
  return nullptr;
}

// Gradient buffer of an input, or nullptr when it does not take gradients.
template <typename T>
T* grad_of(const ImplPtr<T>& impl) {
  if (!impl || !impl->requires_grad) return nullptr;
  if (impl->grad.empty()) impl->grad.assign(impl->values.size(), T(0));
  return impl->grad.data();
}

template <typename T>
void check_finite(const BasicTensor<T>& out, const char* op) {
#ifndef NDEBUG
  for (T v : out.data()) {
    if (!std::isfinite(v)) throw Error(std::string("non-finite value produced by ") + op);
  }
#else
  (void)out;
  (void)op;
#endif
}

[[noreturn]] void dim_error(const std::string& op, const std::string& what) {
  throw DimensionError(op + ": " + what);
}

void require_rank(const Shape& s, std::size_t rank, const char* op, const char* name) {
  if (s.size() != rank) {
    dim_error(op, std::string(name) + " must have rank " + std::to_string(rank) + ", got " +
                      to_string(s));
  }
}

template <typename T>
void require_vector(const BasicTensor<T>& v, std::int64_t n, const char* op, const char* name) {
  if (!v.defined()) return;
  if (v.rank() != 1 || v.dim(0) != n) {
    dim_error(op, std::string(name) + " must be [" + std::to_string(n) + "], got " +
                      to_string(v.shape()));
  }
}

struct Window {
  std::int64_t channels, height, width;
  int kh, kw, stride, padding;
  std::int64_t out_h, out_w;
};

// cols[(c*kh+ky)*kw+kx][oy*out_w+ox] = x[c][oy*s-p+ky][ox*s-p+kx] (zero outside).
template <typename T>
void im2col(const T* x, const Window& g, T* cols) {
  const std::int64_t plane = g.out_h * g.out_w;
  for (std::int64_t c = 0; c < g.channels; ++c) {
    for (int ky = 0; ky < g.kh; ++ky) {
      for (int kx = 0; kx < g.kw; ++kx) {
        T* row = cols + ((c * g.kh + ky) * g.kw + kx) * plane;
        for (std::int64_t oy = 0; oy < g.out_h; ++oy) {
          const std::int64_t iy = oy * g.stride - g.padding + ky;
          T* dst = row + oy * g.out_w;
          if (iy < 0 || iy >= g.height) {
            std::fill(dst, dst + g.out_w, T(0));
            continue;
          }
          const T* src = x + (c * g.height + iy) * g.width;
          for (std::int64_t ox = 0; ox < g.out_w; ++ox) {
            const std::int64_t ix = ox * g.stride - g.padding + kx;
            dst[ox] = (ix >= 0 && ix < g.width) ? src[ix] : T(0);
          }
        }
      }
    }
  }
}

// Adjoint of im2col: scatter-adds columns back into x.
template <typename T>
void col2im(const T* cols, const Window& g, T* x) {
  const std::int64_t plane = g.out_h * g.out_w;
  for (std::int64_t c = 0; c < g.channels; ++c) {
    for (int ky = 0; ky < g.kh; ++ky) {
      for (int kx = 0; kx < g.kw; ++kx) {
        const T* row = cols + ((c * g.kh + ky) * g.kw + kx) * plane;
        for (std::int64_t oy = 0; oy < g.out_h; ++oy) {
          const std::int64_t iy = oy * g.stride - g.padding + ky;
          if (iy < 0 || iy >= g.height) continue;
          const T* src = row + oy * g.out_w;
          T* dst = x + (c * g.height + iy) * g.width;
          for (std::int64_t ox = 0; ox < g.out_w; ++ox) {
            const std::int64_t ix = ox * g.stride - g.padding + kx;
            if (ix >= 0 && ix < g.width) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

template <typename T>
void add_channel_bias(T* out, const T* bias, std::int64_t channels, std::int64_t plane) {
  for (std::int64_t c = 0; c < channels; ++c) {
    const T b = bias[c];
    T* p = out + c * plane;
    for (std::int64_t i = 0; i < plane; ++i) p[i] += b;
  }
}

template <typename T>
void accumulate_channel_sums(const T* grad, T* dbias, std::int64_t channels,
                             std::int64_t plane) {
  for (std::int64_t c = 0; c < channels; ++c) {
    const T* p = grad + c * plane;
    T s = 0;
    for (std::int64_t i = 0; i < plane; ++i) s += p[i];
    dbias[c] += s;
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// conv2d

template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& input, const BasicTensor<T>& weight,
                      const BasicTensor<T>& bias, int stride, int padding) {
  constexpr const char* kOp = "conv2d";
  require_rank(input.shape(), 4, kOp, "input");
  require_rank(weight.shape(), 4, kOp, "weight");
  const auto batch = input.dim(0), cin = input.dim(1), h = input.dim(2), w = input.dim(3);
  const auto cout = weight.dim(0);
  if (weight.dim(1) != cin) {
    dim_error(kOp, "input has " + std::to_string(cin) + " channels, weight expects " +
                       std::to_string(weight.dim(1)));
  }
  require_vector(bias, cout, kOp, "bias");
  if (stride < 1 || padding < 0) dim_error(kOp, "stride must be >= 1 and padding >= 0");
  const int kh = static_cast<int>(weight.dim(2)), kw = static_cast<int>(weight.dim(3));
  if (h + 2 * padding < kh || w + 2 * padding < kw) dim_error(kOp, "kernel larger than padded input");

  const Window g{cin, h, w, kh, kw, stride, padding, (h + 2 * padding - kh) / stride + 1,
                 (w + 2 * padding - kw) / stride + 1};
  const std::int64_t k = cin * kh * kw;
  const std::int64_t plane = g.out_h * g.out_w;
  const bool pointwise = kh == 1 && kw == 1 && stride == 1 && padding == 0;

  BasicTensor<T> out({batch, cout, g.out_h, g.out_w});
  Buffer<T> cols(pointwise ? 0 : static_cast<std::size_t>(k * plane));
  const CMat<T> wm(weight.data().data(), cout, k);
  for (std::int64_t b = 0; b < batch; ++b) {
    const T* x = input.data().data() + b * cin * h * w;
    const T* col_ptr = x;
    if (!pointwise) {
      im2col(x, g, cols.data());
      col_ptr = cols.data();
    }
    Mat<T> om(out.data().data() + b * cout * plane, cout, plane);
    om.noalias() = wm * CMat<T>(col_ptr, k, plane);
    if (bias.defined()) add_channel_bias(om.data(), bias.data().data(), cout, plane);
  }
  check_finite(out, kOp);

  if (auto* tape = recording_tape<T>({&input, &weight, &bias})) {
    out.set_requires_grad(true);
    auto xi = input.impl(), wi = weight.impl(), bi = bias.impl(), oi = out.impl();
    tape->record(kOp, {xi, wi, bi}, oi, [=] {
      T* dx = grad_of<T>(xi);
      T* dw = grad_of<T>(wi);
      T* db = grad_of<T>(bi);
      Buffer<T> cols_b(pointwise ? 0 : static_cast<std::size_t>(k * plane));
      Buffer<T> dcols(dx && !pointwise ? static_cast<std::size_t>(k * plane) : 0);
      const CMat<T> wmat(wi->values.data(), cout, k);
      for (std::int64_t b = 0; b < batch; ++b) {
        const CMat<T> dy(oi->grad.data() + b * cout * plane, cout, plane);
        const T* x = xi->values.data() + b * cin * h * w;
        if (dw) {
          const T* col_ptr = x;
          if (!pointwise) {
            im2col(x, g, cols_b.data());
            col_ptr = cols_b.data();
          }
          Mat<T>(dw, cout, k).noalias() += dy * CMat<T>(col_ptr, k, plane).transpose();
        }
        if (db) accumulate_channel_sums(dy.data(), db, cout, plane);
        if (dx) {
          T* dxb = dx + b * cin * h * w;
          if (pointwise) {
            Mat<T>(dxb, cin, plane).noalias() += wmat.transpose() * dy;
          } else {
            Mat<T>(dcols.data(), k, plane).noalias() = wmat.transpose() * dy;
            col2im(dcols.data(), g, dxb);
          }
        }
      }
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// depthwise 7x7

template <typename T>
BasicTensor<T> depthwise_conv2d(const BasicTensor<T>& input, const BasicTensor<T>& weight,
                                const BasicTensor<T>& bias) {
  constexpr const char* kOp = "depthwise_conv2d";
  constexpr int K = kDepthwiseKernel;
  constexpr int P = kDepthwisePadding;
  require_rank(input.shape(), 4, kOp, "input");
  require_rank(weight.shape(), 4, kOp, "weight");
  const auto batch = input.dim(0), ch = input.dim(1), h = input.dim(2), w = input.dim(3);
  if (weight.dim(0) != ch || weight.dim(1) != 1) {
    dim_error(kOp, "weight " + to_string(weight.shape()) + " does not match " +
                       std::to_string(ch) + " input channels");
  }
  if (weight.dim(2) != K || weight.dim(3) != K) dim_error(kOp, "kernel must be 7x7");
  require_vector(bias, ch, kOp, "bias");

  const std::int64_t plane = h * w;
  BasicTensor<T> out(input.shape());
  const T* x = input.data().data();
  const T* wt = weight.data().data();
  T* y = out.data().data();
  for (std::int64_t b = 0; b < batch; ++b) {
    for (std::int64_t c = 0; c < ch; ++c) {
      const T* xp = x + (b * ch + c) * plane;
      T* yp = y + (b * ch + c) * plane;
      const T* kern = wt + c * K * K;
      std::fill(yp, yp + plane, bias.defined() ? bias.data()[c] : T(0));
      for (int ky = 0; ky < K; ++ky) {
        const std::int64_t y0 = std::max<std::int64_t>(0, P - ky);
        const std::int64_t y1 = std::min<std::int64_t>(h, h + P - ky);
        for (int kx = 0; kx < K; ++kx) {
          const T kv = kern[ky * K + kx];
          const std::int64_t x0 = std::max<std::int64_t>(0, P - kx);
          const std::int64_t x1 = std::min<std::int64_t>(w, w + P - kx);
          for (std::int64_t oy = y0; oy < y1; ++oy) {
            const T* src = xp + (oy + ky - P) * w + (kx - P);
            T* dst = yp + oy * w;
            for (std::int64_t ox = x0; ox < x1; ++ox) dst[ox] += kv * src[ox];
          }
        }
      }
    }
  }
  check_finite(out, kOp);

  if (auto* tape = recording_tape<T>({&input, &weight, &bias})) {
    out.set_requires_grad(true);
    auto xi = input.impl(), wi = weight.impl(), bi = bias.impl(), oi = out.impl();
    tape->record(kOp, {xi, wi, bi}, oi, [=] {
      T* dx = grad_of<T>(xi);
      T* dw = grad_of<T>(wi);
      T* db = grad_of<T>(bi);
      for (std::int64_t b = 0; b < batch; ++b) {
        for (std::int64_t c = 0; c < ch; ++c) {
          const T* dy = oi->grad.data() + (b * ch + c) * plane;
          const T* xp = xi->values.data() + (b * ch + c) * plane;
          const T* kern = wi->values.data() + c * K * K;
          if (db) {
            T s = 0;
            for (std::int64_t i = 0; i < plane; ++i) s += dy[i];
            db[c] += s;
          }
          for (int ky = 0; ky < K; ++ky) {
            const std::int64_t y0 = std::max<std::int64_t>(0, P - ky);
            const std::int64_t y1 = std::min<std::int64_t>(h, h + P - ky);
            for (int kx = 0; kx < K; ++kx) {
              const std::int64_t x0 = std::max<std::int64_t>(0, P - kx);
              const std::int64_t x1 = std::min<std::int64_t>(w, w + P - kx);
              T acc = 0;
              const T kv = kern[ky * K + kx];
              for (std::int64_t oy = y0; oy < y1; ++oy) {
                const std::int64_t off = (oy + ky - P) * w + (kx - P);
                const T* dyr = dy + oy * w;
                if (dw) {
                  const T* src = xp + off;
                  for (std::int64_t ox = x0; ox < x1; ++ox) acc += dyr[ox] * src[ox];
                }
                if (dx) {
                  T* dst = dx + (b * ch + c) * plane + off;
                  for (std::int64_t ox = x0; ox < x1; ++ox) dst[ox] += kv * dyr[ox];
                }
              }
              if (dw) dw[c * K * K + ky * K + kx] += acc;
            }
          }
        }
      }
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// transposed conv

template <typename T>
BasicTensor<T> transposed_conv2d(const BasicTensor<T>& input, const BasicTensor<T>& weight,
                                 const BasicTensor<T>& bias, int stride, int padding) {
  constexpr const char* kOp = "transposed_conv2d";
  require_rank(input.shape(), 4, kOp, "input");
  require_rank(weight.shape(), 4, kOp, "weight");
  const auto batch = input.dim(0), cin = input.dim(1), h = input.dim(2), w = input.dim(3);
  if (weight.dim(0) != cin) {
    dim_error(kOp, "input has " + std::to_string(cin) + " channels, weight expects " +
                       std::to_string(weight.dim(0)));
  }
  if (stride < 1 || padding < 0) dim_error(kOp, "stride must be >= 1 and padding >= 0");
  const auto cout = weight.dim(1);
  const int kh = static_cast<int>(weight.dim(2)), kw = static_cast<int>(weight.dim(3));
  require_vector(bias, cout, kOp, "bias");
  const std::int64_t oh = (h - 1) * stride - 2 * padding + kh;
  const std::int64_t ow = (w - 1) * stride - 2 * padding + kw;
  if (oh <= 0 || ow <= 0) dim_error(kOp, "padding too large for kernel");

  // Output map seen as the input of the forward conv that produces an h x w map.
  const Window g{cout, oh, ow, kh, kw, stride, padding, h, w};
  const std::int64_t k = cout * kh * kw;
  const std::int64_t plane = h * w;
  const std::int64_t out_plane = oh * ow;

  BasicTensor<T> out({batch, cout, oh, ow});
  Buffer<T> cols(static_cast<std::size_t>(k * plane));
  const CMat<T> wm(weight.data().data(), cin, k);
  for (std::int64_t b = 0; b < batch; ++b) {
    Mat<T>(cols.data(), k, plane).noalias() =
        wm.transpose() * CMat<T>(input.data().data() + b * cin * plane, cin, plane);
    T* ob = out.data().data() + b * cout * out_plane;
    col2im(cols.data(), g, ob);
    if (bias.defined()) add_channel_bias(ob, bias.data().data(), cout, out_plane);
  }
  check_finite(out, kOp);

  if (auto* tape = recording_tape<T>({&input, &weight, &bias})) {
    out.set_requires_grad(true);
    auto xi = input.impl(), wi = weight.impl(), bi = bias.impl(), oi = out.impl();
    tape->record(kOp, {xi, wi, bi}, oi, [=] {
      T* dx = grad_of<T>(xi);
      T* dw = grad_of<T>(wi);
      T* db = grad_of<T>(bi);
      Buffer<T> dcols(static_cast<std::size_t>(k * plane));
      const CMat<T> wmat(wi->values.data(), cin, k);
      for (std::int64_t b = 0; b < batch; ++b) {
        const T* dy = oi->grad.data() + b * cout * out_plane;
        if (db) accumulate_channel_sums(dy, db, cout, out_plane);
        if (!dx && !dw) continue;
        im2col(dy, g, dcols.data());
        const CMat<T> dc(dcols.data(), k, plane);
        if (dx) Mat<T>(dx + b * cin * plane, cin, plane).noalias() += wmat * dc;
        if (dw) {
          Mat<T>(dw, cin, k).noalias() +=
              CMat<T>(xi->values.data() + b * cin * plane, cin, plane) * dc.transpose();
        }
      }
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// layer norms

template <typename T>
BasicTensor<T> layer_norm(const BasicTensor<T>& input, const BasicTensor<T>& gamma,
                          const BasicTensor<T>& beta, double eps) {
  constexpr const char* kOp = "layer_norm";
  if (input.rank() < 1) dim_error(kOp, "input must have rank >= 1");
  if (eps <= 0) throw UsageError("layer_norm: eps must be positive");
  const std::int64_t c = input.dim(-1);
  if (!gamma.defined() || !beta.defined()) dim_error(kOp, "gamma and beta are required");
  require_vector(gamma, c, kOp, "gamma");
  require_vector(beta, c, kOp, "beta");
  const std::int64_t rows = input.numel() / c;

  BasicTensor<T> out(input.shape());
  Buffer<T> stats(static_cast<std::size_t>(2 * rows));  // mean, rstd
  const T* x = input.data().data();
  const T* ga = gamma.data().data();
  const T* be = beta.data().data();
  T* y = out.data().data();
  for (std::int64_t r = 0; r < rows; ++r) {
    const T* xr = x + r * c;
    double m = 0;
    for (std::int64_t i = 0; i < c; ++i) m += xr[i];
    m /= static_cast<double>(c);
    double v = 0;
    for (std::int64_t i = 0; i < c; ++i) v += (xr[i] - m) * (xr[i] - m);
    v /= static_cast<double>(c);
    const double rstd = 1.0 / std::sqrt(v + eps);
    stats[2 * r] = static_cast<T>(m);
    stats[2 * r + 1] = static_cast<T>(rstd);
    for (std::int64_t i = 0; i < c; ++i) {
      y[r * c + i] = static_cast<T>((xr[i] - m) * rstd) * ga[i] + be[i];
    }
  }
  check_finite(out, kOp);

  if (auto* tape = recording_tape<T>({&input, &gamma, &beta})) {
    out.set_requires_grad(true);
    auto xi = input.impl(), gi = gamma.impl(), bi = beta.impl(), oi = out.impl();
    auto saved = std::make_shared<Buffer<T>>(std::move(stats));
    tape->record(kOp, {xi, gi, bi}, oi, [=] {
      T* dx = grad_of<T>(xi);
      T* dg = grad_of<T>(gi);
      T* db = grad_of<T>(bi);
      const T* g = gi->values.data();
      Buffer<T> xhat(static_cast<std::size_t>(c)), dxhat(static_cast<std::size_t>(c));
      for (std::int64_t r = 0; r < rows; ++r) {
        const T* xr = xi->values.data() + r * c;
        const T* dy = oi->grad.data() + r * c;
        const T m = (*saved)[2 * r], rstd = (*saved)[2 * r + 1];
        double s1 = 0, s2 = 0;
        for (std::int64_t i = 0; i < c; ++i) {
          xhat[i] = (xr[i] - m) * rstd;
          dxhat[i] = dy[i] * g[i];
          s1 += dxhat[i];
          s2 += dxhat[i] * xhat[i];
          if (dg) dg[i] += dy[i] * xhat[i];
          if (db) db[i] += dy[i];
        }
        if (dx) {
          const T a = static_cast<T>(s1 / c), bcoef = static_cast<T>(s2 / c);
          for (std::int64_t i = 0; i < c; ++i) {
            dx[r * c + i] += rstd * (dxhat[i] - a - xhat[i] * bcoef);
          }
        }
      }
    });
  }
  return out;
}

template <typename T>
BasicTensor<T> channel_layer_norm(const BasicTensor<T>& input, const BasicTensor<T>& gamma,
                                  const BasicTensor<T>& beta, double eps) {
  constexpr const char* kOp = "channel_layer_norm";
  require_rank(input.shape(), 4, kOp, "input");
  if (eps <= 0) throw UsageError("channel_layer_norm: eps must be positive");
  const auto batch = input.dim(0), c = input.dim(1);
  const std::int64_t plane = input.dim(2) * input.dim(3);
  if (!gamma.defined() || !beta.defined()) dim_error(kOp, "gamma and beta are required");
  require_vector(gamma, c, kOp, "gamma");
  require_vector(beta, c, kOp, "beta");

  BasicTensor<T> out(input.shape());
  // Per position mean and rstd, laid out [B, 2, plane].
  Buffer<T> stats(static_cast<std::size_t>(batch * 2 * plane));
  std::vector<double> acc(static_cast<std::size_t>(plane));
  for (std::int64_t b = 0; b < batch; ++b) {
    const T* x = input.data().data() + b * c * plane;
    T* mean = stats.data() + b * 2 * plane;
    T* rstd = mean + plane;
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::int64_t ch = 0; ch < c; ++ch) {
      const T* xc = x + ch * plane;
      for (std::int64_t i = 0; i < plane; ++i) acc[i] += xc[i];
    }
    for (std::int64_t i = 0; i < plane; ++i) mean[i] = static_cast<T>(acc[i] / c);
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::int64_t ch = 0; ch < c; ++ch) {
      const T* xc = x + ch * plane;
      for (std::int64_t i = 0; i < plane; ++i) {
        const double d = xc[i] - mean[i];
        acc[i] += d * d;
      }
    }
    for (std::int64_t i = 0; i < plane; ++i) {
      rstd[i] = static_cast<T>(1.0 / std::sqrt(acc[i] / c + eps));
    }
    T* y = out.data().data() + b * c * plane;
    for (std::int64_t ch = 0; ch < c; ++ch) {
      const T g = gamma.data()[ch], be = beta.data()[ch];
      const T* xc = x + ch * plane;
      T* yc = y + ch * plane;
      for (std::int64_t i = 0; i < plane; ++i) yc[i] = (xc[i] - mean[i]) * rstd[i] * g + be;
    }
  }
  check_finite(out, kOp);

  if (auto* tape = recording_tape<T>({&input, &gamma, &beta})) {
    out.set_requires_grad(true);
    auto xi = input.impl(), gi = gamma.impl(), bi = beta.impl(), oi = out.impl();
    auto saved = std::make_shared<Buffer<T>>(std::move(stats));
    tape->record(kOp, {xi, gi, bi}, oi, [=] {
      T* dx = grad_of<T>(xi);
      T* dg = grad_of<T>(gi);
      T* db = grad_of<T>(bi);
      const T* g = gi->values.data();
      std::vector<T> s1(static_cast<std::size_t>(plane)), s2(static_cast<std::size_t>(plane));
      for (std::int64_t b = 0; b < batch; ++b) {
        const T* x = xi->values.data() + b * c * plane;
        const T* dy = oi->grad.data() + b * c * plane;
        const T* mean = saved->data() + b * 2 * plane;
        const T* rstd = mean + plane;
        std::fill(s1.begin(), s1.end(), T(0));
        std::fill(s2.begin(), s2.end(), T(0));
        for (std::int64_t ch = 0; ch < c; ++ch) {
          const T* xc = x + ch * plane;
          const T* dyc = dy + ch * plane;
          T gsum = 0, bsum = 0;
          for (std::int64_t i = 0; i < plane; ++i) {
            const T xh = (xc[i] - mean[i]) * rstd[i];
            const T dxh = dyc[i] * g[ch];
            s1[i] += dxh;
            s2[i] += dxh * xh;
            gsum += dyc[i] * xh;
            bsum += dyc[i];
          }
          if (dg) dg[ch] += gsum;
          if (db) db[ch] += bsum;
        }
        if (!dx) continue;
        const T inv_c = T(1) / static_cast<T>(c);
        for (std::int64_t ch = 0; ch < c; ++ch) {
          const T* xc = x + ch * plane;
          const T* dyc = dy + ch * plane;
          T* dxc = dx + b * c * plane + ch * plane;
          for (std::int64_t i = 0; i < plane; ++i) {
            const T xh = (xc[i] - mean[i]) * rstd[i];
            dxc[i] += rstd[i] * (dyc[i] * g[ch] - s1[i] * inv_c - xh * s2[i] * inv_c);
          }
        }
      }
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// gelu

template <typename T>
BasicTensor<T> gelu(const BasicTensor<T>& input) {
  constexpr T kInvSqrt2 = static_cast<T>(0.70710678118654752440);
  BasicTensor<T> out(input.shape());
  const T* x = input.data().data();
  T* y = out.data().data();
  const std::int64_t n = input.numel();
  for (std::int64_t i = 0; i < n; ++i) {
    y[i] = T(0.5) * x[i] * (T(1) + std::erf(x[i] * kInvSqrt2));
  }
  check_finite(out, "gelu");

  if (auto* tape = recording_tape<T>({&input})) {
    out.set_requires_grad(true);
    auto xi = input.impl(), oi = out.impl();
    tape->record("gelu", {xi}, oi, [=] {
      T* dx = grad_of<T>(xi);
      if (!dx) return;
      constexpr T kInvSqrt2Pi = static_cast<T>(0.39894228040143267794);
      const T* xv = xi->values.data();
      const T* dy = oi->grad.data();
      for (std::int64_t i = 0; i < n; ++i) {
        const T v = xv[i];
        const T cdf = T(0.5) * (T(1) + std::erf(v * kInvSqrt2));
        const T pdf = kInvSqrt2Pi * std::exp(T(-0.5) * v * v);
        dx[i] += dy[i] * (cdf + v * pdf);
      }
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// maxpool

template <typename T>
BasicTensor<T> maxpool2d(const BasicTensor<T>& input, int window, int stride) {
  constexpr const char* kOp = "maxpool2d";
  require_rank(input.shape(), 4, kOp, "input");
  if (window != stride || window < 1) dim_error(kOp, "window must equal stride");
  const auto batch = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
  if (h % stride != 0 || w % stride != 0) {
    dim_error(kOp, "spatial dims " + std::to_string(h) + "x" + std::to_string(w) +
                       " not divisible by " + std::to_string(stride));
  }
  const std::int64_t oh = h / stride, ow = w / stride;
  BasicTensor<T> out({batch, c, oh, ow});
  std::vector<std::int64_t> argmax(static_cast<std::size_t>(out.numel()));
  const T* x = input.data().data();
  T* y = out.data().data();
  for (std::int64_t bc = 0; bc < batch * c; ++bc) {
    const T* xp = x + bc * h * w;
    for (std::int64_t oy = 0; oy < oh; ++oy) {
      for (std::int64_t ox = 0; ox < ow; ++ox) {
        std::int64_t best = (oy * stride) * w + ox * stride;
        for (std::int64_t ky = 0; ky < window; ++ky) {
          const std::int64_t row = (oy * stride + ky) * w + ox * stride;
          for (std::int64_t kx = 0; kx < window; ++kx) {
            if (xp[row + kx] > xp[best]) best = row + kx;
          }
        }
        const std::int64_t o = bc * oh * ow + oy * ow + ox;
        y[o] = xp[best];
        argmax[static_cast<std::size_t>(o)] = bc * h * w + best;
      }
    }
  }

  if (auto* tape = recording_tape<T>({&input})) {
    out.set_requires_grad(true);
    auto xi = input.impl(), oi = out.impl();
    auto idx = std::make_shared<std::vector<std::int64_t>>(std::move(argmax));
    tape->record(kOp, {xi}, oi, [=] {
      T* dx = grad_of<T>(xi);
      if (!dx) return;
      for (std::size_t o = 0; o < idx->size(); ++o) dx[(*idx)[o]] += oi->grad[o];
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// linear

template <typename T>
BasicTensor<T> linear(const BasicTensor<T>& input, const BasicTensor<T>& weight,
                      const BasicTensor<T>& bias) {
  constexpr const char* kOp = "linear";
  if (input.rank() < 1) dim_error(kOp, "input must have rank >= 1");
  require_rank(weight.shape(), 2, kOp, "weight");
  const std::int64_t din = input.dim(-1);
  const std::int64_t dout = weight.dim(0);
  if (weight.dim(1) != din) {
    dim_error(kOp, "input last axis " + std::to_string(din) + " does not match weight " +
                       to_string(weight.shape()));
  }
  require_vector(bias, dout, kOp, "bias");
  const std::int64_t rows = input.numel() / din;
  Shape shape = input.shape();
  shape.back() = dout;
  BasicTensor<T> out(shape);
  Mat<T> y(out.data().data(), rows, dout);
  const CMat<T> wm(weight.data().data(), dout, din);
  y.noalias() = CMat<T>(input.data().data(), rows, din) * wm.transpose();
  if (bias.defined()) {
    const T* b = bias.data().data();
    for (std::int64_t r = 0; r < rows; ++r) {
      T* yr = y.data() + r * dout;
      for (std::int64_t j = 0; j < dout; ++j) yr[j] += b[j];
    }
  }
  check_finite(out, kOp);

  if (auto* tape = recording_tape<T>({&input, &weight, &bias})) {
    out.set_requires_grad(true);
    auto xi = input.impl(), wi = weight.impl(), bi = bias.impl(), oi = out.impl();
    tape->record(kOp, {xi, wi, bi}, oi, [=] {
      const CMat<T> dy(oi->grad.data(), rows, dout);
      if (T* dx = grad_of<T>(xi)) {
        Mat<T>(dx, rows, din).noalias() += dy * CMat<T>(wi->values.data(), dout, din);
      }
      if (T* dw = grad_of<T>(wi)) {
        Mat<T>(dw, dout, din).noalias() +=
            dy.transpose() * CMat<T>(xi->values.data(), rows, din);
      }
      if (T* db = grad_of<T>(bi)) {
        for (std::int64_t r = 0; r < rows; ++r) {
          const T* dyr = dy.data() + r * dout;
          for (std::int64_t j = 0; j < dout; ++j) db[j] += dyr[j];
        }
      }
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// elementwise / reductions

namespace {

template <typename T>
void require_same(const BasicTensor<T>& a, const BasicTensor<T>& b, const char* op) {
  if (a.shape() != b.shape()) {
    dim_error(op, "shape mismatch " + to_string(a.shape()) + " vs " + to_string(b.shape()));
  }
}

// out = ca * a + cb * b
template <typename T>
BasicTensor<T> axpby(const BasicTensor<T>& a, const BasicTensor<T>& b, T ca, T cb,
                     const char* op) {
  require_same(a, b, op);
  BasicTensor<T> out(a.shape());
  const std::int64_t n = a.numel();
  const T* pa = a.data().data();
  const T* pb = b.data().data();
  T* po = out.data().data();
  for (std::int64_t i = 0; i < n; ++i) po[i] = ca * pa[i] + cb * pb[i];
  if (auto* tape = recording_tape<T>({&a, &b})) {
    out.set_requires_grad(true);
    auto ai = a.impl(), bi = b.impl(), oi = out.impl();
    tape->record(op, {ai, bi}, oi, [=] {
      const T* g = oi->grad.data();
      // Same tensor on both sides accumulates twice, as it should.
      if (T* da = grad_of<T>(ai)) {
        for (std::int64_t i = 0; i < n; ++i) da[i] += ca * g[i];
      }
      if (T* db = grad_of<T>(bi)) {
        for (std::int64_t i = 0; i < n; ++i) db[i] += cb * g[i];
      }
    });
  }
  return out;
}

}  // namespace

template <typename T>
BasicTensor<T> add(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  return axpby(a, b, T(1), T(1), "add");
}

template <typename T>
BasicTensor<T> sub(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  return axpby(a, b, T(1), T(-1), "sub");
}

template <typename T>
BasicTensor<T> mul(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  require_same(a, b, "mul");
  BasicTensor<T> out(a.shape());
  const std::int64_t n = a.numel();
  for (std::int64_t i = 0; i < n; ++i) out.data()[i] = a.data()[i] * b.data()[i];
  if (auto* tape = recording_tape<T>({&a, &b})) {
    out.set_requires_grad(true);
    auto ai = a.impl(), bi = b.impl(), oi = out.impl();
    tape->record("mul", {ai, bi}, oi, [=] {
      const T* g = oi->grad.data();
      if (T* da = grad_of<T>(ai)) {
        for (std::int64_t i = 0; i < n; ++i) da[i] += g[i] * bi->values[i];
      }
      if (T* db = grad_of<T>(bi)) {
        for (std::int64_t i = 0; i < n; ++i) db[i] += g[i] * ai->values[i];
      }
    });
  }
  return out;
}

template <typename T>
BasicTensor<T> scale(const BasicTensor<T>& a, double factor) {
  const T f = static_cast<T>(factor);
  BasicTensor<T> out(a.shape());
  const std::int64_t n = a.numel();
  for (std::int64_t i = 0; i < n; ++i) out.data()[i] = a.data()[i] * f;
  if (auto* tape = recording_tape<T>({&a})) {
    out.set_requires_grad(true);
    auto ai = a.impl(), oi = out.impl();
    tape->record("scale", {ai}, oi, [=] {
      if (T* da = grad_of<T>(ai)) {
        for (std::int64_t i = 0; i < n; ++i) da[i] += f * oi->grad[i];
      }
    });
  }
  return out;
}

namespace {

template <typename T>
BasicTensor<T> reduce_sum(const BasicTensor<T>& a, double weight, const char* op) {
  double s = 0;
  for (T v : a.data()) s += v;
  auto out = BasicTensor<T>::scalar(static_cast<T>(s * weight));
  if (auto* tape = recording_tape<T>({&a})) {
    out.set_requires_grad(true);
    auto ai = a.impl(), oi = out.impl();
    tape->record(op, {ai}, oi, [=] {
      if (T* da = grad_of<T>(ai)) {
        const T g = static_cast<T>(oi->grad[0] * weight);
        for (std::size_t i = 0; i < ai->values.size(); ++i) da[i] += g;
      }
    });
  }
  return out;
}

}  // namespace

template <typename T>
BasicTensor<T> sum(const BasicTensor<T>& a) {
  return reduce_sum(a, 1.0, "sum");
}

template <typename T>
BasicTensor<T> mean(const BasicTensor<T>& a) {
  return reduce_sum(a, 1.0 / static_cast<double>(a.numel()), "mean");
}

// ---------------------------------------------------------------------------
// layout

template <typename T>
BasicTensor<T> reshape(const BasicTensor<T>& a, Shape shape) {
  if (numel_of(shape) != a.numel()) {
    dim_error("reshape", "cannot view " + to_string(a.shape()) + " as " + to_string(shape));
  }
  BasicTensor<T> out(std::move(shape), a.data());
  if (auto* tape = recording_tape<T>({&a})) {
    out.set_requires_grad(true);
    auto ai = a.impl(), oi = out.impl();
    tape->record("reshape", {ai}, oi, [=] {
      if (T* da = grad_of<T>(ai)) {
        for (std::size_t i = 0; i < oi->grad.size(); ++i) da[i] += oi->grad[i];
      }
    });
  }
  return out;
}

template <typename T>
BasicTensor<T> transpose_last2(const BasicTensor<T>& a) {
  if (a.rank() < 2) dim_error("transpose_last2", "rank must be >= 2");
  const std::int64_t m = a.dim(-2), n = a.dim(-1);
  const std::int64_t batch = a.numel() / (m * n);
  Shape shape = a.shape();
  std::swap(shape[shape.size() - 1], shape[shape.size() - 2]);
  BasicTensor<T> out(shape);
  for (std::int64_t b = 0; b < batch; ++b) {
    Mat<T>(out.data().data() + b * m * n, n, m) =
        CMat<T>(a.data().data() + b * m * n, m, n).transpose();
  }
  if (auto* tape = recording_tape<T>({&a})) {
    out.set_requires_grad(true);
    auto ai = a.impl(), oi = out.impl();
    tape->record("transpose_last2", {ai}, oi, [=] {
      if (T* da = grad_of<T>(ai)) {
        for (std::int64_t b = 0; b < batch; ++b) {
          Mat<T>(da + b * m * n, m, n) += CMat<T>(oi->grad.data() + b * m * n, n, m).transpose();
        }
      }
    });
  }
  return out;
}

template <typename T>
BasicTensor<T> tokens_from_map(const BasicTensor<T>& map) {
  require_rank(map.shape(), 4, "tokens_from_map", "map");
  return transpose_last2(reshape(map, {map.dim(0), map.dim(1), map.dim(2) * map.dim(3)}));
}

template <typename T>
BasicTensor<T> map_from_tokens(const BasicTensor<T>& tokens, std::int64_t height,
                               std::int64_t width) {
  require_rank(tokens.shape(), 3, "map_from_tokens", "tokens");
  if (tokens.dim(1) != height * width) {
    dim_error("map_from_tokens", std::to_string(tokens.dim(1)) + " tokens cannot form a " +
                                     std::to_string(height) + "x" + std::to_string(width) +
                                     " map");
  }
  return reshape(transpose_last2(tokens), {tokens.dim(0), tokens.dim(2), height, width});
}

template <typename T>
BasicTensor<T> concat(std::span<const BasicTensor<T>> parts, int axis) {
  constexpr const char* kOp = "concat";
  if (parts.empty()) dim_error(kOp, "nothing to concatenate");
  const Shape& ref = parts[0].shape();
  if (axis < 0) axis += static_cast<int>(ref.size());
  if (axis < 0 || axis >= static_cast<int>(ref.size())) dim_error(kOp, "axis out of range");
  Shape shape = ref;
  shape[axis] = 0;
  for (const auto& p : parts) {
    if (p.rank() != static_cast<int>(ref.size())) dim_error(kOp, "rank mismatch");
    for (int i = 0; i < p.rank(); ++i) {
      if (i != axis && p.shape()[i] != ref[i]) {
        dim_error(kOp, "shape mismatch " + to_string(p.shape()) + " vs " + to_string(ref));
      }
    }
    shape[axis] += p.shape()[axis];
  }
  std::int64_t outer = 1, inner = 1;
  for (int i = 0; i < axis; ++i) outer *= ref[i];
  for (std::size_t i = axis + 1; i < ref.size(); ++i) inner *= ref[i];
  const std::int64_t out_block = shape[axis] * inner;

  BasicTensor<T> out(shape);
  std::vector<std::int64_t> offsets;
  std::int64_t off = 0;
  for (const auto& p : parts) {
    offsets.push_back(off);
    const std::int64_t block = p.shape()[axis] * inner;
    for (std::int64_t o = 0; o < outer; ++o) {
      std::copy_n(p.data().data() + o * block, block, out.data().data() + o * out_block + off);
    }
    off += block;
  }

  Tape<T>* tape = active_tape<T>();
  bool any = false;
  for (const auto& p : parts) any = any || p.requires_grad();
  if (tape && any) {
    out.set_requires_grad(true);
    std::vector<ImplPtr<T>> inputs;
    for (const auto& p : parts) inputs.push_back(p.impl());
    auto oi = out.impl();
    tape->record(kOp, inputs, oi, [=] {
      for (std::size_t k = 0; k < inputs.size(); ++k) {
        T* dp = grad_of<T>(inputs[k]);
        if (!dp) continue;
        const std::int64_t block = inputs[k]->shape[axis] * inner;
        for (std::int64_t o = 0; o < outer; ++o) {
          const T* src = oi->grad.data() + o * out_block + offsets[k];
          T* dst = dp + o * block;
          for (std::int64_t i = 0; i < block; ++i) dst[i] += src[i];
        }
      }
    });
  }
  return out;
}

template <typename T>
BasicTensor<T> concat(const BasicTensor<T>& a, const BasicTensor<T>& b, int axis) {
  const BasicTensor<T> parts[] = {a, b};
  return concat<T>(std::span<const BasicTensor<T>>(parts), axis);
}

template <typename T>
BasicTensor<T> slice(const BasicTensor<T>& a, int axis, std::int64_t start,
                     std::int64_t length) {
  constexpr const char* kOp = "slice";
  const Shape& ref = a.shape();
  if (axis < 0) axis += a.rank();
  if (axis < 0 || axis >= a.rank()) dim_error(kOp, "axis out of range");
  if (start < 0 || length <= 0 || start + length > ref[axis]) {
    dim_error(kOp, "range [" + std::to_string(start) + "," + std::to_string(start + length) +
                       ") outside axis of size " + std::to_string(ref[axis]));
  }
  std::int64_t outer = 1, inner = 1;
  for (int i = 0; i < axis; ++i) outer *= ref[i];
  for (std::size_t i = axis + 1; i < ref.size(); ++i) inner *= ref[i];
  Shape shape = ref;
  shape[axis] = length;
  const std::int64_t in_block = ref[axis] * inner, out_block = length * inner;
  BasicTensor<T> out(shape);
  for (std::int64_t o = 0; o < outer; ++o) {
    std::copy_n(a.data().data() + o * in_block + start * inner, out_block,
                out.data().data() + o * out_block);
  }
  if (auto* tape = recording_tape<T>({&a})) {
    out.set_requires_grad(true);
    auto ai = a.impl(), oi = out.impl();
    tape->record(kOp, {ai}, oi, [=] {
      T* da = grad_of<T>(ai);
      if (!da) return;
      for (std::int64_t o = 0; o < outer; ++o) {
        T* dst = da + o * in_block + start * inner;
        const T* src = oi->grad.data() + o * out_block;
        for (std::int64_t i = 0; i < out_block; ++i) dst[i] += src[i];
      }
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// loss / misc

template <typename T>
BasicTensor<T> charbonnier(const BasicTensor<T>& pred, const BasicTensor<T>& target,
                           double eps) {
  require_same(pred, target, "charbonnier");
  if (eps <= 0) throw UsageError("charbonnier: eps must be positive");
  const std::int64_t n = pred.numel();
  const double eps2 = eps * eps;
  double s = 0;
  for (std::int64_t i = 0; i < n; ++i) {
    const double d = static_cast<double>(pred.data()[i]) - target.data()[i];
    s += std::sqrt(d * d + eps2);
  }
  auto out = BasicTensor<T>::scalar(static_cast<T>(s / static_cast<double>(n)));
  if (auto* tape = recording_tape<T>({&pred})) {
    out.set_requires_grad(true);
    auto pi = pred.impl(), ti = target.impl(), oi = out.impl();
    tape->record("charbonnier", {pi, ti}, oi, [=] {
      T* dp = grad_of<T>(pi);
      if (!dp) return;
      const double g = static_cast<double>(oi->grad[0]) / static_cast<double>(n);
      for (std::int64_t i = 0; i < n; ++i) {
        const double d = static_cast<double>(pi->values[i]) - ti->values[i];
        dp[i] += static_cast<T>(g * d / std::sqrt(d * d + eps2));
      }
    });
  }
  return out;
}

template <typename T>
BasicTensor<T> clamp(const BasicTensor<T>& a, T lo, T hi) {
  BasicTensor<T> out(a.shape());
  const std::int64_t n = a.numel();
  for (std::int64_t i = 0; i < n; ++i) out.data()[i] = std::clamp(a.data()[i], lo, hi);
  return out;
}

template <typename T>
double dot(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  require_same(a, b, "dot");
  double s = 0;
  for (std::int64_t i = 0; i < a.numel(); ++i) {
    s += static_cast<double>(a.data()[i]) * static_cast<double>(b.data()[i]);
  }
  return s;
}

// ---------------------------------------------------------------------------

#define REBOT_INSTANTIATE_OPS(T)                                                         \
  template BasicTensor<T> conv2d(const BasicTensor<T>&, const BasicTensor<T>&,           \
                                 const BasicTensor<T>&, int, int);                       \
  template BasicTensor<T> depthwise_conv2d(const BasicTensor<T>&, const BasicTensor<T>&, \
                                           const BasicTensor<T>&);                       \
  template BasicTensor<T> transposed_conv2d(const BasicTensor<T>&, const BasicTensor<T>&, \
                                            const BasicTensor<T>&, int, int);            \
  template BasicTensor<T> layer_norm(const BasicTensor<T>&, const BasicTensor<T>&,       \
                                     const BasicTensor<T>&, double);                     \
  template BasicTensor<T> channel_layer_norm(const BasicTensor<T>&, const BasicTensor<T>&, \
                                             const BasicTensor<T>&, double);             \
  template BasicTensor<T> gelu(const BasicTensor<T>&);                                   \
  template BasicTensor<T> maxpool2d(const BasicTensor<T>&, int, int);                    \
  template BasicTensor<T> linear(const BasicTensor<T>&, const BasicTensor<T>&,           \
                                 const BasicTensor<T>&);                                 \
  template BasicTensor<T> add(const BasicTensor<T>&, const BasicTensor<T>&);             \
  template BasicTensor<T> sub(const BasicTensor<T>&, const BasicTensor<T>&);             \
  template BasicTensor<T> mul(const BasicTensor<T>&, const BasicTensor<T>&);             \
  template BasicTensor<T> scale(const BasicTensor<T>&, double);                          \
  template BasicTensor<T> sum(const BasicTensor<T>&);                                    \
  template BasicTensor<T> mean(const BasicTensor<T>&);                                   \
  template BasicTensor<T> reshape(const BasicTensor<T>&, Shape);                         \
  template BasicTensor<T> transpose_last2(const BasicTensor<T>&);                        \
  template BasicTensor<T> tokens_from_map(const BasicTensor<T>&);                        \
  template BasicTensor<T> map_from_tokens(const BasicTensor<T>&, std::int64_t,           \
                                          std::int64_t);                                 \
  template BasicTensor<T> concat(std::span<const BasicTensor<T>>, int);                  \
  template BasicTensor<T> concat(const BasicTensor<T>&, const BasicTensor<T>&, int);     \
  template BasicTensor<T> slice(const BasicTensor<T>&, int, std::int64_t, std::int64_t); \
  template BasicTensor<T> charbonnier(const BasicTensor<T>&, const BasicTensor<T>&,      \
                                      double);                                           \
  template BasicTensor<T> clamp(const BasicTensor<T>&, T, T);                            \
  template double dot(const BasicTensor<T>&, const BasicTensor<T>&);

REBOT_INSTANTIATE_OPS(float)
REBOT_INSTANTIATE_OPS(double)

#undef REBOT_INSTANTIATE_OPS

}  // namespace rebot::ops
