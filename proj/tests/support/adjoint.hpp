#pragma once

// Dot-product tests <A x, y> == <x, A^T y> for the linear layers. A^T comes
// from two independent routes: the paired forward op (conv <-> transposed
// conv with shared weights, linear with a transposed matrix) and the tape's
// backward pass.

#include <algorithm>
#include <cmath>
#include <string>

#include "oracles.hpp"
#include "rebot/ops.hpp"
#include "rebot/tape.hpp"

namespace rebot::testing {

struct AdjointResult {
  double max_rel_error = 0;
  std::string worst;
  int cases = 0;
};

inline double rel_gap(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

// <x, d/dx <op(x), y>> via the tape.
template <typename Op>
double tape_adjoint_dot(const TensorD& x, const TensorD& y, Op op) {
  TensorD leaf = x.clone();
  leaf.set_requires_grad(true);
  Tape<double> tape;
  TensorD out;
  {
    TapeScope<double> scope(tape);
    out = ops::sum(ops::mul(op(leaf), y));
  }
  tape.backward(out);
  return ops::dot(x, TensorD(x.shape(), leaf.grad()));
}

inline void note(AdjointResult& r, double a, double b, const std::string& label) {
  const double e = rel_gap(a, b);
  if (e > r.max_rel_error || r.worst.empty()) {
    r.max_rel_error = std::max(r.max_rel_error, e);
    if (e >= r.max_rel_error) r.worst = label;
  }
}

inline AdjointResult conv_adjoint(int cases, std::uint64_t seed) {
  AdjointResult r;
  Rng rng(seed);
  for (int i = 0; i < cases; ++i) {
    const int s = static_cast<int>(rng.uniform_int(1, 2));
    const int k = static_cast<int>(rng.uniform_int(1, 4));
    const int p = static_cast<int>(rng.uniform_int(0, k / 2));
    const int cin = static_cast<int>(rng.uniform_int(1, 5));
    const int cout = static_cast<int>(rng.uniform_int(1, 5));
    const int b = static_cast<int>(rng.uniform_int(1, 2));
    // (H + 2p - k) divisible by s keeps the transposed conv size equal to H.
    const int oh = static_cast<int>(rng.uniform_int(1, 6));
    const int ow = static_cast<int>(rng.uniform_int(1, 6));
    const int h = (oh - 1) * s - 2 * p + k, w = (ow - 1) * s - 2 * p + k;
    if (h < 1 || w < 1) {
      --i;
      continue;
    }
    auto x = random_tensor<double>({b, cin, h, w}, rng.next_u64());
    auto wt = random_tensor<double>({cout, cin, k, k}, rng.next_u64());
    auto y = random_tensor<double>({b, cout, oh, ow}, rng.next_u64());
    auto conv = [&](const TensorD& v) { return ops::conv2d(v, wt, TensorD{}, s, p); };
    const double lhs = ops::dot(conv(x), y);
    const double via_tconv = ops::dot(x, ops::transposed_conv2d(y, wt, TensorD{}, s, p));
    const double via_tape = tape_adjoint_dot(x, y, conv);
    const std::string label = "case " + std::to_string(i) + " k" + std::to_string(k) + " s" +
                              std::to_string(s) + " p" + std::to_string(p);
    note(r, lhs, via_tconv, label + " (transposed op)");
    note(r, lhs, via_tape, label + " (backward)");
    ++r.cases;
  }
  return r;
}

inline AdjointResult tconv_adjoint(int cases, std::uint64_t seed) {
  AdjointResult r;
  Rng rng(seed);
  for (int i = 0; i < cases; ++i) {
    const int s = static_cast<int>(rng.uniform_int(1, 2));
    const int k = static_cast<int>(rng.uniform_int(s, 4));
    const int p = static_cast<int>(rng.uniform_int(0, (k - 1) / 2));
    const int cin = static_cast<int>(rng.uniform_int(1, 5));
    const int cout = static_cast<int>(rng.uniform_int(1, 5));
    const int h = static_cast<int>(rng.uniform_int(1, 5));
    const int w = static_cast<int>(rng.uniform_int(1, 5));
    const int oh = (h - 1) * s - 2 * p + k, ow = (w - 1) * s - 2 * p + k;
    if (oh < 1 || ow < 1) {
      --i;
      continue;
    }
    auto x = random_tensor<double>({1, cin, h, w}, rng.next_u64());
    auto wt = random_tensor<double>({cin, cout, k, k}, rng.next_u64());
    auto y = random_tensor<double>({1, cout, oh, ow}, rng.next_u64());
    auto tconv = [&](const TensorD& v) { return ops::transposed_conv2d(v, wt, TensorD{}, s, p); };
    const double lhs = ops::dot(tconv(x), y);
    const double via_conv = ops::dot(x, ops::conv2d(y, wt, TensorD{}, s, p));
    const double via_tape = tape_adjoint_dot(x, y, tconv);
    const std::string label = "case " + std::to_string(i) + " k" + std::to_string(k) + " s" +
                              std::to_string(s) + " p" + std::to_string(p);
    note(r, lhs, via_conv, label + " (conv)");
    note(r, lhs, via_tape, label + " (backward)");
    ++r.cases;
  }
  return r;
}

inline AdjointResult linear_adjoint(int cases, std::uint64_t seed) {
  AdjointResult r;
  Rng rng(seed);
  for (int i = 0; i < cases; ++i) {
    const int rows = static_cast<int>(rng.uniform_int(1, 6));
    const int din = static_cast<int>(rng.uniform_int(1, 9));
    const int dout = static_cast<int>(rng.uniform_int(1, 9));
    auto x = random_tensor<double>({rows, din}, rng.next_u64());
    auto wt = random_tensor<double>({dout, din}, rng.next_u64());
    auto y = random_tensor<double>({rows, dout}, rng.next_u64());
    auto lin = [&](const TensorD& v) { return ops::linear(v, wt, TensorD{}); };
    const double lhs = ops::dot(lin(x), y);
    const double via_t = ops::dot(x, ops::linear(y, ops::transpose_last2(wt), TensorD{}));
    const double via_tape = tape_adjoint_dot(x, y, lin);
    note(r, lhs, via_t, "case " + std::to_string(i) + " (transposed weight)");
    note(r, lhs, via_tape, "case " + std::to_string(i) + " (backward)");
    ++r.cases;
  }
  return r;
}

}  // namespace rebot::testing
