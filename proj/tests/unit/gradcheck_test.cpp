#include <gtest/gtest.h>

#include "gradcheck.hpp"
#include "oracles.hpp"
#include "rebot/model/rebotnet.hpp"
#include "rebot/ops.hpp"
#include "rebot/runtime/trainer.hpp"

namespace rebot {
namespace {

using testing::gradcheck;
using testing::random_tensor;

constexpr double kTol = 1e-4;

// Projects an op output onto a fixed random direction so every output
// element contributes to the scalar being differentiated.
TensorD project(const TensorD& y, std::uint64_t seed) {
  return ops::sum(ops::mul(y, random_tensor<double>(y.shape(), seed)));
}

#define EXPECT_GRAD_OK(result) \
  EXPECT_LT((result).max_rel_error, kTol) << (result).worst

TEST(GradCheck, Conv2d) {
  auto x = random_tensor<double>({2, 3, 5, 6}, 1);
  auto w = random_tensor<double>({4, 3, 3, 3}, 2);
  auto b = random_tensor<double>({4}, 3);
  for (int stride : {1, 2}) {
    auto r = gradcheck([&] { return project(ops::conv2d(x, w, b, stride, 1), 4); },
                       {{"x", x}, {"w", w}, {"b", b}});
    EXPECT_GRAD_OK(r);
  }
}

TEST(GradCheck, Conv2dPointwise) {
  auto x = random_tensor<double>({1, 4, 3, 5}, 5);
  auto w = random_tensor<double>({6, 4, 1, 1}, 6);
  auto b = random_tensor<double>({6}, 7);
  auto r = gradcheck([&] { return project(ops::conv2d(x, w, b, 1, 0), 8); },
                     {{"x", x}, {"w", w}, {"b", b}});
  EXPECT_GRAD_OK(r);
}

TEST(GradCheck, Depthwise) {
  auto x = random_tensor<double>({1, 2, 8, 9}, 9);
  auto w = random_tensor<double>({2, 1, 7, 7}, 10);
  auto b = random_tensor<double>({2}, 11);
  auto r = gradcheck([&] { return project(ops::depthwise_conv2d(x, w, b), 12); },
                     {{"x", x}, {"w", w}, {"b", b}});
  EXPECT_GRAD_OK(r);
}

TEST(GradCheck, TransposedConv) {
  auto x = random_tensor<double>({2, 3, 3, 4}, 13);
  auto w = random_tensor<double>({3, 2, 4, 4}, 14);
  auto b = random_tensor<double>({2}, 15);
  auto r = gradcheck([&] { return project(ops::transposed_conv2d(x, w, b, 2, 1), 16); },
                     {{"x", x}, {"w", w}, {"b", b}});
  EXPECT_GRAD_OK(r);
}

TEST(GradCheck, LayerNorms) {
  auto x = random_tensor<double>({2, 3, 6}, 17, -2, 3);
  auto g = random_tensor<double>({6}, 18);
  auto b = random_tensor<double>({6}, 19);
  auto r = gradcheck([&] { return project(ops::layer_norm(x, g, b), 20); },
                     {{"x", x}, {"gamma", g}, {"beta", b}});
  EXPECT_GRAD_OK(r);

  auto m = random_tensor<double>({2, 5, 3, 2}, 21, -2, 3);
  auto g2 = random_tensor<double>({5}, 22);
  auto b2 = random_tensor<double>({5}, 23);
  auto r2 = gradcheck([&] { return project(ops::channel_layer_norm(m, g2, b2), 24); },
                      {{"x", m}, {"gamma", g2}, {"beta", b2}});
  EXPECT_GRAD_OK(r2);
}

TEST(GradCheck, GeluAndMaxPool) {
  auto x = random_tensor<double>({1, 2, 4, 6}, 25, -3, 3);
  auto r = gradcheck([&] { return project(ops::gelu(x), 26); }, {{"x", x}});
  EXPECT_GRAD_OK(r);
  auto r2 = gradcheck([&] { return project(ops::maxpool2d(x, 2, 2), 27); }, {{"x", x}});
  EXPECT_GRAD_OK(r2);
}

TEST(GradCheck, Linear) {
  auto x = random_tensor<double>({2, 3, 5}, 28);
  auto w = random_tensor<double>({4, 5}, 29);
  auto b = random_tensor<double>({4}, 30);
  auto r = gradcheck([&] { return project(ops::linear(x, w, b), 31); },
                     {{"x", x}, {"w", w}, {"b", b}});
  EXPECT_GRAD_OK(r);
}

TEST(GradCheck, ElementwiseAndReductions) {
  auto a = random_tensor<double>({3, 4}, 32);
  auto b = random_tensor<double>({3, 4}, 33);
  auto r = gradcheck(
      [&] {
        auto s = ops::sub(ops::add(ops::mul(a, b), ops::scale(a, 0.3)), b);
        return ops::add(project(s, 34), ops::mean(ops::mul(s, s)));
      },
      {{"a", a}, {"b", b}});
  EXPECT_GRAD_OK(r);
}

TEST(GradCheck, LayoutOps) {
  auto a = random_tensor<double>({2, 3, 2, 4}, 35);
  auto b = random_tensor<double>({2, 8, 3}, 36);
  auto r = gradcheck(
      [&] {
        auto t = ops::tokens_from_map(a);                      // [2,8,3]
        auto c = ops::concat(t, ops::transpose_last2(ops::transpose_last2(b)), 1);  // [2,16,3]
        auto s = ops::slice(c, 1, 5, 7);
        auto m = ops::map_from_tokens(ops::slice(c, 1, 8, 8), 2, 4);
        return ops::add(project(ops::reshape(s, {14, 3}), 37), project(m, 38));
      },
      {{"a", a}, {"b", b}});
  EXPECT_GRAD_OK(r);
}

TEST(GradCheck, Charbonnier) {
  auto p = random_tensor<double>({2, 3, 4}, 39);
  auto t = random_tensor<double>({2, 3, 4}, 40);
  auto r = gradcheck([&] { return ops::charbonnier(p, t, 1e-3); }, {{"pred", p}});
  EXPECT_GRAD_OK(r);
}

ModelConfig tiny16() {
  auto c = preset_config("tiny");
  c.height = 32;
  c.width = 16;
  return c;
}

// Scrambles every parameter so norms, biases and gains are all exercised.
void scramble(const nn::ParamList<double>& params, std::uint64_t seed) {
  Rng rng(seed);
  for (const auto& p : params) {
    for (auto& v : BasicTensor<double>(p.value).data()) v = rng.uniform(-0.5, 0.5);
  }
}

std::vector<std::pair<std::string, TensorD>> as_inputs(const nn::ParamList<double>& params) {
  std::vector<std::pair<std::string, TensorD>> out;
  for (const auto& p : params) out.emplace_back(p.name, p.value);
  return out;
}

TEST(GradCheck, TinyModelSampled) {
  auto model = ReBotNet<double>::build(tiny16(), 1);
  scramble(model.params(), 2);
  auto y_prev = random_tensor<double>({1, 3, 32, 16}, 3, 0, 1);
  auto x_cur = random_tensor<double>({1, 3, 32, 16}, 4, 0, 1);
  auto inputs = as_inputs(model.params());
  inputs.emplace_back("y_prev", y_prev);
  inputs.emplace_back("x_cur", x_cur);
  testing::GradOptions opt;
  opt.max_probes = 6;
  auto r = gradcheck([&] { return project(model.forward(y_prev, x_cur), 5); }, inputs, opt);
  EXPECT_GRAD_OK(r);
}

// Truncated BPTT treats the frame entering each window as a constant, so
// the numeric reference does the same: window inputs come from an
// unperturbed pass and only the window losses are differenced.
TEST(GradCheck, UnrolledClipThroughFeedback) {
  auto model = ReBotNet<double>::build(tiny16(), 6);
  scramble(model.params(), 7);
  const int frames = 4;
  auto batch = [](const TensorD& f) { return ops::reshape(f, {1, 3, 32, 16}); };
  std::vector<TensorD> degraded, clean;
  for (int t = 0; t < frames; ++t) {
    degraded.push_back(random_tensor<double>({3, 32, 16}, 10 + t, 0, 1));
    clean.push_back(random_tensor<double>({3, 32, 16}, 20 + t, 0, 1));
  }
  for (int window : {0, 2, 1}) {
    TrainConfig cfg;
    cfg.clip_length = frames;
    cfg.bptt_window = window;
    Trainer<double> trainer(model, cfg);
    trainer.compute_gradients(degraded, clean);
    const int w = cfg.effective_window(frames);

    std::vector<TensorD> window_inputs;
    {
      NoGradScope<double> off;
      auto y = batch(clean[0]);
      for (int t = 0; t < frames; ++t) {
        if (t % w == 0) window_inputs.push_back(y);
        y = model.forward(y, batch(degraded[t]));
      }
    }
    auto windowed_loss = [&] {
      NoGradScope<double> off;
      double total = 0;
      TensorD y;
      for (int t = 0; t < frames; ++t) {
        if (t % w == 0) y = window_inputs[t / w];
        y = model.forward(y, batch(degraded[t]));
        total += ops::charbonnier(y, batch(clean[t]), 1e-3).item() / frames;
      }
      return total;
    };

    double worst = 0;
    std::string where;
    Rng pick(8);
    for (const auto& p : model.params()) {
      auto data = BasicTensor<double>(p.value).data();
      for (int probe = 0; probe < 3; ++probe) {
        const auto i = static_cast<std::size_t>(pick.uniform_int(0, data.size() - 1));
        const double keep = data[i], h = 1e-6;
        data[i] = keep + h;
        const double up = windowed_loss();
        data[i] = keep - h;
        const double down = windowed_loss();
        data[i] = keep;
        const double err = testing::rel_error(p.value.grad()[i], (up - down) / (2 * h), 1e-3);
        if (err > worst) {
          worst = err;
          where = p.name + "[" + std::to_string(i) + "]";
        }
      }
    }
    EXPECT_LT(worst, kTol) << "window " << window << " worst at " << where;
    for (const auto& p : model.params()) BasicTensor<double>(p.value).zero_grad();
  }
}

}  // namespace
}  // namespace rebot
