#include <gtest/gtest.h>

#include <cmath>
#include <regex>

#include "oracles.hpp"
#include "rebot/errors.hpp"
#include "rebot/metrics/bench.hpp"
#include "rebot/metrics/evaluate.hpp"
#include "rebot/metrics/metrics.hpp"

namespace rebot {
namespace {

using testing::random_tensor;

Tensor offset(const Tensor& f, float d) {
  Tensor o = f.clone();
  for (auto& v : o.data()) v += d;
  return o;
}

// Direct 2-D windowed SSIM over every valid window position.
double reference_ssim(const Tensor& a, const Tensor& b) {
  const int h = static_cast<int>(a.dim(1)), w = static_cast<int>(a.dim(2)), k = 11;
  double g[11][11], gs = 0;
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) gs += g[i][j] = std::exp(-((i - 5) * (i - 5) + (j - 5) * (j - 5)) / (2 * 1.5 * 1.5));
  double total = 0;
  int count = 0;
  for (int c = 0; c < a.dim(0); ++c)
    for (int y = 0; y + k <= h; ++y)
      for (int x = 0; x + k <= w; ++x) {
        double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
        for (int i = 0; i < k; ++i)
          for (int j = 0; j < k; ++j) {
            const double wt = g[i][j] / gs;
            const double va = a.data()[(c * h + y + i) * w + x + j];
            const double vb = b.data()[(c * h + y + i) * w + x + j];
            ma += wt * va;
            mb += wt * vb;
            saa += wt * va * va;
            sbb += wt * vb * vb;
            sab += wt * va * vb;
          }
        const double va = saa - ma * ma, vb = sbb - mb * mb, cov = sab - ma * mb;
        const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
        total += (2 * ma * mb + c1) * (2 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
        ++count;
      }
  return total / count;
}

TEST(Psnr, UniformOffsetGivesTwentyDecibels) {
  const auto f = random_tensor<float>({3, 16, 16}, 1, 0.0, 0.8);
  EXPECT_NEAR(psnr(offset(f, 0.1f), f), 20.0, 0.01);
}

TEST(Psnr, SymmetricAndInfiniteOnEqual) {
  const auto a = random_tensor<float>({3, 8, 8}, 2, 0, 1);
  const auto b = random_tensor<float>({3, 8, 8}, 3, 0, 1);
  EXPECT_DOUBLE_EQ(psnr(a, b), psnr(b, a));
  EXPECT_TRUE(std::isinf(psnr(a, a)));
  EXPECT_THROW(psnr(a, Tensor({3, 8, 9})), DimensionError);
}

TEST(Ssim, IdentityIsOne) {
  for (std::uint64_t s : {4u, 5u, 6u}) {
    const auto f = random_tensor<float>({3, 24, 20}, s, 0, 1);
    EXPECT_NEAR(ssim(f, f), 1.0, 1e-9);
  }
  EXPECT_NEAR(ssim(Tensor({3, 12, 12}), Tensor({3, 12, 12})), 1.0, 1e-9);
}

TEST(Ssim, MatchesWindowedDefinition) {
  const auto a = random_tensor<float>({3, 20, 17}, 7, 0, 1);
  auto b = a.clone();
  Rng rng(8);
  for (auto& v : b.data()) v = std::clamp(static_cast<float>(v + 0.1 * rng.normal()), 0.0f, 1.0f);
  EXPECT_NEAR(ssim(a, b), reference_ssim(a, b), 1e-9);
}

TEST(Ssim, InvariantUnderChannelPermutation) {
  const auto a = random_tensor<float>({3, 16, 16}, 9, 0, 1);
  const auto b = random_tensor<float>({3, 16, 16}, 10, 0, 1);
  auto perm = [](const Tensor& t) {
    Tensor p(t.shape());
    const auto plane = t.numel() / 3;
    const int order[] = {2, 0, 1};
    for (int c = 0; c < 3; ++c)
      std::copy_n(t.data().begin() + order[c] * plane, plane, p.data().begin() + c * plane);
    return p;
  };
  EXPECT_NEAR(ssim(perm(a), perm(b)), ssim(a, b), 1e-12);
  EXPECT_NEAR(psnr(perm(a), perm(b)), psnr(a, b), 1e-9);
}

TEST(Ssim, SmallFramesRejected) {
  EXPECT_THROW(ssim(Tensor({3, 10, 20}), Tensor({3, 10, 20})), MetricError);
}

TEST(Aggregate, HandComputedMeans) {
  // Three toy videos with known per-frame offsets: PSNR = -20 log10(d).
  auto clean = random_tensor<float>({3, 16, 16}, 11, 0.2, 0.7);
  const std::vector<std::vector<float>> offsets = {{0.1f, 0.01f}, {0.1f}, {0.01f, 0.01f, 0.1f}};
  std::vector<std::string> names = {"a", "b", "c"};
  std::vector<std::vector<Tensor>> outputs, refs;
  std::vector<double> video_psnr;
  for (const auto& offs : offsets) {
    outputs.emplace_back();
    refs.emplace_back();
    double s = 0;
    for (float d : offs) {
      outputs.back().push_back(offset(clean, d));
      refs.back().push_back(clean);
      s += -20 * std::log10(static_cast<double>(d));
    }
    video_psnr.push_back(s / static_cast<double>(offs.size()));
  }
  const auto report = evaluate_outputs(names, outputs, refs);
  ASSERT_EQ(report.per_video.size(), 3u);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(report.per_video[i].psnr, video_psnr[i], 1e-3);
  EXPECT_NEAR(report.mean_psnr, (video_psnr[0] + video_psnr[1] + video_psnr[2]) / 3, 1e-3);
  double ssim_mean = 0;
  for (const auto& v : report.per_video) ssim_mean += v.ssim / 3;
  EXPECT_NEAR(report.mean_ssim, ssim_mean, 1e-12);
  EXPECT_EQ(report.per_video[2].frames, 3);
}

TEST(Aggregate, MeanOfMeansEqualsPooledOnEqualLengths) {
  std::vector<VideoScore> v = {{"a", 30, 0.9, 4}, {"b", 20, 0.7, 4}, {"c", 25, 0.8, 4}};
  const auto r = aggregate(v);
  EXPECT_DOUBLE_EQ(r.mean_psnr, 25);
  EXPECT_NEAR(r.mean_ssim, 0.8, 1e-15);
}

TEST(Aggregate, InfiniteVideosExcludedWithWarning) {
  auto clean = random_tensor<float>({3, 16, 16}, 12, 0.2, 0.7);
  const auto report = evaluate_outputs({"same", "off"}, {{clean}, {offset(clean, 0.1f)}},
                                       {{clean}, {clean}});
  EXPECT_TRUE(std::isinf(report.per_video[0].psnr));
  EXPECT_NEAR(report.mean_psnr, 20.0, 0.01);
  EXPECT_FALSE(report.warnings.empty());
  EXPECT_NE(to_kv(report).find("video.0.psnr=inf"), std::string::npos);
}

TEST(Aggregate, PairingErrors) {
  auto f = Tensor({3, 16, 16});
  EXPECT_THROW(score_video("x", {f, f}, {f}), PairingError);
  EXPECT_THROW(score_video("x", {f}, {Tensor({3, 16, 17})}), PairingError);
  EXPECT_THROW(evaluate_outputs({"a"}, {{f}, {f}}, {{f}}), PairingError);
}

TEST(Report, KeyValueAndTextFormats) {
  std::vector<VideoScore> v = {{"a", 30.5, 0.9, 2}, {"b", 20.25, 0.7, 3}};
  const auto r = aggregate(v);
  const auto kv = to_kv(r);
  EXPECT_EQ(kv,
            "videos=2\n"
            "video.0.name=a\nvideo.0.frames=2\nvideo.0.psnr=30.500000\nvideo.0.ssim=0.900000\n"
            "video.1.name=b\nvideo.1.frames=3\nvideo.1.psnr=20.250000\nvideo.1.ssim=0.700000\n"
            "mean_psnr=25.375000\nmean_ssim=0.800000\n");
  EXPECT_NE(to_text(r).find("a"), std::string::npos);
  EXPECT_EQ(format_metric(INFINITY), "inf");
}

TEST(Evaluate, InProcessMatchesEnhanceThenScore) {
  auto cfg = preset_config("tiny");
  cfg.height = cfg.width = 32;
  const auto model = ReBotNet<float>::build(cfg, 3);
  VideoPair v{"v", {}, {}};
  for (int t = 0; t < 3; ++t) {
    v.degraded.push_back(random_tensor<float>({3, 32, 32}, 20 + t, 0, 1));
    v.clean.push_back(random_tensor<float>({3, 32, 32}, 30 + t, 0, 1));
  }
  const auto direct = evaluate(model, {v}, Bootstrap::kPassthrough);
  const auto outputs = enhance_offline(model, v.degraded, Bootstrap::kPassthrough);
  const auto scored = evaluate_outputs({"v"}, {outputs}, {v.clean});
  EXPECT_DOUBLE_EQ(direct.mean_psnr, scored.mean_psnr);
  EXPECT_DOUBLE_EQ(direct.mean_ssim, scored.mean_ssim);
}

TEST(Bench, ReportsAllKeys) {
  auto cfg = preset_config("tiny");
  cfg.height = cfg.width = 32;
  const auto model = ReBotNet<float>::build(cfg, 0);
  const auto r = bench_latency(model, 0, 2);
  EXPECT_GT(r.latency_ms, 0);
  EXPECT_NEAR(r.fps, 1000.0 / r.latency_ms, 1e-9);
  EXPECT_GT(r.peak_mem_bytes, 0);
  EXPECT_TRUE(std::regex_match(to_kv(r), std::regex(R"(latency_ms=[0-9.]+ fps=[0-9.]+ peak_mem=[0-9]+)")));
  EXPECT_THROW(bench_latency(model, 0, 0), UsageError);
}

}  // namespace
}  // namespace rebot
