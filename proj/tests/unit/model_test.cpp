#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <string>

#include "oracles.hpp"
#include "rebot/errors.hpp"
#include "rebot/model/flops.hpp"
#include "rebot/model/rebotnet.hpp"
#include "rebot/ops.hpp"

namespace rebot {
namespace {

using testing::values;
using Vec = std::vector<double>;

// Straight-line forward over flat vectors, batch 1. Only parameter values
// are taken from the model under test.
class ReferenceNet {
 public:
  ReferenceNet(const ReBotNet<double>& model) : model_(model), cfg_(model.config()) {}

  Vec forward(const Vec& y_prev, const Vec& x_cur) const {
    const int h = cfg_.height, w = cfg_.width;
    Vec stacked = y_prev;
    stacked.insert(stacked.end(), x_cur.begin(), x_cur.end());
    Map f = conv({6, h, w, stacked}, "stem", cfg_.stem_kernel, 1, cfg_.stem_kernel / 2);
    for (int l = 0; l < 4; ++l) {
      const std::string prefix = "encoder." + std::to_string(l);
      for (int b = 0; b < cfg_.depths[l]; ++b) {
        const std::string blk = prefix + ".block." + std::to_string(b);
        Map y = depthwise(f, blk + ".dw");
        y = channel_norm(y, blk + ".norm");
        y = conv(y, blk + ".pw1", 1, 1, 0);
        for (auto& v : y.v) v = testing::naive_gelu(v);
        y = conv(y, blk + ".pw2", 1, 1, 0);
        for (std::size_t i = 0; i < y.v.size(); ++i) f.v[i] += y.v[i];
      }
      f = conv(channel_norm(f, prefix + ".down.norm"), prefix + ".down.conv", 2, 2, 0);
    }
    const int n = f.h * f.w, c = f.c;
    Vec clip = to_tokens(f);
    for (int i = 0; i < cfg_.bottleneck_depth; ++i) {
      clip = mixer(clip, n, c, "clip_mixer." + std::to_string(i));
    }

    Vec image = tokenize(y_prev, n);
    const Vec cur = tokenize(x_cur, n);
    image.insert(image.end(), cur.begin(), cur.end());
    for (int i = 0; i < cfg_.bottleneck_depth; ++i) {
      image = mixer(image, 2 * n, c, "image_mixer." + std::to_string(i));
    }

    Vec fused(static_cast<std::size_t>(n) * c);
    for (int i = 0; i < n * c; ++i) fused[i] = clip[i] + 0.5 * (image[i] + image[n * c + i]);
    Map m{c, f.h, f.w, Vec(fused.size())};
    for (int t = 0; t < n; ++t)
      for (int ch = 0; ch < c; ++ch) m.v[ch * n + t] = fused[t * c + ch];

    for (int s = 0; s < 4; ++s) {
      const std::string prefix = "decoder." + std::to_string(s);
      const auto wt = model_.param(prefix + ".weight");
      const int out_c = static_cast<int>(wt.dim(1)), k = static_cast<int>(wt.dim(2));
      const Vec bias = values(model_.param(prefix + ".bias"));
      int oh = 0, ow = 0;
      Vec up = testing::naive_tconv2d(m.v, 1, m.c, m.h, m.w, values(wt), out_c, k, &bias, 2,
                                      (k - 2) / 2, oh, ow);
      m = {out_c, oh, ow, up};
      if (s < 3) {
        if (cfg_.decoder_norm) m = channel_norm(m, prefix + ".norm");
        for (auto& v : m.v) v = testing::naive_gelu(v);
      }
    }
    return m.v;
  }

 private:
  struct Map {
    int c, h, w;
    Vec v;
  };

  Vec p(const std::string& name) const { return values(model_.param(name)); }

  Map conv(const Map& in, const std::string& prefix, int k, int s, int pad) const {
    const auto wt = model_.param(prefix + ".weight");
    const Vec bias = p(prefix + ".bias");
    int oh = 0, ow = 0;
    Vec out = testing::naive_conv2d(in.v, 1, in.c, in.h, in.w, values(wt),
                                    static_cast<int>(wt.dim(0)), k, k, &bias, s, pad, oh, ow);
    return {static_cast<int>(wt.dim(0)), oh, ow, out};
  }

  Map depthwise(const Map& in, const std::string& prefix) const {
    return {in.c, in.h, in.w,
            testing::naive_depthwise(in.v, 1, in.c, in.h, in.w, p(prefix + ".weight"),
                                     p(prefix + ".bias"), 7, 3)};
  }

  static void normalize(double* row, int len, std::ptrdiff_t stride, const Vec& g, const Vec& b) {
    double mean = 0, var = 0;
    for (int i = 0; i < len; ++i) mean += row[i * stride];
    mean /= len;
    for (int i = 0; i < len; ++i) var += (row[i * stride] - mean) * (row[i * stride] - mean);
    var /= len;
    for (int i = 0; i < len; ++i) {
      row[i * stride] = (row[i * stride] - mean) / std::sqrt(var + 1e-6) * g[i] + b[i];
    }
  }

  Map channel_norm(Map m, const std::string& prefix) const {
    const Vec g = p(prefix + ".gamma"), b = p(prefix + ".beta");
    for (int i = 0; i < m.h * m.w; ++i) normalize(m.v.data() + i, m.c, m.h * m.w, g, b);
    return m;
  }

  Vec row_norm(Vec rows, int len, const std::string& prefix) const {
    const Vec g = p(prefix + ".gamma"), b = p(prefix + ".beta");
    for (std::size_t r = 0; r < rows.size() / len; ++r) normalize(rows.data() + r * len, len, 1, g, b);
    return rows;
  }

  Vec dense(const Vec& rows, int din, const std::string& prefix) const {
    const auto wt = model_.param(prefix + ".weight");
    const Vec bias = p(prefix + ".bias");
    return testing::naive_linear(rows, static_cast<int>(rows.size() / din), din, values(wt),
                                 static_cast<int>(wt.dim(0)), &bias);
  }

  static Vec transpose(const Vec& a, int rows, int cols) {
    Vec t(a.size());
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) t[c * rows + r] = a[r * cols + c];
    return t;
  }

  static Vec to_tokens(const Map& m) { return transpose(m.v, m.c, m.h * m.w); }

  Vec mixer(const Vec& x, int n, int c, const std::string& prefix) const {
    const int hidden = cfg_.mixer_hidden;
    Vec across = transpose(row_norm(x, c, prefix + ".norm1"), n, c);  // [C,N]
    Vec t = dense(across, n, prefix + ".token_fc1");
    for (auto& v : t) v = testing::naive_gelu(v);
    t = transpose(dense(t, hidden, prefix + ".token_fc2"), c, n);
    Vec mixed = x;
    for (std::size_t i = 0; i < mixed.size(); ++i) mixed[i] += t[i];
    Vec ch = dense(row_norm(mixed, c, prefix + ".norm2"), c, prefix + ".channel_fc1");
    for (auto& v : ch) v = testing::naive_gelu(v);
    ch = dense(ch, hidden, prefix + ".channel_fc2");
    for (std::size_t i = 0; i < mixed.size(); ++i) mixed[i] += ch[i];
    return mixed;
  }

  Vec tokenize(const Vec& frame, int n) const {
    Map e = conv({3, cfg_.height, cfg_.width, frame}, "tokenizer.embed", 1, 1, 0);
    const int r = ModelConfig::kReduction, gh = e.h / r, gw = e.w / r;
    Map pooled{e.c, gh, gw, Vec(static_cast<std::size_t>(e.c) * gh * gw)};
    for (int c = 0; c < e.c; ++c)
      for (int y = 0; y < gh; ++y)
        for (int x = 0; x < gw; ++x) {
          double best = -INFINITY;
          for (int i = 0; i < r; ++i)
            for (int j = 0; j < r; ++j) {
              best = std::max(best, e.v[(c * e.h + y * r + i) * e.w + x * r + j]);
            }
          pooled.v[(c * gh + y) * gw + x] = best;
        }
    EXPECT_EQ(gh * gw, n);
    return dense(to_tokens(pooled), e.c, "tokenizer.proj");
  }

  const ReBotNet<double>& model_;
  ModelConfig cfg_;
};

void scramble(const nn::ParamList<double>& params, std::uint64_t seed) {
  Rng rng(seed);
  for (const auto& p : params) {
    for (auto& v : BasicTensor<double>(p.value).data()) v = rng.uniform(-0.5, 0.5);
  }
}

ModelConfig tiny_at(int h, int w) {
  auto c = preset_config("tiny");
  c.height = h;
  c.width = w;
  return c;
}

TEST(ReBotNet, MatchesStraightLineReference) {
  for (auto [h, w] : {std::pair{16, 16}, std::pair{32, 16}, std::pair{32, 48}}) {
    auto model = ReBotNet<double>::build(tiny_at(h, w), 3);
    scramble(model.params(), 4);
    auto y_prev = testing::random_tensor<double>({1, 3, h, w}, 5, 0, 1);
    auto x_cur = testing::random_tensor<double>({1, 3, h, w}, 6, 0, 1);
    auto got = model.forward(y_prev, x_cur);
    ASSERT_EQ(got.shape(), (Shape{1, 3, h, w}));
    auto want = ReferenceNet(model).forward(values(y_prev), values(x_cur));
    EXPECT_LT(testing::max_abs_diff(values(got), want), 1e-9) << h << "x" << w;
  }
}

TEST(ReBotNet, FloatForwardTracksDouble) {
  auto model = ReBotNet<float>::build(tiny_at(32, 32), 7);
  auto model_d = ReBotNet<double>::build(tiny_at(32, 32), 7);
  for (std::size_t i = 0; i < model.params().size(); ++i) {
    auto src = model.params()[i].value.data();
    auto dst = BasicTensor<double>(model_d.params()[i].value).data();
    std::copy(src.begin(), src.end(), dst.begin());
  }
  auto a = testing::random_tensor<float>({1, 3, 32, 32}, 8, 0, 1);
  auto b = testing::random_tensor<float>({1, 3, 32, 32}, 9, 0, 1);
  auto yf = model.forward(a, b);
  auto yd = model_d.forward(cast<double>(a), cast<double>(b));
  EXPECT_LT(testing::max_abs_diff(values(yf), values(yd)), 1e-4);
}

TEST(ReBotNet, BranchTokenShapes) {
  auto model = ReBotNet<float>::build(tiny_at(64, 32), 1);
  Tensor frame({2, 3, 64, 32});
  EXPECT_EQ(model.encode_clip_tokens(frame, frame).shape(), (Shape{2, 8, 4}));
  EXPECT_EQ(model.encode_image_tokens(frame, frame).shape(), (Shape{2, 8, 4}));
  EXPECT_EQ(model.forward(frame, frame).shape(), (Shape{2, 3, 64, 32}));
}

TEST(ReBotNet, RejectsWrongInputs) {
  auto model = ReBotNet<float>::build(tiny_at(32, 32), 1);
  EXPECT_THROW(model.forward(Tensor({1, 3, 32, 32}), Tensor({1, 3, 64, 64})), DimensionError);
  EXPECT_THROW(model.forward(Tensor({1, 3, 64, 64}), Tensor({1, 3, 64, 64})), DimensionError);
  EXPECT_THROW(model.forward(Tensor({1, 4, 32, 32}), Tensor({1, 4, 32, 32})), DimensionError);
  EXPECT_THROW(model.param("nope"), UsageError);
}

TEST(ReBotNet, BuildIsDeterministicInSeed) {
  auto a = ReBotNet<float>::build(tiny_at(16, 16), 11);
  auto b = ReBotNet<float>::build(tiny_at(16, 16), 11);
  auto c = ReBotNet<float>::build(tiny_at(16, 16), 12);
  bool any_diff = false;
  for (std::size_t i = 0; i < a.params().size(); ++i) {
    EXPECT_EQ(a.params()[i].name, b.params()[i].name);
    EXPECT_TRUE(bit_equal(a.params()[i].value, b.params()[i].value));
    any_diff |= !bit_equal(a.params()[i].value, c.params()[i].value);
  }
  EXPECT_TRUE(any_diff);
}

TEST(ReBotNet, InitialisationConventions) {
  auto model = ReBotNet<float>::build(preset_config("tiny"), 2);
  for (const auto& p : model.params()) {
    const auto& n = p.name;
    for (float v : p.value.data()) {
      if (n.ends_with(".gamma")) ASSERT_EQ(v, 1.0f) << n;
      else if (n.ends_with(".beta") || n.ends_with(".bias")) ASSERT_EQ(v, 0.0f) << n;
      else ASSERT_LE(std::abs(v), 0.04f) << n;
    }
  }
}

// Closed-form parameter count, term by term.
std::int64_t expected_params(const ModelConfig& c) {
  const auto& d = c.dims;
  const std::int64_t n = c.tokens(), b = c.bottleneck_dim(), h = c.mixer_hidden;
  std::int64_t total = 6 * d[0] * 9 + d[0];
  for (int l = 0; l < 4; ++l) {
    const std::int64_t ch = d[l], wide = ch * c.expansion, next = d[std::min(l + 1, 3)];
    total += c.depths[l] * (49 * ch + ch + 2 * ch + ch * wide + wide + wide * ch + ch);
    total += 2 * ch + 4 * ch * next + next;
  }
  auto mixer = [&](std::int64_t tokens) {
    return 2 * b + tokens * h + h + h * tokens + tokens + 2 * b + b * h + h + h * b + b;
  };
  total += c.bottleneck_depth * (mixer(n) + mixer(2 * n));
  total += 3 * c.branch2_embed + c.branch2_embed + c.branch2_embed * b + b;
  const std::int64_t widths[] = {d[3], d[2], d[1], d[0], 3};
  for (int s = 0; s < 4; ++s) {
    total += widths[s] * widths[s + 1] * 16 + widths[s + 1] + (s < 3 ? 2 * widths[s + 1] : 0);
  }
  return total;
}

TEST(Budget, ParameterCountMatchesClosedForm) {
  for (const char* name : {"tiny", "S", "M", "L"}) {
    const auto cfg = preset_config(name);
    EXPECT_EQ(ReBotNet<float>::build(cfg, 0).count_params(), expected_params(cfg)) << name;
  }
}

// FLOPs re-derived from the parameter list: each weight costs 2 per element
// per position it is applied at; norms and activations are costed from the
// widths of the layers that produce them.
std::int64_t flops_from_params(const ReBotNet<float>& model) {
  const auto& c = model.config();
  const std::int64_t hw = static_cast<std::int64_t>(c.height) * c.width, n = c.tokens();
  const std::int64_t b = c.bottleneck_dim();
  std::int64_t total = 0;
  for (const auto& p : model.params()) {
    const auto& name = p.name;
    const std::int64_t numel = p.value.numel();
    auto level_positions = [&](int l) { return hw >> (2 * l); };
    if (name == "stem.weight") {
      total += 2 * numel * hw;
    } else if (name.starts_with("encoder.")) {
      const int l = name[8] - '0';
      const std::int64_t pos = level_positions(l);
      if (name.ends_with(".down.conv.weight")) total += 2 * numel * level_positions(l + 1);
      else if (name.ends_with(".norm.gamma")) total += 5 * numel * pos;
      else if (name.ends_with(".pw1.bias")) total += 10 * numel * pos;
      else if (name.ends_with(".weight")) total += 2 * numel * pos;
    } else if (name.starts_with("clip_mixer.") || name.starts_with("image_mixer.")) {
      const std::int64_t tokens = name.starts_with("clip") ? n : 2 * n;
      if (name.ends_with("gamma")) total += 5 * numel * tokens;
      else if (name.ends_with("token_fc1.weight") || name.ends_with("token_fc2.weight")) total += 2 * numel * b;
      else if (name.ends_with("channel_fc1.weight") || name.ends_with("channel_fc2.weight")) total += 2 * numel * tokens;
      else if (name.ends_with("token_fc1.bias")) total += 10 * numel * b;
      else if (name.ends_with("channel_fc1.bias")) total += 10 * numel * tokens;
    } else if (name == "tokenizer.embed.weight") {
      total += 2 * 2 * numel * hw;
    } else if (name == "tokenizer.proj.weight") {
      total += 2 * 2 * numel * n;
    } else if (name.starts_with("decoder.")) {
      const int s = name[8] - '0';
      const std::int64_t in_pos = n << (2 * s), out_pos = n << (2 * (s + 1));
      if (name.ends_with(".weight")) total += 2 * numel * in_pos;
      else if (name.ends_with(".norm.gamma")) total += (5 + 10) * numel * out_pos;
    }
  }
  return total;
}

TEST(Budget, FlopsMatchParameterWalk) {
  for (const char* name : {"tiny", "S", "M", "L"}) {
    auto cfg = preset_config(name);
    EXPECT_EQ(count_flops(cfg), flops_from_params(ReBotNet<float>::build(cfg, 0))) << name;
  }
  auto cfg = preset_config("S");
  cfg.height = 256;
  cfg.width = 448;
  EXPECT_EQ(count_flops(cfg), flops_from_params(ReBotNet<float>::build(cfg, 0)));
}

TEST(Budget, SectionsSumToTotalAndScaleWithFrames) {
  const auto cfg = preset_config("S");
  const auto sections = flops_by_section(cfg);
  ASSERT_EQ(sections.size(), 6u);
  std::int64_t sum = 0;
  for (const auto& s : sections) {
    EXPECT_GT(s.flops, 0) << s.section;
    sum += s.flops;
  }
  EXPECT_EQ(sum, count_flops(cfg));
  EXPECT_GT(count_flops(cfg, 3), count_flops(cfg, 2));
  EXPECT_THROW(count_flops(cfg, 0), UsageError);
}

TEST(Config, PresetsAndValidation) {
  EXPECT_THROW(preset_config("XL"), ConfigError);
  auto c = preset_config("S");
  c.height = 100;
  EXPECT_THROW(validate(c), ConfigError);
  c = preset_config("S");
  c.decoder_kernel = 3;
  EXPECT_THROW(validate(c), ConfigError);
  c = preset_config("S");
  c.frames = 3;
  EXPECT_THROW(validate(c), ConfigError);
  EXPECT_THROW(ReBotNet<float>::build(c, 0), ConfigError);
}

TEST(Config, SerializeRoundTripAndFingerprint) {
  auto c = preset_config("M");
  c.height = 128;
  c.width = 256;
  const auto back = parse_model_config(serialize(c));
  EXPECT_EQ(serialize(back), serialize(c));
  EXPECT_EQ(fingerprint(back), fingerprint(c));
  auto relabeled = c;
  relabeled.preset = "custom";
  EXPECT_EQ(fingerprint(relabeled), fingerprint(c));
  auto other = c;
  other.mixer_hidden = 128;
  EXPECT_NE(fingerprint(other), fingerprint(c));
  EXPECT_THROW(parse_model_config("bogus=1\n"), ConfigError);
  EXPECT_THROW(parse_model_config("dims=1,2,3\n"), ConfigError);
}

TEST(Config, ParseResolution) {
  EXPECT_EQ(parse_resolution("256x448"), (std::pair{256, 448}));
  EXPECT_THROW(parse_resolution("256"), UsageError);
  EXPECT_THROW(parse_resolution("axb"), UsageError);
}

TEST(Blocks, MixerRejectsWrongTokenCount) {
  nn::MixerBlock<float> m(4, 8, 16, 16);
  EXPECT_THROW(m(Tensor({1, 5, 8})), DimensionError);
  EXPECT_EQ(m(Tensor({2, 4, 8})).shape(), (Shape{2, 4, 8}));
}

TEST(Blocks, DownsampleNeedsEvenInput) {
  nn::Downsample<float> d(4, 6);
  EXPECT_THROW(d(Tensor({1, 4, 5, 4})), DimensionError);
  EXPECT_EQ(d(Tensor({1, 4, 6, 4})).shape(), (Shape{1, 6, 3, 2}));
}

TEST(Blocks, DecoderStageRejectsOddKernel) {
  EXPECT_THROW(nn::DecoderStage<float>(4, 2, 3, true, false), ConfigError);
}

}  // namespace
}  // namespace rebot
