#include "cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "rebot/degrade/pipeline.hpp"
#include "rebot/errors.hpp"
#include "rebot/io/clip_store.hpp"
#include "rebot/io/ppm.hpp"
#include "rebot/io/run_config.hpp"
#include "rebot/metrics/bench.hpp"
#include "rebot/metrics/evaluate.hpp"
#include "rebot/model/checkpoint.hpp"
#include "rebot/model/flops.hpp"
#include "rebot/rbt1.hpp"
#include "rebot/rng.hpp"
#include "rebot/runtime/stream.hpp"
#include "rebot/runtime/trainer.hpp"

namespace fs = std::filesystem;

namespace rebot::cli {
namespace {

// Every key accepted in a --config file or as a flag.
const std::set<std::string> kKeys = {
    "preset", "resolution", "seed", "in", "out", "checkpoint", "bootstrap", "reference",
    "spec", "data", "steps", "resume", "log", "clip_length", "bptt_window", "detach", "lr",
    "lr_min", "grad_clip", "checkpoint_every", "pred", "clean", "degraded", "format", "warmup",
    "reps", "frames"};

struct Context {
  io::RunConfig cfg{kKeys};
  std::ostream* out;
  std::ostream* err;
};

std::string require(const io::RunConfig& cfg, const std::string& key) {
  if (!cfg.has(key)) throw UsageError("missing required --" + key);
  return cfg.get(key);
}

ModelConfig model_config(const io::RunConfig& cfg, std::optional<std::pair<int, int>> fallback) {
  ModelConfig c = preset_config(cfg.get("preset", "S"));
  if (cfg.has("resolution")) {
    std::tie(c.height, c.width) = parse_resolution(cfg.get("resolution"));
  } else if (fallback) {
    std::tie(c.height, c.width) = *fallback;
  }
  validate(c);
  return c;
}

std::pair<int, int> frame_size(const Tensor& frame) {
  return {static_cast<int>(frame.dim(1)), static_cast<int>(frame.dim(2))};
}

Tensor load_frame(const fs::path& path) {
  return path.extension() == ".rbt" ? rbt1::load<float>(path) : io::read_ppm(path);
}

std::string clip_label(const fs::path& root, const fs::path& clip) {
  return clip == root ? clip.filename().string() : fs::relative(clip, root).string();
}

// enhance -----------------------------------------------------------------

int cmd_enhance(Context& ctx) {
  const fs::path in = require(ctx.cfg, "in");
  const fs::path out = require(ctx.cfg, "out");
  const fs::path ckpt_path = require(ctx.cfg, "checkpoint");
  const auto mode = parse_bootstrap(ctx.cfg.get("bootstrap", "passthrough"));

  const auto clip_dirs = io::list_clips(in);
  if (clip_dirs.empty()) throw DataError("no clips found under " + in.string());
  std::vector<io::Clip> clips;
  for (const auto& d : clip_dirs) clips.push_back(io::read_clip(d));

  Tensor reference;
  if (mode == Bootstrap::kGroundTruth) reference = load_frame(require(ctx.cfg, "reference"));

  const auto config = model_config(ctx.cfg, frame_size(clips.front().frames.front()));
  auto model = ReBotNet<float>::build(config, 0);
  restore(model, load_checkpoint(ckpt_path));
  for (std::size_t i = 0; i < clips.size(); ++i) {
    if (frame_size(clips[i].frames.front()) != std::pair<int, int>{config.height, config.width}) {
      throw DataError("clip " + clip_dirs[i].string() + " does not match the model resolution " +
                      std::to_string(config.height) + "x" + std::to_string(config.width));
    }
  }
  if (mode == Bootstrap::kGroundTruth && reference.shape() != clips.front().frames.front().shape()) {
    throw DataError("reference frame size does not match the input clips");
  }

  for (std::size_t i = 0; i < clips.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    StreamEnhancer<float> stream(model, mode, reference);
    io::Clip result{{}, clips[i].fps, clips[i].format};
    for (const auto& frame : clips[i].frames) result.frames.push_back(stream.push(frame));
    const std::chrono::duration<double, std::milli> ms = std::chrono::steady_clock::now() - start;
    const fs::path target = clip_dirs[i] == in ? out : out / fs::relative(clip_dirs[i], in);
    io::write_clip(target, result);
    char line[256];
    std::snprintf(line, sizeof line, "clip=%s frames=%zu total_ms=%.3f ms_per_frame=%.3f\n",
                  clip_label(in, clip_dirs[i]).c_str(), result.frames.size(), ms.count(),
                  ms.count() / static_cast<double>(result.frames.size()));
    *ctx.out << line;
  }
  return kExitOk;
}

// degrade -----------------------------------------------------------------

int cmd_degrade(Context& ctx) {
  const fs::path in = require(ctx.cfg, "in");
  const fs::path out = require(ctx.cfg, "out");
  const auto seed = ctx.cfg.get_u64("seed", 0);
  std::optional<DegradationSpec> fixed;
  if (ctx.cfg.has("spec")) fixed = parse_spec(io::read_file(ctx.cfg.get("spec")));

  const auto clip_dirs = io::list_clips(in);
  if (clip_dirs.empty()) throw DataError("no clips found under " + in.string());
  for (std::size_t i = 0; i < clip_dirs.size(); ++i) {
    const auto clip = io::read_clip(clip_dirs[i]);
    const auto clip_seed = seed ^ static_cast<std::uint64_t>(i);
    const auto spec = fixed ? *fixed : sample_spec(clip_seed);
    io::Clip result{degrade_clip(clip.frames, spec), clip.fps, clip.format};
    const fs::path target = clip_dirs[i] == in ? out : out / fs::relative(clip_dirs[i], in);
    io::write_clip(target, result);
    io::write_file(target / "degradation.spec", serialize(spec));
    *ctx.out << "clip=" << clip_label(in, clip_dirs[i]) << " seed=" << clip_seed
             << " stage_mask=" << spec.stage_mask << " spec=" << (target / "degradation.spec").string()
             << '\n';
  }
  return kExitOk;
}

// train -------------------------------------------------------------------

struct Pair {
  std::string name;
  std::vector<Tensor> degraded, clean;
};

std::vector<Pair> load_pairs(const fs::path& root) {
  const fs::path clean_root = root / "clean", degraded_root = root / "degraded";
  if (!fs::is_directory(clean_root) || !fs::is_directory(degraded_root)) {
    throw DataError(root.string() + " must contain clean/ and degraded/ clip directories");
  }
  std::map<std::string, fs::path> clean, degraded;
  for (const auto& d : io::list_clips(clean_root)) clean[clip_label(clean_root, d)] = d;
  for (const auto& d : io::list_clips(degraded_root)) degraded[clip_label(degraded_root, d)] = d;
  for (const auto& [name, _] : clean) {
    if (!degraded.count(name)) throw PairingError("clip '" + name + "' has no degraded copy");
  }
  for (const auto& [name, _] : degraded) {
    if (!clean.count(name)) throw PairingError("clip '" + name + "' has no clean copy");
  }
  if (clean.empty()) throw DataError("no training clips under " + root.string());

  std::vector<Pair> pairs;
  for (const auto& [name, path] : clean) {
    Pair p{name, io::read_clip(degraded.at(name)).frames, io::read_clip(path).frames};
    if (p.degraded.size() != p.clean.size()) {
      throw PairingError("clip '" + name + "': " + std::to_string(p.degraded.size()) +
                         " degraded vs " + std::to_string(p.clean.size()) + " clean frames");
    }
    if (p.degraded.front().shape() != p.clean.front().shape()) {
      throw PairingError("clip '" + name + "': degraded and clean frame sizes differ");
    }
    if (!pairs.empty() && p.clean.front().shape() != pairs.front().clean.front().shape()) {
      throw DataError("clip '" + name + "' has a different resolution from the other clips");
    }
    pairs.push_back(std::move(p));
  }
  return pairs;
}

TrainConfig train_config(const io::RunConfig& cfg) {
  TrainConfig t;
  t.total_steps = cfg.get_int("steps", t.total_steps);
  t.lr0 = cfg.get_double("lr", t.lr0);
  t.lr_min = cfg.get_double("lr_min", t.lr_min);
  t.clip_length = static_cast<int>(cfg.get_int("clip_length", t.clip_length));
  t.bptt_window = static_cast<int>(cfg.get_int("bptt_window", t.bptt_window));
  t.detach_feedback = cfg.get_bool("detach", t.detach_feedback);
  t.grad_clip = cfg.get_double("grad_clip", t.grad_clip);
  t.validate();
  return t;
}

int cmd_train(Context& ctx) {
  const fs::path data = require(ctx.cfg, "data");
  const fs::path out = require(ctx.cfg, "out");
  const auto seed = ctx.cfg.get_u64("seed", 0);
  const auto tcfg = train_config(ctx.cfg);
  const auto every = ctx.cfg.get_int("checkpoint_every", 0);
  if (every < 0) throw UsageError("checkpoint_every must be >= 0");

  const auto pairs = load_pairs(data);
  const auto config = model_config(ctx.cfg, frame_size(pairs.front().clean.front()));
  if (frame_size(pairs.front().clean.front()) != std::pair<int, int>{config.height, config.width}) {
    throw DataError("training frames do not match the model resolution " +
                    std::to_string(config.height) + "x" + std::to_string(config.width));
  }
  auto model = ReBotNet<float>::build(config, seed);
  Trainer<float> trainer(model, tcfg);
  if (ctx.cfg.has("resume")) trainer.resume(load_checkpoint(ctx.cfg.get("resume")));
  if (trainer.step() > tcfg.total_steps) {
    throw UsageError("resumed step " + std::to_string(trainer.step()) + " is past --steps " +
                     std::to_string(tcfg.total_steps));
  }

  std::ofstream log_file;
  if (ctx.cfg.has("log")) {
    log_file.open(ctx.cfg.get("log"), ctx.cfg.has("resume") ? std::ios::app : std::ios::trunc);
    if (!log_file) throw DataError("cannot open log " + ctx.cfg.get("log"));
  }
  TrainLog log(ctx.cfg.has("log") ? static_cast<std::ostream&>(log_file) : *ctx.out);

  // Clip order is a fresh permutation per epoch; both the order and the
  // window offsets depend only on (seed, step), so resumed runs continue
  // the same sequence.
  const auto n = static_cast<std::int64_t>(pairs.size());
  double last_loss = 0;
  while (trainer.step() < tcfg.total_steps) {
    const std::int64_t step = trainer.step();
    std::vector<std::int64_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle(derive_seed(seed, static_cast<std::uint64_t>(step / n)));
    for (std::int64_t i = n - 1; i > 0; --i) std::swap(order[i], order[shuffle.uniform_int(0, i)]);
    const auto& pair = pairs[order[step % n]];

    const auto len = std::min<std::int64_t>(tcfg.clip_length, pair.clean.size());
    Rng pick(derive_seed(~seed, static_cast<std::uint64_t>(step)));
    const auto offset = pick.uniform_int(0, static_cast<std::int64_t>(pair.clean.size()) - len);
    std::vector<Tensor> degraded(pair.degraded.begin() + offset, pair.degraded.begin() + offset + len);
    std::vector<Tensor> clean(pair.clean.begin() + offset, pair.clean.begin() + offset + len);

    const double lr = lr_at(step, tcfg);
    last_loss = trainer.train_clip(degraded, clean);
    log.write(trainer.step(), lr, last_loss);
    if (every > 0 && trainer.step() % every == 0) save_checkpoint(out, trainer.checkpoint());
  }
  save_checkpoint(out, trainer.checkpoint());
  char line[256];
  std::snprintf(line, sizeof line, "steps=%lld final_loss=%.9g checkpoint=%s\n",
                static_cast<long long>(trainer.step()), last_loss, out.string().c_str());
  *ctx.out << line;
  return kExitOk;
}

// evaluate ----------------------------------------------------------------

std::map<std::string, fs::path> clips_by_name(const fs::path& root) {
  std::map<std::string, fs::path> m;
  for (const auto& d : io::list_clips(root)) m[d == root ? std::string(".") : clip_label(root, d)] = d;
  return m;
}

int cmd_evaluate(Context& ctx) {
  const fs::path clean_root = require(ctx.cfg, "clean");
  const bool run_model = ctx.cfg.has("checkpoint");
  const fs::path input_root = run_model ? require(ctx.cfg, "degraded") : require(ctx.cfg, "pred");
  const std::string format = ctx.cfg.get("format", "kv");
  if (format != "kv" && format != "text") throw UsageError("format must be kv or text");

  const auto inputs = clips_by_name(input_root);
  const auto clean = clips_by_name(clean_root);
  if (inputs.empty() || clean.empty()) throw DataError("no clips to evaluate");
  std::vector<std::pair<fs::path, fs::path>> matched;
  if (inputs.size() == 1 && clean.size() == 1 &&
      (inputs.begin()->first == "." || clean.begin()->first == ".")) {
    matched.emplace_back(inputs.begin()->second, clean.begin()->second);
  } else {
    for (const auto& [name, path] : inputs) {
      auto it = clean.find(name);
      if (it == clean.end()) throw PairingError("clip '" + name + "' has no clean reference");
      matched.emplace_back(path, it->second);
    }
    if (clean.size() != inputs.size()) throw PairingError("clean set has unmatched clips");
  }

  std::vector<VideoPair> videos;
  for (const auto& [in_dir, clean_dir] : matched) {
    videos.push_back({clean_dir.filename().string(), io::read_clip(in_dir).frames,
                      io::read_clip(clean_dir).frames});
  }

  EvalReport report;
  if (run_model) {
    const auto mode = parse_bootstrap(ctx.cfg.get("bootstrap", "passthrough"));
    const auto config = model_config(ctx.cfg, frame_size(videos.front().clean.front()));
    auto model = ReBotNet<float>::build(config, 0);
    restore(model, load_checkpoint(ctx.cfg.get("checkpoint")));
    report = evaluate(model, videos, mode);
  } else {
    std::vector<std::string> names;
    std::vector<std::vector<Tensor>> outputs, refs;
    for (auto& v : videos) {
      names.push_back(v.name);
      outputs.push_back(std::move(v.degraded));
      refs.push_back(std::move(v.clean));
    }
    report = evaluate_outputs(names, outputs, refs);
  }
  for (const auto& w : report.warnings) *ctx.err << "warning: " << w << '\n';
  *ctx.out << (format == "kv" ? to_kv(report) : to_text(report));
  return kExitOk;
}

// bench / flops -----------------------------------------------------------

int cmd_bench(Context& ctx) {
  const auto config = model_config(ctx.cfg, std::nullopt);
  const auto warmup = ctx.cfg.get_int("warmup", 10);
  const auto reps = ctx.cfg.get_int("reps", 1000);
  const auto model = ReBotNet<float>::build(config, ctx.cfg.get_u64("seed", 0));
  const auto r = bench_latency(model, static_cast<int>(warmup), static_cast<int>(reps),
                               ctx.cfg.get_u64("seed", 0));
  *ctx.out << to_kv(r) << '\n';
  return kExitOk;
}

int cmd_flops(Context& ctx) {
  const auto config = model_config(ctx.cfg, std::nullopt);
  const auto frames = static_cast<int>(ctx.cfg.get_int("frames", 2));
  const auto flops = count_flops(config, frames);
  const auto model = ReBotNet<float>::build(config, ctx.cfg.get_u64("seed", 0));
  char line[256];
  std::snprintf(line, sizeof line,
                "preset=%s\nresolution=%dx%d\nframes=%d\nflops=%lld\ngflops=%.3f\nparams=%lld\n",
                config.preset.c_str(), config.height, config.width, frames,
                static_cast<long long>(flops), static_cast<double>(flops) / 1e9,
                static_cast<long long>(model.count_params()));
  *ctx.out << line;
  return kExitOk;
}

// wiring ------------------------------------------------------------------

struct Binding {
  CLI::Option* option;
  std::string key;
  std::string* value;
};

class Flags {
 public:
  void add(CLI::App& app, const std::string& flag, const std::string& key, const std::string& help) {
    auto& slot = values_.emplace_back(std::make_unique<std::string>());
    bindings_.push_back({app.add_option(flag, *slot, help), key, slot.get()});
  }

  void add_switch(CLI::App& app, const std::string& flag, const std::string& key,
                  const std::string& help) {
    auto& slot = values_.emplace_back(std::make_unique<std::string>("1"));
    bindings_.push_back({app.add_flag(flag, help), key, slot.get()});
  }

  void apply(io::RunConfig& cfg) const {
    for (const auto& b : bindings_) {
      if (b.option->count() > 0) cfg.set_flag(b.key, *b.value);
    }
  }

 private:
  std::vector<std::unique_ptr<std::string>> values_;
  std::vector<Binding> bindings_;
};

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const CheckpointMismatch*>(&e)) return kExitCheckpointMismatch;
  if (dynamic_cast<const PairingError*>(&e)) return kExitPairing;
  if (dynamic_cast<const DataError*>(&e) || dynamic_cast<const FormatError*>(&e) ||
      dynamic_cast<const StreamError*>(&e) || dynamic_cast<const MetricError*>(&e) ||
      dynamic_cast<const DimensionError*>(&e)) {
    return kExitBadData;
  }
  if (dynamic_cast<const fs::filesystem_error*>(&e)) return kExitBadData;
  return kExitUsage;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Frame-recurrent video enhancement: enhance, degrade, train, evaluate, bench, flops",
               "rebotnet"};
  app.fallthrough();
  app.require_subcommand(1);
  Flags flags;
  std::string config_file;
  app.add_option("--config", config_file, "key=value file; flags override its values");
  flags.add(app, "--seed", "seed", "Random seed (u64)");
  flags.add(app, "--preset", "preset", "Model preset: S, M, L or tiny");
  flags.add(app, "--resolution", "resolution", "Model resolution HxW (multiples of 16)");

  auto* enhance = app.add_subcommand("enhance", "Enhance clips frame by frame");
  flags.add(*enhance, "--in", "in", "Clip directory or directory of clips");
  flags.add(*enhance, "--out", "out", "Output directory");
  flags.add(*enhance, "--checkpoint", "checkpoint", "RBCK checkpoint");
  flags.add(*enhance, "--bootstrap", "bootstrap", "passthrough or ground_truth");
  flags.add(*enhance, "--reference", "reference", "First-frame reference for ground_truth");

  auto* degrade = app.add_subcommand("degrade", "Synthesize degraded clips");
  flags.add(*degrade, "--in", "in", "Clean clip directory or directory of clips");
  flags.add(*degrade, "--out", "out", "Output directory");
  flags.add(*degrade, "--spec", "spec", "Use this degradation spec instead of sampling");

  auto* train = app.add_subcommand("train", "Train on paired clean/degraded clips");
  flags.add(*train, "--data", "data", "Root holding clean/ and degraded/");
  flags.add(*train, "--steps", "steps", "Total optimizer steps");
  flags.add(*train, "--out", "out", "Checkpoint path");
  flags.add(*train, "--resume", "resume", "Checkpoint to resume from");
  flags.add(*train, "--log", "log", "Training log path (default stdout)");
  flags.add(*train, "--clip-length", "clip_length", "Frames per training clip");
  flags.add(*train, "--bptt-window", "bptt_window", "Frames per gradient window (0 = clip)");
  flags.add_switch(*train, "--detach", "detach", "Stop gradients through the fed-back frame");
  flags.add(*train, "--lr", "lr", "Initial learning rate");
  flags.add(*train, "--lr-min", "lr_min", "Final learning rate");
  flags.add(*train, "--grad-clip", "grad_clip", "Global gradient norm limit (0 = off)");
  flags.add(*train, "--checkpoint-every", "checkpoint_every", "Save every K steps (0 = end only)");

  auto* evaluate_cmd = app.add_subcommand("evaluate", "PSNR/SSIM against clean clips");
  flags.add(*evaluate_cmd, "--pred", "pred", "Enhanced clips to score");
  flags.add(*evaluate_cmd, "--degraded", "degraded", "Degraded clips to enhance (with --checkpoint)");
  flags.add(*evaluate_cmd, "--clean", "clean", "Clean reference clips");
  flags.add(*evaluate_cmd, "--checkpoint", "checkpoint", "RBCK checkpoint");
  flags.add(*evaluate_cmd, "--bootstrap", "bootstrap", "passthrough or ground_truth");
  flags.add(*evaluate_cmd, "--format", "format", "kv or text");

  auto* bench = app.add_subcommand("bench", "Forward latency and peak memory");
  flags.add(*bench, "--warmup", "warmup", "Untimed iterations (default 10)");
  flags.add(*bench, "--reps", "reps", "Timed iterations (default 1000)");

  auto* flops = app.add_subcommand("flops", "Analytic FLOPs and parameter count");
  flags.add(*flops, "--frames", "frames", "Frames per forward (default 2)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  Context ctx{io::RunConfig{kKeys}, &out, &err};
  try {
    if (!config_file.empty()) ctx.cfg.load_file(config_file);
    flags.apply(ctx.cfg);
    if (*enhance) return cmd_enhance(ctx);
    if (*degrade) return cmd_degrade(ctx);
    if (*train) return cmd_train(ctx);
    if (*evaluate_cmd) return cmd_evaluate(ctx);
    if (*bench) return cmd_bench(ctx);
    if (*flops) return cmd_flops(ctx);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
  return kExitUsage;
}

}  // namespace rebot::cli
