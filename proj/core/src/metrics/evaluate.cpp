#include "rebot/metrics/evaluate.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "rebot/errors.hpp"
#include "rebot/metrics/metrics.hpp"

namespace rebot {

std::string format_metric(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

VideoScore score_video(const std::string& name, const std::vector<Tensor>& outputs,
                       const std::vector<Tensor>& clean, std::vector<std::string>* warnings) {
  if (outputs.size() != clean.size() || outputs.empty()) {
    throw PairingError("video '" + name + "': " + std::to_string(outputs.size()) +
                       " frames against " + std::to_string(clean.size()) + " clean frames");
  }
  VideoScore score{name, 0, 0, static_cast<std::int64_t>(outputs.size())};
  double psnr_sum = 0;
  std::int64_t finite = 0;
  for (std::size_t t = 0; t < outputs.size(); ++t) {
    if (outputs[t].shape() != clean[t].shape()) {
      throw PairingError("video '" + name + "' frame " + std::to_string(t) + ": shape " +
                         to_string(outputs[t].shape()) + " vs " + to_string(clean[t].shape()));
    }
    const double p = psnr(outputs[t], clean[t]);
    if (std::isfinite(p)) {
      psnr_sum += p;
      ++finite;
    }
    score.ssim += ssim(outputs[t], clean[t]);
  }
  score.ssim /= static_cast<double>(outputs.size());
  if (finite < score.frames && warnings != nullptr) {
    warnings->push_back("video '" + name + "': " + std::to_string(score.frames - finite) +
                        " frame(s) with infinite PSNR left out of the mean");
  }
  score.psnr = finite > 0 ? psnr_sum / static_cast<double>(finite)
                          : std::numeric_limits<double>::infinity();
  return score;
}

EvalReport aggregate(std::vector<VideoScore> videos, std::vector<std::string> warnings) {
  EvalReport report;
  report.per_video = std::move(videos);
  report.warnings = std::move(warnings);
  double psnr_sum = 0, ssim_sum = 0;
  std::int64_t finite = 0;
  for (const auto& v : report.per_video) {
    ssim_sum += v.ssim;
    if (std::isfinite(v.psnr)) {
      psnr_sum += v.psnr;
      ++finite;
    } else {
      report.warnings.push_back("video '" + v.name + "' has infinite PSNR; left out of mean_psnr");
    }
  }
  const auto n = static_cast<double>(report.per_video.size());
  report.mean_ssim = report.per_video.empty() ? 0 : ssim_sum / n;
  report.mean_psnr = finite > 0 ? psnr_sum / static_cast<double>(finite)
                                : std::numeric_limits<double>::infinity();
  return report;
}

EvalReport evaluate_outputs(const std::vector<std::string>& names,
                            const std::vector<std::vector<Tensor>>& outputs,
                            const std::vector<std::vector<Tensor>>& clean) {
  if (names.size() != outputs.size() || outputs.size() != clean.size()) {
    throw PairingError("evaluate: " + std::to_string(outputs.size()) + " enhanced videos against " +
                       std::to_string(clean.size()) + " clean videos");
  }
  std::vector<std::string> warnings;
  std::vector<VideoScore> scores;
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    scores.push_back(score_video(names[i], outputs[i], clean[i], &warnings));
  }
  return aggregate(std::move(scores), std::move(warnings));
}

EvalReport evaluate(const ReBotNet<float>& model, const std::vector<VideoPair>& videos,
                    Bootstrap mode) {
  std::vector<std::string> names;
  std::vector<std::vector<Tensor>> outputs, clean;
  for (const auto& v : videos) {
    if (v.degraded.size() != v.clean.size() || v.degraded.empty()) {
      throw PairingError("video '" + v.name + "': " + std::to_string(v.degraded.size()) +
                         " degraded vs " + std::to_string(v.clean.size()) + " clean frames");
    }
    StreamEnhancer<float> stream(model, mode,
                                 mode == Bootstrap::kGroundTruth ? v.clean.front() : Tensor{});
    std::vector<Tensor> out;
    for (const auto& f : v.degraded) out.push_back(stream.push(f));
    names.push_back(v.name);
    outputs.push_back(std::move(out));
    clean.push_back(v.clean);
  }
  return evaluate_outputs(names, outputs, clean);
}

std::string to_text(const EvalReport& r) {
  std::ostringstream os;
  for (const auto& v : r.per_video) {
    os << v.name << ": psnr " << format_metric(v.psnr) << " dB, ssim " << format_metric(v.ssim)
       << " (" << v.frames << " frames)\n";
  }
  os << "mean: psnr " << format_metric(r.mean_psnr) << " dB, ssim " << format_metric(r.mean_ssim)
     << " over " << r.per_video.size() << " videos\n";
  if (r.latency_ms) os << "latency " << format_metric(*r.latency_ms) << " ms\n";
  return os.str();
}

std::string to_kv(const EvalReport& r) {
  std::ostringstream os;
  os << "videos=" << r.per_video.size() << '\n';
  for (std::size_t i = 0; i < r.per_video.size(); ++i) {
    const auto& v = r.per_video[i];
    os << "video." << i << ".name=" << v.name << '\n'
       << "video." << i << ".frames=" << v.frames << '\n'
       << "video." << i << ".psnr=" << format_metric(v.psnr) << '\n'
       << "video." << i << ".ssim=" << format_metric(v.ssim) << '\n';
  }
  os << "mean_psnr=" << format_metric(r.mean_psnr) << '\n'
     << "mean_ssim=" << format_metric(r.mean_ssim) << '\n';
  if (r.latency_ms) os << "latency_ms=" << format_metric(*r.latency_ms) << '\n';
  if (r.fps) os << "fps=" << format_metric(*r.fps) << '\n';
  if (r.peak_mem_bytes) os << "peak_mem=" << *r.peak_mem_bytes << '\n';
  return os.str();
}

}  // namespace rebot
