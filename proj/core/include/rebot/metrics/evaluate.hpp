#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rebot/model/rebotnet.hpp"
#include "rebot/runtime/stream.hpp"

namespace rebot {

struct VideoScore {
  std::string name;
  double psnr = 0;  // mean over frames with finite PSNR; inf if none
  double ssim = 0;
  std::int64_t frames = 0;
};

struct EvalReport {
  std::vector<VideoScore> per_video;
  double mean_psnr = 0;  // over videos with finite PSNR
  double mean_ssim = 0;
  std::optional<double> latency_ms;
  std::optional<double> fps;
  std::optional<std::int64_t> peak_mem_bytes;
  std::vector<std::string> warnings;
};

struct VideoPair {
  std::string name;
  std::vector<Tensor> degraded;
  std::vector<Tensor> clean;
};

// Per-frame PSNR/SSIM averaged within the video. Length or shape
// differences raise PairingError.
VideoScore score_video(const std::string& name, const std::vector<Tensor>& outputs,
                       const std::vector<Tensor>& clean, std::vector<std::string>* warnings = nullptr);

// Arithmetic means across videos; infinite PSNRs are left out with a warning.
EvalReport aggregate(std::vector<VideoScore> videos, std::vector<std::string> warnings = {});

// Scores already-enhanced videos against their clean references.
EvalReport evaluate_outputs(const std::vector<std::string>& names,
                            const std::vector<std::vector<Tensor>>& outputs,
                            const std::vector<std::vector<Tensor>>& clean);

// Runs each degraded video through the streaming enhancer and scores it.
// ground_truth mode bootstraps from the clean first frame.
EvalReport evaluate(const ReBotNet<float>& model, const std::vector<VideoPair>& videos,
                    Bootstrap mode);

// Human-readable lines, and a key=value block.
std::string to_text(const EvalReport& report);
std::string to_kv(const EvalReport& report);

std::string format_metric(double v);

}  // namespace rebot
