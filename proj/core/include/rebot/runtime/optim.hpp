#pragma once

#include <cstdint>
#include <vector>

#include "rebot/nn/blocks.hpp"

namespace rebot {

struct TrainConfig {
  double lr0 = 4e-4;
  double lr_min = 1e-7;
  std::int64_t total_steps = 1000;
  int clip_length = 10;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double charbonnier_eps = 1e-3;
  int bptt_window = 0;           // 0 means the whole clip
  bool detach_feedback = false;  // cut the gradient through y_{t-1} at every step
  double grad_clip = 0.0;        // global L2 norm limit, 0 disables

  // Throws UsageError.
  void validate() const;
  int effective_window(int frames) const;
};

// Cosine annealing from lr0 at step 0 to lr_min at total_steps.
double lr_at(std::int64_t step, const TrainConfig& cfg);

template <typename T>
struct AdamState {
  std::int64_t step = 0;  // completed updates
  std::vector<BasicTensor<T>> m;
  std::vector<BasicTensor<T>> v;
};

// One bias-corrected Adam update using the gradients stored on params.
// Parameters that never received a gradient are treated as zero-gradient.
// Clears the gradients afterwards.
template <typename T>
void adam_step(const nn::ParamList<T>& params, AdamState<T>& state, double lr,
               const TrainConfig& cfg);

// Global L2 norm of the stored gradients.
template <typename T>
double grad_norm(const nn::ParamList<T>& params);

}  // namespace rebot
