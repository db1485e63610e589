#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "rebot/model/checkpoint.hpp"
#include "rebot/model/rebotnet.hpp"
#include "rebot/runtime/optim.hpp"

namespace rebot {

// Recurrent training on aligned (degraded, clean) clips of [3,H,W] frames.
// The recurrence starts from y_{-1} = clean[0]; the loss is the mean
// Charbonnier loss over frames. Gradients flow back through the fed-back
// predictions within each bptt window and are cut at window boundaries.
template <typename T>
class Trainer {
 public:
  Trainer(ReBotNet<T>& model, TrainConfig cfg);

  // Forward/backward plus one Adam step at lr_at(step). Returns the loss.
  double train_clip(const std::vector<BasicTensor<T>>& degraded,
                    const std::vector<BasicTensor<T>>& clean);

  // Forward/backward only; gradients are left on the parameters. Optional
  // per-frame loss weights replace the uniform 1/T.
  double compute_gradients(const std::vector<BasicTensor<T>>& degraded,
                           const std::vector<BasicTensor<T>>& clean,
                           std::span<const double> frame_weights = {});

  std::int64_t step() const { return state_.step; }
  const TrainConfig& config() const { return cfg_; }
  AdamState<T>& optimizer() { return state_; }
  ReBotNet<T>& model() { return *model_; }

  // Model weights plus optimizer moments and step counter.
  Checkpoint checkpoint() const;
  // Throws CheckpointMismatch on config differences. Bundles without
  // optimizer entries restore weights only and start at step 0.
  void resume(const Checkpoint& ckpt);

 private:
  ReBotNet<T>* model_;
  TrainConfig cfg_;
  AdamState<T> state_;
};

// Writes `step<TAB>lr<TAB>loss` lines, flushed one at a time.
class TrainLog {
 public:
  explicit TrainLog(std::ostream& out) : out_(&out) {}
  void write(std::int64_t step, double lr, double loss);

 private:
  std::ostream* out_;
};

extern template class Trainer<float>;
extern template class Trainer<double>;

}  // namespace rebot
