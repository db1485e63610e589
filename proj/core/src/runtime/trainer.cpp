#include "rebot/runtime/trainer.hpp"

#include <cstdio>
#include <ostream>
#include <string>

#include "rebot/errors.hpp"
#include "rebot/ops.hpp"
#include "rebot/runtime/loss.hpp"
#include "rebot/tape.hpp"

namespace rebot {

namespace {

constexpr std::string_view kStepEntry = "train.step";
constexpr std::string_view kMomentPrefix = "adam.m.";
constexpr std::string_view kVariancePrefix = "adam.v.";

template <typename T>
BasicTensor<T> as_batch(const BasicTensor<T>& frame) {
  if (frame.rank() != 3 || frame.dim(0) != 3) {
    throw DimensionError("expected a [3,H,W] frame, got " + to_string(frame.shape()));
  }
  return ops::reshape(frame, {1, 3, frame.dim(1), frame.dim(2)});
}

template <typename T>
nn::ParamList<T> named_like(const nn::ParamList<T>& params, const std::vector<BasicTensor<T>>& v) {
  nn::ParamList<T> out;
  for (std::size_t i = 0; i < params.size(); ++i) out.push_back({params[i].name, v[i]});
  return out;
}

}  // namespace

template <typename T>
Trainer<T>::Trainer(ReBotNet<T>& model, TrainConfig cfg) : model_(&model), cfg_(cfg) {
  cfg_.validate();
  for (const auto& p : model_->params()) BasicTensor<T>(p.value).set_requires_grad(true);
}

template <typename T>
double Trainer<T>::compute_gradients(const std::vector<BasicTensor<T>>& degraded,
                                     const std::vector<BasicTensor<T>>& clean,
                                     std::span<const double> frame_weights) {
  if (degraded.empty() || degraded.size() != clean.size()) {
    throw DataError("training clip has " + std::to_string(degraded.size()) +
                    " degraded and " + std::to_string(clean.size()) + " clean frames");
  }
  const int frames = static_cast<int>(degraded.size());
  for (int t = 0; t < frames; ++t) {
    if (degraded[t].shape() != clean[t].shape() || clean[t].shape() != clean[0].shape()) {
      throw DataError("training clip frame " + std::to_string(t) + " shapes do not line up");
    }
  }
  if (!frame_weights.empty() && static_cast<int>(frame_weights.size()) != frames) {
    throw UsageError("compute_gradients: need one weight per frame");
  }
  const int window = cfg_.effective_window(frames);

  auto y_prev = as_batch(clean.front()).detach();
  double total = 0;
  for (int start = 0; start < frames; start += window) {
    Tape<T> tape;
    BasicTensor<T> window_loss;
    {
      TapeScope<T> scope(tape);
      for (int t = start; t < std::min(start + window, frames); ++t) {
        const double weight = frame_weights.empty() ? 1.0 / frames : frame_weights[t];
        auto y = model_->forward(y_prev, as_batch(degraded[t]));
        auto loss = charbonnier_loss(y, as_batch(clean[t]), cfg_.charbonnier_eps);
        total += weight * static_cast<double>(loss.item());
        auto weighted = ops::scale(loss, weight);
        window_loss = window_loss.defined() ? ops::add(window_loss, weighted) : weighted;
        y_prev = y;
      }
    }
    if (window_loss.requires_grad()) tape.backward(window_loss);
    y_prev = y_prev.detach();
  }
  return total;
}

template <typename T>
double Trainer<T>::train_clip(const std::vector<BasicTensor<T>>& degraded,
                              const std::vector<BasicTensor<T>>& clean) {
  const double lr = lr_at(state_.step, cfg_);
  const double loss = compute_gradients(degraded, clean);
  adam_step(model_->params(), state_, lr, cfg_);
  return loss;
}

template <typename T>
Checkpoint Trainer<T>::checkpoint() const {
  Checkpoint ckpt = snapshot(*model_);
  if (!state_.m.empty()) {
    add_entries(ckpt, named_like(model_->params(), state_.m), kMomentPrefix);
    add_entries(ckpt, named_like(model_->params(), state_.v), kVariancePrefix);
  }
  ckpt.entries.emplace_back(std::string(kStepEntry),
                            TensorD({1}, {static_cast<double>(state_.step)}));
  return ckpt;
}

template <typename T>
void Trainer<T>::resume(const Checkpoint& ckpt) {
  restore(*model_, ckpt);
  state_ = {};
  const auto& params = model_->params();
  if (ckpt.find(std::string(kMomentPrefix) + params.front().name) != nullptr) {
    for (const auto& p : params) {
      state_.m.push_back(BasicTensor<T>::zeros(p.value.shape()));
      state_.v.push_back(BasicTensor<T>::zeros(p.value.shape()));
    }
    restore_entries(ckpt, named_like(params, state_.m), kMomentPrefix);
    restore_entries(ckpt, named_like(params, state_.v), kVariancePrefix);
  }
  if (const auto* step = ckpt.find(kStepEntry)) {
    state_.step = static_cast<std::int64_t>(std::get<TensorD>(*step).item());
  }
}

void TrainLog::write(std::int64_t step, double lr, double loss) {
  char line[96];
  std::snprintf(line, sizeof line, "%lld\t%.9g\t%.9g\n", static_cast<long long>(step), lr, loss);
  *out_ << line;
  out_->flush();
}

template class Trainer<float>;
template class Trainer<double>;

}  // namespace rebot
