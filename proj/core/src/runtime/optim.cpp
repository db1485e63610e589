#include "rebot/runtime/optim.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "rebot/errors.hpp"

namespace rebot {

void TrainConfig::validate() const {
  if (!(lr_min > 0 && lr_min < lr0)) throw UsageError("train config: need 0 < lr_min < lr0");
  if (total_steps < 0) throw UsageError("train config: total_steps must be >= 0");
  if (clip_length < 1) throw UsageError("train config: clip_length must be >= 1");
  if (bptt_window < 0 || bptt_window > clip_length) {
    throw UsageError("train config: bptt_window must be in [1, clip_length] (0 = clip_length)");
  }
  if (charbonnier_eps <= 0 || adam_eps <= 0) throw UsageError("train config: eps must be > 0");
  if (beta1 < 0 || beta1 >= 1 || beta2 < 0 || beta2 >= 1) {
    throw UsageError("train config: betas must be in [0, 1)");
  }
  if (grad_clip < 0) throw UsageError("train config: grad_clip must be >= 0");
}

int TrainConfig::effective_window(int frames) const {
  if (detach_feedback) return 1;
  return bptt_window == 0 ? frames : std::min(bptt_window, frames);
}

double lr_at(std::int64_t step, const TrainConfig& cfg) {
  if (step < 0 || step > cfg.total_steps) {
    throw UsageError("lr_at: step " + std::to_string(step) + " outside [0, " +
                     std::to_string(cfg.total_steps) + "]");
  }
  if (cfg.total_steps == 0) return cfg.lr0;
  const double phase = std::numbers::pi * static_cast<double>(step) /
                       static_cast<double>(cfg.total_steps);
  return cfg.lr_min + 0.5 * (cfg.lr0 - cfg.lr_min) * (1.0 + std::cos(phase));
}

template <typename T>
double grad_norm(const nn::ParamList<T>& params) {
  double s = 0;
  for (const auto& p : params) {
    for (T g : p.value.grad()) s += static_cast<double>(g) * g;
  }
  return std::sqrt(s);
}

template <typename T>
void adam_step(const nn::ParamList<T>& params, AdamState<T>& state, double lr,
               const TrainConfig& cfg) {
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.push_back(BasicTensor<T>::zeros(p.value.shape()));
      state.v.push_back(BasicTensor<T>::zeros(p.value.shape()));
    }
  }
  if (state.m.size() != params.size()) {
    throw UsageError("adam_step: optimizer state does not match the parameter list");
  }
  double clip = 1.0;
  if (cfg.grad_clip > 0) {
    const double norm = grad_norm(params);
    if (norm > cfg.grad_clip) clip = cfg.grad_clip / norm;
  }
  state.step += 1;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    BasicTensor<T> p = params[i].value;
    if (state.m[i].shape() != p.shape()) {
      throw UsageError("adam_step: state shape mismatch for " + params[i].name);
    }
    auto w = p.data();
    auto m = state.m[i].data();
    auto v = state.v[i].data();
    const bool has = p.has_grad();
    const auto g = p.grad();
    for (std::size_t k = 0; k < w.size(); ++k) {
      const double gk = has ? static_cast<double>(g[k]) * clip : 0.0;
      const double mk = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * gk;
      const double vk = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * gk * gk;
      m[k] = static_cast<T>(mk);
      v[k] = static_cast<T>(vk);
      w[k] = static_cast<T>(w[k] - lr * (mk / c1) / (std::sqrt(vk / c2) + cfg.adam_eps));
    }
    p.zero_grad();
  }
}

template double grad_norm(const nn::ParamList<float>&);
template double grad_norm(const nn::ParamList<double>&);
template void adam_step(const nn::ParamList<float>&, AdamState<float>&, double,
                        const TrainConfig&);
template void adam_step(const nn::ParamList<double>&, AdamState<double>&, double,
                        const TrainConfig&);

}  // namespace rebot
