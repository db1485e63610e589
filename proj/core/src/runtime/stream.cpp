#include "rebot/runtime/stream.hpp"

#include <string>

#include "rebot/errors.hpp"
#include "rebot/ops.hpp"
#include "rebot/tape.hpp"

namespace rebot {

Bootstrap parse_bootstrap(std::string_view text) {
  if (text == "passthrough") return Bootstrap::kPassthrough;
  if (text == "ground_truth") return Bootstrap::kGroundTruth;
  throw UsageError("bootstrap must be passthrough or ground_truth, got '" + std::string(text) +
                   "'");
}

std::string_view to_string(Bootstrap mode) {
  return mode == Bootstrap::kPassthrough ? "passthrough" : "ground_truth";
}

namespace {

template <typename T>
BasicTensor<T> as_batch(const BasicTensor<T>& frame) {
  if (frame.rank() != 3 || frame.dim(0) != 3) {
    throw DimensionError("expected a [3,H,W] frame, got " + to_string(frame.shape()));
  }
  return ops::reshape(frame, {1, 3, frame.dim(1), frame.dim(2)});
}

}  // namespace

template <typename T>
StreamEnhancer<T>::StreamEnhancer(const ReBotNet<T>& model, Bootstrap mode,
                                  BasicTensor<T> reference)
    : model_(&model), mode_(mode), reference_(std::move(reference)) {
  if (mode_ == Bootstrap::kGroundTruth && !reference_.defined()) {
    throw UsageError("ground_truth bootstrap needs a reference frame");
  }
}

template <typename T>
void StreamEnhancer<T>::reset() {
  y_prev_ = {};
  frame_shape_.clear();
  frame_index_ = 0;
}

template <typename T>
BasicTensor<T> StreamEnhancer<T>::push(const BasicTensor<T>& frame) {
  NoGradScope<T> no_grad;
  if (frame_index_ == 0) {
    frame_shape_ = frame.shape();
    if (mode_ == Bootstrap::kGroundTruth) {
      if (reference_.shape() != frame.shape()) {
        throw StreamError("reference frame " + to_string(reference_.shape()) +
                          " does not match stream frames " + to_string(frame.shape()));
      }
      y_prev_ = as_batch(reference_);
    } else {
      y_prev_ = as_batch(frame);
    }
  } else if (frame.shape() != frame_shape_) {
    throw StreamError("frame " + std::to_string(frame_index_) + " has shape " +
                      to_string(frame.shape()) + ", stream started with " +
                      to_string(frame_shape_));
  }
  auto y = ops::clamp(model_->forward(y_prev_, as_batch(frame)), T(0), T(1));
  y_prev_ = y;
  ++frame_index_;
  return ops::reshape(y, frame_shape_);
}

template <typename T>
std::vector<BasicTensor<T>> enhance_offline(const ReBotNet<T>& model,
                                            const std::vector<BasicTensor<T>>& frames,
                                            Bootstrap mode, const BasicTensor<T>& reference) {
  NoGradScope<T> no_grad;
  std::vector<BasicTensor<T>> out;
  if (frames.empty()) return out;
  const Shape& shape = frames.front().shape();
  if (mode == Bootstrap::kGroundTruth && !reference.defined()) {
    throw UsageError("ground_truth bootstrap needs a reference frame");
  }
  auto y_prev = as_batch(mode == Bootstrap::kGroundTruth ? reference : frames.front());
  for (const auto& frame : frames) {
    if (frame.shape() != shape) throw StreamError("clip frames differ in shape");
    y_prev = ops::clamp(model.forward(y_prev, as_batch(frame)), T(0), T(1));
    out.push_back(ops::reshape(y_prev, shape));
  }
  return out;
}

template class StreamEnhancer<float>;
template class StreamEnhancer<double>;
template std::vector<Tensor> enhance_offline(const ReBotNet<float>&, const std::vector<Tensor>&,
                                             Bootstrap, const Tensor&);
template std::vector<TensorD> enhance_offline(const ReBotNet<double>&,
                                              const std::vector<TensorD>&, Bootstrap,
                                              const TensorD&);

}  // namespace rebot
