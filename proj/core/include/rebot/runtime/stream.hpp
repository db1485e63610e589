#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "rebot/model/rebotnet.hpp"

namespace rebot {

// What stands in for the previous output at the first frame.
enum class Bootstrap { kPassthrough, kGroundTruth };

Bootstrap parse_bootstrap(std::string_view text);
std::string_view to_string(Bootstrap mode);

// Frame-recurrent inference over a stream of [3,H,W] frames. Keeps only the
// previous output between calls, so memory does not grow with stream length.
template <typename T>
class StreamEnhancer {
 public:
  // In ground_truth mode `reference` ([3,H,W]) is used as y_{-1}.
  StreamEnhancer(const ReBotNet<T>& model, Bootstrap mode, BasicTensor<T> reference = {});

  // Returns y_t clamped to [0,1]. Throws StreamError if the frame size
  // differs from the first frame's.
  BasicTensor<T> push(const BasicTensor<T>& frame);

  std::int64_t frame_index() const { return frame_index_; }
  void reset();

 private:
  const ReBotNet<T>* model_;
  Bootstrap mode_;
  BasicTensor<T> reference_;
  BasicTensor<T> y_prev_;  // [1,3,H,W]
  Shape frame_shape_;
  std::int64_t frame_index_ = 0;
};

// The same recurrence written as a plain loop over a whole clip.
template <typename T>
std::vector<BasicTensor<T>> enhance_offline(const ReBotNet<T>& model,
                                            const std::vector<BasicTensor<T>>& frames,
                                            Bootstrap mode, const BasicTensor<T>& reference = {});

extern template class StreamEnhancer<float>;
extern template class StreamEnhancer<double>;

}  // namespace rebot
