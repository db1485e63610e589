#pragma once

#include <vector>

#include "rebot/degrade/spec.hpp"
#include "rebot/tensor.hpp"

namespace rebot {

// Applies the enabled stages in the order blur, downsample, noise,
// compression, color jitter, resize back; clamps to [0,1] after each. The
// noise stream is seeded from the spec and the frame's own bytes, so equal
// frames degrade identically. An empty stage mask returns an exact copy.
Tensor degrade_frame(const Tensor& frame, const DegradationSpec& spec);

std::vector<Tensor> degrade_clip(const std::vector<Tensor>& frames, const DegradationSpec& spec);

}  // namespace rebot
