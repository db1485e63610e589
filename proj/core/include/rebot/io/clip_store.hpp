#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "rebot/tensor.hpp"

// Directory of numbered frames (000000.ppm or 000000.rbt, ...) with an
// optional clip.meta sidecar holding `fps=` and `frames=`.
namespace rebot::io {

inline constexpr double kDefaultFps = 30.0;
inline constexpr const char* kMetaFile = "clip.meta";

enum class FrameFormat { kPpm, kRbt };

struct Clip {
  std::vector<Tensor> frames;  // [3,H,W]
  double fps = kDefaultFps;
  FrameFormat format = FrameFormat::kPpm;
};

std::string frame_name(std::size_t index, FrameFormat format);

// True when the directory holds frame files or a clip.meta.
bool is_clip_dir(const std::filesystem::path& dir);

// The directory itself if it is a clip, otherwise its clip subdirectories
// in name order.
std::vector<std::filesystem::path> list_clips(const std::filesystem::path& root);

// Throws DataError for missing directories, empty clips, index gaps, mixed
// formats or sizes, and meta/file count disagreement.
Clip read_clip(const std::filesystem::path& dir);
void write_clip(const std::filesystem::path& dir, const Clip& clip);

}  // namespace rebot::io
