#include "rebot/io/clip_store.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <regex>
#include <sstream>

#include "rebot/errors.hpp"
#include "rebot/io/ppm.hpp"
#include "rebot/rbt1.hpp"

namespace fs = std::filesystem;

namespace rebot::io {

std::string frame_name(std::size_t index, FrameFormat format) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06zu.%s", index, format == FrameFormat::kPpm ? "ppm" : "rbt");
  return buf;
}

namespace {

const std::regex& frame_pattern() {
  static const std::regex re(R"(^(\d{6})\.(ppm|rbt)$)");
  return re;
}

struct Listing {
  std::map<std::size_t, std::pair<fs::path, FrameFormat>> frames;
  bool has_meta = false;
};

Listing scan(const fs::path& dir) {
  Listing out;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(dir, ec)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (name == kMetaFile) {
      out.has_meta = true;
      continue;
    }
    std::smatch m;
    if (std::regex_match(name, m, frame_pattern())) {
      const auto format = m[2] == "ppm" ? FrameFormat::kPpm : FrameFormat::kRbt;
      const auto index = static_cast<std::size_t>(std::stoul(m[1]));
      if (out.frames.count(index) != 0) {
        throw DataError(dir.string() + ": frame " + m[1].str() + " exists in two formats");
      }
      out.frames[index] = {entry.path(), format};
    }
  }
  return out;
}

}  // namespace

bool is_clip_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) return false;
  const auto listing = scan(dir);
  return listing.has_meta || !listing.frames.empty();
}

std::vector<fs::path> list_clips(const fs::path& root) {
  if (!fs::is_directory(root)) throw DataError("not a directory: " + root.string());
  if (is_clip_dir(root)) return {root};
  std::vector<fs::path> clips;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory() && is_clip_dir(entry.path())) clips.push_back(entry.path());
  }
  std::sort(clips.begin(), clips.end());
  return clips;
}

Clip read_clip(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DataError("clip directory not found: " + dir.string());
  const auto listing = scan(dir);
  if (listing.frames.empty()) throw DataError(dir.string() + ": no frames");

  Clip clip;
  std::int64_t meta_frames = -1;
  if (listing.has_meta) {
    std::istringstream in(read_file(dir / kMetaFile));
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      const auto eq = line.find('=');
      const std::string key = line.substr(0, eq);
      const std::string value = eq == std::string::npos ? "" : line.substr(eq + 1);
      try {
        if (key == "fps") clip.fps = std::stod(value);
        else if (key == "frames") meta_frames = std::stoll(value);
        else throw DataError(dir.string() + "/clip.meta: unknown key '" + key + "'");
      } catch (const std::logic_error&) {
        throw DataError(dir.string() + "/clip.meta: bad value in '" + line + "'");
      }
    }
  }

  std::size_t expected = 0;
  clip.format = listing.frames.begin()->second.second;
  for (const auto& [index, entry] : listing.frames) {
    if (index != expected) {
      throw DataError(dir.string() + ": frame " + frame_name(expected, entry.second) + " missing");
    }
    if (entry.second != clip.format) throw DataError(dir.string() + ": mixed frame formats");
    Tensor frame;
    try {
      frame = entry.second == FrameFormat::kPpm ? read_ppm(entry.first)
                                                : rbt1::load<float>(entry.first);
    } catch (const FormatError& e) {
      throw DataError(e.what());
    }
    if (frame.rank() != 3 || frame.dim(0) != 3) {
      throw DataError(entry.first.string() + ": expected a [3,H,W] frame");
    }
    if (!clip.frames.empty() && frame.shape() != clip.frames.front().shape()) {
      throw DataError(entry.first.string() + ": frame size differs from frame 000000");
    }
    clip.frames.push_back(std::move(frame));
    ++expected;
  }
  if (meta_frames >= 0 && static_cast<std::size_t>(meta_frames) != clip.frames.size()) {
    throw DataError(dir.string() + ": clip.meta lists " + std::to_string(meta_frames) +
                    " frames but " + std::to_string(clip.frames.size()) + " are present");
  }
  return clip;
}

void write_clip(const fs::path& dir, const Clip& clip) {
  fs::create_directories(dir);
  for (std::size_t i = 0; i < clip.frames.size(); ++i) {
    const auto path = dir / frame_name(i, clip.format);
    if (clip.format == FrameFormat::kPpm) {
      write_ppm(path, clip.frames[i]);
    } else {
      rbt1::save(path, clip.frames[i]);
    }
  }
  char meta[64];
  std::snprintf(meta, sizeof meta, "fps=%g\nframes=%zu\n", clip.fps, clip.frames.size());
  write_file(dir / kMetaFile, meta);
}

}  // namespace rebot::io
