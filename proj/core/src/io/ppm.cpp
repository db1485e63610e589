#include "rebot/io/ppm.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>

#include "rebot/errors.hpp"

namespace rebot::io {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed: " + path.string());
}

namespace {

class HeaderReader {
 public:
  explicit HeaderReader(std::string_view bytes) : bytes_(bytes) {}

  long number() {
    skip_space_and_comments();
    std::size_t start = pos_;
    while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) ++pos_;
    if (start == pos_ || pos_ - start > 9) throw FormatError("ppm: malformed header");
    return std::stol(std::string(bytes_.substr(start, pos_ - start)));
  }

  // Exactly one whitespace byte separates the header from the raster.
  std::size_t raster_start() {
    if (pos_ >= bytes_.size() || !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
      throw FormatError("ppm: malformed header");
    }
    return pos_ + 1;
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  std::string_view bytes_;
  std::size_t pos_ = 2;
};

}  // namespace

Tensor decode_ppm(std::string_view bytes) {
  if (bytes.size() < 2 || bytes.substr(0, 2) != "P6") throw FormatError("ppm: not a P6 file");
  HeaderReader header(bytes);
  const long width = header.number();
  const long height = header.number();
  const long maxval = header.number();
  if (width <= 0 || height <= 0) throw FormatError("ppm: bad dimensions");
  if (maxval != 255) throw FormatError("ppm: only 8-bit (maxval 255) pixmaps are supported");
  const std::size_t start = header.raster_start();
  const std::size_t plane = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (bytes.size() - start < plane * 3) throw FormatError("ppm: truncated raster");

  Tensor frame({3, height, width});
  auto out = frame.data();
  const auto* raster = reinterpret_cast<const unsigned char*>(bytes.data() + start);
  for (std::size_t i = 0; i < plane; ++i) {
    for (std::size_t c = 0; c < 3; ++c) out[c * plane + i] = raster[i * 3 + c] / 255.0f;
  }
  return frame;
}

std::string encode_ppm(const Tensor& frame) {
  if (frame.rank() != 3 || frame.dim(0) != 3) {
    throw DimensionError("ppm: expected a [3,H,W] frame, got " + to_string(frame.shape()));
  }
  const std::int64_t h = frame.dim(1), w = frame.dim(2);
  const std::size_t plane = static_cast<std::size_t>(h * w);
  std::string bytes = "P6\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  const std::size_t start = bytes.size();
  bytes.resize(start + plane * 3);
  auto in = frame.data();
  for (std::size_t i = 0; i < plane; ++i) {
    for (std::size_t c = 0; c < 3; ++c) {
      const float v = std::clamp(in[c * plane + i], 0.0f, 1.0f);
      bytes[start + i * 3 + c] = static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0f)));
    }
  }
  return bytes;
}

Tensor read_ppm(const std::filesystem::path& path) {
  try {
    return decode_ppm(read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_ppm(const std::filesystem::path& path, const Tensor& frame) {
  write_file(path, encode_ppm(frame));
}

}  // namespace rebot::io
