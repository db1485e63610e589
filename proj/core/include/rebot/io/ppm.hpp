#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "rebot/tensor.hpp"

// Binary 8-bit portable pixmap (P6) <-> [3,H,W] float frames in [0,1].
namespace rebot::io {

Tensor decode_ppm(std::string_view bytes);
// Values are clamped and quantized as round(v * 255).
std::string encode_ppm(const Tensor& frame);

Tensor read_ppm(const std::filesystem::path& path);
void write_ppm(const std::filesystem::path& path, const Tensor& frame);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace rebot::io
