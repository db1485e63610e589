#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <variant>

#include "rebot/tensor.hpp"

// "RBT1" raw tensor record: magic, u8 rank, rank x u32 LE dims, u8 dtype
// (0 = f32, 1 = f64), row-major LE payload.
namespace rebot::rbt1 {

enum class DType : std::uint8_t { kF32 = 0, kF64 = 1 };

using AnyTensor = std::variant<Tensor, TensorD>;

template <typename T>
void write(std::ostream& out, const BasicTensor<T>& tensor);
AnyTensor read_any(std::istream& in);
// Reads a record and converts to the requested precision.
template <typename T>
BasicTensor<T> read(std::istream& in);

template <typename T>
void save(const std::filesystem::path& path, const BasicTensor<T>& tensor);
template <typename T>
BasicTensor<T> load(const std::filesystem::path& path);

}  // namespace rebot::rbt1
