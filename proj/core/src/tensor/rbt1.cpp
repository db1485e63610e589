#include "rebot/rbt1.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "rebot/errors.hpp"

namespace rebot::rbt1 {
namespace {

constexpr std::array<char, 4> kMagic = {'R', 'B', 'T', '1'};

template <typename U>
void put_le(std::ostream& out, U value) {
  std::array<unsigned char, sizeof(U)> bytes;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    bytes[i] = static_cast<unsigned char>((value >> (8 * i)) & 0xff);
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), bytes.size());
}

template <typename U>
U get_le(std::istream& in) {
  std::array<unsigned char, sizeof(U)> bytes;
  if (!in.read(reinterpret_cast<char*>(bytes.data()), bytes.size())) {
    throw FormatError("RBT1: truncated record");
  }
  U value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) value |= static_cast<U>(bytes[i]) << (8 * i);
  return value;
}

template <typename T>
using Bits = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;

template <typename T>
constexpr DType dtype_of() {
  return sizeof(T) == 4 ? DType::kF32 : DType::kF64;
}

template <typename T>
BasicTensor<T> read_payload(std::istream& in, Shape shape) {
  BasicTensor<T> t(std::move(shape));
  for (auto& v : t.data()) v = std::bit_cast<T>(get_le<Bits<T>>(in));
  return t;
}

}  // namespace

template <typename T>
void write(std::ostream& out, const BasicTensor<T>& tensor) {
  if (!tensor.defined()) throw UsageError("RBT1: cannot write undefined tensor");
  out.write(kMagic.data(), kMagic.size());
  put_le<std::uint8_t>(out, static_cast<std::uint8_t>(tensor.rank()));
  for (auto d : tensor.shape()) put_le<std::uint32_t>(out, static_cast<std::uint32_t>(d));
  put_le<std::uint8_t>(out, static_cast<std::uint8_t>(dtype_of<T>()));
  for (T v : tensor.data()) put_le<Bits<T>>(out, std::bit_cast<Bits<T>>(v));
  if (!out) throw FormatError("RBT1: write failed");
}

AnyTensor read_any(std::istream& in) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw FormatError("RBT1: bad magic");
  }
  const auto rank = get_le<std::uint8_t>(in);
  if (rank == 0) throw FormatError("RBT1: rank must be positive");
  Shape shape(rank);
  for (auto& d : shape) {
    d = get_le<std::uint32_t>(in);
    if (d == 0) throw FormatError("RBT1: zero dimension");
  }
  const auto code = get_le<std::uint8_t>(in);
  switch (static_cast<DType>(code)) {
    case DType::kF32:
      return read_payload<float>(in, std::move(shape));
    case DType::kF64:
      return read_payload<double>(in, std::move(shape));
  }
  throw FormatError("RBT1: unknown dtype code " + std::to_string(code));
}

template <typename T>
BasicTensor<T> read(std::istream& in) {
  return std::visit([](const auto& t) { return cast<T>(t); }, read_any(in));
}

template <typename T>
void save(const std::filesystem::path& path, const BasicTensor<T>& tensor) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("RBT1: cannot open " + path.string() + " for writing");
  write(out, tensor);
}

template <typename T>
BasicTensor<T> load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("RBT1: cannot open " + path.string());
  return read<T>(in);
}

template void write(std::ostream&, const Tensor&);
template void write(std::ostream&, const TensorD&);
template Tensor read(std::istream&);
template TensorD read(std::istream&);
template void save(const std::filesystem::path&, const Tensor&);
template void save(const std::filesystem::path&, const TensorD&);
template Tensor load(const std::filesystem::path&);
template TensorD load(const std::filesystem::path&);

}  // namespace rebot::rbt1
