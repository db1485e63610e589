#include "rebot/model/checkpoint.hpp"

#include <array>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>

#include "rebot/errors.hpp"

namespace rebot {
namespace {

constexpr std::array<char, 4> kMagic{'R', 'B', 'C', 'K'};

template <typename U>
void put_le(std::ostream& out, U v) {
  unsigned char bytes[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) bytes[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(U));
}

template <typename U>
U get_le(std::istream& in) {
  unsigned char bytes[sizeof(U)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(U))) {
    throw FormatError("checkpoint: truncated header");
  }
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(static_cast<U>(bytes[i]) << (8 * i));
  return v;
}

}  // namespace

const rbt1::AnyTensor* Checkpoint::find(std::string_view name) const {
  for (const auto& [n, t] : entries) {
    if (n == name) return &t;
  }
  return nullptr;
}

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
  out.write(kMagic.data(), kMagic.size());
  put_le<std::uint16_t>(out, kCheckpointVersion);
  put_le<std::uint32_t>(out, ckpt.fingerprint);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.entries.size()));
  for (const auto& [name, tensor] : ckpt.entries) {
    if (name.size() > 0xffff) throw FormatError("checkpoint: entry name too long");
    put_le<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    std::visit([&](const auto& t) { rbt1::write(out, t); }, tensor);
  }
  if (!out) throw FormatError("checkpoint: write failed");
}

Checkpoint read_checkpoint(std::istream& in) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw FormatError("checkpoint: bad magic (expected RBCK)");
  }
  const auto version = get_le<std::uint16_t>(in);
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint: unsupported version " + std::to_string(version));
  }
  Checkpoint ckpt;
  ckpt.fingerprint = get_le<std::uint32_t>(in);
  const auto count = get_le<std::uint32_t>(in);
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = get_le<std::uint16_t>(in);
    std::string name(len, '\0');
    if (!in.read(name.data(), len)) throw FormatError("checkpoint: truncated entry name");
    ckpt.entries.emplace_back(std::move(name), rbt1::read_any(in));
  }
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  write_checkpoint(out, ckpt);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  return read_checkpoint(in);
}

void expect_fingerprint(const Checkpoint& ckpt, const ModelConfig& config) {
  const auto want = fingerprint(config);
  if (ckpt.fingerprint != want) {
    char msg[160];
    std::snprintf(msg, sizeof msg,
                  "checkpoint fingerprint %08x does not match the active config (%08x, preset %s)",
                  ckpt.fingerprint, want, config.preset.c_str());
    throw CheckpointMismatch(msg);
  }
}

template <typename T>
void add_entries(Checkpoint& ckpt, const nn::ParamList<T>& tensors, std::string_view prefix) {
  for (const auto& p : tensors) {
    ckpt.entries.emplace_back(std::string(prefix) + p.name, p.value.clone());
  }
}

template <typename T>
void restore_entries(const Checkpoint& ckpt, const nn::ParamList<T>& tensors,
                     std::string_view prefix) {
  for (const auto& p : tensors) {
    const std::string name = std::string(prefix) + p.name;
    const auto* stored = ckpt.find(name);
    if (stored == nullptr) throw CheckpointMismatch("checkpoint has no entry '" + name + "'");
    std::visit(
        [&](const auto& t) {
          if (t.shape() != p.value.shape()) {
            throw CheckpointMismatch("checkpoint entry '" + name + "' has shape " +
                                     to_string(t.shape()) + ", expected " +
                                     to_string(p.value.shape()));
          }
          auto src = cast<T>(t);
          BasicTensor<T> target = p.value;  // shares storage with the model
          auto dst = target.data();
          std::copy(src.data().begin(), src.data().end(), dst.begin());
        },
        *stored);
  }
}

template <typename T>
Checkpoint snapshot(const ReBotNet<T>& model) {
  Checkpoint ckpt;
  ckpt.fingerprint = fingerprint(model.config());
  add_entries(ckpt, model.params());
  return ckpt;
}

template <typename T>
void restore(ReBotNet<T>& model, const Checkpoint& ckpt) {
  expect_fingerprint(ckpt, model.config());
  restore_entries(ckpt, model.params());
}

#define REBOT_INSTANTIATE_CKPT(T)                                                        \
  template void add_entries(Checkpoint&, const nn::ParamList<T>&, std::string_view);     \
  template void restore_entries(const Checkpoint&, const nn::ParamList<T>&,              \
                                std::string_view);                                       \
  template Checkpoint snapshot(const ReBotNet<T>&);                                      \
  template void restore(ReBotNet<T>&, const Checkpoint&);

REBOT_INSTANTIATE_CKPT(float)
REBOT_INSTANTIATE_CKPT(double)

}  // namespace rebot
