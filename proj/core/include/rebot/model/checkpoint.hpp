#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rebot/model/rebotnet.hpp"
#include "rebot/rbt1.hpp"

// "RBCK" bundle: magic, u16 version, u32 config fingerprint, u32 entry count,
// then per entry a u16 name length, the name bytes and an RBT1 record.
namespace rebot {

inline constexpr std::uint16_t kCheckpointVersion = 1;

struct Checkpoint {
  std::uint32_t fingerprint = 0;
  std::vector<std::pair<std::string, rbt1::AnyTensor>> entries;

  const rbt1::AnyTensor* find(std::string_view name) const;
};

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& in);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Throws CheckpointMismatch when the bundle was written for another config.
void expect_fingerprint(const Checkpoint& ckpt, const ModelConfig& config);

// Appends copies of the tensors under prefix + name.
template <typename T>
void add_entries(Checkpoint& ckpt, const nn::ParamList<T>& tensors, std::string_view prefix = "");

// Copies stored values into existing tensors of the same shape. Missing
// names or shape differences raise CheckpointMismatch.
template <typename T>
void restore_entries(const Checkpoint& ckpt, const nn::ParamList<T>& tensors,
                     std::string_view prefix = "");

template <typename T>
Checkpoint snapshot(const ReBotNet<T>& model);
template <typename T>
void restore(ReBotNet<T>& model, const Checkpoint& ckpt);

}  // namespace rebot
