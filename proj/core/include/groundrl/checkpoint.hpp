#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "groundrl/copy_mixture.hpp"

namespace groundrl {

inline constexpr int kCheckpointFormatVersion = 1;

struct Checkpoint {
  Vocabulary vocab;
  PolicyParameters params;
};

// Key/value text document; doubles are written with 17 significant digits
// so a write/read cycle reproduces every bit.
std::string write_checkpoint(const Checkpoint& checkpoint);
Checkpoint read_checkpoint(std::string_view text);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace groundrl
