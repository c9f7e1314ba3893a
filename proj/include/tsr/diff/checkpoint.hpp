#ifndef TSR_DIFF_CHECKPOINT_HPP
#define TSR_DIFF_CHECKPOINT_HPP

#include <cstdint>
#include <string>

#include "tsr/diff/params.hpp"

namespace tsr {

// Binary checkpoint: magic, format version, config hash, RNG seed, then the
// parameter tensors in sorted-name order with raw little-endian doubles.
// Writing the same store twice yields byte-identical files.
constexpr uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  uint32_t version = kCheckpointVersion;
  uint64_t config_hash = 0;
  uint64_t seed = 0;
  ParameterStore params;
};

void save_checkpoint(const std::string& path, const ParameterStore& params,
                     uint64_t config_hash);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace tsr

#endif  // TSR_DIFF_CHECKPOINT_HPP
