#ifndef TSR_CLI_CONFIG_HPP
#define TSR_CLI_CONFIG_HPP

#include <cstdint>
#include <string>

#include "tsr/enc/encoders.hpp"
#include "tsr/match/sinkhorn.hpp"
#include "tsr/mine/mining.hpp"

namespace tsr {

// Everything a run needs: experiment-level knobs plus the encoder, matching,
// and mining configs. `enc.vocab_size` is data-derived, so it is neither
// serialized nor part of the hash; training fills it in from the dataset.
struct ExperimentConfig {
  std::string preset = "desk";
  std::uint64_t seed = 1;
  int point_count = 512;  // synthetic sampling density
  int batch_size = 16;
  int epochs = 50;
  double learning_rate = 0.001;
  EncoderConfig enc;
  MatchConfig match;
  MiningConfig mine;

  void validate() const;

  // Canonical key = value text; parse(serialize()) reproduces the config
  // exactly, and hash() fingerprints this text (FNV-1a 64).
  std::string serialize() const;
  std::uint64_t hash() const;

  // Applies the file's preset first, then the remaining keys in file order.
  // Unknown or duplicate keys and malformed values are ConfigErrors.
  static ExperimentConfig parse(const std::string& text);
  static ExperimentConfig load(const std::string& path);
  void save(const std::string& path) const;
};

// "desk" — small dimensions that train in minutes on a CPU — or
// "paper-dims" — full-scale embedding width and sampling density.
ExperimentConfig preset_named(const std::string& name);

}  // namespace tsr

#endif  // TSR_CLI_CONFIG_HPP
