#ifndef TSR_CLI_TRAINER_HPP
#define TSR_CLI_TRAINER_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "tsr/cli/config.hpp"

namespace tsr {

struct TrainOptions {
  ExperimentConfig config;
  std::string data_dir;
  std::string out_path;            // checkpoint; .config and .vocab go alongside
  std::string dump_triplets_path;  // empty disables the CSV dump
  std::ostream* log = nullptr;     // epoch lines; null runs silently
  int validate_every = 10;         // held-out check cadence in epochs; 0 = off
};

struct TrainResult {
  std::vector<double> epoch_losses;  // mean batch loss per epoch
  std::uint64_t config_hash = 0;
  int vocab_size = 0;
  int train_count = 0;
};

// Mini-batch training over the train split: every shape appears once per
// epoch with its captions rotating across epochs; both score matrices are
// mined for semi-hard triplets and their margin losses blend per the match
// config. Zero epochs writes the untouched initialization, which serves as
// the random baseline. Aborts with NumericError if a batch loss leaves the
// finite range.
TrainResult train_model(const TrainOptions& opt);

}  // namespace tsr

#endif  // TSR_CLI_TRAINER_HPP
