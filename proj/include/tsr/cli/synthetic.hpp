#ifndef TSR_CLI_SYNTHETIC_HPP
#define TSR_CLI_SYNTHETIC_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace tsr {

struct SyntheticOptions {
  std::uint64_t seed = 1;
  int shape_count = 0;
  int captions_per_shape = 0;
  int point_count = 512;
  std::string out_dir;
};

struct SyntheticSummary {
  std::vector<std::string> shape_ids;
  int caption_count = 0;
};

// Writes out_dir/shapes/<id>.xyz (labeled point clouds) and
// out_dir/captions.tsv. Shapes are box assemblies — tables, chairs, and
// shelves in rotation — with randomized proportions, leg counts, board
// counts, and backrest heights; captions verbalize those same attributes.
// Identical options reproduce byte-identical files.
SyntheticSummary gen_synthetic(const SyntheticOptions& opt);

}  // namespace tsr

#endif  // TSR_CLI_SYNTHETIC_HPP
