#ifndef TSR_CLI_DATASET_HPP
#define TSR_CLI_DATASET_HPP

#include <string>
#include <vector>

#include "tsr/enc/vocab.hpp"

namespace tsr {

struct ShapeEntry {
  std::string id;
  std::string cloud_path;
  std::vector<std::string> captions;
};

// A directory of labeled point clouds plus a caption table. Shapes are kept
// sorted by id; every fifth one is held out for testing (the last one when
// there are fewer than five), and the vocabulary is closed over the training
// captions only.
struct Dataset {
  std::string root;
  std::vector<ShapeEntry> shapes;
  std::vector<int> train_indices;
  std::vector<int> test_indices;
  Vocabulary vocab;

  static Dataset load(const std::string& dir);
  const std::vector<int>& split(const std::string& name) const;  // "train" | "test"
};

}  // namespace tsr

#endif  // TSR_CLI_DATASET_HPP
