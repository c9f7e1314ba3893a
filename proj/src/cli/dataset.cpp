#include "tsr/cli/dataset.hpp"

#include <filesystem>
#include <map>
#include <utility>

#include "tsr/common.hpp"

namespace tsr {

Dataset Dataset::load(const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path root(dir);
  if (!fs::is_directory(root)) throw DataError("dataset directory not found: " + dir);

  auto records = load_caption_file((root / "captions.tsv").string());
  std::map<std::string, std::vector<std::string>> by_id;
  for (auto& r : records) by_id[r.shape_id].push_back(std::move(r.text));

  Dataset ds;
  ds.root = dir;
  for (auto& [id, captions] : by_id) {
    fs::path cloud = root / "shapes" / (id + ".xyz");
    if (!fs::is_regular_file(cloud))
      throw DataError("captions reference shape '" + id + "' but " + cloud.string() +
                      " is missing");
    ds.shapes.push_back({id, cloud.string(), std::move(captions)});
  }
  if (fs::is_directory(root / "shapes"))
    for (const auto& e : fs::directory_iterator(root / "shapes")) {
      if (!e.is_regular_file() || e.path().extension() != ".xyz") continue;
      const std::string id = e.path().stem().string();
      if (!by_id.count(id)) throw DataError("shape '" + id + "' has no captions");
    }
  if (ds.shapes.size() < 1) throw DataError("dataset is empty: " + dir);

  const int n = static_cast<int>(ds.shapes.size());
  for (int i = 0; i < n; ++i) {
    const bool test = n >= 5 ? i % 5 == 4 : (n >= 2 && i == n - 1);
    (test ? ds.test_indices : ds.train_indices).push_back(i);
  }
  if (ds.train_indices.empty()) throw DataError("dataset has no training shapes");

  std::vector<std::string> train_texts;
  for (int i : ds.train_indices)
    for (const auto& t : ds.shapes[static_cast<size_t>(i)].captions) train_texts.push_back(t);
  ds.vocab = Vocabulary::build(train_texts);
  return ds;
}

const std::vector<int>& Dataset::split(const std::string& name) const {
  if (name == "train") return train_indices;
  if (name == "test") return test_indices;
  throw UsageError("unknown split '" + name + "' (expected train or test)");
}

}  // namespace tsr
