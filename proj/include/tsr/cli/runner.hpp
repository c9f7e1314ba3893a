#ifndef TSR_CLI_RUNNER_HPP
#define TSR_CLI_RUNNER_HPP

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "tsr/cli/config.hpp"
#include "tsr/cli/dataset.hpp"
#include "tsr/diff/params.hpp"
#include "tsr/diff/tensor.hpp"
#include "tsr/eval/metrics.hpp"

namespace tsr {

struct LoadedModel {
  ExperimentConfig config;  // enc.vocab_size already set from the vocabulary
  ParameterStore params;
  Vocabulary vocab;
};

// Reads <path> plus its side files <path>.config and <path>.vocab. A stored
// hash that disagrees with the config text is rejected, as is an embedding
// table that no longer matches the vocabulary.
LoadedModel load_model(const std::string& path);

struct EncodedGallery {
  std::vector<std::string> shape_ids;
  std::vector<Tensor> fused;  // per shape, parts x D
};
EncodedGallery encode_gallery(const Dataset& ds, const std::vector<int>& indices,
                              const ParameterStore& params, const EncoderConfig& cfg);

struct EncodedQueries {
  std::vector<std::string> tags;  // "<shape id>#<caption ordinal>"
  std::vector<int> owner;         // position of the owning shape in `indices`
  std::vector<Tensor> text;       // per caption, words x D
};
EncodedQueries encode_queries(const Dataset& ds, const std::vector<int>& indices,
                              const Vocabulary& vocab, const ParameterStore& params,
                              const EncoderConfig& cfg);

// shape x caption match scores between a gallery and a set of text embeddings
Tensor score_matrix(const std::vector<Tensor>& fused, const std::vector<Tensor>& text,
                    const MatchConfig& cfg);

// Ranking metrics for the text-to-shape direction of a shape x caption score
// matrix; `owner` maps each caption column to its gallery row.
MetricReport text_to_shape_metrics(const Tensor& scores, const std::vector<int>& owner);

struct EvalResult {
  std::map<std::string, MetricReport> directions;  // "S2T" and "T2S"
  Tensor scores;                                   // shapes x captions
  std::vector<std::string> shape_ids;
  std::vector<std::string> caption_tags;
  std::vector<int> caption_owner;
};
EvalResult evaluate_model(const LoadedModel& model, const Dataset& ds, const std::string& split);

struct RetrievalHit {
  std::string shape_id;
  double score;
};
// Ranks the split's shapes against one query text; unknown words map to the
// unknown token and are reported through `unknown_words` when non-null.
std::vector<RetrievalHit> retrieve_model(const LoadedModel& model, const Dataset& ds,
                                         const std::string& split, const std::string& text,
                                         int k, std::vector<std::string>* unknown_words);

void run_eval(const std::string& ckpt, const std::string& data_dir, const std::string& split,
              bool as_json, std::ostream& out);
void run_retrieve(const std::string& ckpt, const std::string& data_dir, const std::string& split,
                  const std::string& text, int k, std::ostream& out, std::ostream& err);
void run_inspect(const std::string& ckpt, std::ostream& out);

}  // namespace tsr

#endif  // TSR_CLI_RUNNER_HPP
