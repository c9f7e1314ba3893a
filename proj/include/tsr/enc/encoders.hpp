#ifndef TSR_ENC_ENCODERS_HPP
#define TSR_ENC_ENCODERS_HPP

#include <memory>
#include <vector>

#include "tsr/diff/graph.hpp"
#include "tsr/geom/point_cloud.hpp"
#include "tsr/geom/render.hpp"

namespace tsr {

// Architecture knobs shared by all encoders; defaults are the desk preset.
struct EncoderConfig {
  int embed_dim = 64;  // D, the common embedding width (also GRU width)
  int vocab_size = 2;  // text embedding rows; >= 2 for the reserved ids
  int max_len = 64;    // longest accepted token sequence

  // Shape path: two set-abstraction stages, propagation, segment pooling.
  int stage1_centers = 256;
  int stage2_centers = 64;
  int local_k = 8;
  int interp_k = 3;
  double interp_power = 2.0;
  double min_group_fraction = 0.01;

  // View path: ray features, conv stack, patch tokens, transformer.
  int view_count = 8;
  int image_height = 32;
  int image_width = 32;
  int start_octave = 0;
  int num_octaves = 3;
  int conv_base = 16;  // first conv width; the second conv doubles it
  int patch_size = 4;
  int depth = 2;
  int heads = 4;
  int ff_ratio = 2;

  void validate() const;

  int ray_channels() const { return 6 * num_octaves; }
  int view_channels() const { return 1 + ray_channels(); }
  // Two 3x3 stride-2 pad-1 convolutions shrink each extent x -> (x-1)/2 + 1.
  int conv_out_height() const { return (((image_height - 1) / 2 + 1) - 1) / 2 + 1; }
  int conv_out_width() const { return (((image_width - 1) / 2 + 1) - 1) / 2 + 1; }
  int patches_per_view() const {
    return (conv_out_height() / patch_size) * (conv_out_width() / patch_size);
  }
  int token_count() const { return view_count * patches_per_view(); }
};

struct ShapeEmbedding {
  Tensor part_features;       // S x D
  std::vector<int> part_ids;  // segment ids, or {0} for the global group
};

struct TokenSequence {
  std::vector<int> ids;
  int vocab_size = 0;
  void validate(int max_len) const;
};

struct TextEmbedding {
  Tensor word_vectors;  // m x D
};

struct SceneRepresentation {
  Tensor tokens;  // token_count x D
  int view_count = 0;
};

struct FusedShapeEmbedding {
  Tensor fused_features;  // S x D, nonnegative
};

// Sinusoidal ray features. For each ray component u and each octave
// o in [start_octave, start_octave + num_octaves): sin(2^o pi u) then
// cos(2^o pi u), octaves ascending, component blocks in column order.
Tensor ray_encode(const Tensor& rays, int start_octave, int num_octaves);

// Creates every learned tensor the encoders expect, seeded per name.
void init_encoder_params(ParameterStore& store, const EncoderConfig& cfg);

// Parameter-independent scaffolding for one shape's encoders. Training
// rebuilds the graphs every step, so callers that revisit a shape compute
// these once and reuse them; the single-shot overloads below prepare them
// on the fly.
struct ShapeInputs {
  Tensor desc1;                         // stage-1 center descriptors
  Tensor desc2;                         // stage-2 center descriptors
  std::shared_ptr<GatherPlan> gather2;  // stage-1 features -> stage-2 neighborhoods
  std::shared_ptr<GatherPlan> back;     // stage-2 centers -> all points
  std::shared_ptr<GatherPlan> pool;     // points -> segment groups
  std::vector<int> part_ids;
};
ShapeInputs prepare_shape_inputs(const PointCloud& cloud, const EncoderConfig& cfg);

struct ViewInputs {
  std::vector<Tensor> pixels;   // V tensors, (H*W) x view_channels
  std::vector<Tensor> cameras;  // V tensors, 1 x 6 [origin | forward]
};
ViewInputs prepare_view_inputs(const MultiViewSet& views, const EncoderConfig& cfg);

// Graph builders used by training; the plain entry points below evaluate the
// same graphs, so the two views of each encoder agree bitwise.
struct ShapeGraphResult {
  Graph::NodeId parts = -1;  // S x D
  std::vector<int> part_ids;
};
ShapeGraphResult build_shape_encoder(Graph& g, const ShapeInputs& inputs,
                                     const EncoderConfig& cfg);
ShapeGraphResult build_shape_encoder(Graph& g, const PointCloud& cloud, const EncoderConfig& cfg);

Graph::NodeId build_text_encoder(Graph& g, const TokenSequence& tokens, const EncoderConfig& cfg);

struct ViewGraphResult {
  Graph::NodeId tokens = -1;      // token_count x D after the transformer
  Graph::NodeId pre_tokens = -1;  // token_count x D before the first block
};
ViewGraphResult build_view_encoder(Graph& g, const ViewInputs& inputs, const EncoderConfig& cfg);
ViewGraphResult build_view_encoder(Graph& g, const MultiViewSet& views, const EncoderConfig& cfg);

Graph::NodeId build_fusion(Graph& g, Graph::NodeId part_features, Graph::NodeId scene_tokens,
                           const EncoderConfig& cfg);

ShapeEmbedding encode_shape(const PointCloud& cloud, const ParameterStore& params,
                            const EncoderConfig& cfg);
TextEmbedding encode_text(const TokenSequence& tokens, const ParameterStore& params,
                          const EncoderConfig& cfg);
SceneRepresentation encode_views(const MultiViewSet& views, const ParameterStore& params,
                                 const EncoderConfig& cfg);
FusedShapeEmbedding fuse(const ShapeEmbedding& shape, const SceneRepresentation& scene,
                         const ParameterStore& params, const EncoderConfig& cfg);

}  // namespace tsr

#endif  // TSR_ENC_ENCODERS_HPP
