#ifndef TSR_DIFF_GRAPH_HPP
#define TSR_DIFF_GRAPH_HPP

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "tsr/diff/params.hpp"
#include "tsr/diff/tensor.hpp"

namespace tsr {

// One output row is a weighted sum of input rows (CSR-style). Used for
// embedding lookups, interpolation and pooling with fixed index structure.
struct GatherPlan {
  std::vector<int> offsets;      // size out_rows + 1
  std::vector<int> indices;      // concatenated source row ids
  std::vector<double> weights;   // parallel to indices
  int out_rows() const { return static_cast<int>(offsets.size()) - 1; }
};

struct Conv2dSpec {
  int height = 0, width = 0;     // input spatial extents
  int in_channels = 0, out_channels = 0;
  int ksize = 3, stride = 1, pad = 0;
  int out_height() const { return (height + 2 * pad - ksize) / stride + 1; }
  int out_width() const { return (width + 2 * pad - ksize) / stride + 1; }
};

using GradMap = std::map<std::string, Tensor>;

// Append-only computation tape. Node ids are creation order, which is also a
// topological order, so evaluation and backprop are simple linear sweeps.
// Values are cached until invalidate(); parameters are re-read from the store
// on each evaluation pass. One Graph instance must not be shared across
// threads; independent instances are safe to use concurrently.
class Graph {
 public:
  using NodeId = int;

  explicit Graph(const ParameterStore* params = nullptr) : store_(params) {}

  // --- leaves ---
  NodeId input(Tensor value);
  NodeId constant(Tensor value);
  NodeId param(const std::string& name);  // cached: one node per name
  void set_input(NodeId id, Tensor value);

  // --- elementwise / affine ---
  NodeId add(NodeId a, NodeId b);   // b may broadcast: 1x1, 1xC or Rx1
  NodeId sub(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);
  NodeId affine(NodeId x, double scale, double shift = 0.0);
  NodeId relu(NodeId x);
  NodeId tanh(NodeId x);
  NodeId sigmoid(NodeId x);
  NodeId exp(NodeId x);
  NodeId log(NodeId x);

  // --- linear algebra ---
  NodeId matmul(NodeId a, NodeId b, bool trans_a = false, bool trans_b = false);

  // --- rows ---
  NodeId softmax_rows(NodeId x);
  NodeId l2_normalize_rows(NodeId x);
  NodeId layer_norm_rows(NodeId x, double eps = 1e-5);

  // --- reductions ---
  NodeId sum(NodeId x);             // 1x1
  NodeId mean(NodeId x);            // 1x1
  NodeId sum(NodeId x, int axis);   // axis 0 -> 1xC, axis 1 -> Rx1
  NodeId mean(NodeId x, int axis);
  NodeId max(NodeId x, int axis);   // ties resolve to the first occurrence

  // --- structure ---
  NodeId concat(const std::vector<NodeId>& xs, int axis);
  NodeId slice(NodeId x, int axis, int start, int len);
  NodeId reshape(NodeId x, int rows, int cols);
  NodeId row_gather(NodeId x, std::vector<int> rows);
  NodeId row_gather(NodeId x, std::shared_ptr<GatherPlan> plan);
  NodeId conv2d(NodeId image, NodeId kernel, const Conv2dSpec& spec);

  // --- execution ---
  const Tensor& evaluate(NodeId id);
  void evaluate_many(const std::vector<NodeId>& ids);
  // Reverse-mode pass from a scalar output; returns gradient per trainable
  // parameter that the output actually depends on.
  GradMap gradients(NodeId output);
  void invalidate();  // drop cached values of all non-leaf nodes

  int node_count() const { return static_cast<int>(nodes_.size()); }
  std::vector<int> node_shape(NodeId id) const;
  const ParameterStore* store() const { return store_; }

 private:
  enum class Op {
    kInput, kConst, kParam,
    kAdd, kSub, kMul, kAffine,
    kRelu, kTanh, kSigmoid, kExp, kLog,
    kMatMul,
    kSoftmaxRows, kL2NormRows, kLayerNormRows,
    kSumAll, kMeanAll, kSumAxis, kMeanAxis, kMaxAxis,
    kConcat, kSliceRows, kSliceCols, kReshape,
    kRowGather, kConv2d,
  };

  struct Node {
    Op op;
    std::vector<NodeId> in;
    int rows = 0, cols = 0;
    double a = 0.0, b = 0.0;            // affine scale/shift, layer-norm eps
    int axis = 0, start = 0, len = 0;   // reductions and slicing
    bool trans_a = false, trans_b = false;
    std::shared_ptr<GatherPlan> plan;
    std::shared_ptr<Conv2dSpec> conv;
    std::string pname;
    Tensor value;
    Tensor grad;
    bool has_value = false;
    bool has_grad = false;
    bool requires_grad = false;
  };

  NodeId push(Node n);
  Node& at(NodeId id);
  const Node& at(NodeId id) const;
  void check_id(NodeId id) const;
  std::string label(NodeId id) const;
  NodeId unary(Op op, NodeId x);
  NodeId binary(Op op, NodeId a, NodeId b);

  void compute(NodeId id);
  void backward(NodeId id);
  std::vector<char> mark_ancestors(NodeId id) const;

  std::vector<Node> nodes_;
  const ParameterStore* store_;
  std::map<std::string, NodeId> param_nodes_;
};

}  // namespace tsr

#endif  // TSR_DIFF_GRAPH_HPP
