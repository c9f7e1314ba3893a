#include "tsr/diff/graph.hpp"

#include <algorithm>

namespace tsr {

const char* graph_op_name(int op);  // see graph_kernels.cpp

Graph::NodeId Graph::push(Node n) {
  for (NodeId in : n.in) {
    check_id(in);
    if (nodes_[in].requires_grad) n.requires_grad = true;
  }
  nodes_.push_back(std::move(n));
  return static_cast<NodeId>(nodes_.size()) - 1;
}

Graph::Node& Graph::at(NodeId id) {
  check_id(id);
  return nodes_[id];
}

const Graph::Node& Graph::at(NodeId id) const {
  check_id(id);
  return nodes_[id];
}

void Graph::check_id(NodeId id) const {
  if (id < 0 || id >= static_cast<NodeId>(nodes_.size()))
    throw ShapeError("invalid node id " + std::to_string(id));
}

std::string Graph::label(NodeId id) const {
  return "node #" + std::to_string(id) + " (" +
         graph_op_name(static_cast<int>(nodes_[id].op)) + ")";
}

std::vector<int> Graph::node_shape(NodeId id) const {
  const Node& n = at(id);
  return {n.rows, n.cols};
}

// ---------------------------------------------------------------- leaves ---

Graph::NodeId Graph::input(Tensor value) {
  Node n;
  n.op = Op::kInput;
  n.rows = value.rows();
  n.cols = value.cols();
  n.value = std::move(value);
  n.has_value = true;
  return push(std::move(n));
}

Graph::NodeId Graph::constant(Tensor value) {
  Node n;
  n.op = Op::kConst;
  n.rows = value.rows();
  n.cols = value.cols();
  n.value = std::move(value);
  n.has_value = true;
  return push(std::move(n));
}

Graph::NodeId Graph::param(const std::string& name) {
  auto it = param_nodes_.find(name);
  if (it != param_nodes_.end()) return it->second;
  if (!store_) throw ConfigError("graph has no parameter store, cannot bind '" + name + "'");
  const Tensor& v = store_->value(name);  // throws if unknown
  Node n;
  n.op = Op::kParam;
  n.rows = v.rows();
  n.cols = v.cols();
  n.pname = name;
  n.requires_grad = true;
  NodeId id = push(std::move(n));
  param_nodes_[name] = id;
  return id;
}

void Graph::set_input(NodeId id, Tensor value) {
  Node& n = at(id);
  if (n.op != Op::kInput) throw ShapeError(label(id) + ": set_input on non-input node");
  if (n.rows != value.rows() || n.cols != value.cols())
    throw ShapeError(label(id) + ": set_input shape " + value.shape_str() +
                     " does not match " + n.value.shape_str());
  n.value = std::move(value);
  invalidate();
}

// -------------------------------------------------------------- builders ---

Graph::NodeId Graph::unary(Op op, NodeId x) {
  const Node& xn = at(x);
  Node n;
  n.op = op;
  n.in = {x};
  n.rows = xn.rows;
  n.cols = xn.cols;
  return push(std::move(n));
}

Graph::NodeId Graph::binary(Op op, NodeId a, NodeId b) {
  const Node& an = at(a);
  const Node& bn = at(b);
  bool same = an.rows == bn.rows && an.cols == bn.cols;
  bool bcast_scalar = bn.rows == 1 && bn.cols == 1;
  bool bcast_row = bn.rows == 1 && bn.cols == an.cols;
  bool bcast_col = bn.cols == 1 && bn.rows == an.rows;
  if (!(same || bcast_scalar || bcast_row || bcast_col))
    throw ShapeError("cannot broadcast " + bn.value.shape_str() +
                     " second operand of shape [" + std::to_string(bn.rows) + ", " +
                     std::to_string(bn.cols) + "] against [" + std::to_string(an.rows) +
                     ", " + std::to_string(an.cols) + "]");
  Node n;
  n.op = op;
  n.in = {a, b};
  n.rows = an.rows;
  n.cols = an.cols;
  return push(std::move(n));
}

Graph::NodeId Graph::add(NodeId a, NodeId b) { return binary(Op::kAdd, a, b); }
Graph::NodeId Graph::sub(NodeId a, NodeId b) { return binary(Op::kSub, a, b); }
Graph::NodeId Graph::mul(NodeId a, NodeId b) { return binary(Op::kMul, a, b); }

Graph::NodeId Graph::affine(NodeId x, double scale, double shift) {
  NodeId id = unary(Op::kAffine, x);
  nodes_[id].a = scale;
  nodes_[id].b = shift;
  return id;
}

Graph::NodeId Graph::relu(NodeId x) { return unary(Op::kRelu, x); }
Graph::NodeId Graph::tanh(NodeId x) { return unary(Op::kTanh, x); }
Graph::NodeId Graph::sigmoid(NodeId x) { return unary(Op::kSigmoid, x); }
Graph::NodeId Graph::exp(NodeId x) { return unary(Op::kExp, x); }
Graph::NodeId Graph::log(NodeId x) { return unary(Op::kLog, x); }
Graph::NodeId Graph::softmax_rows(NodeId x) { return unary(Op::kSoftmaxRows, x); }
Graph::NodeId Graph::l2_normalize_rows(NodeId x) { return unary(Op::kL2NormRows, x); }

Graph::NodeId Graph::layer_norm_rows(NodeId x, double eps) {
  if (eps <= 0) throw ConfigError("layer_norm_rows: eps must be positive");
  NodeId id = unary(Op::kLayerNormRows, x);
  nodes_[id].a = eps;
  return id;
}

Graph::NodeId Graph::matmul(NodeId a, NodeId b, bool trans_a, bool trans_b) {
  const Node& an = at(a);
  const Node& bn = at(b);
  int ar = trans_a ? an.cols : an.rows;
  int ak = trans_a ? an.rows : an.cols;
  int bk = trans_b ? bn.cols : bn.rows;
  int bc = trans_b ? bn.rows : bn.cols;
  if (ak != bk)
    throw ShapeError("matmul: inner extents " + std::to_string(ak) + " and " +
                     std::to_string(bk) + " do not match");
  Node n;
  n.op = Op::kMatMul;
  n.in = {a, b};
  n.rows = ar;
  n.cols = bc;
  n.trans_a = trans_a;
  n.trans_b = trans_b;
  return push(std::move(n));
}

Graph::NodeId Graph::sum(NodeId x) {
  NodeId id = unary(Op::kSumAll, x);
  nodes_[id].rows = 1;
  nodes_[id].cols = 1;
  return id;
}

Graph::NodeId Graph::mean(NodeId x) {
  NodeId id = unary(Op::kMeanAll, x);
  nodes_[id].rows = 1;
  nodes_[id].cols = 1;
  return id;
}

static void check_axis(int axis) {
  if (axis != 0 && axis != 1)
    throw ShapeError("axis must be 0 or 1, got " + std::to_string(axis));
}

// The axis reductions copy the source extents before unary() — push() can
// reallocate nodes_, so references into it must not outlive node creation.
Graph::NodeId Graph::sum(NodeId x, int axis) {
  check_axis(axis);
  const int xr = at(x).rows, xc = at(x).cols;
  NodeId id = unary(Op::kSumAxis, x);
  nodes_[id].axis = axis;
  nodes_[id].rows = axis == 0 ? 1 : xr;
  nodes_[id].cols = axis == 0 ? xc : 1;
  return id;
}

Graph::NodeId Graph::mean(NodeId x, int axis) {
  check_axis(axis);
  const int xr = at(x).rows, xc = at(x).cols;
  NodeId id = unary(Op::kMeanAxis, x);
  nodes_[id].axis = axis;
  nodes_[id].rows = axis == 0 ? 1 : xr;
  nodes_[id].cols = axis == 0 ? xc : 1;
  return id;
}

Graph::NodeId Graph::max(NodeId x, int axis) {
  check_axis(axis);
  const int xr = at(x).rows, xc = at(x).cols;
  NodeId id = unary(Op::kMaxAxis, x);
  nodes_[id].axis = axis;
  nodes_[id].rows = axis == 0 ? 1 : xr;
  nodes_[id].cols = axis == 0 ? xc : 1;
  return id;
}

Graph::NodeId Graph::concat(const std::vector<NodeId>& xs, int axis) {
  check_axis(axis);
  if (xs.empty()) throw ShapeError("concat: need at least one input");
  const Node& first = at(xs[0]);
  int rows = first.rows, cols = first.cols;
  for (size_t i = 1; i < xs.size(); ++i) {
    const Node& n = at(xs[i]);
    if (axis == 0) {
      if (n.cols != cols)
        throw ShapeError("concat axis 0: column extents differ (" + std::to_string(cols) +
                         " vs " + std::to_string(n.cols) + ")");
      rows += n.rows;
    } else {
      if (n.rows != rows)
        throw ShapeError("concat axis 1: row extents differ (" + std::to_string(rows) +
                         " vs " + std::to_string(n.rows) + ")");
      cols += n.cols;
    }
  }
  Node n;
  n.op = Op::kConcat;
  n.in = xs;
  n.axis = axis;
  n.rows = rows;
  n.cols = cols;
  return push(std::move(n));
}

Graph::NodeId Graph::slice(NodeId x, int axis, int start, int len) {
  check_axis(axis);
  const Node& xn = at(x);
  int extent = axis == 0 ? xn.rows : xn.cols;
  if (start < 0 || len <= 0 || start + len > extent)
    throw ShapeError("slice: range [" + std::to_string(start) + ", " +
                     std::to_string(start + len) + ") out of bounds for extent " +
                     std::to_string(extent));
  Node n;
  n.op = axis == 0 ? Op::kSliceRows : Op::kSliceCols;
  n.in = {x};
  n.start = start;
  n.len = len;
  n.rows = axis == 0 ? len : xn.rows;
  n.cols = axis == 0 ? xn.cols : len;
  return push(std::move(n));
}

Graph::NodeId Graph::reshape(NodeId x, int rows, int cols) {
  const Node& xn = at(x);
  if (rows <= 0 || cols <= 0 ||
      static_cast<long long>(rows) * cols != static_cast<long long>(xn.rows) * xn.cols)
    throw ShapeError("reshape: cannot view [" + std::to_string(xn.rows) + ", " +
                     std::to_string(xn.cols) + "] as [" + std::to_string(rows) + ", " +
                     std::to_string(cols) + "]");
  Node n;
  n.op = Op::kReshape;
  n.in = {x};
  n.rows = rows;
  n.cols = cols;
  return push(std::move(n));
}

Graph::NodeId Graph::row_gather(NodeId x, std::vector<int> rows) {
  auto plan = std::make_shared<GatherPlan>();
  plan->offsets.reserve(rows.size() + 1);
  plan->offsets.push_back(0);
  for (int r : rows) {
    plan->indices.push_back(r);
    plan->weights.push_back(1.0);
    plan->offsets.push_back(static_cast<int>(plan->indices.size()));
  }
  return row_gather(x, std::move(plan));
}

Graph::NodeId Graph::row_gather(NodeId x, std::shared_ptr<GatherPlan> plan) {
  const Node& xn = at(x);
  if (!plan || plan->offsets.empty() || plan->offsets.front() != 0 ||
      plan->offsets.back() != static_cast<int>(plan->indices.size()) ||
      plan->indices.size() != plan->weights.size())
    throw ShapeError("row_gather: malformed plan");
  for (int idx : plan->indices)
    if (idx < 0 || idx >= xn.rows)
      throw ShapeError("row_gather: source row " + std::to_string(idx) +
                       " out of bounds for " + std::to_string(xn.rows) + " rows");
  Node n;
  n.op = Op::kRowGather;
  n.in = {x};
  n.rows = plan->out_rows();
  n.cols = xn.cols;
  n.plan = std::move(plan);
  if (n.rows <= 0) throw ShapeError("row_gather: plan produces no rows");
  return push(std::move(n));
}

Graph::NodeId Graph::conv2d(NodeId image, NodeId kernel, const Conv2dSpec& spec) {
  const Node& img = at(image);
  const Node& ker = at(kernel);
  if (spec.height <= 0 || spec.width <= 0 || spec.ksize <= 0 || spec.stride <= 0 ||
      spec.pad < 0 || spec.in_channels <= 0 || spec.out_channels <= 0)
    throw ConfigError("conv2d: invalid spec");
  if (img.rows != spec.height * spec.width || img.cols != spec.in_channels)
    throw ShapeError("conv2d: image shape [" + std::to_string(img.rows) + ", " +
                     std::to_string(img.cols) + "] does not match spec " +
                     std::to_string(spec.height) + "x" + std::to_string(spec.width) + "x" +
                     std::to_string(spec.in_channels));
  if (ker.rows != spec.ksize * spec.ksize * spec.in_channels || ker.cols != spec.out_channels)
    throw ShapeError("conv2d: kernel shape [" + std::to_string(ker.rows) + ", " +
                     std::to_string(ker.cols) + "] does not match spec");
  if (spec.out_height() <= 0 || spec.out_width() <= 0)
    throw ShapeError("conv2d: output would be empty");
  Node n;
  n.op = Op::kConv2d;
  n.in = {image, kernel};
  n.rows = spec.out_height() * spec.out_width();
  n.cols = spec.out_channels;
  n.conv = std::make_shared<Conv2dSpec>(spec);
  return push(std::move(n));
}

// ------------------------------------------------------------- execution ---

std::vector<char> Graph::mark_ancestors(NodeId id) const {
  std::vector<char> mark(nodes_.size(), 0);
  std::vector<NodeId> stack = {id};
  mark[id] = 1;
  while (!stack.empty()) {
    NodeId cur = stack.back();
    stack.pop_back();
    for (NodeId in : nodes_[cur].in) {
      if (!mark[in]) {
        mark[in] = 1;
        stack.push_back(in);
      }
    }
  }
  return mark;
}

const Tensor& Graph::evaluate(NodeId id) {
  evaluate_many({id});
  return nodes_[id].value;
}

void Graph::evaluate_many(const std::vector<NodeId>& ids) {
  std::vector<char> needed(nodes_.size(), 0);
  for (NodeId id : ids) {
    check_id(id);
    std::vector<char> m = mark_ancestors(id);
    for (size_t i = 0; i < m.size(); ++i) needed[i] |= m[i];
  }
  for (NodeId i = 0; i < static_cast<NodeId>(nodes_.size()); ++i)
    if (needed[i] && !nodes_[i].has_value) compute(i);
}

void Graph::invalidate() {
  for (Node& n : nodes_) {
    if (n.op == Op::kInput || n.op == Op::kConst) continue;
    n.has_value = false;
  }
}

GradMap Graph::gradients(NodeId output) {
  evaluate(output);
  Node& out = nodes_[output];
  if (out.rows != 1 || out.cols != 1)
    throw ShapeError(label(output) + ": gradients need a scalar output, got [" +
                     std::to_string(out.rows) + ", " + std::to_string(out.cols) + "]");
  GradMap result;
  if (!out.requires_grad) return result;  // no parameter dependency

  std::vector<char> anc = mark_ancestors(output);
  std::vector<char> active(nodes_.size(), 0);
  for (size_t i = 0; i < nodes_.size(); ++i)
    active[i] = anc[i] && nodes_[i].requires_grad;

  for (size_t i = 0; i < nodes_.size(); ++i) {
    if (active[i]) {
      nodes_[i].grad = Tensor(nodes_[i].rows, nodes_[i].cols, 0.0);
      nodes_[i].has_grad = true;
    }
  }
  out.grad[0] = 1.0;
  for (NodeId i = output; i >= 0; --i)
    if (active[i]) backward(i);

  for (const auto& [name, id] : param_nodes_)
    if (active[id]) result.emplace(name, std::move(nodes_[id].grad));
  for (Node& n : nodes_) {
    n.has_grad = false;
    n.grad = Tensor();
  }
  return result;
}

}  // namespace tsr
