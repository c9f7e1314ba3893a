#include <algorithm>
#include <cmath>
#include <cstddef>

#include "tsr/diff/graph.hpp"

namespace tsr {

const char* graph_op_name(int op) {
  static const char* names[] = {
      "input",        "const",      "param",
      "add",          "sub",        "mul",        "affine",
      "relu",         "tanh",       "sigmoid",    "exp",     "log",
      "matmul",
      "softmax_rows", "l2norm_rows", "layer_norm_rows",
      "sum",          "mean",       "sum_axis",   "mean_axis", "max_axis",
      "concat",       "slice_rows", "slice_cols", "reshape",
      "row_gather",   "conv2d",
  };
  constexpr int count = sizeof(names) / sizeof(names[0]);
  return (op >= 0 && op < count) ? names[op] : "?";
}

namespace {

// out(M x N) (+)= opA(A) * opB(B); trans flags select the transposed read.
// Accumulation order over k is fixed, keeping results bit-reproducible.
void mm(const double* A, int a_cols, bool ta, const double* B, int b_cols, bool tb,
        double* out, int M, int N, int K, bool accumulate) {
  if (!accumulate) std::fill(out, out + static_cast<size_t>(M) * N, 0.0);
  for (int i = 0; i < M; ++i) {
    double* orow = out + static_cast<size_t>(i) * N;
    for (int k = 0; k < K; ++k) {
      double a = ta ? A[static_cast<size_t>(k) * a_cols + i]
                    : A[static_cast<size_t>(i) * a_cols + k];
      if (a == 0.0) continue;
      if (!tb) {
        const double* brow = B + static_cast<size_t>(k) * b_cols;
        for (int j = 0; j < N; ++j) orow[j] += a * brow[j];
      } else {
        for (int j = 0; j < N; ++j) orow[j] += a * B[static_cast<size_t>(j) * b_cols + k];
      }
    }
  }
}

inline double broadcast_at(const Tensor& t, int i, int j) {
  return t.at(t.rows() == 1 ? 0 : i, t.cols() == 1 ? 0 : j);
}

// dst has the (possibly broadcast) shape of the second operand; src has the
// full output shape. Adds sign * src into dst, reducing over broadcast dims.
void reduce_add(Tensor& dst, const Tensor& src, double sign) {
  for (int i = 0; i < src.rows(); ++i)
    for (int j = 0; j < src.cols(); ++j)
      dst.at(dst.rows() == 1 ? 0 : i, dst.cols() == 1 ? 0 : j) += sign * src.at(i, j);
}

// Gathers one k x k x Cin input patch (zeros outside the image).
void gather_patch(const double* img, const Conv2dSpec& s, int oy, int ox, double* patch) {
  int base_y = oy * s.stride - s.pad;
  int base_x = ox * s.stride - s.pad;
  int idx = 0;
  for (int ky = 0; ky < s.ksize; ++ky) {
    int iy = base_y + ky;
    for (int kx = 0; kx < s.ksize; ++kx) {
      int ix = base_x + kx;
      if (iy < 0 || iy >= s.height || ix < 0 || ix >= s.width) {
        for (int c = 0; c < s.in_channels; ++c) patch[idx++] = 0.0;
      } else {
        const double* row = img + (static_cast<size_t>(iy) * s.width + ix) * s.in_channels;
        for (int c = 0; c < s.in_channels; ++c) patch[idx++] = row[c];
      }
    }
  }
}

}  // namespace

void Graph::compute(NodeId id) {
  Node& n = nodes_[id];
  switch (n.op) {
    case Op::kInput:
    case Op::kConst:
      n.has_value = true;
      return;
    case Op::kParam: {
      const Tensor& v = store_->value(n.pname);
      if (v.rows() != n.rows || v.cols() != n.cols)
        throw ShapeError(label(id) + ": parameter '" + n.pname + "' changed shape");
      n.value = v;
      n.has_value = true;
      return;
    }
    default:
      break;
  }

  for (NodeId in : n.in)
    if (!nodes_[in].has_value)
      throw ShapeError(label(id) + ": input " + label(in) + " not evaluated");

  const Tensor& x = nodes_[n.in.empty() ? id : n.in[0]].value;
  Tensor out(n.rows, n.cols, 0.0);

  switch (n.op) {
    case Op::kAdd:
    case Op::kSub:
    case Op::kMul: {
      const Tensor& b = nodes_[n.in[1]].value;
      for (int i = 0; i < n.rows; ++i)
        for (int j = 0; j < n.cols; ++j) {
          double bv = broadcast_at(b, i, j);
          double av = x.at(i, j);
          out.at(i, j) = n.op == Op::kAdd ? av + bv : n.op == Op::kSub ? av - bv : av * bv;
        }
      break;
    }
    case Op::kAffine:
      for (size_t i = 0; i < x.size(); ++i) out[i] = n.a * x[i] + n.b;
      break;
    case Op::kRelu:
      for (size_t i = 0; i < x.size(); ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
      break;
    case Op::kTanh:
      for (size_t i = 0; i < x.size(); ++i) out[i] = std::tanh(x[i]);
      break;
    case Op::kSigmoid:
      for (size_t i = 0; i < x.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-x[i]));
      break;
    case Op::kExp:
      for (size_t i = 0; i < x.size(); ++i) out[i] = std::exp(x[i]);
      break;
    case Op::kLog:
      for (size_t i = 0; i < x.size(); ++i) {
        if (x[i] <= 0.0) throw NumericError(label(id) + ": log of non-positive value");
        out[i] = std::log(x[i]);
      }
      break;
    case Op::kMatMul: {
      const Tensor& b = nodes_[n.in[1]].value;
      int K = n.trans_a ? x.rows() : x.cols();
      mm(x.data(), x.cols(), n.trans_a, b.data(), b.cols(), n.trans_b, out.data(), n.rows,
         n.cols, K, false);
      break;
    }
    case Op::kSoftmaxRows:
      for (int i = 0; i < n.rows; ++i) {
        double m = x.at(i, 0);
        for (int j = 1; j < n.cols; ++j) m = std::max(m, x.at(i, j));
        double s = 0.0;
        for (int j = 0; j < n.cols; ++j) {
          out.at(i, j) = std::exp(x.at(i, j) - m);
          s += out.at(i, j);
        }
        for (int j = 0; j < n.cols; ++j) out.at(i, j) /= s;
      }
      break;
    case Op::kL2NormRows:
      for (int i = 0; i < n.rows; ++i) {
        double s = 0.0;
        for (int j = 0; j < n.cols; ++j) s += x.at(i, j) * x.at(i, j);
        double nrm = std::sqrt(s);
        if (nrm < 1e-12) {
          for (int j = 0; j < n.cols; ++j) out.at(i, j) = x.at(i, j);
        } else {
          for (int j = 0; j < n.cols; ++j) out.at(i, j) = x.at(i, j) / nrm;
        }
      }
      break;
    case Op::kLayerNormRows:
      for (int i = 0; i < n.rows; ++i) {
        double mu = 0.0;
        for (int j = 0; j < n.cols; ++j) mu += x.at(i, j);
        mu /= n.cols;
        double var = 0.0;
        for (int j = 0; j < n.cols; ++j) {
          double d = x.at(i, j) - mu;
          var += d * d;
        }
        var /= n.cols;
        double istd = 1.0 / std::sqrt(var + n.a);
        for (int j = 0; j < n.cols; ++j) out.at(i, j) = (x.at(i, j) - mu) * istd;
      }
      break;
    case Op::kSumAll: {
      double s = 0.0;
      for (size_t i = 0; i < x.size(); ++i) s += x[i];
      out[0] = s;
      break;
    }
    case Op::kMeanAll: {
      double s = 0.0;
      for (size_t i = 0; i < x.size(); ++i) s += x[i];
      out[0] = s / static_cast<double>(x.size());
      break;
    }
    case Op::kSumAxis:
    case Op::kMeanAxis: {
      for (int i = 0; i < x.rows(); ++i)
        for (int j = 0; j < x.cols(); ++j)
          out[n.axis == 0 ? j : i] += x.at(i, j);
      if (n.op == Op::kMeanAxis) {
        double count = n.axis == 0 ? x.rows() : x.cols();
        for (size_t i = 0; i < out.size(); ++i) out[i] /= count;
      }
      break;
    }
    case Op::kMaxAxis: {
      if (n.axis == 0) {
        for (int j = 0; j < x.cols(); ++j) {
          double m = x.at(0, j);
          for (int i = 1; i < x.rows(); ++i) m = std::max(m, x.at(i, j));
          out[j] = m;
        }
      } else {
        for (int i = 0; i < x.rows(); ++i) {
          double m = x.at(i, 0);
          for (int j = 1; j < x.cols(); ++j) m = std::max(m, x.at(i, j));
          out[i] = m;
        }
      }
      break;
    }
    case Op::kConcat: {
      int off = 0;
      for (NodeId in : n.in) {
        const Tensor& part = nodes_[in].value;
        if (n.axis == 0) {
          std::copy(part.data(), part.data() + part.size(),
                    out.data() + static_cast<size_t>(off) * n.cols);
          off += part.rows();
        } else {
          for (int i = 0; i < part.rows(); ++i)
            std::copy(part.data() + static_cast<size_t>(i) * part.cols(),
                      part.data() + static_cast<size_t>(i + 1) * part.cols(),
                      out.data() + static_cast<size_t>(i) * n.cols + off);
          off += part.cols();
        }
      }
      break;
    }
    case Op::kSliceRows:
      std::copy(x.data() + static_cast<size_t>(n.start) * x.cols(),
                x.data() + static_cast<size_t>(n.start + n.len) * x.cols(), out.data());
      break;
    case Op::kSliceCols:
      for (int i = 0; i < n.rows; ++i)
        std::copy(x.data() + static_cast<size_t>(i) * x.cols() + n.start,
                  x.data() + static_cast<size_t>(i) * x.cols() + n.start + n.len,
                  out.data() + static_cast<size_t>(i) * n.len);
      break;
    case Op::kReshape:
      std::copy(x.data(), x.data() + x.size(), out.data());
      break;
    case Op::kRowGather: {
      const GatherPlan& p = *n.plan;
      for (int r = 0; r < n.rows; ++r) {
        double* orow = out.data() + static_cast<size_t>(r) * n.cols;
        for (int e = p.offsets[r]; e < p.offsets[r + 1]; ++e) {
          const double* srow = x.data() + static_cast<size_t>(p.indices[e]) * n.cols;
          double w = p.weights[e];
          for (int j = 0; j < n.cols; ++j) orow[j] += w * srow[j];
        }
      }
      break;
    }
    case Op::kConv2d: {
      const Conv2dSpec& s = *n.conv;
      const Tensor& w = nodes_[n.in[1]].value;
      int kdim = s.ksize * s.ksize * s.in_channels;
      std::vector<double> patch(kdim);
      int p = 0;
      for (int oy = 0; oy < s.out_height(); ++oy)
        for (int ox = 0; ox < s.out_width(); ++ox, ++p) {
          gather_patch(x.data(), s, oy, ox, patch.data());
          mm(patch.data(), kdim, false, w.data(), w.cols(), false,
             out.data() + static_cast<size_t>(p) * n.cols, 1, n.cols, kdim, false);
        }
      break;
    }
    default:
      throw ShapeError(label(id) + ": no forward kernel");
  }
  out.check_finite(label(id));
  n.value = std::move(out);
  n.has_value = true;
}

void Graph::backward(NodeId id) {
  Node& n = nodes_[id];
  const Tensor& dy = n.grad;
  auto needs = [&](int slot) { return nodes_[n.in[slot]].has_grad; };
  auto grad_of = [&](int slot) -> Tensor& { return nodes_[n.in[slot]].grad; };
  auto value_of = [&](int slot) -> const Tensor& { return nodes_[n.in[slot]].value; };

  switch (n.op) {
    case Op::kInput:
    case Op::kConst:
    case Op::kParam:
      return;
    case Op::kAdd:
    case Op::kSub:
      if (needs(0))
        for (size_t i = 0; i < dy.size(); ++i) grad_of(0)[i] += dy[i];
      if (needs(1)) reduce_add(grad_of(1), dy, n.op == Op::kAdd ? 1.0 : -1.0);
      return;
    case Op::kMul: {
      const Tensor& a = value_of(0);
      const Tensor& b = value_of(1);
      if (needs(0)) {
        Tensor& da = grad_of(0);
        for (int i = 0; i < n.rows; ++i)
          for (int j = 0; j < n.cols; ++j) da.at(i, j) += dy.at(i, j) * broadcast_at(b, i, j);
      }
      if (needs(1)) {
        Tensor& db = grad_of(1);
        for (int i = 0; i < n.rows; ++i)
          for (int j = 0; j < n.cols; ++j)
            db.at(db.rows() == 1 ? 0 : i, db.cols() == 1 ? 0 : j) += dy.at(i, j) * a.at(i, j);
      }
      return;
    }
    case Op::kAffine:
      if (needs(0))
        for (size_t i = 0; i < dy.size(); ++i) grad_of(0)[i] += n.a * dy[i];
      return;
    case Op::kRelu:
      if (needs(0)) {
        const Tensor& x = value_of(0);
        for (size_t i = 0; i < dy.size(); ++i)
          if (x[i] > 0.0) grad_of(0)[i] += dy[i];
      }
      return;
    case Op::kTanh:
      if (needs(0))
        for (size_t i = 0; i < dy.size(); ++i)
          grad_of(0)[i] += dy[i] * (1.0 - n.value[i] * n.value[i]);
      return;
    case Op::kSigmoid:
      if (needs(0))
        for (size_t i = 0; i < dy.size(); ++i)
          grad_of(0)[i] += dy[i] * n.value[i] * (1.0 - n.value[i]);
      return;
    case Op::kExp:
      if (needs(0))
        for (size_t i = 0; i < dy.size(); ++i) grad_of(0)[i] += dy[i] * n.value[i];
      return;
    case Op::kLog:
      if (needs(0)) {
        const Tensor& x = value_of(0);
        for (size_t i = 0; i < dy.size(); ++i) grad_of(0)[i] += dy[i] / x[i];
      }
      return;
    case Op::kMatMul: {
      const Tensor& a = value_of(0);
      const Tensor& b = value_of(1);
      int M = n.rows, N = n.cols;
      int K = n.trans_a ? a.rows() : a.cols();
      if (needs(0)) {
        Tensor& da = grad_of(0);
        if (!n.trans_a)  // dA += dY * opB(B)^T
          mm(dy.data(), N, false, b.data(), b.cols(), !n.trans_b, da.data(), M, K, N, true);
        else  // dA += opB(B) * dY^T
          mm(b.data(), b.cols(), n.trans_b, dy.data(), N, true, da.data(), K, M, N, true);
      }
      if (needs(1)) {
        Tensor& db = grad_of(1);
        if (!n.trans_b)  // dB += opA(A)^T * dY
          mm(a.data(), a.cols(), !n.trans_a, dy.data(), N, false, db.data(), K, N, M, true);
        else  // dB += dY^T * opA(A)
          mm(dy.data(), N, true, a.data(), a.cols(), n.trans_a, db.data(), N, K, M, true);
      }
      return;
    }
    case Op::kSoftmaxRows:
      if (needs(0)) {
        Tensor& dx = grad_of(0);
        for (int i = 0; i < n.rows; ++i) {
          double dot = 0.0;
          for (int j = 0; j < n.cols; ++j) dot += dy.at(i, j) * n.value.at(i, j);
          for (int j = 0; j < n.cols; ++j)
            dx.at(i, j) += n.value.at(i, j) * (dy.at(i, j) - dot);
        }
      }
      return;
    case Op::kL2NormRows:
      if (needs(0)) {
        const Tensor& x = value_of(0);
        Tensor& dx = grad_of(0);
        for (int i = 0; i < n.rows; ++i) {
          double s = 0.0;
          for (int j = 0; j < n.cols; ++j) s += x.at(i, j) * x.at(i, j);
          double nrm = std::sqrt(s);
          if (nrm < 1e-12) {
            for (int j = 0; j < n.cols; ++j) dx.at(i, j) += dy.at(i, j);
          } else {
            double dot = 0.0;
            for (int j = 0; j < n.cols; ++j) dot += dy.at(i, j) * n.value.at(i, j);
            for (int j = 0; j < n.cols; ++j)
              dx.at(i, j) += (dy.at(i, j) - n.value.at(i, j) * dot) / nrm;
          }
        }
      }
      return;
    case Op::kLayerNormRows:
      if (needs(0)) {
        const Tensor& x = value_of(0);
        Tensor& dx = grad_of(0);
        for (int i = 0; i < n.rows; ++i) {
          double mu = 0.0;
          for (int j = 0; j < n.cols; ++j) mu += x.at(i, j);
          mu /= n.cols;
          double var = 0.0;
          for (int j = 0; j < n.cols; ++j) {
            double d = x.at(i, j) - mu;
            var += d * d;
          }
          var /= n.cols;
          double istd = 1.0 / std::sqrt(var + n.a);
          double mean_dy = 0.0, mean_dyy = 0.0;
          for (int j = 0; j < n.cols; ++j) {
            mean_dy += dy.at(i, j);
            mean_dyy += dy.at(i, j) * n.value.at(i, j);
          }
          mean_dy /= n.cols;
          mean_dyy /= n.cols;
          for (int j = 0; j < n.cols; ++j)
            dx.at(i, j) += istd * (dy.at(i, j) - mean_dy - n.value.at(i, j) * mean_dyy);
        }
      }
      return;
    case Op::kSumAll:
      if (needs(0))
        for (size_t i = 0; i < grad_of(0).size(); ++i) grad_of(0)[i] += dy[0];
      return;
    case Op::kMeanAll:
      if (needs(0)) {
        double g = dy[0] / static_cast<double>(grad_of(0).size());
        for (size_t i = 0; i < grad_of(0).size(); ++i) grad_of(0)[i] += g;
      }
      return;
    case Op::kSumAxis:
    case Op::kMeanAxis:
      if (needs(0)) {
        Tensor& dx = grad_of(0);
        double scale = 1.0;
        if (n.op == Op::kMeanAxis) scale = 1.0 / (n.axis == 0 ? dx.rows() : dx.cols());
        for (int i = 0; i < dx.rows(); ++i)
          for (int j = 0; j < dx.cols(); ++j)
            dx.at(i, j) += scale * dy[n.axis == 0 ? j : i];
      }
      return;
    case Op::kMaxAxis:
      if (needs(0)) {
        const Tensor& x = value_of(0);
        Tensor& dx = grad_of(0);
        if (n.axis == 0) {
          for (int j = 0; j < x.cols(); ++j) {
            int arg = 0;
            for (int i = 1; i < x.rows(); ++i)
              if (x.at(i, j) > x.at(arg, j)) arg = i;
            dx.at(arg, j) += dy[j];
          }
        } else {
          for (int i = 0; i < x.rows(); ++i) {
            int arg = 0;
            for (int j = 1; j < x.cols(); ++j)
              if (x.at(i, j) > x.at(i, arg)) arg = j;
            dx.at(i, arg) += dy[i];
          }
        }
      }
      return;
    case Op::kConcat: {
      int off = 0;
      for (size_t s = 0; s < n.in.size(); ++s) {
        const Tensor& part = nodes_[n.in[s]].value;
        if (nodes_[n.in[s]].has_grad) {
          Tensor& dp = nodes_[n.in[s]].grad;
          if (n.axis == 0) {
            for (int i = 0; i < part.rows(); ++i)
              for (int j = 0; j < part.cols(); ++j) dp.at(i, j) += dy.at(off + i, j);
          } else {
            for (int i = 0; i < part.rows(); ++i)
              for (int j = 0; j < part.cols(); ++j) dp.at(i, j) += dy.at(i, off + j);
          }
        }
        off += n.axis == 0 ? part.rows() : part.cols();
      }
      return;
    }
    case Op::kSliceRows:
      if (needs(0)) {
        Tensor& dx = grad_of(0);
        for (int i = 0; i < n.len; ++i)
          for (int j = 0; j < n.cols; ++j) dx.at(n.start + i, j) += dy.at(i, j);
      }
      return;
    case Op::kSliceCols:
      if (needs(0)) {
        Tensor& dx = grad_of(0);
        for (int i = 0; i < n.rows; ++i)
          for (int j = 0; j < n.len; ++j) dx.at(i, n.start + j) += dy.at(i, j);
      }
      return;
    case Op::kReshape:
      if (needs(0))
        for (size_t i = 0; i < dy.size(); ++i) grad_of(0)[i] += dy[i];
      return;
    case Op::kRowGather:
      if (needs(0)) {
        const GatherPlan& p = *n.plan;
        Tensor& dx = grad_of(0);
        for (int r = 0; r < n.rows; ++r) {
          const double* drow = dy.data() + static_cast<size_t>(r) * n.cols;
          for (int e = p.offsets[r]; e < p.offsets[r + 1]; ++e) {
            double* trow = dx.data() + static_cast<size_t>(p.indices[e]) * n.cols;
            double w = p.weights[e];
            for (int j = 0; j < n.cols; ++j) trow[j] += w * drow[j];
          }
        }
      }
      return;
    case Op::kConv2d: {
      const Conv2dSpec& s = *n.conv;
      const Tensor& x = value_of(0);
      const Tensor& w = value_of(1);
      int kdim = s.ksize * s.ksize * s.in_channels;
      std::vector<double> patch(kdim);
      int p = 0;
      for (int oy = 0; oy < s.out_height(); ++oy)
        for (int ox = 0; ox < s.out_width(); ++ox, ++p) {
          const double* drow = dy.data() + static_cast<size_t>(p) * n.cols;
          if (needs(1)) {
            gather_patch(x.data(), s, oy, ox, patch.data());
            Tensor& dw = grad_of(1);
            for (int r = 0; r < kdim; ++r) {
              double pv = patch[r];
              if (pv == 0.0) continue;
              double* wrow = dw.data() + static_cast<size_t>(r) * n.cols;
              for (int co = 0; co < n.cols; ++co) wrow[co] += pv * drow[co];
            }
          }
          if (needs(0)) {
            Tensor& dx = grad_of(0);
            int base_y = oy * s.stride - s.pad;
            int base_x = ox * s.stride - s.pad;
            for (int ky = 0; ky < s.ksize; ++ky) {
              int iy = base_y + ky;
              if (iy < 0 || iy >= s.height) continue;
              for (int kx = 0; kx < s.ksize; ++kx) {
                int ix = base_x + kx;
                if (ix < 0 || ix >= s.width) continue;
                double* xrow =
                    dx.data() + (static_cast<size_t>(iy) * s.width + ix) * s.in_channels;
                const double* wbase =
                    w.data() + static_cast<size_t>((ky * s.ksize + kx) * s.in_channels) * n.cols;
                for (int ci = 0; ci < s.in_channels; ++ci) {
                  double acc = 0.0;
                  const double* wrow = wbase + static_cast<size_t>(ci) * n.cols;
                  for (int co = 0; co < n.cols; ++co) acc += wrow[co] * drow[co];
                  xrow[ci] += acc;
                }
              }
            }
          }
        }
      return;
    }
    default:
      throw ShapeError(label(id) + ": no backward kernel");
  }
}

}  // namespace tsr
