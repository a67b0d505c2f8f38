#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "tvinr/tensor.hpp"

namespace tvinr {

class Tape;

/// Handle to a node on a Tape.
struct Var {
  Tape* tape = nullptr;
  int id = -1;
  bool ok() const { return tape != nullptr && id >= 0; }
};

// Reverse-mode autodiff over whole tensors. A Tape records the forward pass
// in creation order; backward() walks it in reverse. One tape per loss
// evaluation; tapes are not thread-safe and are meant to be short-lived.
class Tape {
 public:
  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}

  bool grad_enabled() const { return grad_enabled_; }
  int size() const { return int(nodes_.size()); }

  // Leaves.
  Var constant(Tensor v);
  Var constant_ref(const Tensor* v);          // caller keeps v alive
  Var param(const Tensor* v, int slot);       // differentiable, external value

  // Linear algebra.
  Var matmul(Var a, Var b);                   // A(r×k) · B(k×c)
  Var matmul_nt(Var a, Var b);                // A(r×k) · B(c×k)^T
  Var transpose(Var a);
  Var reshape(Var a, int rows, int cols);
  Var slice_cols(Var a, int c0, int len);
  Var slice_rows(Var a, int r0, int len);
  Var concat_cols(const std::vector<Var>& parts);

  // Elementwise.
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, double s);
  Var add_scalar(Var a, double s);
  Var add_rowvec(Var a, Var row);             // row is 1×c, broadcast over rows
  Var relu(Var a);
  Var lrelu(Var a, double slope);
  Var gelu(Var a);
  Var tanh_(Var a);
  Var softplus(Var a);

  /// affine(x, W, b) = x·W + b with b broadcast over rows.
  Var affine(Var x, Var w, Var b) { return add_rowvec(matmul(x, w), b); }

  // Structured ops.
  Var row_softmax(Var scores, bool causal);
  Var mean_rows(Var a);                       // 1×c mean over rows

  /// Per-row layer norm with learned gain/bias (both 1×c).
  Var layer_norm_rows(Var x, Var gain, Var bias, double eps);

  /// Mean squared error over cells with nonzero mask entries. Cells with a
  /// zero mask never enter the arithmetic. mask.size() == pred elements.
  Var mse_masked(Var pred, const Tensor& target, const std::vector<std::uint8_t>& mask);

  /// KL(N(muq, diag(sigq²)) || N(mup, diag(sigp²))), all inputs 1×d.
  Var kl_diag(Var muq, Var sigq, Var mup, Var sigp);

  const Tensor& val(Var v) const;
  double scalar(Var v) const;                 // value of a 1×1 node

  /// Reverse pass from a 1×1 root. Callable once per tape.
  void backward(Var root);

  /// After backward: grad of a node, or nullptr if it never received one.
  const Tensor* grad_of(Var v) const;

  /// After backward: hand each parameter leaf's gradient to fn(slot, grad).
  void export_param_grads(const std::function<void(int, const Tensor&)>& fn) const;

 private:
  struct Node {
    Tensor value;
    const Tensor* external = nullptr;
    Tensor grad;                               // empty until touched
    bool requires_grad = false;
    int slot = -1;
    std::function<void(Tape&)> back;           // empty for leaves
  };

  std::vector<Node> nodes_;
  bool grad_enabled_;
  bool ran_backward_ = false;

  const Tensor& value_of(int id) const {
    const Node& n = nodes_[id];
    return n.external ? *n.external : n.value;
  }
  bool rg(Var v) const { return nodes_[v.id].requires_grad; }
  int push(Tensor v, bool requires_grad, std::function<void(Tape&)> back);
  Tensor& grad_buf(int id);                    // allocate-on-demand, zeroed
  void accum(int id, const Tensor& g);
  Var check(Var v) const;
  Var unary_map(Var a, double (*f)(double), double (*df)(double, double));
};

}  // namespace tvinr
