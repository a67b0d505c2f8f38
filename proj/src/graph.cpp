#include "tvinr/graph.hpp"

#include <cmath>
#include <cstring>

#include "tvinr/activations.hpp"
#include "tvinr/errors.hpp"
#include "tvinr/kernels.hpp"

namespace tvinr {

int Tape::push(Tensor v, bool requires_grad, std::function<void(Tape&)> back) {
  Node n;
  n.value = std::move(v);
  n.requires_grad = requires_grad && grad_enabled_;
  if (n.requires_grad) n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return int(nodes_.size()) - 1;
}

Tensor& Tape::grad_buf(int id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) {
    const Tensor& v = value_of(id);
    n.grad = Tensor(v.rows(), v.cols());
  }
  return n.grad;
}

void Tape::accum(int id, const Tensor& g) {
  if (!nodes_[id].requires_grad) return;
  Tensor& buf = grad_buf(id);
  kernels::backend().add(buf.size(), buf.data(), g.data(), buf.data());
}

Var Tape::check(Var v) const {
  if (v.tape != this || v.id < 0 || v.id >= int(nodes_.size()))
    throw std::logic_error("Var does not belong to this tape");
  return v;
}

Var Tape::constant(Tensor v) {
  return {this, push(std::move(v), false, nullptr)};
}

Var Tape::constant_ref(const Tensor* v) {
  Node n;
  n.external = v;
  nodes_.push_back(std::move(n));
  return {this, int(nodes_.size()) - 1};
}

Var Tape::param(const Tensor* v, int slot) {
  Node n;
  n.external = v;
  n.requires_grad = grad_enabled_;
  n.slot = slot;
  nodes_.push_back(std::move(n));
  return {this, int(nodes_.size()) - 1};
}

const Tensor& Tape::val(Var v) const { return value_of(check(v).id); }

double Tape::scalar(Var v) const {
  const Tensor& t = val(v);
  if (t.rows() != 1 || t.cols() != 1) throw ShapeError("scalar() on non-1x1 node");
  return t[0];
}

Var Tape::matmul(Var a, Var b) {
  check(a);
  check(b);
  const Tensor& A = value_of(a.id);
  const Tensor& B = value_of(b.id);
  if (A.cols() != B.rows())
    throw ShapeError("matmul " + shape_str(A) + " * " + shape_str(B));
  Tensor C(A.rows(), B.cols());
  kernels::gemm_nn(A.data(), A.rows(), A.cols(), B.data(), B.cols(), C.data(), false);
  int ai = a.id, bi = b.id;
  int out = push(std::move(C), rg(a) || rg(b), nullptr);
  if (nodes_[out].requires_grad)
    nodes_[out].back = [ai, bi, out](Tape& t) {
      const Tensor& g = t.nodes_[out].grad;
      const Tensor& A2 = t.value_of(ai);
      const Tensor& B2 = t.value_of(bi);
      if (t.nodes_[ai].requires_grad) {
        Tensor& ga = t.grad_buf(ai);  // dA += g · B^T
        kernels::gemm_nt(g.data(), g.rows(), g.cols(), B2.data(), B2.rows(), ga.data(), true);
      }
      if (t.nodes_[bi].requires_grad) {
        Tensor& gb = t.grad_buf(bi);  // dB += A^T · g
        kernels::gemm_tn(A2.data(), A2.rows(), A2.cols(), g.data(), g.cols(), gb.data(), true);
      }
    };
  return {this, out};
}

Var Tape::matmul_nt(Var a, Var b) {
  check(a);
  check(b);
  const Tensor& A = value_of(a.id);
  const Tensor& B = value_of(b.id);
  if (A.cols() != B.cols())
    throw ShapeError("matmul_nt " + shape_str(A) + " * " + shape_str(B) + "^T");
  Tensor C(A.rows(), B.rows());
  kernels::gemm_nt(A.data(), A.rows(), A.cols(), B.data(), B.rows(), C.data(), false);
  int ai = a.id, bi = b.id;
  int out = push(std::move(C), rg(a) || rg(b), nullptr);
  if (nodes_[out].requires_grad)
    nodes_[out].back = [ai, bi, out](Tape& t) {
      const Tensor& g = t.nodes_[out].grad;   // r×br
      const Tensor& A2 = t.value_of(ai);
      const Tensor& B2 = t.value_of(bi);
      if (t.nodes_[ai].requires_grad) {
        Tensor& ga = t.grad_buf(ai);  // dA += g · B
        kernels::gemm_nn(g.data(), g.rows(), g.cols(), B2.data(), B2.cols(), ga.data(), true);
      }
      if (t.nodes_[bi].requires_grad) {
        Tensor& gb = t.grad_buf(bi);  // dB += g^T · A
        kernels::gemm_tn(g.data(), g.rows(), g.cols(), A2.data(), A2.cols(), gb.data(), true);
      }
    };
  return {this, out};
}

Var Tape::transpose(Var a) {
  check(a);
  const Tensor& A = value_of(a.id);
  Tensor T(A.cols(), A.rows());
  for (int i = 0; i < A.rows(); ++i)
    for (int j = 0; j < A.cols(); ++j) T.at(j, i) = A.at(i, j);
  int ai = a.id;
  int out = push(std::move(T), rg(a), nullptr);
  if (nodes_[out].requires_grad)
    nodes_[out].back = [ai, out](Tape& t) {
      const Tensor& g = t.nodes_[out].grad;
      Tensor& ga = t.grad_buf(ai);
      for (int i = 0; i < g.rows(); ++i)
        for (int j = 0; j < g.cols(); ++j) ga.at(j, i) += g.at(i, j);
    };
  return {this, out};
}

Var Tape::reshape(Var a, int rows, int cols) {
  check(a);
  const Tensor& A = value_of(a.id);
  if (size_t(rows) * cols != A.size())
    throw ShapeError("reshape " + shape_str(A) + " to " + std::to_string(rows) + "x" +
                     std::to_string(cols));
  Tensor R(rows, cols);
  std::memcpy(R.data(), A.data(), A.size() * sizeof(double));
  int ai = a.id;
  int out = push(std::move(R), rg(a), nullptr);
  if (nodes_[out].requires_grad)
    nodes_[out].back = [ai, out](Tape& t) {
      const Tensor& g = t.nodes_[out].grad;
      Tensor& ga = t.grad_buf(ai);
      kernels::backend().add(ga.size(), ga.data(), g.data(), ga.data());
    };
  return {this, out};
}

Var Tape::slice_cols(Var a, int c0, int len) {
  check(a);
  const Tensor& A = value_of(a.id);
  if (c0 < 0 || len < 0 || c0 + len > A.cols()) throw ShapeError("slice_cols out of range");
  Tensor S(A.rows(), len);
  for (int i = 0; i < A.rows(); ++i)
    std::memcpy(S.row(i), A.row(i) + c0, size_t(len) * sizeof(double));
  int ai = a.id;
  int out = push(std::move(S), rg(a), nullptr);
  if (nodes_[out].requires_grad)
    nodes_[out].back = [ai, out, c0, len](Tape& t) {
      const Tensor& g = t.nodes_[out].grad;
      Tensor& ga = t.grad_buf(ai);
      for (int i = 0; i < g.rows(); ++i)
        kernels::backend().add(len, ga.row(i) + c0, g.row(i), ga.row(i) + c0);
    };
  return {this, out};
}

Var Tape::slice_rows(Var a, int r0, int len) {
  check(a);
  const Tensor& A = value_of(a.id);
  if (r0 < 0 || len < 0 || r0 + len > A.rows()) throw ShapeError("slice_rows out of range");
  Tensor S(len, A.cols());
  std::memcpy(S.data(), A.row(r0), size_t(len) * A.cols() * sizeof(double));
  int ai = a.id;
  int out = push(std::move(S), rg(a), nullptr);
  if (nodes_[out].requires_grad)
    nodes_[out].back = [ai, out, r0](Tape& t) {
      const Tensor& g = t.nodes_[out].grad;
      Tensor& ga = t.grad_buf(ai);
      kernels::backend().add(g.size(), ga.row(r0), g.data(), ga.row(r0));
    };
  return {this, out};
}

Var Tape::concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols of nothing");
  int rows = -1, cols = 0;
  bool any_rg = false;
  for (Var p : parts) {
    check(p);
    const Tensor& t = value_of(p.id);
    if (rows < 0) rows = t.rows();
    if (t.rows() != rows) throw ShapeError("concat_cols row mismatch");
    cols += t.cols();
    any_rg = any_rg || rg(p);
  }
  Tensor C(rows, cols);
  int off = 0;
  for (Var p : parts) {
    const Tensor& t = value_of(p.id);
    for (int i = 0; i < rows; ++i)
      std::memcpy(C.row(i) + off, t.row(i), size_t(t.cols()) * sizeof(double));
    off += t.cols();
  }
  std::vector<int> ids;
  ids.reserve(parts.size());
  for (Var p : parts) ids.push_back(p.id);
  int out = push(std::move(C), any_rg, nullptr);
  if (nodes_[out].requires_grad)
    nodes_[out].back = [ids, out](Tape& t) {
      const Tensor& g = t.nodes_[out].grad;
      int o = 0;
      for (int pid : ids) {
        const Tensor& pv = t.value_of(pid);
        if (t.nodes_[pid].requires_grad) {
          Tensor& gp = t.grad_buf(pid);
          for (int i = 0; i < g.rows(); ++i)
            kernels::backend().add(pv.cols(), gp.row(i), g.row(i) + o, gp.row(i));
        }
        o += pv.cols();
      }
    };
  return {this, out};
}

Var Tape::add(Var a, Var b) {
  check(a);
  check(b);
  const Tensor& A = value_of(a.id);
  const Tensor& B = value_of(b.id);
  if (!A.same_shape(B)) throw ShapeError("add " + shape_str(A) + " + " + shape_str(B));
  Tensor C(A.rows(), A.cols());
  kernels::backend().add(A.size(), A.data(), B.data(), C.data());
  int ai = a.id, bi = b.id;
  int out = push(std::move(C), rg(a) || rg(b), nullptr);
  if (nodes_[out].requires_grad)
    nodes_[out].back = [ai, bi, out](Tape& t) {
      const Tensor& g = t.nodes_[out].grad;
      t.accum(ai, g);
      t.accum(bi, g);
    };
  return {this, out};
}

Var Tape::sub(Var a, Var b) {
  check(a);
  check(b);
  const Tensor& A = value_of(a.id);
  const Tensor& B = value_of(b.id);
  if (!A.same_shape(B)) throw ShapeError("sub " + shape_str(A) + " - " + shape_str(B));
  Tensor C(A.rows(), A.cols());
  kernels::backend().sub(A.size(), A.data(), B.data(), C.data());
  int ai = a.id, bi = b.id;
  int out = push(std::move(C), rg(a) || rg(b), nullptr);
  if (nodes_[out].requires_grad)
    nodes_[out].back = [ai, bi, out](Tape& t) {
      const Tensor& g = t.nodes_[out].grad;
      t.accum(ai, g);
      if (t.nodes_[bi].requires_grad) {
        Tensor neg(g.rows(), g.cols());
        kernels::backend().scale(g.size(), -1.0, g.data(), neg.data());
        t.accum(bi, neg);
      }
    };
  return {this, out};
}

Var Tape::mul(Var a, Var b) {
  check(a);
  check(b);
  const Tensor& A = value_of(a.id);
  const Tensor& B = value_of(b.id);
  if (!A.same_shape(B)) throw ShapeError("mul " + shape_str(A) + " * " + shape_str(B));
  Tensor C(A.rows(), A.cols());
  kernels::backend().mul(A.size(), A.data(), B.data(), C.data());
  int ai = a.id, bi = b.id;
  int out = push(std::move(C), rg(a) || rg(b), nullptr);
  if (nodes_[out].requires_grad)
    nodes_[out].back = [ai, bi, out](Tape& t) {
      const Tensor& g = t.nodes_[out].grad;
      const Tensor& A2 = t.value_of(ai);
      const Tensor& B2 = t.value_of(bi);
      if (t.nodes_[ai].requires_grad) {
        Tensor ga(g.rows(), g.cols());
        kernels::backend().mul(g.size(), g.data(), B2.data(), ga.data());
        t.accum(ai, ga);
      }
      if (t.nodes_[bi].requires_grad) {
        Tensor gb(g.rows(), g.cols());
        kernels::backend().mul(g.size(), g.data(), A2.data(), gb.data());
        t.accum(bi, gb);
      }
    };
  return {this, out};
}

Var Tape::scale(Var a, double s) {
  check(a);
  const Tensor& A = value_of(a.id);
  Tensor C(A.rows(), A.cols());
  kernels::backend().scale(A.size(), s, A.data(), C.data());
  int ai = a.id;
  int out = push(std::move(C), rg(a), nullptr);
  if (nodes_[out].requires_grad)
    nodes_[out].back = [ai, out, s](Tape& t) {
      const Tensor& g = t.nodes_[out].grad;
      Tensor& ga = t.grad_buf(ai);
      kernels::backend().axpy(g.size(), s, g.data(), ga.data());
    };
  return {this, out};
}

Var Tape::add_scalar(Var a, double s) {
  check(a);
  const Tensor& A = value_of(a.id);
  Tensor C(A.rows(), A.cols());
  for (std::size_t i = 0; i < A.size(); ++i) C[i] = A[i] + s;
  int ai = a.id;
  int out = push(std::move(C), rg(a), nullptr);
  if (nodes_[out].requires_grad)
    nodes_[out].back = [ai, out](Tape& t) { t.accum(ai, t.nodes_[out].grad); };
  return {this, out};
}

Var Tape::add_rowvec(Var a, Var row) {
  check(a);
  check(row);
  const Tensor& A = value_of(a.id);
  const Tensor& R = value_of(row.id);
  if (R.rows() != 1 || R.cols() != A.cols())
    throw ShapeError("add_rowvec " + shape_str(A) + " + " + shape_str(R));
  Tensor C(A.rows(), A.cols());
  for (int i = 0; i < A.rows(); ++i)
    kernels::backend().add(A.cols(), A.row(i), R.data(), C.row(i));
  int ai = a.id, ri = row.id;
  int out = push(std::move(C), rg(a) || rg(row), nullptr);
  if (nodes_[out].requires_grad)
    nodes_[out].back = [ai, ri, out](Tape& t) {
      const Tensor& g = t.nodes_[out].grad;
      t.accum(ai, g);
      if (t.nodes_[ri].requires_grad) {
        Tensor& gr = t.grad_buf(ri);
        for (int i = 0; i < g.rows(); ++i)
          kernels::backend().add(g.cols(), gr.data(), g.row(i), gr.data());
      }
    };
  return {this, out};
}

Var Tape::unary_map(Var a, double (*f)(double), double (*df)(double, double)) {
  check(a);
  const Tensor& A = value_of(a.id);
  Tensor C(A.rows(), A.cols());
  for (std::size_t i = 0; i < A.size(); ++i) C[i] = f(A[i]);
  int ai = a.id;
  int out = push(std::move(C), rg(a), nullptr);
  if (nodes_[out].requires_grad)
    nodes_[out].back = [ai, out, df](Tape& t) {
      const Tensor& g = t.nodes_[out].grad;
      const Tensor& x = t.value_of(ai);
      const Tensor& y = t.value_of(out);
      Tensor& ga = t.grad_buf(ai);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * df(x[i], y[i]);
    };
  return {this, out};
}

Var Tape::relu(Var a) {
  return unary_map(
      a, [](double x) { return act_relu(x); },
      [](double x, double) { return act_relu_d(x); });
}

Var Tape::lrelu(Var a, double slope) {
  check(a);
  const Tensor& A = value_of(a.id);
  Tensor C(A.rows(), A.cols());
  for (std::size_t i = 0; i < A.size(); ++i) C[i] = A[i] > 0.0 ? A[i] : slope * A[i];
  int ai = a.id;
  int out = push(std::move(C), rg(a), nullptr);
  if (nodes_[out].requires_grad)
    nodes_[out].back = [ai, out, slope](Tape& t) {
      const Tensor& g = t.nodes_[out].grad;
      const Tensor& x = t.value_of(ai);
      Tensor& ga = t.grad_buf(ai);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (x[i] > 0.0 ? 1.0 : slope);
    };
  return {this, out};
}

Var Tape::gelu(Var a) {
  return unary_map(
      a, [](double x) { return act_gelu(x); },
      [](double x, double) { return act_gelu_d(x); });
}

Var Tape::tanh_(Var a) {
  return unary_map(
      a, [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

Var Tape::softplus(Var a) {
  return unary_map(
      a,
      [](double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); },
      [](double x, double) { return x > 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); });
}

Var Tape::row_softmax(Var scores, bool causal) {
  check(scores);
  const Tensor& S = value_of(scores.id);
  if (causal && S.rows() != S.cols()) throw ShapeError("causal softmax needs square scores");
  Tensor P(S.rows(), S.cols());
  for (int i = 0; i < S.rows(); ++i) {
    const int limit = causal ? i + 1 : S.cols();
    double m = S.at(i, 0);
    for (int j = 1; j < limit; ++j) m = std::max(m, S.at(i, j));
    double z = 0.0;
    for (int j = 0; j < limit; ++j) {
      const double e = std::exp(S.at(i, j) - m);
      P.at(i, j) = e;
      z += e;
    }
    const double inv = 1.0 / z;
    for (int j = 0; j < limit; ++j) P.at(i, j) *= inv;
    for (int j = limit; j < S.cols(); ++j) P.at(i, j) = 0.0;
  }
  int si = scores.id;
  int out = push(std::move(P), rg(scores), nullptr);
  if (nodes_[out].requires_grad)
    nodes_[out].back = [si, out, causal](Tape& t) {
      const Tensor& g = t.nodes_[out].grad;
      const Tensor& p = t.value_of(out);
      Tensor& gs = t.grad_buf(si);
      for (int i = 0; i < p.rows(); ++i) {
        const int limit = causal ? i + 1 : p.cols();
        double inner = 0.0;
        for (int j = 0; j < limit; ++j) inner += g.at(i, j) * p.at(i, j);
        for (int j = 0; j < limit; ++j)
          gs.at(i, j) += p.at(i, j) * (g.at(i, j) - inner);
      }
    };
  return {this, out};
}

Var Tape::mean_rows(Var a) {
  check(a);
  const Tensor& A = value_of(a.id);
  if (A.rows() < 1) throw ShapeError("mean_rows of empty tensor");
  Tensor M(1, A.cols());
  for (int i = 0; i < A.rows(); ++i)
    kernels::backend().add(A.cols(), M.data(), A.row(i), M.data());
  const double inv = 1.0 / A.rows();
  kernels::backend().scale(M.size(), inv, M.data(), M.data());
  int ai = a.id;
  int out = push(std::move(M), rg(a), nullptr);
  if (nodes_[out].requires_grad)
    nodes_[out].back = [ai, out, inv](Tape& t) {
      const Tensor& g = t.nodes_[out].grad;
      Tensor& ga = t.grad_buf(ai);
      for (int i = 0; i < ga.rows(); ++i)
        kernels::backend().axpy(g.cols(), inv, g.data(), ga.row(i));
    };
  return {this, out};
}

Var Tape::layer_norm_rows(Var x, Var gain, Var bias, double eps) {
  check(x);
  check(gain);
  check(bias);
  const Tensor& X = value_of(x.id);
  const Tensor& G = value_of(gain.id);
  const Tensor& B = value_of(bias.id);
  const int c = X.cols();
  if (G.rows() != 1 || G.cols() != c || B.rows() != 1 || B.cols() != c)
    throw ShapeError("layer_norm gain/bias must be 1x" + std::to_string(c));
  Tensor Y(X.rows(), c);
  for (int i = 0; i < X.rows(); ++i) {
    const double* xr = X.row(i);
    double mu = 0.0;
    for (int j = 0; j < c; ++j) mu += xr[j];
    mu /= c;
    double var = 0.0;
    for (int j = 0; j < c; ++j) {
      const double d = xr[j] - mu;
      var += d * d;
    }
    var /= c;
    const double inv = 1.0 / std::sqrt(var + eps);
    double* yr = Y.row(i);
    for (int j = 0; j < c; ++j) yr[j] = G[j] * ((xr[j] - mu) * inv) + B[j];
  }
  int xi = x.id, gi = gain.id, bi = bias.id;
  int out = push(std::move(Y), rg(x) || rg(gain) || rg(bias), nullptr);
  if (nodes_[out].requires_grad)
    nodes_[out].back = [xi, gi, bi, out, eps](Tape& t) {
      const Tensor& g = t.nodes_[out].grad;
      const Tensor& X2 = t.value_of(xi);
      const Tensor& G2 = t.value_of(gi);
      const int c2 = X2.cols();
      const bool want_x = t.nodes_[xi].requires_grad;
      const bool want_g = t.nodes_[gi].requires_grad;
      const bool want_b = t.nodes_[bi].requires_grad;
      for (int i = 0; i < X2.rows(); ++i) {
        const double* xr = X2.row(i);
        const double* gr = g.row(i);
        double mu = 0.0;
        for (int j = 0; j < c2; ++j) mu += xr[j];
        mu /= c2;
        double var = 0.0;
        for (int j = 0; j < c2; ++j) {
          const double d = xr[j] - mu;
          var += d * d;
        }
        var /= c2;
        const double inv = 1.0 / std::sqrt(var + eps);
        // dxhat = dy * gain; dx = inv * (dxhat - mean(dxhat) - xhat*mean(dxhat*xhat))
        double m1 = 0.0, m2 = 0.0;
        for (int j = 0; j < c2; ++j) {
          const double xhat = (xr[j] - mu) * inv;
          const double dxh = gr[j] * G2[j];
          m1 += dxh;
          m2 += dxh * xhat;
        }
        m1 /= c2;
        m2 /= c2;
        for (int j = 0; j < c2; ++j) {
          const double xhat = (xr[j] - mu) * inv;
          if (want_x) t.grad_buf(xi).at(i, j) += inv * (gr[j] * G2[j] - m1 - xhat * m2);
          if (want_g) t.grad_buf(gi)[j] += gr[j] * xhat;
          if (want_b) t.grad_buf(bi)[j] += gr[j];
        }
      }
    };
  return {this, out};
}

Var Tape::mse_masked(Var pred, const Tensor& target,
                     const std::vector<std::uint8_t>& mask) {
  check(pred);
  const Tensor& P = value_of(pred.id);
  if (!P.same_shape(target)) throw ShapeError("mse_masked pred/target shapes differ");
  if (mask.size() != P.size()) throw ShapeError("mse_masked mask size mismatch");
  std::size_t n = 0;
  double acc = 0.0;
  for (std::size_t i = 0; i < P.size(); ++i) {
    if (!mask[i]) continue;
    const double d = P[i] - target[i];
    acc += d * d;
    ++n;
  }
  if (n == 0) throw ShapeError("mse_masked: empty target set");
  Tensor L(1, 1);
  L[0] = acc / double(n);
  int pi = pred.id;
  // The closure keeps its own copies; callers may pass temporaries.
  Tensor tgt = target;
  std::vector<std::uint8_t> msk = mask;
  int out = push(std::move(L), rg(pred), nullptr);
  if (nodes_[out].requires_grad)
    nodes_[out].back = [pi, out, tgt = std::move(tgt), msk = std::move(msk),
                        n](Tape& t) {
      const double s = t.nodes_[out].grad[0] * 2.0 / double(n);
      const Tensor& p = t.value_of(pi);
      Tensor& gp = t.grad_buf(pi);
      for (std::size_t i = 0; i < p.size(); ++i)
        if (msk[i]) gp[i] += s * (p[i] - tgt[i]);
    };
  return {this, out};
}

Var Tape::kl_diag(Var muq, Var sigq, Var mup, Var sigp) {
  check(muq);
  check(sigq);
  check(mup);
  check(sigp);
  const Tensor& mq = value_of(muq.id);
  const Tensor& sq = value_of(sigq.id);
  const Tensor& mp = value_of(mup.id);
  const Tensor& sp = value_of(sigp.id);
  if (!(mq.same_shape(sq) && mq.same_shape(mp) && mq.same_shape(sp)) || mq.rows() != 1)
    throw ShapeError("kl_diag expects four 1xd tensors of equal dim");
  double kl = 0.0;
  for (std::size_t i = 0; i < mq.size(); ++i) {
    const double dm = mq[i] - mp[i];
    kl += std::log(sp[i] / sq[i]) + (sq[i] * sq[i] + dm * dm) / (2.0 * sp[i] * sp[i]) - 0.5;
  }
  Tensor L(1, 1);
  L[0] = kl;
  int a = muq.id, b = sigq.id, c = mup.id, d = sigp.id;
  int out = push(std::move(L), rg(muq) || rg(sigq) || rg(mup) || rg(sigp), nullptr);
  if (nodes_[out].requires_grad)
    nodes_[out].back = [a, b, c, d, out](Tape& t) {
      const double g = t.nodes_[out].grad[0];
      const Tensor& mq2 = t.value_of(a);
      const Tensor& sq2 = t.value_of(b);
      const Tensor& mp2 = t.value_of(c);
      const Tensor& sp2 = t.value_of(d);
      for (std::size_t i = 0; i < mq2.size(); ++i) {
        const double dm = mq2[i] - mp2[i];
        const double sp2i = sp2[i] * sp2[i];
        if (t.nodes_[a].requires_grad) t.grad_buf(a)[i] += g * dm / sp2i;
        if (t.nodes_[c].requires_grad) t.grad_buf(c)[i] -= g * dm / sp2i;
        if (t.nodes_[b].requires_grad)
          t.grad_buf(b)[i] += g * (sq2[i] / sp2i - 1.0 / sq2[i]);
        if (t.nodes_[d].requires_grad)
          t.grad_buf(d)[i] +=
              g * (1.0 / sp2[i] - (sq2[i] * sq2[i] + dm * dm) / (sp2i * sp2[i]));
      }
    };
  return {this, out};
}

void Tape::backward(Var root) {
  check(root);
  if (!grad_enabled_) throw std::logic_error("backward on a no-grad tape");
  if (ran_backward_) throw std::logic_error("backward called twice on one tape");
  const Tensor& r = value_of(root.id);
  if (r.rows() != 1 || r.cols() != 1) throw ShapeError("backward root must be 1x1");
  ran_backward_ = true;
  grad_buf(root.id)[0] = 1.0;
  for (int i = root.id; i >= 0; --i) {
    Node& n = nodes_[i];
    if (!n.requires_grad || n.grad.empty() || !n.back) continue;
    n.back(*this);
  }
}

const Tensor* Tape::grad_of(Var v) const {
  check(v);
  const Node& n = nodes_[v.id];
  return n.grad.empty() ? nullptr : &n.grad;
}

void Tape::export_param_grads(const std::function<void(int, const Tensor&)>& fn) const {
  for (const Node& n : nodes_)
    if (n.slot >= 0 && !n.grad.empty()) fn(n.slot, n.grad);
}

}  // namespace tvinr
