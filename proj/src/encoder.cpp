#include "tvinr/encoder.hpp"

#include <cmath>

#include "tvinr/errors.hpp"

namespace tvinr {

Tensor init_linear(int fan_in, int fan_out, Rng& rng) {
  Tensor w(fan_in, fan_out);
  const double a = 1.0 / std::sqrt(double(fan_in));
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = rng.uniform(-a, a);
  return w;
}

Tensor init_bias(int fan_in, int fan_out, Rng& rng) {
  Tensor b(1, fan_out);
  const double a = 1.0 / std::sqrt(double(fan_in));
  for (std::size_t i = 0; i < b.size(); ++i) b[i] = rng.uniform(-a, a);
  return b;
}

namespace {
Tensor ones_row(int n) {
  Tensor t(1, n);
  t.fill(1.0);
  return t;
}
}  // namespace

void register_encoder_params(ParameterStore& store, const std::string& prefix,
                             const EncoderConfig& cfg, Rng& rng) {
  const int dm = cfg.d_model;
  const int ff = 4 * dm;
  for (int i = 0; i < cfg.layers; ++i) {
    const std::string l = prefix + ".l" + std::to_string(i);
    store.add(l + ".ln1.g", ones_row(dm));
    store.add(l + ".ln1.b", Tensor(1, dm));
    // No key bias: it only shifts every score in a row by the same amount,
    // which softmax cancels, leaving a parameter with an exactly-zero
    // gradient.
    for (const char* nm : {"q", "k", "v", "o"}) {
      store.add(l + ".attn.W" + nm, init_linear(dm, dm, rng));
      if (nm[0] != 'k') store.add(l + ".attn.b" + nm, init_bias(dm, dm, rng));
    }
    store.add(l + ".ln2.g", ones_row(dm));
    store.add(l + ".ln2.b", Tensor(1, dm));
    store.add(l + ".ff.W1", init_linear(dm, ff, rng));
    store.add(l + ".ff.b1", init_bias(dm, ff, rng));
    store.add(l + ".ff.W2", init_linear(ff, dm, rng));
    store.add(l + ".ff.b2", init_bias(ff, dm, rng));
  }
  store.add(prefix + ".ln_out.g", ones_row(dm));
  store.add(prefix + ".ln_out.b", Tensor(1, dm));
  store.add(prefix + ".head.W1", init_linear(dm, dm, rng));
  store.add(prefix + ".head.b1", init_bias(dm, dm, rng));
  store.add(prefix + ".head.W2", init_linear(dm, 2 * cfg.dim_z, rng));
  // The pre-scale half of the head bias starts at -2 so sigma begins small
  // (softplus(-2) ~ 0.13) and early reparameterized samples stay close to the
  // mean; wide initial sigma drowns the conditioning signal in noise and
  // invites latent collapse.
  Tensor b2 = init_bias(dm, 2 * cfg.dim_z, rng);
  for (int i = 0; i < cfg.dim_z; ++i) b2[cfg.dim_z + i] = -2.0;
  store.add(prefix + ".head.b2", std::move(b2));
}

namespace {

Var transformer_block(Tape& t, BoundParams& P, const std::string& l, Var x,
                      const EncoderConfig& cfg) {
  const int dm = cfg.d_model;
  const int dh = dm / cfg.heads;
  Var a = t.layer_norm_rows(x, P(l + ".ln1.g"), P(l + ".ln1.b"), kLayerNormEps);
  Var q = t.affine(a, P(l + ".attn.Wq"), P(l + ".attn.bq"));
  Var k = t.matmul(a, P(l + ".attn.Wk"));
  Var v = t.affine(a, P(l + ".attn.Wv"), P(l + ".attn.bv"));
  std::vector<Var> heads_out;
  heads_out.reserve(cfg.heads);
  const double inv_sqrt = 1.0 / std::sqrt(double(dh));
  for (int h = 0; h < cfg.heads; ++h) {
    Var qh = t.slice_cols(q, h * dh, dh);
    Var kh = t.slice_cols(k, h * dh, dh);
    Var vh = t.slice_cols(v, h * dh, dh);
    Var scores = t.scale(t.matmul_nt(qh, kh), inv_sqrt);
    Var probs = t.row_softmax(scores, cfg.causal);
    heads_out.push_back(t.matmul(probs, vh));
  }
  Var cat = cfg.heads == 1 ? heads_out[0] : t.concat_cols(heads_out);
  Var attn = t.affine(cat, P(l + ".attn.Wo"), P(l + ".attn.bo"));
  Var x2 = t.add(x, attn);
  Var a2 = t.layer_norm_rows(x2, P(l + ".ln2.g"), P(l + ".ln2.b"), kLayerNormEps);
  Var h1 = t.gelu(t.affine(a2, P(l + ".ff.W1"), P(l + ".ff.b1")));
  Var ffn = t.affine(h1, P(l + ".ff.W2"), P(l + ".ff.b2"));
  return t.add(x2, ffn);
}

}  // namespace

EncodedGaussianVar encoder_forward(Tape& t, BoundParams& P, const std::string& prefix,
                                   Var tokens, const EncoderConfig& cfg) {
  if (t.val(tokens).rows() < 1) throw EmptyContextError("encoder got zero positions");
  if (t.val(tokens).cols() != cfg.d_model)
    throw ShapeError("encoder tokens width != d_model");
  Var x = tokens;
  for (int i = 0; i < cfg.layers; ++i)
    x = transformer_block(t, P, prefix + ".l" + std::to_string(i), x, cfg);
  x = t.layer_norm_rows(x, P(prefix + ".ln_out.g"), P(prefix + ".ln_out.b"), kLayerNormEps);
  Var pooled = t.mean_rows(x);
  Var h = t.gelu(t.affine(pooled, P(prefix + ".head.W1"), P(prefix + ".head.b1")));
  Var o = t.affine(h, P(prefix + ".head.W2"), P(prefix + ".head.b2"));
  EncodedGaussianVar out;
  out.mu = t.slice_cols(o, 0, cfg.dim_z);
  out.sigma = t.add_scalar(t.softplus(t.slice_cols(o, cfg.dim_z, cfg.dim_z)), kSigmaFloor);
  return out;
}

GaussianLatent encode(const EmbeddingBatch& batch, const ParameterStore& store,
                      const std::string& prefix, const EncoderConfig& cfg) {
  int n = 0;
  for (auto v : batch.validity) n += v ? 1 : 0;
  if (n == 0) throw EmptyContextError("no valid positions to encode");
  Tensor compact(n, batch.embedding.cols());
  int r = 0;
  for (int l = 0; l < batch.embedding.rows(); ++l)
    if (batch.validity[l]) {
      std::copy(batch.embedding.row(l), batch.embedding.row(l) + batch.embedding.cols(),
                compact.row(r));
      ++r;
    }
  Tape tape(false);
  BoundParams P(tape, store);
  Var tokens = tape.constant(std::move(compact));
  EncodedGaussianVar g = encoder_forward(tape, P, prefix, tokens, cfg);
  GaussianLatent out;
  const Tensor& mu = tape.val(g.mu);
  const Tensor& sg = tape.val(g.sigma);
  out.mu.assign(mu.data(), mu.data() + mu.size());
  out.sigma.assign(sg.data(), sg.data() + sg.size());
  return out;
}

double kl_to_prior(const GaussianLatent& q, const GaussianLatent& p) {
  if (q.dim() != p.dim()) throw ShapeError("kl_to_prior: dimension mismatch");
  double kl = 0.0;
  for (int i = 0; i < q.dim(); ++i) {
    const double dm = q.mu[i] - p.mu[i];
    kl += std::log(p.sigma[i] / q.sigma[i]) +
          (q.sigma[i] * q.sigma[i] + dm * dm) / (2.0 * p.sigma[i] * p.sigma[i]) - 0.5;
  }
  return kl;
}

}  // namespace tvinr
