#include "tvinr/model.hpp"

#include <cmath>

#include "tvinr/errors.hpp"
#include "tvinr/kernels.hpp"

namespace tvinr {

void GradBuffer::add_into(ParameterStore& store) const {
  for (int i = 0; i < int(slots.size()); ++i) {
    if (slots[i].empty()) continue;
    Tensor& g = store.entry(i).grad;
    kernels::backend().add(g.size(), g.data(), slots[i].data(), g.data());
  }
}

void GradBuffer::scale(double s) {
  for (Tensor& t : slots)
    if (!t.empty()) kernels::backend().scale(t.size(), s, t.data(), t.data());
}

void GradBuffer::zero() {
  for (Tensor& t : slots)
    if (!t.empty()) t.zero();
}

TvInrModel TvInrModel::create(const TrainConfig& cfg, int data_dims, int cov_dims) {
  cfg.validate();
  if (data_dims < 1) throw ConfigError("data_dims must be >= 1");
  if (cov_dims < 0) throw ConfigError("cov_dims must be >= 0");
  TvInrModel m;
  m.cfg_ = cfg;
  m.d_ = data_dims;
  m.k_ = cov_dims;

  Rng master(cfg.seed);
  Rng r_embed = master.fork(1);
  Rng r_fourier = master.fork(2);
  Rng r_prior = master.fork(3);
  Rng r_post = master.fork(4);
  Rng r_cov = master.fork(5);
  Rng r_hyper = master.fork(6);

  const int dm = cfg.d_model;
  m.store_.add("embed.spatial.W", init_linear(2 * data_dims, dm, r_embed));
  m.store_.add("embed.spatial.b", init_bias(2 * data_dims, dm, r_embed));
  m.basis_ = FourierBasis::init(cfg.fourier_m, cfg.fourier_sigma, r_fourier);
  m.store_.add("embed.fourier.B", m.basis_.freq, /*trainable=*/false);
  m.store_.add("embed.fourier.W", init_linear(2 * cfg.fourier_m, dm, r_fourier));
  m.store_.add("embed.fourier.b", init_bias(2 * cfg.fourier_m, dm, r_fourier));

  const EncoderConfig ec = {dm, cfg.heads, cfg.enc_layers, cfg.dim_z, cfg.causal};
  register_encoder_params(m.store_, "enc.prior", ec, r_prior);
  register_encoder_params(m.store_, "enc.post", ec, r_post);

  if (cov_dims > 0)
    register_covariate_params(m.store_, cov_dims, cfg.cov_layers, cfg.dim_c, r_cov);

  const int h_dec = cfg.dim_z + (cov_dims > 0 ? cfg.dim_c : 0);
  register_hyper_params(m.store_, h_dec, cfg.hyper_layers, m.inr_arch(), cfg.hyper_activation,
                        r_hyper);
  return m;
}

InrArchitecture TvInrModel::inr_arch() const {
  InrArchitecture a;
  a.d_in = cfg_.d_model;
  a.hidden = cfg_.gen_layers;
  a.d_out = d_;
  a.activation = cfg_.gen_activation;
  return a;
}

EncoderConfig TvInrModel::encoder_config() const {
  return {cfg_.d_model, cfg_.heads, cfg_.enc_layers, cfg_.dim_z, cfg_.causal};
}

void TvInrModel::sync_fourier_from_store() {
  basis_.m = cfg_.fourier_m;
  basis_.sigma = cfg_.fourier_sigma;
  basis_.freq = store_.value("embed.fourier.B");
}

Var TvInrModel::tokens_for_view(Tape& t, BoundParams& P, const TimeSeriesSample& sample,
                                ContextView view) const {
  const auto validity = view_validity(sample, view);
  int n = 0;
  for (auto v : validity) n += v ? 1 : 0;
  if (n == 0)
    throw EmptyContextError(std::string("sample ") + sample.id + " has no positions in the " +
                            (view == ContextView::ObservedOnly ? "observed" : "non-absent") +
                            " view");
  // Invalid positions are dropped here; attention and pooling then never see
  // them, which is the masked-attention contract.
  const Tensor full_spatial = build_spatial_input(sample, view);
  Tensor spatial(n, full_spatial.cols());
  std::vector<double> stamps;
  stamps.reserve(n);
  int r = 0;
  for (int l = 0; l < sample.length(); ++l)
    if (validity[l]) {
      std::copy(full_spatial.row(l), full_spatial.row(l) + full_spatial.cols(), spatial.row(r));
      stamps.push_back(sample.stamps[l]);
      ++r;
    }
  Tensor temporal_raw = build_temporal_raw(stamps, d_, basis_);
  Var sv = t.affine(t.constant(std::move(spatial)), P("embed.spatial.W"), P("embed.spatial.b"));
  Var tv = t.affine(t.constant(std::move(temporal_raw)), P("embed.fourier.W"), P("embed.fourier.b"));
  return t.add(sv, tv);
}

TvInrModel::ElboVars TvInrModel::build_elbo(Tape& t, const TimeSeriesSample& sample,
                                            const Tensor& eps, double beta) const {
  if (eps.rows() != 1 || eps.cols() != cfg_.dim_z)
    throw ShapeError("eps must be 1 x dim_z");
  if (sample.dims() != d_) throw ShapeError("sample dims != model dims");
  BoundParams P(t, store_);
  const EncoderConfig ec = encoder_config();

  Var tokens_full = tokens_for_view(t, P, sample, ContextView::NonAbsent);
  Var tokens_obs = tokens_for_view(t, P, sample, ContextView::ObservedOnly);
  EncodedGaussianVar q = encoder_forward(t, P, "enc.post", tokens_full, ec);
  EncodedGaussianVar p = encoder_forward(t, P, "enc.prior", tokens_obs, ec);

  Var z = t.add(q.mu, t.mul(q.sigma, t.constant(eps)));
  Var h_dec = z;
  if (k_ > 0) {
    if (int(sample.covariates.size()) != k_)
      throw ShapeError("sample covariates != model cov_dims");
    Tensor cv(1, k_, std::vector<double>(sample.covariates));
    Var cbar = covariate_forward(t, P, t.constant(std::move(cv)), int(cfg_.cov_layers.size()));
    h_dec = t.concat_cols({z, cbar});
  } else if (!sample.covariates.empty()) {
    throw ShapeError("model trained without covariates got covariates");
  }

  Var theta_flat = hyper_forward(t, P, h_dec, int(cfg_.hyper_layers.size()), cfg_.hyper_activation);
  const InrArchitecture arch = inr_arch();
  auto theta = slice_theta(t, theta_flat, arch);

  Tensor query_raw = build_query_raw(sample.stamps, basis_);
  Var e = t.affine(t.constant(std::move(query_raw)), P("embed.fourier.W"), P("embed.fourier.b"));
  Var yhat = inr_forward_var(t, theta, e, arch.activation);

  // Absent cells are excluded from the loss entirely; their (NaN) feature
  // values are replaced before any arithmetic sees them.
  Tensor target = sample.features;
  std::vector<std::uint8_t> nonabsent(target.size(), 0);
  for (std::size_t i = 0; i < target.size(); ++i) {
    if (sample.mask[i] == CellState::Absent)
      target[i] = 0.0;
    else
      nonabsent[i] = 1;
  }
  ElboVars out;
  out.recon = t.mse_masked(yhat, target, nonabsent);
  out.kl = t.kl_diag(q.mu, q.sigma, p.mu, p.sigma);
  out.loss = t.add(out.recon, t.scale(out.kl, beta));
  return out;
}

ElboTerms TvInrModel::eval_elbo(const TimeSeriesSample& sample, const Tensor& eps,
                                GradBuffer* grads, double beta) const {
  Tape tape(grads != nullptr);
  ElboVars v = build_elbo(tape, sample, eps, beta);
  ElboTerms terms;
  terms.loss = tape.scalar(v.loss);
  terms.recon = tape.scalar(v.recon);
  terms.kl = tape.scalar(v.kl);
  if (grads) {
    grads->ensure(store_);
    tape.backward(v.loss);
    tape.export_param_grads([&](int slot, const Tensor& g) {
      Tensor& dst = grads->slots[slot];
      if (dst.empty())
        dst = g;
      else
        kernels::backend().add(dst.size(), dst.data(), g.data(), dst.data());
    });
  }
  return terms;
}

GaussianLatent TvInrModel::encode_view(const TimeSeriesSample& sample, ContextView view,
                                       const std::string& role_prefix) const {
  Tape tape(false);
  BoundParams P(tape, store_);
  Var tokens = tokens_for_view(tape, P, sample, view);
  EncodedGaussianVar g = encoder_forward(tape, P, role_prefix, tokens, encoder_config());
  GaussianLatent out;
  const Tensor& mu = tape.val(g.mu);
  const Tensor& sg = tape.val(g.sigma);
  out.mu.assign(mu.data(), mu.data() + mu.size());
  out.sigma.assign(sg.data(), sg.data() + sg.size());
  return out;
}

InrParameters TvInrModel::make_theta(const std::vector<double>& z,
                                     const std::vector<double>& covariates) const {
  std::vector<double> cbar;
  if (k_ > 0) {
    if (int(covariates.size()) != k_) throw ShapeError("covariate width mismatch");
    cbar = encode_covariates(covariates, store_, cfg_.cov_layers, cfg_.dim_c);
  } else if (!covariates.empty()) {
    throw ShapeError("model trained without covariates got covariates");
  }
  return generate_params(z, cbar, store_, cfg_.hyper_layers, cfg_.hyper_activation, inr_arch());
}

Tensor TvInrModel::query_encodings(const std::vector<double>& stamps) const {
  const Tensor raw = build_query_raw(stamps, basis_);
  const Tensor& w = store_.value("embed.fourier.W");
  const Tensor& b = store_.value("embed.fourier.b");
  Tensor out(raw.rows(), w.cols());
  kernels::gemm_nn(raw.data(), raw.rows(), raw.cols(), w.data(), w.cols(), out.data(), false);
  for (int l = 0; l < out.rows(); ++l)
    kernels::backend().add(out.cols(), out.row(l), b.data(), out.row(l));
  return out;
}

Tensor TvInrModel::predict_at(const InrParameters& theta, const std::vector<double>& stamps) const {
  if (stamps.empty()) return Tensor(0, d_);
  return predict_series(theta, inr_arch(), query_encodings(stamps));
}

}  // namespace tvinr
