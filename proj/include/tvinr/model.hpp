#pragma once

#include "tvinr/config.hpp"
#include "tvinr/encoder.hpp"
#include "tvinr/hypernet.hpp"
#include "tvinr/inr.hpp"

namespace tvinr {

struct ElboTerms {
  double loss = 0.0;
  double recon = 0.0;
  double kl = 0.0;
};

/// Gradient accumulation buffers aligned with ParameterStore slots.
/// Allocated lazily per slot so unused groups cost nothing.
struct GradBuffer {
  std::vector<Tensor> slots;
  void ensure(const ParameterStore& store) { slots.resize(store.size()); }
  void add_into(ParameterStore& store) const;
  void scale(double s);
  void zero();
};

// The assembled TV-INR: embedding weights, two transformer encoders (prior
// psi_z on observed context, posterior gamma_z on all non-absent data),
// optional covariate encoder, hypernetwork, and the generated INR.
class TvInrModel {
 public:
  TvInrModel() = default;

  /// Fresh parameters for series with d channels and k covariates.
  static TvInrModel create(const TrainConfig& cfg, int data_dims, int cov_dims);

  const TrainConfig& config() const { return cfg_; }
  int data_dims() const { return d_; }
  int cov_dims() const { return k_; }
  ParameterStore& params() { return store_; }
  const ParameterStore& params() const { return store_; }
  const FourierBasis& fourier() const { return basis_; }
  InrArchitecture inr_arch() const;
  EncoderConfig encoder_config() const;
  /// Called after external edits to the parameter store (checkpoint load).
  void sync_fourier_from_store();

  struct ElboVars {
    Var loss, recon, kl;
  };
  /// Build the negative-ELBO graph for one masked sample: posterior from all
  /// non-absent cells, prior from observed cells, z = mu + sigma*eps,
  /// reconstruction MSE over non-absent cells, loss = recon + beta*KL.
  /// The beta override exists for KL annealing; the default is the config's.
  ElboVars build_elbo(Tape& tape, const TimeSeriesSample& sample, const Tensor& eps,
                      double beta) const;
  ElboVars build_elbo(Tape& tape, const TimeSeriesSample& sample, const Tensor& eps) const {
    return build_elbo(tape, sample, eps, cfg_.beta);
  }

  /// Evaluate the ELBO; when grads is non-null, run backward and accumulate
  /// parameter gradients into it.
  ElboTerms eval_elbo(const TimeSeriesSample& sample, const Tensor& eps, GradBuffer* grads,
                      double beta) const;
  ElboTerms eval_elbo(const TimeSeriesSample& sample, const Tensor& eps,
                      GradBuffer* grads) const {
    return eval_elbo(sample, eps, grads, cfg_.beta);
  }

  /// Conditioning Gaussian for a sample under a view, using the prior
  /// ("enc.prior") or posterior ("enc.post") parameter role.
  GaussianLatent encode_view(const TimeSeriesSample& sample, ContextView view,
                             const std::string& role_prefix) const;

  /// theta = g_phi([z; FF(c)]).
  InrParameters make_theta(const std::vector<double>& z,
                           const std::vector<double>& covariates) const;

  /// Evaluate the generated INR at arbitrary stamps (L'×d output).
  Tensor predict_at(const InrParameters& theta, const std::vector<double>& stamps) const;

  /// Encoded coordinates for given stamps (L'×d_model), the generator input.
  Tensor query_encodings(const std::vector<double>& stamps) const;

 private:
  Var tokens_for_view(Tape& tape, BoundParams& P, const TimeSeriesSample& sample,
                      ContextView view) const;

  TrainConfig cfg_;
  int d_ = 1;
  int k_ = 0;
  ParameterStore store_;
  FourierBasis basis_;
};

}  // namespace tvinr
