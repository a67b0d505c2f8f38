#pragma once

#include <string>
#include <vector>

#include "tvinr/bind.hpp"
#include "tvinr/embedding.hpp"

namespace tvinr {

inline constexpr double kSigmaFloor = 1e-4;
inline constexpr double kLayerNormEps = 1e-5;

/// Diagonal Gaussian over the latent: z ~ N(mu, diag(sigma^2)).
struct GaussianLatent {
  std::vector<double> mu;
  std::vector<double> sigma;  // every entry >= kSigmaFloor
  int dim() const { return int(mu.size()); }
};

struct EncoderConfig {
  int d_model = 0;
  int heads = 1;
  int layers = 1;
  int dim_z = 0;
  bool causal = false;
};

/// Register one encoder's parameters (transformer blocks + pooled head
/// producing 2*dim_z outputs) under the given prefix. Two disjoint sets
/// exist per model: "enc.prior" and "enc.post".
void register_encoder_params(ParameterStore& store, const std::string& prefix,
                             const EncoderConfig& cfg, Rng& rng);

/// Tape-level forward: tokens are n×d_model with every row a valid context
/// position (invalid positions are dropped before this point, which is what
/// keeps them out of attention and pooling entirely).
struct EncodedGaussianVar {
  Var mu;     // 1×dim_z
  Var sigma;  // 1×dim_z, softplus + floor
};
EncodedGaussianVar encoder_forward(Tape& tape, BoundParams& params, const std::string& prefix,
                                   Var tokens, const EncoderConfig& cfg);

/// Plain inference form over a finished embedding batch: compacts valid
/// rows, runs the transformer, returns the pooled Gaussian. Throws
/// EmptyContextError when no position is valid.
GaussianLatent encode(const EmbeddingBatch& batch, const ParameterStore& store,
                      const std::string& prefix, const EncoderConfig& cfg);

/// KL(q || p) for diagonal Gaussians, closed form.
double kl_to_prior(const GaussianLatent& q, const GaussianLatent& p);

}  // namespace tvinr
