#pragma once

#include <string>
#include <utility>
#include <vector>

#include "tvinr/bind.hpp"
#include "tvinr/tensor.hpp"

namespace tvinr {

/// Shape of the generated implicit network f_theta.
struct InrArchitecture {
  int d_in = 0;                 // coordinate-encoding width (= d_model)
  std::vector<int> hidden;      // e.g. {64,64,64}
  int d_out = 0;                // feature channels d
  Activation activation = Activation::Relu;

  /// Total scalar count: sum over layers of fan_in*fan_out + fan_out.
  std::size_t param_count() const;
  /// (fan_in, fan_out) per layer, input to output.
  std::vector<std::pair<int, int>> layer_shapes() const;
};

/// Layered weight/bias set for one generated network.
struct InrParameters {
  std::vector<Tensor> weights;  // fan_in × fan_out each
  std::vector<Tensor> biases;   // 1 × fan_out each
};

/// Layer-major layout, weights row-major then bias. Exact round trip with
/// unflatten.
std::vector<double> flatten(const InrParameters& p);
InrParameters unflatten(const std::vector<double>& flat, const InrArchitecture& arch);

/// Covariate feed-forward c -> c_bar. Registered only when k > 0; with k = 0
/// the encoding is the empty vector and h_dec = z alone.
void register_covariate_params(ParameterStore& store, int k, const std::vector<int>& layers,
                               int dim_c, Rng& rng);
std::vector<double> encode_covariates(const std::vector<double>& c, const ParameterStore& store,
                                      const std::vector<int>& layers, int dim_c);
Var covariate_forward(Tape& t, BoundParams& P, Var c, int n_layers);

/// Hypernetwork g_phi: h_dec = [z; c_bar] -> flat theta of size
/// arch.param_count(). The final layer is linear; its init is scaled per
/// theta-slice so generated networks start near standard MLP init.
void register_hyper_params(ParameterStore& store, int dim_in, const std::vector<int>& layers,
                           const InrArchitecture& arch, Activation act, Rng& rng);
Var hyper_forward(Tape& t, BoundParams& P, Var h_dec, int n_layers, Activation act);

/// Plain convenience: theta = unflatten(MLP_phi([z; c_bar])).
InrParameters generate_params(const std::vector<double>& z, const std::vector<double>& c_bar,
                              const ParameterStore& store, const std::vector<int>& layers,
                              Activation act, const InrArchitecture& arch);

/// Slice a flat 1×N_theta tape node into per-layer (W, b) pairs.
std::vector<std::pair<Var, Var>> slice_theta(Tape& t, Var theta_flat,
                                             const InrArchitecture& arch);

}  // namespace tvinr
