#include "tvinr/hypernet.hpp"

#include <cmath>

#include "tvinr/encoder.hpp"
#include "tvinr/errors.hpp"

namespace tvinr {

std::vector<std::pair<int, int>> InrArchitecture::layer_shapes() const {
  std::vector<std::pair<int, int>> shapes;
  int in = d_in;
  for (int h : hidden) {
    shapes.emplace_back(in, h);
    in = h;
  }
  shapes.emplace_back(in, d_out);
  return shapes;
}

std::size_t InrArchitecture::param_count() const {
  std::size_t n = 0;
  for (auto [fi, fo] : layer_shapes()) n += std::size_t(fi) * fo + fo;
  return n;
}

std::vector<double> flatten(const InrParameters& p) {
  std::vector<double> flat;
  for (std::size_t i = 0; i < p.weights.size(); ++i) {
    flat.insert(flat.end(), p.weights[i].data(), p.weights[i].data() + p.weights[i].size());
    flat.insert(flat.end(), p.biases[i].data(), p.biases[i].data() + p.biases[i].size());
  }
  return flat;
}

InrParameters unflatten(const std::vector<double>& flat, const InrArchitecture& arch) {
  if (flat.size() != arch.param_count())
    throw ShapeError("unflatten: got " + std::to_string(flat.size()) + " values, need " +
                     std::to_string(arch.param_count()));
  InrParameters p;
  std::size_t off = 0;
  for (auto [fi, fo] : arch.layer_shapes()) {
    Tensor w(fi, fo);
    std::copy(flat.begin() + off, flat.begin() + off + w.size(), w.data());
    off += w.size();
    Tensor b(1, fo);
    std::copy(flat.begin() + off, flat.begin() + off + fo, b.data());
    off += fo;
    p.weights.push_back(std::move(w));
    p.biases.push_back(std::move(b));
  }
  return p;
}

void register_covariate_params(ParameterStore& store, int k, const std::vector<int>& layers,
                               int dim_c, Rng& rng) {
  if (k <= 0) return;
  int in = k;
  int idx = 0;
  for (int w : layers) {
    store.add("cov.l" + std::to_string(idx) + ".W", init_linear(in, w, rng));
    store.add("cov.l" + std::to_string(idx) + ".b", init_bias(in, w, rng));
    in = w;
    ++idx;
  }
  store.add("cov.out.W", init_linear(in, dim_c, rng));
  store.add("cov.out.b", init_bias(in, dim_c, rng));
}

Var covariate_forward(Tape& t, BoundParams& P, Var c, int n_layers) {
  Var x = c;
  for (int i = 0; i < n_layers; ++i) {
    const std::string l = "cov.l" + std::to_string(i);
    x = t.gelu(t.affine(x, P(l + ".W"), P(l + ".b")));
  }
  return t.affine(x, P("cov.out.W"), P("cov.out.b"));
}

std::vector<double> encode_covariates(const std::vector<double>& c, const ParameterStore& store,
                                      const std::vector<int>& layers, int dim_c) {
  if (c.empty()) return {};
  if (!store.has("cov.out.W")) throw ShapeError("model has no covariate encoder");
  if (store.value("cov.l0.W").rows() != int(c.size()))
    throw ShapeError("covariate width mismatch: got " + std::to_string(c.size()));
  Tape tape(false);
  BoundParams P(tape, store);
  Tensor cv(1, int(c.size()), std::vector<double>(c));
  Var out = covariate_forward(tape, P, tape.constant(std::move(cv)), int(layers.size()));
  const Tensor& o = tape.val(out);
  if (o.cols() != dim_c) throw ShapeError("covariate encoder output width mismatch");
  return std::vector<double>(o.data(), o.data() + o.size());
}

void register_hyper_params(ParameterStore& store, int dim_in, const std::vector<int>& layers,
                           const InrArchitecture& arch, Activation act, Rng& rng) {
  (void)act;
  int in = dim_in;
  int idx = 0;
  for (int w : layers) {
    store.add("hyper.l" + std::to_string(idx) + ".W", init_linear(in, w, rng));
    store.add("hyper.l" + std::to_string(idx) + ".b", init_bias(in, w, rng));
    in = w;
    ++idx;
  }
  // Final linear layer, initialized per theta-slice: the bias carries a
  // standard fan-in init for the generated layer, so a fresh hypernetwork
  // emits networks close to ordinary MLP initialization, while the weight
  // columns provide the latent-dependent modulation on top. kModulationGain
  // sets how strong that modulation starts; too small and the latent path
  // carries no reconstruction gradient, inviting collapse onto one shared
  // function.
  constexpr double kModulationGain = 3.0;
  const std::size_t n_theta = arch.param_count();
  Tensor w(in, int(n_theta));
  Tensor b(1, int(n_theta));
  std::size_t off = 0;
  for (auto [fi, fo] : arch.layer_shapes()) {
    const double w_half =
        kModulationGain * std::sqrt(3.0) / std::sqrt(double(in) * double(fi));
    const double b_half = 1.0 / std::sqrt(double(fi));
    const std::size_t w_count = std::size_t(fi) * fo;
    for (std::size_t j = 0; j < w_count; ++j) {
      for (int r = 0; r < in; ++r) w.at(r, int(off + j)) = rng.uniform(-w_half, w_half);
      b[off + j] = rng.uniform(-b_half, b_half);
    }
    off += w_count;
    for (int j = 0; j < fo; ++j) {
      for (int r = 0; r < in; ++r) w.at(r, int(off + j)) = rng.uniform(-w_half, w_half);
      b[off + j] = 0.0;
    }
    off += fo;
  }
  store.add("hyper.out.W", std::move(w));
  store.add("hyper.out.b", std::move(b));
}

Var hyper_forward(Tape& t, BoundParams& P, Var h_dec, int n_layers, Activation act) {
  Var x = h_dec;
  for (int i = 0; i < n_layers; ++i) {
    const std::string l = "hyper.l" + std::to_string(i);
    x = apply_activation(t, t.affine(x, P(l + ".W"), P(l + ".b")), act);
  }
  return t.affine(x, P("hyper.out.W"), P("hyper.out.b"));
}

InrParameters generate_params(const std::vector<double>& z, const std::vector<double>& c_bar,
                              const ParameterStore& store, const std::vector<int>& layers,
                              Activation act, const InrArchitecture& arch) {
  std::vector<double> h = z;
  h.insert(h.end(), c_bar.begin(), c_bar.end());
  if (store.value("hyper.l0.W").rows() != int(h.size()) && !layers.empty())
    throw ShapeError("hypernetwork input width mismatch: got " + std::to_string(h.size()));
  Tape tape(false);
  BoundParams P(tape, store);
  const int hw = int(h.size());
  Tensor hv(1, hw, std::move(h));
  Var theta = hyper_forward(tape, P, tape.constant(std::move(hv)), int(layers.size()), act);
  const Tensor& o = tape.val(theta);
  return unflatten(std::vector<double>(o.data(), o.data() + o.size()), arch);
}

std::vector<std::pair<Var, Var>> slice_theta(Tape& t, Var theta_flat,
                                             const InrArchitecture& arch) {
  const Tensor& flat = t.val(theta_flat);
  if (flat.rows() != 1 || flat.size() != arch.param_count())
    throw ShapeError("slice_theta: flat theta has wrong size");
  std::vector<std::pair<Var, Var>> out;
  int off = 0;
  for (auto [fi, fo] : arch.layer_shapes()) {
    Var w = t.reshape(t.slice_cols(theta_flat, off, fi * fo), fi, fo);
    off += fi * fo;
    Var b = t.slice_cols(theta_flat, off, fo);
    off += fo;
    out.emplace_back(w, b);
  }
  return out;
}

}  // namespace tvinr
