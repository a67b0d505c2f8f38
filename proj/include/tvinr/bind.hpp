#pragma once

#include <string>

#include "tvinr/config.hpp"
#include "tvinr/graph.hpp"
#include "tvinr/params.hpp"
#include "tvinr/rng.hpp"

namespace tvinr {

/// Binds ParameterStore entries to tape leaves on first use. Trainable
/// entries become differentiable leaves carrying their store slot;
/// non-trainable ones become constants.
class BoundParams {
 public:
  BoundParams(Tape& tape, const ParameterStore& store)
      : tape_(&tape), store_(&store), cache_(store.size()) {}

  Var operator()(const std::string& name) {
    const int i = store_->index_of(name);
    if (i < 0) throw std::logic_error("unknown parameter " + name);
    if (!cache_[i].ok()) {
      const auto& e = store_->entry(i);
      cache_[i] = e.trainable ? tape_->param(&e.value, i) : tape_->constant_ref(&e.value);
    }
    return cache_[i];
  }

 private:
  Tape* tape_;
  const ParameterStore* store_;
  std::vector<Var> cache_;
};

inline Var apply_activation(Tape& t, Var x, Activation a) {
  switch (a) {
    case Activation::Relu: return t.relu(x);
    case Activation::LeakyRelu01: return t.lrelu(x, 0.1);
    case Activation::Gelu: return t.gelu(x);
    case Activation::Tanh: return t.tanh_(x);
  }
  return x;
}

/// Fan-in scaled uniform init, U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
Tensor init_linear(int fan_in, int fan_out, Rng& rng);
Tensor init_bias(int fan_in, int fan_out, Rng& rng);

}  // namespace tvinr
