#pragma once

#include <cmath>

#include "tvinr/config.hpp"

// Scalar activation functions shared by the autodiff ops and the plain
// inference path, so both produce bit-identical values.

namespace tvinr {

inline double act_relu(double x) { return x > 0.0 ? x : 0.0; }
inline double act_relu_d(double x) { return x > 0.0 ? 1.0 : 0.0; }

inline double act_lrelu01(double x) { return x > 0.0 ? x : 0.1 * x; }
inline double act_lrelu01_d(double x) { return x > 0.0 ? 1.0 : 0.1; }

inline double act_norm_cdf(double x) {
  return 0.5 * (1.0 + std::erf(x * 0.70710678118654752440));
}
inline double act_norm_pdf(double x) {
  return 0.39894228040143267794 * std::exp(-0.5 * x * x);
}
inline double act_gelu(double x) { return x * act_norm_cdf(x); }
inline double act_gelu_d(double x) { return act_norm_cdf(x) + x * act_norm_pdf(x); }

inline double act_tanh(double x) { return std::tanh(x); }

inline double apply_activation(Activation a, double x) {
  switch (a) {
    case Activation::Relu: return act_relu(x);
    case Activation::LeakyRelu01: return act_lrelu01(x);
    case Activation::Gelu: return act_gelu(x);
    case Activation::Tanh: return act_tanh(x);
  }
  return x;
}

}  // namespace tvinr
