#pragma once

#include "tvinr/hypernet.hpp"

namespace tvinr {

/// Evaluate f_theta at one encoded coordinate (length arch.d_in).
std::vector<double> inr_forward(const InrParameters& theta, const InrArchitecture& arch,
                                const std::vector<double>& coord_encoding);

/// Batched forward over L'×d_in encoded queries; row l of the result is
/// exactly inr_forward on row l.
Tensor predict_series(const InrParameters& theta, const InrArchitecture& arch,
                      const Tensor& coord_encodings);

/// Tape-level forward through generated parameters (gradients flow into the
/// flat theta and from there into the hypernetwork).
Var inr_forward_var(Tape& t, const std::vector<std::pair<Var, Var>>& theta_vars,
                    Var coord_encodings, Activation act);

}  // namespace tvinr
