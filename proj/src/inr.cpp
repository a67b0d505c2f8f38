#include "tvinr/inr.hpp"

#include "tvinr/activations.hpp"
#include "tvinr/errors.hpp"
#include "tvinr/kernels.hpp"

namespace tvinr {

Tensor predict_series(const InrParameters& theta, const InrArchitecture& arch,
                      const Tensor& coord_encodings) {
  if (coord_encodings.cols() != arch.d_in)
    throw ShapeError("predict_series: queries are " + shape_str(coord_encodings) +
                     ", d_in is " + std::to_string(arch.d_in));
  const auto shapes = arch.layer_shapes();
  if (theta.weights.size() != shapes.size())
    throw ShapeError("predict_series: theta layer count mismatch");
  Tensor x = coord_encodings;
  for (std::size_t li = 0; li < shapes.size(); ++li) {
    const Tensor& w = theta.weights[li];
    const Tensor& b = theta.biases[li];
    if (w.rows() != x.cols() || b.cols() != w.cols())
      throw ShapeError("predict_series: layer " + std::to_string(li) + " shape mismatch");
    Tensor y(x.rows(), w.cols());
    kernels::gemm_nn(x.data(), x.rows(), x.cols(), w.data(), w.cols(), y.data(), false);
    const bool last = li + 1 == shapes.size();
    for (int r = 0; r < y.rows(); ++r) {
      kernels::backend().add(y.cols(), y.row(r), b.data(), y.row(r));
      if (!last)
        for (int c = 0; c < y.cols(); ++c) y.at(r, c) = apply_activation(arch.activation, y.at(r, c));
    }
    x = std::move(y);
  }
  return x;
}

std::vector<double> inr_forward(const InrParameters& theta, const InrArchitecture& arch,
                                const std::vector<double>& coord_encoding) {
  Tensor q(1, int(coord_encoding.size()), std::vector<double>(coord_encoding));
  Tensor out = predict_series(theta, arch, q);
  return std::vector<double>(out.data(), out.data() + out.size());
}

Var inr_forward_var(Tape& t, const std::vector<std::pair<Var, Var>>& theta_vars,
                    Var coord_encodings, Activation act) {
  Var x = coord_encodings;
  for (std::size_t li = 0; li < theta_vars.size(); ++li) {
    x = t.affine(x, theta_vars[li].first, theta_vars[li].second);
    if (li + 1 != theta_vars.size()) x = apply_activation(t, x, act);
  }
  return x;
}

}  // namespace tvinr
