#include "tvinr/tensor.hpp"

#include <cmath>
#include <cstdio>

namespace tvinr {

bool Tensor::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

double Tensor::max_abs_diff(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("max_abs_diff: shape mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

std::string shape_str(const Tensor& t) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%dx%d", t.rows(), t.cols());
  return buf;
}

}  // namespace tvinr
