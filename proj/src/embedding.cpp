#include "tvinr/embedding.hpp"

#include <array>
#include <cmath>

#include "tvinr/errors.hpp"
#include "tvinr/kernels.hpp"

namespace tvinr {

namespace {
constexpr double kTwoPi = 6.283185307179586477;
}

FourierBasis FourierBasis::init(int m, double sigma, Rng& rng) {
  FourierBasis b;
  b.m = m;
  b.sigma = sigma;
  b.freq = Tensor(m, 2);
  for (std::size_t i = 0; i < b.freq.size(); ++i) b.freq[i] = rng.normal(0.0, sigma);
  return b;
}

void FourierBasis::raw(double t, double chan, double* out2m) const {
  for (int i = 0; i < m; ++i) {
    const double phase = kTwoPi * (freq.at(i, 0) * t + freq.at(i, 1) * chan);
    out2m[i] = std::cos(phase);
    out2m[m + i] = std::sin(phase);
  }
}

std::vector<std::array<double, 2>> expand_channels(const std::vector<double>& stamps, int d) {
  if (d < 1) throw ShapeError("expand_channels: d must be >= 1");
  std::vector<std::array<double, 2>> grid;
  grid.reserve(stamps.size() * d);
  const double denom = d > 1 ? double(d - 1) : 1.0;
  for (double t : stamps)
    for (int j = 0; j < d; ++j) grid.push_back({t, double(j) / denom});
  return grid;
}

Tensor build_spatial_input(const TimeSeriesSample& sample, ContextView view) {
  const int L = sample.length(), d = sample.dims();
  Tensor x(L, 2 * d);
  for (int l = 0; l < L; ++l)
    for (int j = 0; j < d; ++j) {
      const bool ctx = in_view(sample.state(l, j), view);
      x.at(l, j) = ctx ? sample.features.at(l, j) : 0.0;
      x.at(l, d + j) = ctx ? 1.0 : 0.0;
    }
  return x;
}

Tensor build_temporal_raw(const std::vector<double>& stamps, int d, const FourierBasis& basis) {
  const int L = int(stamps.size());
  const int w = 2 * basis.m;
  Tensor out(L, w);
  std::vector<double> cell(w);
  const auto grid = expand_channels(stamps, d);
  for (int l = 0; l < L; ++l) {
    double* row = out.row(l);
    for (int j = 0; j < d; ++j) {
      const auto& coord = grid[std::size_t(l) * d + j];
      basis.raw(coord[0], coord[1], cell.data());
      kernels::backend().add(w, row, cell.data(), row);
    }
    kernels::backend().scale(w, 1.0 / d, row, row);
  }
  return out;
}

Tensor build_query_raw(const std::vector<double>& stamps, const FourierBasis& basis) {
  const int L = int(stamps.size());
  Tensor out(L, 2 * basis.m);
  for (int l = 0; l < L; ++l) basis.raw(stamps[l], 0.0, out.row(l));
  return out;
}

std::vector<std::uint8_t> view_validity(const TimeSeriesSample& sample, ContextView view) {
  const int L = sample.length(), d = sample.dims();
  std::vector<std::uint8_t> valid(L, 0);
  for (int l = 0; l < L; ++l)
    for (int j = 0; j < d; ++j)
      if (in_view(sample.state(l, j), view)) {
        valid[l] = 1;
        break;
      }
  return valid;
}

Tensor spatial_embedding(const TimeSeriesSample& sample, ContextView view, const Tensor& w,
                         const Tensor& b) {
  const Tensor x = build_spatial_input(sample, view);
  if (w.rows() != x.cols() || b.cols() != w.cols() || b.rows() != 1)
    throw ShapeError("spatial_embedding weights " + shape_str(w) + " vs input " + shape_str(x));
  Tensor out(x.rows(), w.cols());
  kernels::gemm_nn(x.data(), x.rows(), x.cols(), w.data(), w.cols(), out.data(), false);
  for (int l = 0; l < out.rows(); ++l)
    kernels::backend().add(out.cols(), out.row(l), b.data(), out.row(l));
  return out;
}

Tensor fourier_features(const std::vector<double>& stamps, int d, const FourierBasis& basis,
                        const Tensor& w, const Tensor& b) {
  const Tensor raw = build_temporal_raw(stamps, d, basis);
  if (w.rows() != raw.cols() || b.cols() != w.cols() || b.rows() != 1)
    throw ShapeError("fourier projection " + shape_str(w) + " vs raw " + shape_str(raw));
  Tensor out(raw.rows(), w.cols());
  kernels::gemm_nn(raw.data(), raw.rows(), raw.cols(), w.data(), w.cols(), out.data(), false);
  for (int l = 0; l < out.rows(); ++l)
    kernels::backend().add(out.cols(), out.row(l), b.data(), out.row(l));
  return out;
}

EmbeddingBatch combine(const Tensor& spatial, const Tensor& temporal,
                       const TimeSeriesSample& sample, ContextView view) {
  if (!spatial.same_shape(temporal))
    throw ShapeError("combine " + shape_str(spatial) + " vs " + shape_str(temporal));
  EmbeddingBatch out;
  out.embedding = Tensor(spatial.rows(), spatial.cols());
  kernels::backend().add(spatial.size(), spatial.data(), temporal.data(),
                         out.embedding.data());
  out.validity = view_validity(sample, view);
  return out;
}

}  // namespace tvinr
