#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "tvinr/dataset.hpp"
#include "tvinr/rng.hpp"
#include "tvinr/tensor.hpp"

namespace tvinr {

// Which cells count as encoder context. The conditional prior sees Observed
// cells only; the approximate posterior sees everything non-Absent.
enum class ContextView { ObservedOnly, NonAbsent };

inline bool in_view(CellState s, ContextView v) {
  return v == ContextView::ObservedOnly ? s == CellState::Observed : s != CellState::Absent;
}

/// Random Fourier basis over (time, channel) coordinate pairs. B is m×2 with
/// entries drawn once from N(0, sigma²) and never trained.
struct FourierBasis {
  int m = 0;
  double sigma = 1.0;
  Tensor freq;  // m×2

  static FourierBasis init(int m, double sigma, Rng& rng);

  /// Raw encoding [cos(2π B·x), sin(2π B·x)] of one (t, channel) pair.
  void raw(double t, double chan, double* out2m) const;
};

struct EmbeddingBatch {
  Tensor embedding;                   // L×d_model
  std::vector<std::uint8_t> validity; // length L, 1 iff >=1 context channel
};

/// Channel coordinate grid: cell (l,j) pairs stamp t_l with channel
/// coordinate j/max(d-1,1). Returned row-major as (t, chan) pairs.
std::vector<std::array<double, 2>> expand_channels(const std::vector<double>& stamps, int d);

/// Zero-filled features concatenated with the context indicator, L×2d.
/// Values at cells outside the view never reach the output.
Tensor build_spatial_input(const TimeSeriesSample& sample, ContextView view);

/// Per-position raw Fourier features, mean-pooled over the d channel
/// coordinates, L×2m. Constant w.r.t. learned parameters.
Tensor build_temporal_raw(const std::vector<double>& stamps, int d, const FourierBasis& basis);

/// Raw Fourier features of bare time queries (channel coordinate 0), L×2m.
/// This is the generator-side coordinate encoding before projection.
Tensor build_query_raw(const std::vector<double>& stamps, const FourierBasis& basis);

/// Validity flags for a view: row l is valid iff it has >=1 cell in view.
std::vector<std::uint8_t> view_validity(const TimeSeriesSample& sample, ContextView view);

// Plain (non-autodiff) forms of the embedding operations; the training path
// builds the same arithmetic on a tape.

/// Affine spatial encoding: [Y~; Omega] * W + b.
Tensor spatial_embedding(const TimeSeriesSample& sample, ContextView view, const Tensor& w,
                         const Tensor& b);

/// Projected Fourier temporal encoding (mean-pooled over channels).
Tensor fourier_features(const std::vector<double>& stamps, int d, const FourierBasis& basis,
                        const Tensor& w, const Tensor& b);

/// E = spatial + temporal with validity flags from the view.
EmbeddingBatch combine(const Tensor& spatial, const Tensor& temporal,
                       const TimeSeriesSample& sample, ContextView view);

}  // namespace tvinr
