#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "tvinr/rng.hpp"
#include "tvinr/tensor.hpp"

namespace tvinr {

// Cell status. Observed cells are model context, Masked cells are hidden
// reconstruction targets, Absent cells are inherently missing and excluded
// from every loss and metric.
enum class CellState : std::uint8_t { Observed = 0, Masked = 1, Absent = 2 };

/// One multivariate series window: stamps in [0,1], an L×d value grid with
/// NaN at Absent cells, static covariates, and the per-cell mask.
struct TimeSeriesSample {
  std::string id;
  std::vector<double> stamps;      // length L, strictly increasing, in [0,1]
  Tensor features;                 // L×d, NaN exactly at Absent cells
  std::vector<double> covariates;  // length k (may be empty)
  std::vector<CellState> mask;     // L*d, row-major

  int length() const { return int(stamps.size()); }
  int dims() const { return features.cols(); }

  CellState state(int l, int j) const { return mask[std::size_t(l) * dims() + j]; }
  void set_state(int l, int j, CellState s) { mask[std::size_t(l) * dims() + j] = s; }

  std::size_t count(CellState s) const;
  /// tau = |Observed| / (|Observed| + |Masked|). Requires at least one
  /// non-Absent cell.
  double observed_ratio() const;
  /// Fails loudly if the mask/feature invariants are broken.
  void validate() const;
};

struct ChannelStats {
  std::vector<double> mean;
  std::vector<double> stddev;  // >= kStdFloor
};

inline constexpr double kStdFloor = 1e-8;

struct SplitPlan {
  int window_len = 0;
  int stride = 1;
  int test_windows = 0;
  int train_ratio = 5;  // train:val = train_ratio:1
};

struct WindowSplit {
  std::vector<TimeSeriesSample> train;
  std::vector<TimeSeriesSample> val;
  std::vector<TimeSeriesSample> test;
};

/// Standardize each channel in place using population statistics over its
/// non-Absent cells; returns the stats needed to invert the transform.
/// Channels with no non-Absent cell pass through with mean 0, stddev 1.
ChannelStats standardize_channels(TimeSeriesSample& sample);

/// Inverse of standardize_channels on non-Absent cells.
void destandardize_channels(TimeSeriesSample& sample, const ChannelStats& stats);

/// Keep exactly round(tau * n_avail) non-Absent cells Observed (chosen
/// uniformly without replacement), mark the rest Masked. The input mask must
/// contain no Masked cells.
void make_imputation_mask(TimeSeriesSample& sample, double tau, Rng& rng);

/// Stamps with index >= history_len become Masked (Absent cells stay Absent).
/// Requires history_len + forecast_len == L, both >= 1.
void make_forecast_mask(TimeSeriesSample& sample, int history_len, int forecast_len);

/// First n stamps of a sample, keeping stamp coordinates as they are.
TimeSeriesSample head_window(const TimeSeriesSample& sample, int n);

/// Slice a long series into train/val/test windows. Test windows are the
/// last plan.test_windows non-overlapping length-L segments; the remaining
/// prefix is strided and windows are assigned train_ratio:1, sending window
/// indices divisible by (train_ratio+1) to validation.
WindowSplit window_series(const TimeSeriesSample& series, const SplitPlan& plan);

// CSV contract: header `series_id,t,y0[,y1,...][,c0,...]`, rows grouped by
// series with strictly increasing t, empty value field = Absent, covariate
// columns constant within a series. Stamps are min-max normalized to [0,1]
// per series.
std::vector<TimeSeriesSample> load_csv(const std::string& path);
std::vector<TimeSeriesSample> load_csv_stream(std::istream& in, const std::string& name);
void write_csv(std::ostream& out, const std::vector<TimeSeriesSample>& samples);

enum class SynthKind { SineMix, DampedSine, TrendSeasonal };
SynthKind synth_kind_from_string(const std::string& s);
const char* to_string(SynthKind k);

struct SynthSpec {
  SynthKind kind = SynthKind::SineMix;
  int n_series = 1;
  int length = 200;
  int dims = 1;
  int components = 2;    // sine terms per channel (SineMix only)
  double noise = 0.0;    // additive Gaussian sigma
  std::uint64_t seed = 0;
};

// Synthetic generators, deterministic by seed. Parameter ranges:
//   sine-mix:       y = offset + sum_c a_c sin(2*pi*f_c t + phi_c),
//                   offset in [-0.5,0.5], a in [0.5,1.5], f integer in {1..4},
//                   phi in [0,2*pi)
//   damped-sine:    y = offset + a exp(-lambda t) sin(2*pi*f t + phi),
//                   lambda in [1,3], a in [0.5,1.5], f integer in {2..5}
//   trend-seasonal: y = b0 + b1 t + a sin(2*pi*f t + phi),
//                   b0 in [-0.5,0.5], b1 in [-2,2], a in [0.3,1.0],
//                   f integer in {2..6}
// Stamps are the regular grid l/(L-1). All cells Observed.
std::vector<TimeSeriesSample> synth_generate(const SynthSpec& spec);

}  // namespace tvinr
