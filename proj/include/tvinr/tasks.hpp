#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "tvinr/model.hpp"

namespace tvinr {

struct PredictedCell {
  int stamp_index = 0;
  int channel = 0;
  double value = 0.0;
};

/// Predict the Masked cells of a pre-masked sample. Conditioning uses the
/// posterior-role encoder on the observed cells with the latent taken at its
/// mean; n_latent_samples > 1 instead averages predictions over that many
/// reparameterized draws (rng required then).
std::vector<PredictedCell> impute(const TvInrModel& model, const TimeSeriesSample& sample,
                                  int n_latent_samples = 1, Rng* rng = nullptr);

/// Forecast at the given stamps from an observed history sample, conditioning
/// the prior-role encoder on the history. Every stamp must lie strictly
/// beyond the last history stamp. Output is |stamps|×d.
Tensor forecast(const TvInrModel& model, const TimeSeriesSample& history,
                const std::vector<double>& forecast_stamps);

/// Means of squared and absolute error over cells where target_mask is
/// nonzero. Errors on an empty target set.
std::pair<double, double> mse_mae(const Tensor& predictions, const Tensor& truth,
                                  const std::vector<std::uint8_t>& target_mask);

struct WelchResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
};

/// Welch's two-sample t-test with Welch-Satterthwaite degrees of freedom and
/// a two-sided p-value. Lists need >= 2 entries each.
WelchResult welch_t_test(const std::vector<double>& a, const std::vector<double>& b);

/// Regularized incomplete beta I_x(a, b); exposed for the statistics tests.
double incomplete_beta(double a, double b, double x);

struct EvalRecord {
  std::string window_id;
  double setting = 0.0;  // tau for imputation, F for forecasting
  double mse = 0.0;
  double mae = 0.0;
};

struct EvalReport {
  std::string task;  // "imputation" | "forecasting"
  std::vector<EvalRecord> records;

  double aggregate_mse() const;
  double aggregate_mae() const;
  void write(std::ostream& out) const;
  std::string to_string() const;
  static EvalReport read(std::istream& in, const std::string& name);
  static EvalReport read_file(const std::string& path);
};

}  // namespace tvinr
