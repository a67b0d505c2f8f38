#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "tvinr/model.hpp"

namespace tvinr {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Apply one Adam update from store.grad (assumed already averaged over the
/// batch). t is the 1-based step count for bias correction.
void adam_step(ParameterStore& store, double lr, const AdamConfig& acfg, long t);

struct TrainInfo {
  long best_epoch = 0;
  double best_val = 0.0;
  double final_train = 0.0;
  std::string rng_state;
};

struct TrainOptions {
  int threads = 1;
  std::ostream* log = nullptr;  // per-epoch `epoch=<n> train=<f> val=<f> kl=<f>` lines
  /// Called after every per-sample loss evaluation with (terms, effective
  /// beta). Setting it forces single-threaded evaluation.
  std::function<void(const ElboTerms&, double)> sample_observer;
};

/// Build a fresh model and optimize the ELBO. Each epoch draws, per sample, a
/// tau from the config's tau set (imputation) or a horizon from its horizon
/// set (forecasting), masks accordingly, and averages gradients over
/// mini-batches. Returns the parameters of the best validation epoch.
/// Throws DivergenceError when the loss stops being finite.
TvInrModel train(const TrainConfig& cfg, const std::vector<TimeSeriesSample>& train_set,
                 const std::vector<TimeSeriesSample>& val_set, const TrainOptions& opts,
                 TrainInfo* info = nullptr);

/// Validation loss of an existing model under the same masking protocol
/// train() uses (deterministic masks, eps = 0).
ElboTerms validation_loss(const TvInrModel& model, const std::vector<TimeSeriesSample>& val_set,
                          std::uint64_t mask_seed);

struct GradCheckResult {
  double max_rel_err = 0.0;
  std::string worst_param;
  int probes = 0;
};

/// Compare analytic gradients of the ELBO against central finite differences
/// on a random subset of scalars drawn from every trainable parameter group.
/// The sample must already be masked; reparameterization noise is held fixed.
GradCheckResult grad_check(TvInrModel& model, const TimeSeriesSample& masked_sample,
                           double eps_fd, int min_probes, Rng& rng);

/// Masked training view of one sample for the configured task.
TimeSeriesSample apply_task_mask(const TimeSeriesSample& base, const TrainConfig& cfg, Rng& rng);

}  // namespace tvinr
