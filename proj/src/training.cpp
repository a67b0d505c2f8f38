#include "tvinr/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <set>
#include <thread>

#include "tvinr/errors.hpp"
#include "tvinr/kernels.hpp"

namespace tvinr {

void adam_step(ParameterStore& store, double lr, const AdamConfig& acfg, long t) {
  const double bc1 = 1.0 - std::pow(acfg.beta1, double(t));
  const double bc2 = 1.0 - std::pow(acfg.beta2, double(t));
  for (int i = 0; i < store.size(); ++i) {
    auto& e = store.entry(i);
    if (!e.trainable) continue;
    for (std::size_t j = 0; j < e.value.size(); ++j) {
      const double g = e.grad[j];
      e.adam_m[j] = acfg.beta1 * e.adam_m[j] + (1.0 - acfg.beta1) * g;
      e.adam_v[j] = acfg.beta2 * e.adam_v[j] + (1.0 - acfg.beta2) * g * g;
      const double mhat = e.adam_m[j] / bc1;
      const double vhat = e.adam_v[j] / bc2;
      e.value[j] -= lr * mhat / (std::sqrt(vhat) + acfg.eps);
    }
  }
}

TimeSeriesSample apply_task_mask(const TimeSeriesSample& base, const TrainConfig& cfg, Rng& rng) {
  if (cfg.task == TaskKind::Imputation) {
    TimeSeriesSample s = base;
    const double tau = cfg.tau_set[rng.uniform_index(cfg.tau_set.size())];
    make_imputation_mask(s, tau, rng);
    return s;
  }
  const int f = cfg.horizons[rng.uniform_index(cfg.horizons.size())];
  if (base.length() < cfg.history + f)
    throw InsufficientDataError("window " + base.id + " shorter than history+horizon");
  TimeSeriesSample s = head_window(base, cfg.history + f);
  make_forecast_mask(s, cfg.history, f);
  return s;
}

namespace {

struct SampleJob {
  TimeSeriesSample masked;
  Tensor eps;
};

/// Pre-draw all per-sample randomness in a fixed order so thread scheduling
/// cannot influence results.
std::vector<SampleJob> make_jobs(const std::vector<TimeSeriesSample>& set,
                                 const std::vector<int>& order, const TrainConfig& cfg,
                                 Rng& rng, bool zero_eps) {
  std::vector<SampleJob> jobs;
  jobs.reserve(order.size());
  for (int idx : order) {
    Rng ps(rng.next_u64());
    SampleJob j;
    j.masked = apply_task_mask(set[idx], cfg, ps);
    j.eps = Tensor(1, cfg.dim_z);
    if (!zero_eps)
      for (int i = 0; i < cfg.dim_z; ++i) j.eps[i] = ps.normal();
    jobs.push_back(std::move(j));
  }
  return jobs;
}

struct BatchResult {
  double loss = 0.0, recon = 0.0, kl = 0.0;
};

/// Evaluate jobs [begin, end); gradient accumulation is chunked per thread
/// and reduced in chunk order, keeping the sum independent of scheduling.
BatchResult eval_batch(const TvInrModel& model, const std::vector<SampleJob>& jobs,
                       std::size_t begin, std::size_t end, int threads, GradBuffer* grads,
                       double beta,
                       const std::function<void(const ElboTerms&, double)>& observer) {
  const std::size_t n = end - begin;
  const int nthreads = observer ? 1 : std::max(1, std::min<int>(threads, int(n)));
  std::vector<GradBuffer> chunk_grads(grads ? nthreads : 0);
  std::vector<BatchResult> chunk_res(nthreads);
  std::vector<std::string> chunk_err(nthreads);

  auto run_chunk = [&](int c) {
    const std::size_t lo = begin + n * c / nthreads;
    const std::size_t hi = begin + n * (c + 1) / nthreads;
    try {
      for (std::size_t i = lo; i < hi; ++i) {
        const ElboTerms t =
            model.eval_elbo(jobs[i].masked, jobs[i].eps, grads ? &chunk_grads[c] : nullptr, beta);
        if (observer) observer(t, beta);
        chunk_res[c].loss += t.loss;
        chunk_res[c].recon += t.recon;
        chunk_res[c].kl += t.kl;
      }
    } catch (const std::exception& e) {
      chunk_err[c] = e.what();
    }
  };

  if (nthreads == 1) {
    run_chunk(0);
  } else {
    std::vector<std::thread> pool;
    for (int c = 0; c < nthreads; ++c) pool.emplace_back(run_chunk, c);
    for (auto& th : pool) th.join();
  }
  for (int c = 0; c < nthreads; ++c)
    if (!chunk_err[c].empty()) throw std::runtime_error(chunk_err[c]);

  BatchResult total;
  for (int c = 0; c < nthreads; ++c) {
    total.loss += chunk_res[c].loss;
    total.recon += chunk_res[c].recon;
    total.kl += chunk_res[c].kl;
    if (grads)
      for (int s = 0; s < int(chunk_grads[c].slots.size()); ++s) {
        Tensor& src = chunk_grads[c].slots[s];
        if (src.empty()) continue;
        grads->ensure(model.params());
        Tensor& dst = grads->slots[s];
        if (dst.empty())
          dst = std::move(src);
        else
          kernels::backend().add(dst.size(), dst.data(), src.data(), dst.data());
      }
  }
  return total;
}

}  // namespace

ElboTerms validation_loss(const TvInrModel& model, const std::vector<TimeSeriesSample>& val_set,
                          std::uint64_t mask_seed) {
  if (val_set.empty()) return {};
  Rng vr(mask_seed);
  std::vector<int> order(val_set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = int(i);
  const auto jobs = make_jobs(val_set, order, model.config(), vr, /*zero_eps=*/true);
  ElboTerms out;
  for (const auto& j : jobs) {
    const ElboTerms t = model.eval_elbo(j.masked, j.eps, nullptr);  // full-beta objective
    out.loss += t.loss;
    out.recon += t.recon;
    out.kl += t.kl;
  }
  const double inv = 1.0 / double(jobs.size());
  out.loss *= inv;
  out.recon *= inv;
  out.kl *= inv;
  return out;
}

TvInrModel train(const TrainConfig& cfg, const std::vector<TimeSeriesSample>& train_set,
                 const std::vector<TimeSeriesSample>& val_set, const TrainOptions& opts,
                 TrainInfo* info) {
  cfg.validate();
  if (train_set.empty()) throw InsufficientDataError("empty training set");
  const int d = train_set[0].dims();
  const int k = int(train_set[0].covariates.size());
  for (const auto& s : train_set)
    if (s.dims() != d || int(s.covariates.size()) != k)
      throw ShapeError("training samples disagree on d or k");

  TvInrModel model = TvInrModel::create(cfg, d, k);
  Rng root(cfg.seed);
  Rng r_train = root.fork(100);
  const std::uint64_t val_seed = root.fork(101).next_u64();

  std::vector<int> order(train_set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = int(i);

  AdamConfig adam;
  long step = 0;
  double best_val = std::numeric_limits<double>::infinity();
  long best_epoch = -1;
  std::vector<Tensor> best_values;
  double last_train = 0.0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    r_train.shuffle(order);
    const auto jobs = make_jobs(train_set, order, cfg, r_train, /*zero_eps=*/false);
    const double eff_beta =
        cfg.beta_warmup > 0
            ? cfg.beta * std::min(1.0, double(epoch + 1) / double(cfg.beta_warmup))
            : cfg.beta;

    double ep_loss = 0.0, ep_kl = 0.0;
    GradBuffer grads;
    for (std::size_t b0 = 0; b0 < jobs.size(); b0 += cfg.batch_size) {
      const std::size_t b1 = std::min(jobs.size(), b0 + cfg.batch_size);
      grads.zero();
      const BatchResult r =
          eval_batch(model, jobs, b0, b1, opts.threads, &grads, eff_beta, opts.sample_observer);
      const double bn = double(b1 - b0);
      if (!std::isfinite(r.loss))
        throw DivergenceError("non-finite training loss at epoch " + std::to_string(epoch));
      grads.scale(1.0 / bn);
      model.params().zero_grads();
      grads.add_into(model.params());
      adam_step(model.params(), cfg.lr, adam, ++step);
      ep_loss += r.loss;
      ep_kl += r.kl;
    }
    ep_loss /= double(jobs.size());
    ep_kl /= double(jobs.size());
    last_train = ep_loss;

    double vloss = ep_loss;
    if (!val_set.empty()) {
      const ElboTerms v = validation_loss(model, val_set, val_seed);
      vloss = v.loss;
      if (!std::isfinite(vloss))
        throw DivergenceError("non-finite validation loss at epoch " + std::to_string(epoch));
    }
    if (opts.log) {
      char line[160];
      std::snprintf(line, sizeof(line), "epoch=%d train=%.10g val=%.10g kl=%.10g", epoch,
                    ep_loss, vloss, ep_kl);
      (*opts.log) << line << "\n";
    }
    if (vloss < best_val) {
      best_val = vloss;
      best_epoch = epoch;
      best_values.clear();
      for (int i = 0; i < model.params().size(); ++i)
        best_values.push_back(model.params().entry(i).value);
    }
  }

  if (best_epoch >= 0)
    for (int i = 0; i < model.params().size(); ++i)
      model.params().entry(i).value = best_values[i];
  model.sync_fourier_from_store();

  if (info) {
    info->best_epoch = best_epoch;
    info->best_val = best_val;
    info->final_train = last_train;
    info->rng_state = r_train.state();
  }
  return model;
}

GradCheckResult grad_check(TvInrModel& model, const TimeSeriesSample& masked_sample,
                           double eps_fd, int min_probes, Rng& rng) {
  Tensor eps(1, model.config().dim_z);
  for (int i = 0; i < eps.cols(); ++i) eps[i] = rng.normal();

  GradBuffer analytic;
  model.eval_elbo(masked_sample, eps, &analytic);

  std::vector<int> trainable;
  for (int i = 0; i < model.params().size(); ++i)
    if (model.params().entry(i).trainable) trainable.push_back(i);
  const int per_entry =
      std::max(1, int((min_probes + int(trainable.size()) - 1) / int(trainable.size())));

  GradCheckResult res;
  for (int slot : trainable) {
    auto& e = model.params().entry(slot);
    std::set<std::size_t> picked;
    const int want = std::min<std::size_t>(per_entry, e.value.size());
    while (int(picked.size()) < want) picked.insert(rng.uniform_index(e.value.size()));
    for (std::size_t idx : picked) {
      const double saved = e.value[idx];
      e.value[idx] = saved + eps_fd;
      const double up = model.eval_elbo(masked_sample, eps, nullptr).loss;
      e.value[idx] = saved - eps_fd;
      const double dn = model.eval_elbo(masked_sample, eps, nullptr).loss;
      e.value[idx] = saved;
      const double g_fd = (up - dn) / (2.0 * eps_fd);
      const double g_an = analytic.slots[slot].empty() ? 0.0 : analytic.slots[slot][idx];
      const double rel =
          std::fabs(g_an - g_fd) / std::max(1e-8, std::fabs(g_an) + std::fabs(g_fd));
      ++res.probes;
      if (rel > res.max_rel_err) {
        res.max_rel_err = rel;
        res.worst_param = e.name + "[" + std::to_string(idx) + "]";
      }
    }
  }
  return res;
}

}  // namespace tvinr
