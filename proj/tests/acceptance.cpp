// Acceptance suite. Each criterion prints exactly one PASS/FAIL line; the
// process exits nonzero if any criterion fails. Pass criterion numbers as
// arguments to run a subset, e.g. `tvinr_acceptance 1 2 9`.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "tvinr/checkpoint.hpp"
#include "tvinr/tasks.hpp"
#include "tvinr/training.hpp"

using namespace tvinr;

namespace {

double wall_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<TimeSeriesSample> standardized_synth(SynthKind kind, int n, int L, int d,
                                                 int components, double noise,
                                                 std::uint64_t seed) {
  SynthSpec spec;
  spec.kind = kind;
  spec.n_series = n;
  spec.length = L;
  spec.dims = d;
  spec.components = components;
  spec.noise = noise;
  spec.seed = seed;
  auto data = synth_generate(spec);
  for (auto& s : data) standardize_channels(s);
  return data;
}

// ---------------------------------------------------------------- criterion 1
bool crit1_gradcheck(std::string& detail) {
  const auto t0 = std::chrono::steady_clock::now();
  TrainConfig cfg;
  cfg.d_model = 16;
  cfg.dim_z = 4;
  cfg.heads = 2;
  cfg.enc_layers = 1;
  cfg.gen_layers = {16, 16};
  cfg.hyper_layers = {16, 16};
  cfg.fourier_m = 8;
  cfg.seed = 1;

  auto sample = standardized_synth(SynthKind::SineMix, 1, 32, 2, 2, 0.05, 1)[0];
  Rng rng(2);
  for (int i = 0; i < 2; ++i) {
    const int l = int(rng.uniform_index(32)), j = int(rng.uniform_index(2));
    sample.features.at(l, j) = std::numeric_limits<double>::quiet_NaN();
    sample.set_state(l, j, CellState::Absent);
  }
  make_imputation_mask(sample, 0.6, rng);
  sample.covariates = {0.5, -0.25};

  TvInrModel model = TvInrModel::create(cfg, 2, 2);
  const GradCheckResult r = grad_check(model, sample, 1e-5, 120, rng);
  const double wall = wall_since(t0);
  char buf[200];
  std::snprintf(buf, sizeof(buf), "max_rel_err=%.3g (worst %s), probes=%d, wall=%.1fs",
                r.max_rel_err, r.worst_param.c_str(), r.probes, wall);
  detail = buf;
  return r.max_rel_err < 1e-4 && r.probes >= 100 && wall < 60.0;
}

// ---------------------------------------------------------------- criterion 2
bool crit2_kl(std::string& detail) {
  Rng rng(7);
  double worst_self = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const int dim = 1 + int(rng.uniform_index(8));
    GaussianLatent q, p;
    for (int j = 0; j < dim; ++j) {
      q.mu.push_back(rng.uniform(-5, 5));
      q.sigma.push_back(rng.uniform(1e-4, 6.0));
      p.mu.push_back(rng.uniform(-5, 5));
      p.sigma.push_back(rng.uniform(1e-4, 6.0));
    }
    if (kl_to_prior(q, p) < 0.0) {
      detail = "negative KL on random input";
      return false;
    }
    worst_self = std::max(worst_self, std::fabs(kl_to_prior(q, q)));
  }
  const GaussianLatent q1{{1.0}, {1.0}}, p1{{0.0}, {1.0}};
  const GaussianLatent q2{{0.0}, {2.0}}, p2{{0.0}, {1.0}};
  const double e1 = std::fabs(kl_to_prior(q1, p1) - 0.5);
  const double e2 = std::fabs(kl_to_prior(q2, p2) - (2.0 - 0.5 - std::log(2.0)));
  char buf[160];
  std::snprintf(buf, sizeof(buf), "self-KL<=%.2g, case1 err=%.2g, case2 err=%.2g", worst_self,
                e1, e2);
  detail = buf;
  return worst_self <= 1e-12 && e1 <= 1e-10 && e2 <= 1e-10;
}

// ---------------------------------------------------------------- criterion 3
bool crit3_masking_independence(std::string& detail) {
  TrainConfig cfg;
  cfg.d_model = 16;
  cfg.dim_z = 4;
  cfg.heads = 2;
  cfg.enc_layers = 1;
  cfg.gen_layers = {16};
  cfg.hyper_layers = {16};
  cfg.fourier_m = 8;
  cfg.lr = 2e-3;
  cfg.batch_size = 4;
  cfg.epochs = 20;
  cfg.beta = 0.01;
  cfg.seed = 3;
  auto data = standardized_synth(SynthKind::SineMix, 4, 40, 2, 2, 0.02, 5);
  const TvInrModel model = train(cfg, data, {}, {});

  TimeSeriesSample s = data[0];
  Rng rng(9);
  for (int i = 0; i < 6; ++i) {
    const int l = int(rng.uniform_index(40)), j = int(rng.uniform_index(2));
    if (s.state(l, j) == CellState::Observed) {
      s.features.at(l, j) = std::numeric_limits<double>::quiet_NaN();
      s.set_state(l, j, CellState::Absent);
    }
  }
  make_imputation_mask(s, 0.5, rng);

  // (a) inference predictions: perturbing Masked and Absent features must not
  // move a single bit (they are zero-filled out of the conditioning path).
  const auto base_cells = impute(model, s);
  TimeSeriesSample pert = s;
  Rng vandal(10);
  for (int l = 0; l < s.length(); ++l)
    for (int j = 0; j < s.dims(); ++j)
      if (s.state(l, j) != CellState::Observed)
        pert.features.at(l, j) = vandal.uniform(-1e9, 1e9);
  const auto pert_cells = impute(model, pert);
  if (base_cells.size() != pert_cells.size()) {
    detail = "prediction sets differ in size";
    return false;
  }
  for (std::size_t i = 0; i < base_cells.size(); ++i)
    if (base_cells[i].value != pert_cells[i].value) {
      detail = "prediction moved under masked/absent perturbation";
      return false;
    }

  // (b) loss and gradients: Absent cells never touch the objective. Masked
  // cells are reconstruction targets, so only Absent perturbations apply.
  Tensor eps(1, cfg.dim_z);
  Rng erng(11);
  for (int i = 0; i < cfg.dim_z; ++i) eps[i] = erng.normal();
  GradBuffer g1, g2;
  const ElboTerms a = model.eval_elbo(s, eps, &g1);
  TimeSeriesSample pert2 = s;
  for (int l = 0; l < s.length(); ++l)
    for (int j = 0; j < s.dims(); ++j)
      if (s.state(l, j) == CellState::Absent) pert2.features.at(l, j) = vandal.uniform(-1e9, 1e9);
  const ElboTerms b = model.eval_elbo(pert2, eps, &g2);
  if (a.loss != b.loss || a.recon != b.recon || a.kl != b.kl) {
    detail = "loss moved under absent-cell perturbation";
    return false;
  }
  for (std::size_t i = 0; i < g1.slots.size(); ++i) {
    if (g1.slots[i].empty() != g2.slots[i].empty()) {
      detail = "gradient sparsity changed";
      return false;
    }
    if (!g1.slots[i].empty() && Tensor::max_abs_diff(g1.slots[i], g2.slots[i]) != 0.0) {
      detail = "gradient moved under absent-cell perturbation";
      return false;
    }
  }
  detail = "predictions, loss, and gradients bit-identical";
  return true;
}

// ---------------------------------------------------------------- criterion 4
bool crit4_elbo_identity(std::string& detail) {
  TrainConfig cfg;
  cfg.d_model = 16;
  cfg.dim_z = 4;
  cfg.heads = 2;
  cfg.enc_layers = 1;
  cfg.gen_layers = {16};
  cfg.hyper_layers = {16};
  cfg.fourier_m = 8;
  cfg.lr = 2e-3;
  cfg.batch_size = 4;
  cfg.epochs = 25;
  cfg.beta = 0.75;  // a non-trivial weight makes the identity check meaningful
  cfg.seed = 4;
  auto data = standardized_synth(SynthKind::SineMix, 6, 36, 1, 2, 0.02, 6);

  long steps = 0;
  bool ok = true;
  TrainOptions opts;
  opts.sample_observer = [&](const ElboTerms& t, double beta) {
    ++steps;
    if (t.loss != t.recon + beta * t.kl || t.kl < 0.0) ok = false;
  };
  train(cfg, data, {}, opts);
  char buf[120];
  std::snprintf(buf, sizeof(buf), "loss == recon + beta*KL bitwise and KL >= 0 at %ld steps",
                steps);
  detail = buf;
  return ok && steps == long(cfg.epochs) * 6;
}

// ---------------------------------------------------------------- criterion 5
bool crit5_overfit(std::string& detail) {
  const auto t0 = std::chrono::steady_clock::now();
  TrainConfig cfg;
  cfg.task = TaskKind::Imputation;
  cfg.dim_z = 8;
  cfg.d_model = 32;
  cfg.heads = 2;
  cfg.enc_layers = 1;
  cfg.hyper_layers = {32, 64};
  cfg.gen_layers = {32, 32};
  cfg.fourier_m = 32;
  cfg.fourier_sigma = 2.0;
  cfg.lr = 3e-3;
  cfg.batch_size = 1;
  cfg.epochs = 800;  // cap allowed by the criterion is 2000
  cfg.beta = 0.01;
  cfg.seed = 55;
  const auto data = standardized_synth(SynthKind::SineMix, 1, 200, 1, 2, 0.0, 77);

  const TvInrModel model = train(cfg, data, {}, {});
  const GaussianLatent g = model.encode_view(data[0], ContextView::NonAbsent, "enc.post");
  const Tensor pred = model.predict_at(model.make_theta(g.mu, {}), data[0].stamps);
  double mse = 0;
  for (int l = 0; l < 200; ++l) {
    const double d = pred.at(l, 0) - data[0].features.at(l, 0);
    mse += d * d;
  }
  mse /= 200.0;
  const double wall = wall_since(t0);
  char buf[120];
  std::snprintf(buf, sizeof(buf), "recon MSE=%.2g after %d epochs, wall=%.0fs", mse, cfg.epochs,
                wall);
  detail = buf;
  return mse < 1e-2 && wall < 600.0;
}

// ---------------------------------------------------------------- criterion 6
struct Crit6Artifacts {
  std::string checkpoint_bytes;
  std::string report_text;
  double mse_tau[3] = {0, 0, 0};     // 0.05, 0.30, 0.50
  double oracle_tau[3] = {0, 0, 0};
  double wall = 0;
};

Crit6Artifacts run_crit6_pipeline() {
  const auto t0 = std::chrono::steady_clock::now();
  TrainConfig cfg;
  cfg.task = TaskKind::Imputation;
  cfg.dim_z = 12;
  cfg.d_model = 32;
  cfg.heads = 2;
  cfg.enc_layers = 2;
  cfg.hyper_layers = {32, 64};
  cfg.gen_layers = {32, 32, 32};
  cfg.fourier_m = 48;
  cfg.fourier_sigma = 2.0;
  cfg.lr = 2e-3;
  cfg.batch_size = 8;
  cfg.epochs = 1200;
  cfg.beta = 0.05;
  cfg.beta_warmup = 0;
  cfg.tau_set = {0.05, 0.30, 0.50, 0.75, 0.90, 1.0};
  cfg.seed = 2025;

  const auto train_set = standardized_synth(SynthKind::SineMix, 32, 200, 1, 1, 0.01, 11);
  const auto test_set = standardized_synth(SynthKind::SineMix, 30, 200, 1, 1, 0.01, 12);

  const TvInrModel model = train(cfg, train_set, {}, {});

  Crit6Artifacts out;
  EvalReport report;
  report.task = "imputation";
  const double taus[3] = {0.05, 0.30, 0.50};
  for (int ti = 0; ti < 3; ++ti) {
    Rng rng(777);
    for (const auto& w : test_set) {
      TimeSeriesSample s = w;
      make_imputation_mask(s, taus[ti], rng);
      const auto cells = impute(model, s);
      double om = 0;
      int on = 0;
      for (int l = 0; l < s.length(); ++l)
        if (s.state(l, 0) == CellState::Observed) {
          om += s.features.at(l, 0);
          ++on;
        }
      om = on ? om / double(on) : 0.0;
      double mm = 0, oo = 0;
      for (const auto& c : cells) {
        const double truth = s.features.at(c.stamp_index, c.channel);
        mm += (c.value - truth) * (c.value - truth);
        oo += (om - truth) * (om - truth);
      }
      mm /= double(cells.size());
      oo /= double(cells.size());
      out.mse_tau[ti] += mm;
      out.oracle_tau[ti] += oo;
      report.records.push_back({w.id, taus[ti], mm, 0.0});
    }
    out.mse_tau[ti] /= double(test_set.size());
    out.oracle_tau[ti] /= double(test_set.size());
  }
  out.report_text = report.to_string();

  const std::string ckpt = "/tmp/tvinr_accept_c6.ckpt";
  CheckpointMeta meta;
  save_checkpoint(ckpt, model, meta);
  std::ifstream f(ckpt, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  out.checkpoint_bytes = ss.str();
  out.wall = wall_since(t0);
  return out;
}

Crit6Artifacts* g_crit6 = nullptr;

bool crit6_unified_imputation(std::string& detail) {
  static Crit6Artifacts art = run_crit6_pipeline();
  g_crit6 = &art;
  char buf[300];
  std::snprintf(buf, sizeof(buf),
                "MSE(tau)/oracle: 0.05: %.3f/%.3f  0.30: %.3f/%.3f  0.50: %.3f/%.3f, wall=%.0fs",
                art.mse_tau[0], art.oracle_tau[0], art.mse_tau[1], art.oracle_tau[1],
                art.mse_tau[2], art.oracle_tau[2], art.wall);
  detail = buf;
  bool ok = art.wall < 1800.0;
  for (int i = 0; i < 3; ++i) ok = ok && art.mse_tau[i] <= 0.5 * art.oracle_tau[i];
  ok = ok && art.mse_tau[2] <= art.mse_tau[0];
  return ok;
}

// ---------------------------------------------------------------- criterion 7
bool crit7_unified_forecasting(std::string& detail) {
  const auto t0 = std::chrono::steady_clock::now();
  TrainConfig cfg;
  cfg.task = TaskKind::Forecasting;
  cfg.history = 512;
  cfg.horizons = {96, 192, 336, 720};
  cfg.dim_z = 12;
  cfg.d_model = 32;
  cfg.heads = 2;
  cfg.enc_layers = 1;
  cfg.hyper_layers = {32, 64};
  cfg.gen_layers = {32, 32};
  cfg.fourier_m = 48;
  cfg.fourier_sigma = 2.0;
  cfg.lr = 1.5e-3;
  cfg.batch_size = 4;
  cfg.epochs = 250;
  cfg.beta = 0.005;
  cfg.beta_warmup = 100;
  cfg.seed = 31;

  const auto train_set =
      standardized_synth(SynthKind::TrendSeasonal, 12, 512 + 720, 1, 1, 0.02, 41);
  const auto test_set =
      standardized_synth(SynthKind::TrendSeasonal, 30, 512 + 720, 1, 1, 0.02, 42);

  const TvInrModel model = train(cfg, train_set, {}, {});

  // one checkpoint, four horizons, no retraining in between
  int wins96 = 0;
  double msum[4] = {0, 0, 0, 0};
  const int horizons[4] = {96, 192, 336, 720};
  bool finite = true;
  for (int hi = 0; hi < 4; ++hi) {
    const int F = horizons[hi];
    for (const auto& w : test_set) {
      const TimeSeriesSample win = head_window(w, 512 + F);
      const TimeSeriesSample hist = head_window(win, 512);
      std::vector<double> fstamps(win.stamps.begin() + 512, win.stamps.end());
      const Tensor pred = forecast(model, hist, fstamps);
      finite = finite && pred.all_finite();
      const double last = hist.features.at(511, 0);
      double mm = 0, lv = 0;
      for (int i = 0; i < F; ++i) {
        const double truth = win.features.at(512 + i, 0);
        mm += (pred.at(i, 0) - truth) * (pred.at(i, 0) - truth);
        lv += (last - truth) * (last - truth);
      }
      msum[hi] += mm / F;
      if (F == 96 && mm < lv) ++wins96;
    }
    msum[hi] /= double(test_set.size());
  }
  const double wall = wall_since(t0);
  char buf[240];
  std::snprintf(buf, sizeof(buf),
                "F=96 beats last-value on %d/30, MSE(F)=%.3f/%.3f/%.3f/%.3f, wall=%.0fs", wins96,
                msum[0], msum[1], msum[2], msum[3], wall);
  detail = buf;
  return wins96 >= 21 && finite && wall < 2700.0;
}

// ---------------------------------------------------------------- criterion 8
bool crit8_determinism(std::string& detail) {
  if (!g_crit6) {
    detail = "criterion 6 artifacts unavailable (run criterion 6 first)";
    return false;
  }
  const Crit6Artifacts second = run_crit6_pipeline();
  const bool ckpt_same = second.checkpoint_bytes == g_crit6->checkpoint_bytes;
  const bool report_same = second.report_text == g_crit6->report_text;
  detail = std::string("checkpoint bytes ") + (ckpt_same ? "identical" : "DIFFER") +
           ", report bytes " + (report_same ? "identical" : "DIFFER");
  return ckpt_same && report_same;
}

// ---------------------------------------------------------------- criterion 9
struct WelchCase {
  std::vector<double> a, b;
  double t, df, p;
};
const WelchCase kWelchCases[] = {
  {{0.640375,-0.570623,1.14495,0.914634,0.483773,-2.686284,1.016921,-0.66486,1.928141,1.883599,-0.955055}, {-0.975672,-1.929362,0.931473,-0.843783}, 1.3598250522165215, 6.1985030206615852, 0.22126715270960082},
  {{0.450963,0.151491,1.854403,-1.508439,2.49956,2.023775,-2.39529,-1.06231,-0.780932,2.422217,-1.09482}, {0.231644,-0.563816,-0.473603,-0.48635,2.593652,-0.72939,-2.84187}, 0.69507646732675953, 13.725064292389009, 0.49860681886000823},
  {{-2.172571,-1.319154,-1.483369,-0.921064,-1.044577,0.098907,-1.931539,-2.169858,-2.137884}, {-2.002335,-2.711706,2.755567,-2.901407,2.282009}, -0.73537177349247723, 4.3306409060383229, 0.4999626128681107},
  {{-1.76557,-1.531525,-2.829202,1.614736,-1.563331,1.04656}, {-0.390291,-2.975631,-0.443078,-0.775867,-0.152843,2.883954,2.908119,2.852898,0.599422,-2.674299,-1.901912,0.766972}, -0.96358603247437167, 11.700902668271858, 0.35474580811240189},
  {{-2.948988,0.427279,-1.015861,1.273032,1.550043,-2.281727,0.993153,-0.120946}, {-1.091607,-2.710251,-2.419864,1.108148,-2.253122,1.951849,-2.656416,2.785064,1.683634,0.075913}, 0.097194785076583861, 15.999490695030184, 0.92377885855506897},
  {{-1.61089,2.103364,-2.966583,-0.250253,1.705195,2.309815,-2.552483,-0.800295,1.002453}, {0.439436,-1.976809,0.222129,1.213933,0.062049,-1.27429,0.351043,-0.344166}, 0.0600380781532613, 12.157220731678481, 0.95310097964666378},
  {{-0.773623,0.78109,-2.355649,2.869472,0.509054,-0.211875,0.908788,-1.467688,2.776711}, {1.23124,-2.822239,-0.459243,-0.799452,-1.025113}, 1.2712188858829111, 9.9517911969502824, 0.23255857036498471},
  {{2.466547,-0.607049,-2.2155,1.356263,1.085176,2.479771}, {0.493903,-1.659267,-1.558414,0.02345,2.852407}, 0.6542925399814777, 8.653311093858389, 0.52992621632907222},
  {{-2.535915,-0.193355,2.565424,-2.750701,-0.712256}, {2.985713,-1.008451,0.375494,1.20732,0.377831,-0.70398,-2.700344}, -0.68063182765334121, 7.7146484772754957, 0.51600742684069899},
  {{-1.204552,2.694315,-1.499208,2.80275,0.85989,-1.95198,1.41648,-1.52662,1.356086}, {-0.344396,-1.462008,-0.239941,1.870376,2.080945,-0.684375,-1.671122,-2.60135,-2.124534,2.27523,-1.312812}, 0.86852410780772977, 16.524354056015626, 0.3975467318091536},
};

bool crit9_welch(std::string& detail) {
  double worst = 0.0;
  for (const auto& c : kWelchCases) {
    const WelchResult r = welch_t_test(c.a, c.b);
    worst = std::max({worst, std::fabs(r.t - c.t), std::fabs(r.df - c.df),
                      std::fabs(r.p - c.p)});
  }
  const std::vector<double> same = {0.4, 1.1, -0.3, 2.2};
  const WelchResult id = welch_t_test(same, same);
  char buf[120];
  std::snprintf(buf, sizeof(buf), "worst |err|=%.2g over 10 pairs; identical lists t=%g p=%g",
                worst, id.t, id.p);
  detail = buf;
  return worst < 1e-10 && id.t == 0.0 && id.p == 1.0;
}

// --------------------------------------------------------------- criterion 10
bool crit10_structural_parity(std::string& detail) {
  TrainConfig cfg;  // defaults are the L=200 univariate setting
  cfg.dim_z = 32;
  cfg.d_model = 128;
  cfg.heads = 2;
  cfg.enc_layers = 2;
  cfg.hyper_layers = {128, 256};
  cfg.gen_layers = {64, 64, 64};
  cfg.fourier_m = 256;
  cfg.fourier_sigma = 2.0;
  cfg.lr = 1e-4;
  cfg.batch_size = 256;
  cfg.seed = 10;
  const TvInrModel model = TvInrModel::create(cfg, 1, 0);

  // brute-force shape enumeration, independent of param_count()
  std::size_t brute = 0;
  int in = 128;
  for (int h : {64, 64, 64}) {
    brute += std::size_t(in) * h + h;
    in = h;
  }
  brute += std::size_t(in) * 1 + 1;

  const InrArchitecture arch = model.inr_arch();
  const Tensor& hw = model.params().value("hyper.out.W");
  const Tensor& hb = model.params().value("hyper.out.b");
  char buf[200];
  std::snprintf(buf, sizeof(buf),
                "N_theta formula=%zu brute=%zu, hyper out %dx%d(+%d bias)",
                arch.param_count(), brute, hw.rows(), hw.cols(), hb.cols());
  detail = buf;
  return arch.param_count() == brute && brute == 16641u && hw.rows() == 256 &&
         hw.cols() == 16641 && hb.cols() == 16641 &&
         model.params().value("embed.fourier.B").rows() == 256 &&
         model.params().value("embed.fourier.W").rows() == 512 &&
         model.params().value("embed.fourier.W").cols() == 128;
}

struct Criterion {
  int id;
  const char* title;
  std::function<bool(std::string&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  const std::vector<Criterion> criteria = {
      {1, "gradient correctness vs central finite differences", crit1_gradcheck},
      {2, "diagonal-Gaussian KL properties and closed forms", crit2_kl},
      {3, "masking independence of predictions, loss, gradients", crit3_masking_independence},
      {4, "ELBO identity and KL sign at every training step", crit4_elbo_identity},
      {5, "single-series overfit sanity", crit5_overfit},
      {6, "unified-model imputation beats mean oracle by 50%", crit6_unified_imputation},
      {7, "unified-model forecasting beats last-value carry", crit7_unified_forecasting},
      {8, "bytewise determinism of checkpoint and report", crit8_determinism},
      {9, "Welch t-test matches high-precision reference", crit9_welch},
      {10, "structural parity of the default configuration", crit10_structural_parity},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    std::string detail;
    bool ok = false;
    try {
      ok = c.run(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    std::printf("[%s] criterion %2d: %s (%s)\n", ok ? "PASS" : "FAIL", c.id, c.title,
                detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
  }
  return failures;
}
