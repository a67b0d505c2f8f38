#include "tvinr/tasks.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "tvinr/errors.hpp"

namespace tvinr {

std::vector<PredictedCell> impute(const TvInrModel& model, const TimeSeriesSample& sample,
                                  int n_latent_samples, Rng* rng) {
  if (sample.count(CellState::Observed) == 0)
    throw EmptyContextError("impute needs at least one observed cell");
  if (n_latent_samples < 1) throw std::invalid_argument("n_latent_samples must be >= 1");
  if (n_latent_samples > 1 && !rng)
    throw std::invalid_argument("latent sampling requires an rng");

  const GaussianLatent g =
      model.encode_view(sample, ContextView::ObservedOnly, "enc.post");
  Tensor mean_pred;
  for (int s = 0; s < n_latent_samples; ++s) {
    std::vector<double> z = g.mu;
    if (n_latent_samples > 1)
      for (std::size_t i = 0; i < z.size(); ++i) z[i] += g.sigma[i] * rng->normal();
    const InrParameters theta = model.make_theta(z, sample.covariates);
    Tensor pred = model.predict_at(theta, sample.stamps);
    if (mean_pred.empty()) {
      mean_pred = std::move(pred);
    } else {
      for (std::size_t i = 0; i < mean_pred.size(); ++i) mean_pred[i] += pred[i];
    }
  }
  if (n_latent_samples > 1)
    for (std::size_t i = 0; i < mean_pred.size(); ++i) mean_pred[i] /= n_latent_samples;

  std::vector<PredictedCell> out;
  for (int l = 0; l < sample.length(); ++l)
    for (int j = 0; j < sample.dims(); ++j)
      if (sample.state(l, j) == CellState::Masked)
        out.push_back({l, j, mean_pred.at(l, j)});
  return out;
}

Tensor forecast(const TvInrModel& model, const TimeSeriesSample& history,
                const std::vector<double>& forecast_stamps) {
  if (history.count(CellState::Observed) == 0)
    throw EmptyContextError("forecast needs observed history");
  double horizon = -std::numeric_limits<double>::infinity();
  for (int l = 0; l < history.length(); ++l)
    for (int j = 0; j < history.dims(); ++j)
      if (history.state(l, j) == CellState::Observed)
        horizon = std::max(horizon, history.stamps[l]);
  for (double t : forecast_stamps)
    if (!(t > horizon))
      throw InvalidSplitError("forecast stamp " + std::to_string(t) +
                              " not beyond history horizon " + std::to_string(horizon));
  const GaussianLatent g =
      model.encode_view(history, ContextView::ObservedOnly, "enc.prior");
  const InrParameters theta = model.make_theta(g.mu, history.covariates);
  return model.predict_at(theta, forecast_stamps);
}

std::pair<double, double> mse_mae(const Tensor& predictions, const Tensor& truth,
                                  const std::vector<std::uint8_t>& target_mask) {
  if (!predictions.same_shape(truth)) throw ShapeError("mse_mae: shape mismatch");
  if (target_mask.size() != predictions.size()) throw ShapeError("mse_mae: mask size mismatch");
  double se = 0.0, ae = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (!target_mask[i]) continue;
    const double d = predictions[i] - truth[i];
    se += d * d;
    ae += std::fabs(d);
    ++n;
  }
  if (n == 0) throw std::invalid_argument("mse_mae: empty target set");
  return {se / double(n), ae / double(n)};
}

namespace {

/// Continued-fraction core of the regularized incomplete beta (Lentz).
double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-16;
  constexpr double kFpMin = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0, d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
  return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

WelchResult welch_t_test(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t na = a.size(), nb = b.size();
  if (na < 2 || nb < 2) throw std::invalid_argument("welch_t_test: lists need >= 2 entries");
  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / double(v.size());
  };
  auto var = [](const std::vector<double>& v, double m) {
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / double(v.size() - 1);  // sample variance
  };
  const double ma = mean(a), mb = mean(b);
  const double va = var(a, ma), vb = var(b, mb);
  WelchResult r;
  if (va == 0.0 && vb == 0.0) {
    if (ma == mb) {
      r.t = 0.0;
      r.df = double(na + nb - 2);
      r.p = 1.0;
      return r;
    }
    r.t = ma > mb ? std::numeric_limits<double>::infinity()
                  : -std::numeric_limits<double>::infinity();
    r.df = double(na + nb - 2);
    r.p = 0.0;
    return r;
  }
  const double sa = va / double(na), sb = vb / double(nb);
  r.t = (ma - mb) / std::sqrt(sa + sb);
  r.df = (sa + sb) * (sa + sb) /
         (sa * sa / double(na - 1) + sb * sb / double(nb - 1));
  // Two-sided p through the Student-t CDF: p = I_{df/(df+t^2)}(df/2, 1/2).
  r.p = incomplete_beta(r.df / 2.0, 0.5, r.df / (r.df + r.t * r.t));
  return r;
}

double EvalReport::aggregate_mse() const {
  double s = 0.0;
  for (const auto& r : records) s += r.mse;
  return records.empty() ? 0.0 : s / double(records.size());
}

double EvalReport::aggregate_mae() const {
  double s = 0.0;
  for (const auto& r : records) s += r.mae;
  return records.empty() ? 0.0 : s / double(records.size());
}

void EvalReport::write(std::ostream& out) const {
  out << "TVINR-REPORT 1\n";
  out << "task " << task << "\n";
  char buf[160];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof(buf), "window %s %.17g %.17g %.17g", r.window_id.c_str(),
                  r.setting, r.mse, r.mae);
    out << buf << "\n";
  }
  std::snprintf(buf, sizeof(buf), "aggregate %zu %.17g %.17g", records.size(),
                aggregate_mse(), aggregate_mae());
  out << buf << "\n";
}

std::string EvalReport::to_string() const {
  std::ostringstream os;
  write(os);
  return os.str();
}

EvalReport EvalReport::read(std::istream& in, const std::string& name) {
  EvalReport rep;
  std::string line;
  long lineno = 0;
  if (!std::getline(in, line) || line != "TVINR-REPORT 1")
    throw ParseError(name + " is not an eval report", 1);
  ++lineno;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "task") {
      ls >> rep.task;
    } else if (key == "window") {
      EvalRecord r;
      ls >> r.window_id >> r.setting >> r.mse >> r.mae;
      if (!ls) throw ParseError("bad window record", lineno);
      rep.records.push_back(std::move(r));
    } else if (key == "aggregate") {
      std::size_t n;
      ls >> n;
      if (n != rep.records.size()) throw ParseError("aggregate count mismatch", lineno);
    } else {
      throw ParseError("unknown report line '" + key + "'", lineno);
    }
  }
  return rep;
}

EvalReport EvalReport::read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open report " + path);
  return read(in, path);
}

}  // namespace tvinr
