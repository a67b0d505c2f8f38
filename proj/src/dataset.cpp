#include "tvinr/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "tvinr/errors.hpp"

namespace tvinr {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double parse_double(const std::string& tok, long line) {
  double v = 0.0;
  const char* b = tok.data();
  const char* e = b + tok.size();
  auto [p, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || p != e) throw ParseError("bad number '" + tok + "'", line);
  return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}
}  // namespace

std::size_t TimeSeriesSample::count(CellState s) const {
  std::size_t n = 0;
  for (CellState c : mask)
    if (c == s) ++n;
  return n;
}

double TimeSeriesSample::observed_ratio() const {
  const std::size_t obs = count(CellState::Observed);
  const std::size_t msk = count(CellState::Masked);
  if (obs + msk == 0) throw EmptyContextError("sample has no non-absent cells");
  return double(obs) / double(obs + msk);
}

void TimeSeriesSample::validate() const {
  const int L = length(), d = dims();
  if (features.rows() != L) throw ShapeError("features rows != stamp count");
  if (mask.size() != std::size_t(L) * d) throw ShapeError("mask size != L*d");
  for (int l = 0; l < L; ++l) {
    if (stamps[l] < 0.0 || stamps[l] > 1.0 + 1e-12)
      throw std::runtime_error("stamp outside [0,1] in sample " + id);
    if (l > 0 && !(stamps[l] > stamps[l - 1]))
      throw std::runtime_error("stamps not strictly increasing in sample " + id);
    for (int j = 0; j < d; ++j) {
      const double v = features.at(l, j);
      if (state(l, j) == CellState::Absent) {
        if (!std::isnan(v)) throw std::runtime_error("absent cell holds a number in " + id);
      } else if (!std::isfinite(v)) {
        throw std::runtime_error("non-finite value at non-absent cell in " + id);
      }
    }
  }
}

ChannelStats standardize_channels(TimeSeriesSample& sample) {
  const int L = sample.length(), d = sample.dims();
  ChannelStats st;
  st.mean.assign(d, 0.0);
  st.stddev.assign(d, 1.0);
  for (int j = 0; j < d; ++j) {
    double sum = 0.0;
    std::size_t n = 0;
    for (int l = 0; l < L; ++l)
      if (sample.state(l, j) != CellState::Absent) {
        sum += sample.features.at(l, j);
        ++n;
      }
    if (n == 0) continue;  // fully absent channel passes through
    const double mu = sum / double(n);
    double ss = 0.0;
    for (int l = 0; l < L; ++l)
      if (sample.state(l, j) != CellState::Absent) {
        const double c = sample.features.at(l, j) - mu;
        ss += c * c;
      }
    double sd = std::sqrt(ss / double(n));  // population variance
    if (sd < kStdFloor) sd = kStdFloor;
    st.mean[j] = mu;
    st.stddev[j] = sd;
    for (int l = 0; l < L; ++l)
      if (sample.state(l, j) != CellState::Absent)
        sample.features.at(l, j) = (sample.features.at(l, j) - mu) / sd;
  }
  return st;
}

void destandardize_channels(TimeSeriesSample& sample, const ChannelStats& stats) {
  const int L = sample.length(), d = sample.dims();
  if (int(stats.mean.size()) != d) throw ShapeError("stats dim != sample dims");
  for (int j = 0; j < d; ++j)
    for (int l = 0; l < L; ++l)
      if (sample.state(l, j) != CellState::Absent)
        sample.features.at(l, j) = sample.features.at(l, j) * stats.stddev[j] + stats.mean[j];
}

void make_imputation_mask(TimeSeriesSample& sample, double tau, Rng& rng) {
  if (tau < 0.0 || tau > 1.0) throw std::invalid_argument("tau outside [0,1]");
  std::vector<std::size_t> avail;
  for (std::size_t i = 0; i < sample.mask.size(); ++i) {
    if (sample.mask[i] == CellState::Masked)
      throw std::invalid_argument("make_imputation_mask: input already has masked cells");
    if (sample.mask[i] == CellState::Observed) avail.push_back(i);
  }
  const auto n_keep = std::size_t(std::llround(tau * double(avail.size())));
  rng.shuffle(avail);
  for (std::size_t i = n_keep; i < avail.size(); ++i)
    sample.mask[avail[i]] = CellState::Masked;
}

void make_forecast_mask(TimeSeriesSample& sample, int history_len, int forecast_len) {
  if (history_len < 1 || forecast_len < 1 || history_len + forecast_len != sample.length())
    throw InvalidSplitError("need H >= 1, F >= 1, H + F == L (got H=" +
                            std::to_string(history_len) + " F=" + std::to_string(forecast_len) +
                            " L=" + std::to_string(sample.length()) + ")");
  for (int l = history_len; l < sample.length(); ++l)
    for (int j = 0; j < sample.dims(); ++j)
      if (sample.state(l, j) == CellState::Observed) sample.set_state(l, j, CellState::Masked);
}

TimeSeriesSample head_window(const TimeSeriesSample& sample, int n) {
  if (n < 1 || n > sample.length()) throw InvalidSplitError("head_window length out of range");
  TimeSeriesSample out;
  out.id = sample.id;
  out.stamps.assign(sample.stamps.begin(), sample.stamps.begin() + n);
  out.covariates = sample.covariates;
  const int d = sample.dims();
  out.features = Tensor(n, d);
  out.mask.assign(std::size_t(n) * d, CellState::Observed);
  for (int l = 0; l < n; ++l)
    for (int j = 0; j < d; ++j) {
      out.features.at(l, j) = sample.features.at(l, j);
      out.set_state(l, j, sample.state(l, j));
    }
  return out;
}

namespace {
TimeSeriesSample cut_window(const TimeSeriesSample& s, int start, int len, const char* tag,
                            int index) {
  TimeSeriesSample w;
  w.id = s.id + "@" + tag + std::to_string(index);
  w.covariates = s.covariates;
  const int d = s.dims();
  w.stamps.resize(len);
  w.features = Tensor(len, d);
  w.mask.resize(std::size_t(len) * d);
  const double lo = s.stamps[start];
  const double hi = s.stamps[start + len - 1];
  const double span = hi > lo ? hi - lo : 1.0;
  for (int l = 0; l < len; ++l) {
    w.stamps[l] = (s.stamps[start + l] - lo) / span;
    for (int j = 0; j < d; ++j) {
      w.features.at(l, j) = s.features.at(start + l, j);
      w.mask[std::size_t(l) * d + j] = s.state(start + l, j);
    }
  }
  return w;
}
}  // namespace

WindowSplit window_series(const TimeSeriesSample& series, const SplitPlan& plan) {
  const int N = series.length();
  const int L = plan.window_len;
  if (L < 1 || plan.stride < 1 || plan.test_windows < 0 || plan.train_ratio < 1)
    throw InvalidSplitError("bad split plan");
  const long need = long(L) * plan.test_windows;
  if (N < need)
    throw InsufficientDataError("series " + series.id + " has " + std::to_string(N) +
                                " points, needs " + std::to_string(need));
  WindowSplit out;
  const int prefix = N - int(need);
  // Test windows run back-to-back to the end of the series.
  for (int k = 0; k < plan.test_windows; ++k)
    out.test.push_back(cut_window(series, prefix + k * L, L, "te", k));
  int idx = 0;
  for (int start = 0; start + L <= prefix; start += plan.stride, ++idx) {
    TimeSeriesSample w = cut_window(series, start, L, idx % (plan.train_ratio + 1) == 0 ? "va" : "tr", idx);
    if (idx % (plan.train_ratio + 1) == 0)
      out.val.push_back(std::move(w));
    else
      out.train.push_back(std::move(w));
  }
  return out;
}

std::vector<TimeSeriesSample> load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return load_csv_stream(in, path);
}

std::vector<TimeSeriesSample> load_csv_stream(std::istream& in, const std::string& name) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty file " + name, 0);
  const auto header = split_csv_line(line);
  if (header.size() < 3 || header[0] != "series_id" || header[1] != "t")
    throw ParseError("header must start with series_id,t,y0", 1);
  int d = 0, k = 0;
  std::size_t col = 2;
  while (col < header.size() && header[col] == "y" + std::to_string(d)) {
    ++d;
    ++col;
  }
  while (col < header.size() && header[col] == "c" + std::to_string(k)) {
    ++k;
    ++col;
  }
  if (d == 0 || col != header.size())
    throw ParseError("unknown column '" + (col < header.size() ? header[col] : "") + "'", 1);

  struct Raw {
    std::vector<double> t;
    std::vector<double> vals;  // row-major L×d, NaN for absent
    std::vector<double> cov;
  };
  std::vector<std::string> order;
  std::vector<Raw> raws;
  std::vector<std::string> finished;
  long lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line);
    if (f.size() != header.size())
      throw ParseError("expected " + std::to_string(header.size()) + " fields, got " +
                           std::to_string(f.size()),
                       lineno);
    const std::string& sid = f[0];
    if (order.empty() || order.back() != sid) {
      if (std::find(order.begin(), order.end(), sid) != order.end())
        throw ParseError("series '" + sid + "' is not contiguous", lineno);
      order.push_back(sid);
      raws.emplace_back();
    }
    Raw& r = raws.back();
    const double t = parse_double(f[1], lineno);
    if (!r.t.empty() && !(t > r.t.back()))
      throw ParseError("stamps must be strictly increasing within series '" + sid + "'", lineno);
    r.t.push_back(t);
    for (int j = 0; j < d; ++j) {
      const std::string& tok = f[2 + j];
      r.vals.push_back(tok.empty() ? kNaN : parse_double(tok, lineno));
    }
    std::vector<double> cov(k);
    for (int j = 0; j < k; ++j) cov[j] = parse_double(f[2 + d + j], lineno);
    if (r.t.size() == 1) {
      r.cov = cov;
    } else if (cov != r.cov) {
      throw ParseError("covariates not constant within series '" + sid + "'", lineno);
    }
  }
  if (order.empty()) throw ParseError("no data rows in " + name, lineno);

  std::vector<TimeSeriesSample> out;
  for (std::size_t s = 0; s < order.size(); ++s) {
    const Raw& r = raws[s];
    TimeSeriesSample smp;
    smp.id = order[s];
    const int L = int(r.t.size());
    smp.stamps.resize(L);
    const double lo = r.t.front(), hi = r.t.back();
    const double span = hi > lo ? hi - lo : 1.0;
    for (int l = 0; l < L; ++l) smp.stamps[l] = (r.t[l] - lo) / span;
    smp.features = Tensor(L, d);
    smp.mask.resize(std::size_t(L) * d);
    for (std::size_t i = 0; i < r.vals.size(); ++i) {
      smp.features[i] = r.vals[i];
      smp.mask[i] = std::isnan(r.vals[i]) ? CellState::Absent : CellState::Observed;
    }
    smp.covariates = r.cov;
    out.push_back(std::move(smp));
  }
  return out;
}

void write_csv(std::ostream& out, const std::vector<TimeSeriesSample>& samples) {
  if (samples.empty()) throw std::invalid_argument("write_csv: no samples");
  const int d = samples[0].dims();
  const int k = int(samples[0].covariates.size());
  out << "series_id,t";
  for (int j = 0; j < d; ++j) out << ",y" << j;
  for (int j = 0; j < k; ++j) out << ",c" << j;
  out << "\n";
  char buf[40];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  for (const auto& s : samples) {
    if (s.dims() != d || int(s.covariates.size()) != k)
      throw ShapeError("write_csv: samples disagree on d or k");
    for (int l = 0; l < s.length(); ++l) {
      out << s.id << "," << num(s.stamps[l]);
      for (int j = 0; j < d; ++j) {
        out << ",";
        if (s.state(l, j) != CellState::Absent) out << num(s.features.at(l, j));
      }
      for (int j = 0; j < k; ++j) out << "," << num(s.covariates[j]);
      out << "\n";
    }
  }
}

SynthKind synth_kind_from_string(const std::string& s) {
  if (s == "sine-mix") return SynthKind::SineMix;
  if (s == "damped-sine") return SynthKind::DampedSine;
  if (s == "trend-seasonal") return SynthKind::TrendSeasonal;
  throw ConfigError("unknown synth kind '" + s + "'");
}

const char* to_string(SynthKind k) {
  switch (k) {
    case SynthKind::SineMix: return "sine-mix";
    case SynthKind::DampedSine: return "damped-sine";
    case SynthKind::TrendSeasonal: return "trend-seasonal";
  }
  return "?";
}

std::vector<TimeSeriesSample> synth_generate(const SynthSpec& spec) {
  if (spec.n_series < 1 || spec.length < 2 || spec.dims < 1 || spec.components < 1)
    throw std::invalid_argument("synth_generate: bad spec");
  Rng rng(spec.seed);
  std::vector<TimeSeriesSample> out;
  out.reserve(spec.n_series);
  for (int i = 0; i < spec.n_series; ++i) {
    TimeSeriesSample s;
    char idbuf[16];
    std::snprintf(idbuf, sizeof(idbuf), "s%04d", i);
    s.id = idbuf;
    const int L = spec.length, d = spec.dims;
    s.stamps.resize(L);
    for (int l = 0; l < L; ++l) s.stamps[l] = double(l) / double(L - 1);
    s.features = Tensor(L, d);
    s.mask.assign(std::size_t(L) * d, CellState::Observed);

    struct Term {
      double a, f, phi;
    };
    std::vector<double> offset(d), slope(d, 0.0), lambda(d, 0.0);
    std::vector<std::vector<Term>> terms(d);
    for (int j = 0; j < d; ++j) {
      switch (spec.kind) {
        case SynthKind::SineMix:
          offset[j] = rng.uniform(-0.5, 0.5);
          for (int c = 0; c < spec.components; ++c)
            terms[j].push_back({rng.uniform(0.5, 1.5), double(1 + rng.uniform_index(4)),
                                rng.uniform(0.0, 6.283185307179586)});
          break;
        case SynthKind::DampedSine:
          offset[j] = rng.uniform(-0.5, 0.5);
          lambda[j] = rng.uniform(1.0, 3.0);
          terms[j].push_back({rng.uniform(0.5, 1.5), double(2 + rng.uniform_index(4)),
                              rng.uniform(0.0, 6.283185307179586)});
          break;
        case SynthKind::TrendSeasonal:
          offset[j] = rng.uniform(-0.5, 0.5);
          slope[j] = rng.uniform(-2.0, 2.0);
          terms[j].push_back({rng.uniform(0.3, 1.0), double(2 + rng.uniform_index(5)),
                              rng.uniform(0.0, 6.283185307179586)});
          break;
      }
    }
    for (int l = 0; l < L; ++l) {
      const double t = s.stamps[l];
      for (int j = 0; j < d; ++j) {
        double v = offset[j] + slope[j] * t;
        const double damp = spec.kind == SynthKind::DampedSine ? std::exp(-lambda[j] * t) : 1.0;
        for (const Term& tm : terms[j])
          v += damp * tm.a * std::sin(6.283185307179586 * tm.f * t + tm.phi);
        v += spec.noise * rng.normal();
        s.features.at(l, j) = v;
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace tvinr
