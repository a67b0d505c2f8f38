#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "tvinr/errors.hpp"
#include "tvinr/tasks.hpp"
#include "tvinr/training.hpp"

using namespace tvinr;

namespace {

TrainConfig tiny_config() {
  TrainConfig cfg;
  cfg.dim_z = 4;
  cfg.d_model = 16;
  cfg.heads = 2;
  cfg.enc_layers = 1;
  cfg.hyper_layers = {16};
  cfg.gen_layers = {16};
  cfg.fourier_m = 8;
  cfg.seed = 5;
  return cfg;
}

TimeSeriesSample synth_one(int L, int d, std::uint64_t seed) {
  SynthSpec spec;
  spec.n_series = 1;
  spec.length = L;
  spec.dims = d;
  spec.seed = seed;
  TimeSeriesSample s = synth_generate(spec)[0];
  standardize_channels(s);
  return s;
}

}  // namespace

TEST_CASE("mse_mae") {
  SUBCASE("identity gives zeros") {
    Tensor p(2, 2, {1, 2, 3, 4});
    const auto [mse, mae] = mse_mae(p, p, std::vector<std::uint8_t>(4, 1));
    CHECK(mse == 0.0);
    CHECK(mae == 0.0);
  }
  SUBCASE("constant shift gives (1,1)") {
    Tensor t(2, 3, {1, 2, 3, 4, 5, 6});
    Tensor p = t;
    for (std::size_t i = 0; i < p.size(); ++i) p[i] += 1.0;
    const auto [mse, mae] = mse_mae(p, t, std::vector<std::uint8_t>(6, 1));
    CHECK(mse == doctest::Approx(1.0));
    CHECK(mae == doctest::Approx(1.0));
  }
  SUBCASE("hand example") {
    Tensor p(1, 2, {0, 2}), t(1, 2, {1, 1});
    const auto [mse, mae] = mse_mae(p, t, {1, 1});
    CHECK(mse == doctest::Approx(1.0));
    CHECK(mae == doctest::Approx(1.0));
  }
  SUBCASE("only target cells count") {
    Tensor p(1, 3, {5, 0, 0}), t(1, 3, {1, 0, 0});
    const auto [mse, mae] = mse_mae(p, t, {0, 1, 1});
    CHECK(mse == 0.0);
    CHECK(mae == 0.0);
  }
  SUBCASE("empty target set rejected") {
    Tensor p(1, 2), t(1, 2);
    CHECK_THROWS_AS(mse_mae(p, t, {0, 0}), std::invalid_argument);
  }
}

namespace {
struct WelchCase {
  std::vector<double> a, b;
  double t, df, p;
};
// References computed with 50-digit mpmath; the last row is the classic
// shifted-list example.
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
  {{1.0,2.0,3.0,4.0,5.0}, {2.0,3.0,4.0,5.0,6.0}, -1.0, 8.0, 0.34659350708733425},
};
}  // namespace

TEST_CASE("welch_t_test against a high-precision reference") {
  for (const auto& c : kWelchCases) {
    const WelchResult r = welch_t_test(c.a, c.b);
    CHECK(std::fabs(r.t - c.t) < 1e-10);
    CHECK(std::fabs(r.df - c.df) < 1e-10);
    CHECK(std::fabs(r.p - c.p) < 1e-10);
  }
}

TEST_CASE("welch_t_test edge cases") {
  SUBCASE("identical lists") {
    const std::vector<double> a = {1, 2, 3, 4};
    const WelchResult r = welch_t_test(a, a);
    CHECK(r.t == 0.0);
    CHECK(r.p == 1.0);
  }
  SUBCASE("degenerate lengths rejected") {
    CHECK_THROWS_AS(welch_t_test({1.0}, {1.0, 2.0}), std::invalid_argument);
    CHECK_THROWS_AS(welch_t_test({1.0, 2.0}, {}), std::invalid_argument);
  }
  SUBCASE("zero variance, equal means") {
    const WelchResult r = welch_t_test({2, 2, 2}, {2, 2});
    CHECK(r.t == 0.0);
    CHECK(r.p == 1.0);
  }
  SUBCASE("zero variance, different means") {
    const WelchResult r = welch_t_test({2, 2, 2}, {3, 3});
    CHECK(r.p == 0.0);
  }
  SUBCASE("constructed separation is significant for n>=5") {
    std::vector<double> a, b;
    Rng rng(50);
    for (int i = 0; i < 6; ++i) {
      const double e = rng.uniform(0.0, 0.2);
      a.push_back(e);
      b.push_back(e + 1.0);  // B worse by a constant
    }
    const WelchResult r = welch_t_test(a, b);
    CHECK(r.p < 0.05);
  }
}

TEST_CASE("impute basics on an untrained model") {
  const TrainConfig cfg = tiny_config();
  TvInrModel model = TvInrModel::create(cfg, 1, 0);
  TimeSeriesSample s = synth_one(40, 1, 9);
  Rng rng(3);
  make_imputation_mask(s, 0.5, rng);

  const auto cells = impute(model, s);
  CHECK(cells.size() == s.count(CellState::Masked));
  for (const auto& c : cells) {
    CHECK(s.state(c.stamp_index, c.channel) == CellState::Masked);
    CHECK(std::isfinite(c.value));
  }

  SUBCASE("tau=1 gives an empty prediction set") {
    TimeSeriesSample full = synth_one(40, 1, 9);
    Rng r2(3);
    make_imputation_mask(full, 1.0, r2);
    CHECK(impute(model, full).empty());
  }
  SUBCASE("no observed cells is an error") {
    TimeSeriesSample none = synth_one(40, 1, 9);
    Rng r2(3);
    make_imputation_mask(none, 0.0, r2);
    CHECK_THROWS_AS(impute(model, none), EmptyContextError);
  }
  SUBCASE("latent averaging needs an rng") {
    CHECK_THROWS_AS(impute(model, s, 4, nullptr), std::invalid_argument);
    Rng r3(7);
    const auto avg = impute(model, s, 4, &r3);
    CHECK(avg.size() == cells.size());
  }
}

TEST_CASE("forecast basics on an untrained model") {
  const TrainConfig cfg = tiny_config();
  TvInrModel model = TvInrModel::create(cfg, 1, 0);
  const TimeSeriesSample hist = synth_one(64, 1, 21);

  SUBCASE("stamps beyond the horizon work, any count") {
    const Tensor out = forecast(model, hist, {1.01, 1.2, 1.5});
    CHECK(out.rows() == 3);
    CHECK(out.cols() == 1);
    CHECK(out.all_finite());
  }
  SUBCASE("empty query gives empty output") {
    const Tensor out = forecast(model, hist, {});
    CHECK(out.rows() == 0);
  }
  SUBCASE("stamp at or before the horizon rejected") {
    CHECK_THROWS_AS(forecast(model, hist, {0.5}), InvalidSplitError);
    CHECK_THROWS_AS(forecast(model, hist, {1.0}), InvalidSplitError);
  }
}

TEST_CASE("eval report round trip") {
  EvalReport rep;
  rep.task = "imputation";
  rep.records.push_back({"s0@te0", 0.3, 0.123456789, 0.2345});
  rep.records.push_back({"s1@te0", 0.3, 0.2, 0.3});
  std::ostringstream os;
  rep.write(os);
  std::istringstream is(os.str());
  const EvalReport back = EvalReport::read(is, "mem");
  CHECK(back.task == rep.task);
  REQUIRE(back.records.size() == 2);
  CHECK(back.records[0].window_id == "s0@te0");
  CHECK(back.records[0].mse == rep.records[0].mse);
  CHECK(back.aggregate_mse() == doctest::Approx(rep.aggregate_mse()));

  SUBCASE("byte-stable output") {
    std::ostringstream os2;
    rep.write(os2);
    CHECK(os.str() == os2.str());
  }
  SUBCASE("bad magic rejected") {
    std::istringstream bad("nope\n");
    CHECK_THROWS_AS(EvalReport::read(bad, "mem"), ParseError);
  }
}

TEST_CASE("incomplete beta sanity") {
  // I_x(1,1) = x; I_x(a,b) symmetric through 1 - I_{1-x}(b,a).
  CHECK(incomplete_beta(1, 1, 0.3) == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(incomplete_beta(2.5, 0.5, 0.0) == 0.0);
  CHECK(incomplete_beta(2.5, 0.5, 1.0) == 1.0);
  const double v = incomplete_beta(3.0, 2.0, 0.4);
  const double sym = 1.0 - incomplete_beta(2.0, 3.0, 0.6);
  CHECK(v == doctest::Approx(sym).epsilon(1e-12));
}
