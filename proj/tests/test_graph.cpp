#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "tvinr/errors.hpp"
#include "tvinr/graph.hpp"
#include "tvinr/rng.hpp"

using namespace tvinr;

namespace {

Tensor random_tensor(int r, int c, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(r, c);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

// Central-difference check of d(loss)/d(inputs) for an arbitrary graph
// builder. Inputs are bound as parameter leaves; build must reduce to 1x1.
using Builder = std::function<Var(Tape&, std::vector<Var>&)>;

double max_rel_grad_err(const Builder& build, std::vector<Tensor> inputs,
                        double h = 1e-6) {
  std::vector<Tensor> grads(inputs.size());

  {
    Tape t(true);
    std::vector<Var> vars;
    for (std::size_t i = 0; i < inputs.size(); ++i)
      vars.push_back(t.param(&inputs[i], int(i)));
    Var loss = build(t, vars);
    t.backward(loss);
    t.export_param_grads([&](int slot, const Tensor& g) { grads[slot] = g; });
  }

  auto eval = [&]() {
    Tape t(false);
    std::vector<Var> vars;
    for (std::size_t i = 0; i < inputs.size(); ++i)
      vars.push_back(t.constant_ref(&inputs[i]));
    return t.scalar(build(t, vars));
  };

  double worst = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    for (std::size_t j = 0; j < inputs[i].size(); ++j) {
      const double saved = inputs[i][j];
      inputs[i][j] = saved + h;
      const double up = eval();
      inputs[i][j] = saved - h;
      const double dn = eval();
      inputs[i][j] = saved;
      const double fd = (up - dn) / (2.0 * h);
      const double an = grads[i].empty() ? 0.0 : grads[i][j];
      worst = std::max(worst, std::fabs(fd - an) / std::max(1e-6, std::fabs(fd) + std::fabs(an)));
    }
  }
  return worst;
}

std::vector<std::uint8_t> ones_mask(std::size_t n) { return std::vector<std::uint8_t>(n, 1); }

}  // namespace

TEST_CASE("matmul forward matches hand computation") {
  Tape t(false);
  Var a = t.constant(Tensor(2, 3, {1, 2, 3, 4, 5, 6}));
  Var b = t.constant(Tensor(3, 2, {7, 8, 9, 10, 11, 12}));
  const Tensor& c = t.val(t.matmul(a, b));
  CHECK(c.at(0, 0) == 58);
  CHECK(c.at(0, 1) == 64);
  CHECK(c.at(1, 0) == 139);
  CHECK(c.at(1, 1) == 154);
}

TEST_CASE("matmul_nt equals matmul with explicit transpose") {
  Rng rng(1);
  Tape t(false);
  Tensor A = random_tensor(4, 6, rng), B = random_tensor(5, 6, rng);
  Var a = t.constant(A), b = t.constant(B);
  const Tensor& via_nt = t.val(t.matmul_nt(a, b));
  const Tensor& via_tr = t.val(t.matmul(a, t.transpose(b)));
  CHECK(Tensor::max_abs_diff(via_nt, via_tr) == 0.0);
}

TEST_CASE("gradients: dense linear-algebra ops") {
  Rng rng(2);
  SUBCASE("matmul") {
    auto err = max_rel_grad_err(
        [](Tape& t, std::vector<Var>& v) {
          return t.mse_masked(t.matmul(v[0], v[1]), Tensor(3, 4), ones_mask(12));
        },
        {random_tensor(3, 5, rng), random_tensor(5, 4, rng)});
    CHECK(err < 1e-6);
  }
  SUBCASE("matmul_nt") {
    auto err = max_rel_grad_err(
        [](Tape& t, std::vector<Var>& v) {
          return t.mse_masked(t.matmul_nt(v[0], v[1]), Tensor(3, 4), ones_mask(12));
        },
        {random_tensor(3, 5, rng), random_tensor(4, 5, rng)});
    CHECK(err < 1e-6);
  }
  SUBCASE("transpose+reshape+slice+concat") {
    auto err = max_rel_grad_err(
        [](Tape& t, std::vector<Var>& v) {
          Var tr = t.transpose(v[0]);  // 5x3
          Var rs = t.reshape(tr, 3, 5);
          Var s1 = t.slice_cols(rs, 0, 2);
          Var s2 = t.slice_cols(rs, 2, 2);
          Var s3 = t.slice_rows(t.transpose(t.slice_rows(rs, 1, 2)), 0, 5);  // 5x2
          Var cat = t.concat_cols({s1, s2});  // 3x4
          Var red = t.matmul(t.transpose(cat), t.slice_rows(s3, 0, 3));      // 4x2
          return t.mse_masked(red, Tensor(4, 2), ones_mask(8));
        },
        {random_tensor(3, 5, rng)});
    CHECK(err < 1e-6);
  }
  SUBCASE("add_rowvec and scale") {
    auto err = max_rel_grad_err(
        [](Tape& t, std::vector<Var>& v) {
          return t.mse_masked(t.scale(t.add_rowvec(v[0], v[1]), 1.7), Tensor(4, 3),
                              ones_mask(12));
        },
        {random_tensor(4, 3, rng), random_tensor(1, 3, rng)});
    CHECK(err < 1e-6);
  }
  SUBCASE("mul sub add") {
    auto err = max_rel_grad_err(
        [](Tape& t, std::vector<Var>& v) {
          return t.mse_masked(t.mul(t.add(v[0], v[1]), t.sub(v[0], v[2])), Tensor(3, 3),
                              ones_mask(9));
        },
        {random_tensor(3, 3, rng), random_tensor(3, 3, rng), random_tensor(3, 3, rng)});
    CHECK(err < 1e-6);
  }
}

TEST_CASE("gradients: nonlinearities") {
  Rng rng(3);
  // Stay away from the relu kink so finite differences are clean.
  Tensor x(3, 4);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double mag = rng.uniform(0.2, 1.5);
    x[i] = rng.uniform01() < 0.5 ? -mag : mag;
  }
  for (auto op : {0, 1, 2, 3, 4}) {
    auto err = max_rel_grad_err(
        [op](Tape& t, std::vector<Var>& v) {
          Var y = v[0];
          switch (op) {
            case 0: y = t.relu(y); break;
            case 1: y = t.lrelu(y, 0.1); break;
            case 2: y = t.gelu(y); break;
            case 3: y = t.tanh_(y); break;
            case 4: y = t.softplus(y); break;
          }
          return t.mse_masked(y, Tensor(3, 4), ones_mask(12));
        },
        {x});
    CHECK(err < 1e-6);
  }
}

TEST_CASE("gradients: softmax, layernorm, mean_rows") {
  Rng rng(4);
  SUBCASE("row_softmax full") {
    auto err = max_rel_grad_err(
        [](Tape& t, std::vector<Var>& v) {
          return t.mse_masked(t.row_softmax(v[0], false), Tensor(4, 4), ones_mask(16));
        },
        {random_tensor(4, 4, rng, -2, 2)});
    CHECK(err < 1e-6);
  }
  SUBCASE("row_softmax causal") {
    auto err = max_rel_grad_err(
        [](Tape& t, std::vector<Var>& v) {
          return t.mse_masked(t.row_softmax(v[0], true), Tensor(4, 4), ones_mask(16));
        },
        {random_tensor(4, 4, rng, -2, 2)});
    CHECK(err < 1e-6);
  }
  SUBCASE("layer_norm_rows") {
    auto err = max_rel_grad_err(
        [](Tape& t, std::vector<Var>& v) {
          return t.mse_masked(t.layer_norm_rows(v[0], v[1], v[2], 1e-5), Tensor(3, 6),
                              ones_mask(18));
        },
        {random_tensor(3, 6, rng), random_tensor(1, 6, rng, 0.5, 1.5),
         random_tensor(1, 6, rng)});
    CHECK(err < 1e-5);
  }
  SUBCASE("mean_rows") {
    auto err = max_rel_grad_err(
        [](Tape& t, std::vector<Var>& v) {
          return t.mse_masked(t.mean_rows(v[0]), Tensor(1, 5), ones_mask(5));
        },
        {random_tensor(6, 5, rng)});
    CHECK(err < 1e-6);
  }
}

TEST_CASE("causal softmax zeroes the upper triangle") {
  Rng rng(12);
  Tape t(false);
  const Tensor& p = t.val(t.row_softmax(t.constant(random_tensor(5, 5, rng)), true));
  for (int i = 0; i < 5; ++i) {
    double row = 0.0;
    for (int j = 0; j < 5; ++j) {
      if (j > i) CHECK(p.at(i, j) == 0.0);
      row += p.at(i, j);
    }
    CHECK(row == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("kl_diag closed-form values and gradient") {
  SUBCASE("identical distributions give zero") {
    Tape t(false);
    Rng rng(5);
    Tensor mu = random_tensor(1, 8, rng), sg = random_tensor(1, 8, rng, 0.3, 2.0);
    Var kl = t.kl_diag(t.constant(mu), t.constant(sg), t.constant(mu), t.constant(sg));
    CHECK(std::fabs(t.scalar(kl)) < 1e-14);
  }
  SUBCASE("unit shift") {
    Tape t(false);
    Var kl = t.kl_diag(t.constant(Tensor(1, 1, {1.0})), t.constant(Tensor(1, 1, {1.0})),
                       t.constant(Tensor(1, 1, {0.0})), t.constant(Tensor(1, 1, {1.0})));
    CHECK(t.scalar(kl) == doctest::Approx(0.5).epsilon(1e-12));
  }
  SUBCASE("doubled scale") {
    Tape t(false);
    Var kl = t.kl_diag(t.constant(Tensor(1, 1, {0.0})), t.constant(Tensor(1, 1, {2.0})),
                       t.constant(Tensor(1, 1, {0.0})), t.constant(Tensor(1, 1, {1.0})));
    CHECK(t.scalar(kl) == doctest::Approx(2.0 - 0.5 - std::log(2.0)).epsilon(1e-12));
  }
  SUBCASE("gradient") {
    Rng rng(6);
    auto err = max_rel_grad_err(
        [](Tape& t, std::vector<Var>& v) { return t.kl_diag(v[0], v[1], v[2], v[3]); },
        {random_tensor(1, 6, rng), random_tensor(1, 6, rng, 0.4, 1.8),
         random_tensor(1, 6, rng), random_tensor(1, 6, rng, 0.4, 1.8)});
    CHECK(err < 1e-6);
  }
  SUBCASE("non-negative on random inputs") {
    Rng rng(7);
    for (int i = 0; i < 200; ++i) {
      Tape t(false);
      Var kl = t.kl_diag(t.constant(random_tensor(1, 4, rng, -3, 3)),
                         t.constant(random_tensor(1, 4, rng, 0.05, 4.0)),
                         t.constant(random_tensor(1, 4, rng, -3, 3)),
                         t.constant(random_tensor(1, 4, rng, 0.05, 4.0)));
      CHECK(t.scalar(kl) >= 0.0);
    }
  }
}

TEST_CASE("mse_masked skips masked-out cells entirely") {
  Tape t(true);
  Tensor pred(2, 2, {1.0, 50.0, 3.0, 4.0});
  Tensor target(2, 2, {0.0, 999.0, 1.0, 2.0});
  std::vector<std::uint8_t> mask = {1, 0, 1, 1};
  Var p = t.param(&pred, 0);
  Var loss = t.mse_masked(p, target, mask);
  CHECK(t.scalar(loss) == doctest::Approx((1.0 + 4.0 + 4.0) / 3.0));
  t.backward(loss);
  const Tensor* g = t.grad_of(p);
  REQUIRE(g != nullptr);
  CHECK((*g)[1] == 0.0);  // masked-out cell gets no gradient
  CHECK((*g)[0] == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("guard rails") {
  SUBCASE("shape mismatch throws") {
    Tape t(false);
    Var a = t.constant(Tensor(2, 3));
    Var b = t.constant(Tensor(2, 3));
    CHECK_THROWS_AS((void)t.matmul(a, b), ShapeError);
  }
  SUBCASE("backward twice throws") {
    Tape t(true);
    Tensor x(1, 1, {2.0});
    Var p = t.param(&x, 0);
    Var loss = t.mse_masked(p, Tensor(1, 1), ones_mask(1));
    t.backward(loss);
    CHECK_THROWS_AS(t.backward(loss), std::logic_error);
  }
  SUBCASE("backward on no-grad tape throws") {
    Tape t(false);
    Var c = t.constant(Tensor(1, 1, {1.0}));
    CHECK_THROWS_AS(t.backward(c), std::logic_error);
  }
  SUBCASE("empty mse target set throws") {
    Tape t(false);
    Var c = t.constant(Tensor(1, 2));
    CHECK_THROWS_AS((void)t.mse_masked(c, Tensor(1, 2), std::vector<std::uint8_t>{0, 0}),
                    ShapeError);
  }
}
