#include "doctest.h"

#include <cmath>
#include <cstring>
#include <limits>
#include <vector>

#include "powermat/core.hpp"
#include "test_util.hpp"

using namespace powermat;

namespace {

Hyperparams base_hyper() {
  Hyperparams h;
  h.gamma = 0.1;
  h.sigma_u = 1.0;
  h.sigma_v = 1.0;
  h.r_max = 5.0;
  h.k = 1;
  return h;
}

bool bits_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() &&
         (a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

}  // namespace

TEST_CASE("dot: arithmetic and dimension contract") {
  CHECK(dot({1, 0}, {0, 1}) == 0.0);
  CHECK(dot({0.5}, {0.4}) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(dot({1, 2, 3}, {4, 5, 6}) == 32.0);
  CHECK_THROWS_AS(dot({1, 2}, {1, 2, 3}), dimension_error);
}

TEST_CASE("clamped_dot: floor applies only from below") {
  CHECK(clamped_dot({0.5}, {0.4}, 1e-6) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(clamped_dot({0.5}, {-0.6}, 1e-6) == 1e-6);
  CHECK(clamped_dot({1, 0}, {0, 1}, 1e-6) == 1e-6);
}

TEST_CASE("predict_linear: r_max times the raw dot, no output clamp") {
  CHECK(predict_linear({0.6}, {1.0}, 5.0) == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(predict_linear({1.0}, {1.0}, 5.0) == 5.0);
  CHECK(predict_linear({0.0}, {1.0}, 5.0) == 0.0);
  // raw predictor may exit the rating scale
  CHECK(predict_linear({1.5}, {1.0}, 5.0) == doctest::Approx(7.5));
}

TEST_CASE("predict_power: frozen high-precision value and unit cases") {
  Hyperparams h = base_hyper();
  // x = 0.2, alpha.c = 0.2, beta = 0.3 -> e = 0.26; 5 * 0.2^0.26
  const double expected = 3.2903174688109116;  // independent high-precision evaluation
  CHECK(predict_power({0.5}, {0.4}, {0.2}, {1.0}, 0.3, h) ==
        doctest::Approx(expected).epsilon(1e-12));
  // x = 1 -> prediction is r_max for any exponent
  CHECK(predict_power({1.0}, {1.0}, {0.7}, {1.0}, -0.4, h) == 5.0);
  // e = 0 -> prediction is r_max for any positive x
  CHECK(predict_power({0.5}, {0.4}, {0.0}, {1.0}, 0.0, h) == 5.0);
}

TEST_CASE("predict_power: exponent cap keeps the value finite") {
  Hyperparams h = base_hyper();
  h.exponent_cap = 50.0;
  const double p = predict_power({0.5}, {0.4}, {1e6}, {1.0}, 0.0, h);
  CHECK(std::isfinite(p));
  CHECK(p == doctest::Approx(5.0 * std::pow(0.2, 50.0)));
}

TEST_CASE("powermat_step_verbatim: hand-substituted 1-D example") {
  Hyperparams h = base_hyper();
  const PowermatUpdate out = powermat_step_verbatim({0.5}, {0.4}, {0.2}, 0.3, {1.0}, h);
  CHECK(std::abs(out.u[0] - 0.5872) <= 1e-12);
  CHECK(std::abs(out.v[0] - 0.464) <= 1e-12);
  CHECK(std::abs(out.alpha[0] - 0.18) <= 1e-12);
  CHECK(std::abs(out.beta - 0.296) <= 1e-12);
}

TEST_CASE("powermat_step_verbatim: gamma = 0 is an exact fixed point") {
  Hyperparams h = base_hyper();
  h.gamma = 0.0;
  const Embedding u{0.5, -0.3}, v{0.4, 0.9};
  const std::vector<double> a{0.2, -0.1, 0.7};
  const ContextVector c{1.0, 0.0, 1.0};
  const PowermatUpdate out = powermat_step_verbatim(u, v, a, 0.3, c, h);
  CHECK(bits_equal(out.u, u));
  CHECK(bits_equal(out.v, v));
  CHECK(bits_equal(out.alpha, a));
  CHECK(out.beta == 0.3);
}

TEST_CASE("powermat_step_verbatim: u/v role symmetry") {
  testutil::Gen gen(11);
  for (int trial = 0; trial < 50; ++trial) {
    Hyperparams h = base_hyper();
    h.k = 3;
    h.sigma_u = gen.uniform(0.5, 2.0);
    h.sigma_v = gen.uniform(0.5, 2.0);
    const Embedding u = gen.vec(3, -1.0, 1.0);
    const Embedding v = gen.vec(3, -1.0, 1.0);
    const std::vector<double> a = gen.vec(2, -0.5, 0.5);
    const ContextVector c = gen.vec(2, 0.0, 1.0);
    const double beta = gen.uniform(-0.5, 0.5);

    Hyperparams swapped = h;
    std::swap(swapped.sigma_u, swapped.sigma_v);
    const PowermatUpdate fwd = powermat_step_verbatim(u, v, a, beta, c, h);
    const PowermatUpdate rev = powermat_step_verbatim(v, u, a, beta, c, swapped);
    CHECK(bits_equal(fwd.u, rev.v));
    CHECK(bits_equal(fwd.v, rev.u));
    CHECK(bits_equal(fwd.alpha, rev.alpha));
    CHECK(fwd.beta == rev.beta);
  }
}

TEST_CASE("powermat_step_verbatim: beta never increases") {
  testutil::Gen gen(12);
  for (int trial = 0; trial < 100; ++trial) {
    Hyperparams h = base_hyper();
    h.k = 2;
    h.gamma = gen.uniform(0.001, 0.5);
    const Embedding u = gen.vec(2, -1.0, 1.0);
    const Embedding v = gen.vec(2, -1.0, 1.0);
    const double beta = gen.uniform(-1.0, 1.0);
    const PowermatUpdate out = powermat_step_verbatim(u, v, {0.1}, beta, {1.0}, h);
    CHECK(out.beta <= beta);
  }
  // equality exactly when the dot product vanishes
  Hyperparams h = base_hyper();
  const PowermatUpdate out = powermat_step_verbatim({1, 0}, {0, 1}, {0.1}, 0.25, {1.0}, h);
  CHECK(out.beta == 0.25);
}

TEST_CASE("powermat_step_verbatim: overflow raises a numeric error") {
  Hyperparams h = base_hyper();
  CHECK_THROWS_AS(powermat_step_verbatim({1e308}, {1e308}, {0.1}, 0.3, {1.0}, h),
                  numeric_error);
}

TEST_CASE("powermat_step_derived: log terms vanish at x = 1") {
  Hyperparams h = base_hyper();
  const PowermatUpdate out = powermat_step_derived({1.0}, {1.0}, {0.2}, 0.3, {1.0}, h);
  CHECK(out.alpha[0] == 0.2);
  CHECK(out.beta == 0.3);
  // u still moves: -(alpha.c + beta)/x * v plus the regularizer pull
  const double expected_u = 1.0 - 0.1 * (-(0.2 + 0.3) * 1.0 + 2.0 * 1.0);
  CHECK(out.u[0] == doctest::Approx(expected_u).epsilon(1e-14));
}

TEST_CASE("powermat_step_derived: gamma = 0 is an exact fixed point") {
  Hyperparams h = base_hyper();
  h.gamma = 0.0;
  const Embedding u{0.5}, v{0.4};
  const PowermatUpdate out = powermat_step_derived(u, v, {0.2}, 0.3, {1.0}, h);
  CHECK(bits_equal(out.u, u));
  CHECK(bits_equal(out.v, v));
  CHECK(out.alpha[0] == 0.2);
  CHECK(out.beta == 0.3);
}

TEST_CASE("powermat_step_derived: gradient matches central differences") {
  const std::size_t k = 3, d = 4;
  testutil::Gen gen(21);
  int points = 0;
  while (points < 100) {
    Hyperparams h = base_hyper();
    h.k = static_cast<int>(k);
    h.gamma = 1.0;  // step = identity minus gradient, so gradient = p - p'
    h.sigma_u = gen.uniform(0.8, 2.0);
    h.sigma_v = gen.uniform(0.8, 2.0);
    const Embedding u = gen.vec(k, 0.2, 0.9);
    const Embedding v = gen.vec(k, 0.2, 0.9);
    const std::vector<double> a = gen.vec(d, -0.5, 0.5);
    const ContextVector c = gen.vec(d, 0.0, 1.0);
    const double beta = gen.uniform(-0.5, 0.5);
    ++points;

    // objective written out from its definition, independent of the library
    const auto J = [&](const std::vector<double>& p) {
      std::vector<double> pu(p.begin(), p.begin() + k);
      std::vector<double> pv(p.begin() + k, p.begin() + 2 * k);
      std::vector<double> pa(p.begin() + 2 * k, p.begin() + 2 * k + d);
      const double pb = p[2 * k + d];
      const double x = std::max(testutil::naive_dot(pu, pv), h.dot_floor);
      return -(testutil::naive_dot(pa, c) + pb * x) * std::log(x) +
             testutil::naive_dot(pu, pu) / (h.sigma_u * h.sigma_u) +
             testutil::naive_dot(pv, pv) / (h.sigma_v * h.sigma_v);
    };

    std::vector<double> p;
    p.insert(p.end(), u.begin(), u.end());
    p.insert(p.end(), v.begin(), v.end());
    p.insert(p.end(), a.begin(), a.end());
    p.push_back(beta);

    const PowermatUpdate out = powermat_step_derived(u, v, a, beta, c, h);
    std::vector<double> analytic;
    for (std::size_t t = 0; t < k; ++t) analytic.push_back(u[t] - out.u[t]);
    for (std::size_t t = 0; t < k; ++t) analytic.push_back(v[t] - out.v[t]);
    for (std::size_t t = 0; t < d; ++t) analytic.push_back(a[t] - out.alpha[t]);
    analytic.push_back(beta - out.beta);

    for (std::size_t i = 0; i < p.size(); ++i) {
      const double fd = testutil::central_diff(J, p, i);
      CHECK(testutil::rel_err(analytic[i], fd) <= 1e-5);
    }
  }
}

TEST_CASE("dotmat_loss: examples and validation") {
  Hyperparams h = base_hyper();
  CHECK(dotmat_loss({1.0}, {1.0}, 5.0, h) == 0.0);
  // |0.5^0.5 - 0.5|, independent high-precision evaluation
  CHECK(dotmat_loss({1.0}, {0.5}, 2.5, h) ==
        doctest::Approx(0.20710678118654752).epsilon(1e-12));
  // clamp keeps x^x defined at the floor
  const double at_floor = dotmat_loss({1.0}, {-1.0}, 0.0, h);
  CHECK(std::isfinite(at_floor));
  CHECK(at_floor == doctest::Approx(0.99998618458487576).epsilon(1e-12));
  CHECK_THROWS_AS(dotmat_loss({1.0}, {1.0}, 5.5, h), validation_error);
  CHECK_THROWS_AS(dotmat_loss({1.0}, {1.0}, -0.1, h), validation_error);
}

TEST_CASE("dotmat_step: subgradient convention and frozen 1-D value") {
  Hyperparams h = base_hyper();
  // exact fit: zero subgradient
  const FactorUpdate fit = dotmat_step({1.0}, {1.0}, 5.0, h);
  CHECK(fit.u[0] == 1.0);
  CHECK(fit.v[0] == 1.0);
  // x = 1/e: ln x + 1 = 0, stationary point of x^x
  const FactorUpdate st = dotmat_step({1.0}, {1.0 / std::exp(1.0)}, 1.0, h);
  CHECK(st.u[0] == doctest::Approx(1.0).epsilon(1e-15));
  // x = 0.5, rhat = 0.4: frozen by direct substitution
  const FactorUpdate out = dotmat_step({1.0}, {0.5}, 2.0, h);
  CHECK(out.u[0] == doctest::Approx(0.98915111452738630).epsilon(1e-12));
  CHECK(out.v[0] == doctest::Approx(0.47830222905477261).epsilon(1e-12));
}

TEST_CASE("dotmat_step: gradient matches central differences away from the kink") {
  testutil::Gen gen(22);
  int points = 0;
  while (points < 100) {
    Hyperparams h = base_hyper();
    h.k = 2;
    h.gamma = 1.0;
    const Embedding u = gen.vec(2, 0.3, 0.9);
    const Embedding v = gen.vec(2, 0.3, 0.9);
    const double x = testutil::naive_dot(u, v);
    if (x >= 1.0) continue;  // keep x^x on the familiar branch below 1
    const double target = std::pow(x, x) + (gen.uniform(0.0, 1.0) < 0.5 ? -1.0 : 1.0) *
                                               gen.uniform(0.1, 0.25);
    if (target < 0.02 || target > 0.98) continue;  // rating must stay on scale
    const double rating = target * h.r_max;
    ++points;

    const auto f = [&](const std::vector<double>& p) {
      std::vector<double> pu(p.begin(), p.begin() + 2);
      std::vector<double> pv(p.begin() + 2, p.end());
      const double px = std::max(testutil::naive_dot(pu, pv), h.dot_floor);
      return std::abs(std::pow(px, px) - rating / h.r_max);
    };

    std::vector<double> p;
    p.insert(p.end(), u.begin(), u.end());
    p.insert(p.end(), v.begin(), v.end());

    const FactorUpdate out = dotmat_step(u, v, rating, h);
    std::vector<double> analytic;
    for (std::size_t t = 0; t < 2; ++t) analytic.push_back(u[t] - out.u[t]);
    for (std::size_t t = 0; t < 2; ++t) analytic.push_back(v[t] - out.v[t]);

    for (std::size_t i = 0; i < p.size(); ++i) {
      const double fd = testutil::central_diff(f, p, i);
      CHECK(testutil::rel_err(analytic[i], fd) <= 1e-5);
    }
  }
}

TEST_CASE("classic_mf_step: examples") {
  Hyperparams h = base_hyper();
  h.sigma_u = h.sigma_v = 1e12;  // lambda ~ 1e-24, below double resolution here
  // e = 0: dot = 0.4 matches rating/r_max
  const FactorUpdate fit = classic_mf_step({0.5}, {0.8}, 2.0, h);
  CHECK(fit.u[0] == 0.5);
  CHECK(fit.v[0] == 0.8);
  // 1-D example: e = -0.2
  const FactorUpdate out = classic_mf_step({0.5}, {0.4}, 2.0, h);
  CHECK(out.u[0] == doctest::Approx(0.508).epsilon(1e-12));
}

TEST_CASE("classic_mf_step: gradient matches central differences") {
  testutil::Gen gen(23);
  for (int points = 0; points < 100; ++points) {
    Hyperparams h = base_hyper();
    h.k = 2;
    h.gamma = 1.0;
    h.sigma_u = h.sigma_v = gen.uniform(0.8, 2.0);
    const double lambda = 1.0 / (h.sigma_u * h.sigma_u);
    const Embedding u = gen.vec(2, -0.9, 0.9);
    const Embedding v = gen.vec(2, -0.9, 0.9);
    const double rating = gen.uniform(0.0, h.r_max);

    const auto f = [&](const std::vector<double>& p) {
      std::vector<double> pu(p.begin(), p.begin() + 2);
      std::vector<double> pv(p.begin() + 2, p.end());
      const double e = testutil::naive_dot(pu, pv) - rating / h.r_max;
      return 0.5 * e * e + 0.5 * lambda * (testutil::naive_dot(pu, pu) +
                                           testutil::naive_dot(pv, pv));
    };

    std::vector<double> p;
    p.insert(p.end(), u.begin(), u.end());
    p.insert(p.end(), v.begin(), v.end());

    const FactorUpdate out = classic_mf_step(u, v, rating, h);
    std::vector<double> analytic;
    for (std::size_t t = 0; t < 2; ++t) analytic.push_back(u[t] - out.u[t]);
    for (std::size_t t = 0; t < 2; ++t) analytic.push_back(v[t] - out.v[t]);

    for (std::size_t i = 0; i < p.size(); ++i) {
      const double fd = testutil::central_diff(f, p, i);
      CHECK(testutil::rel_err(analytic[i], fd) <= 1e-5);
    }
  }
}

TEST_CASE("steps are pure: identical inputs give bit-identical outputs") {
  Hyperparams h = base_hyper();
  h.k = 2;
  const Embedding u{0.5, -0.3}, v{0.4, 0.9};
  const std::vector<double> a{0.2, -0.1};
  const ContextVector c{1.0, 0.5};

  const PowermatUpdate p1 = powermat_step_verbatim(u, v, a, 0.3, c, h);
  const PowermatUpdate p2 = powermat_step_verbatim(u, v, a, 0.3, c, h);
  CHECK(bits_equal(p1.u, p2.u));
  CHECK(bits_equal(p1.v, p2.v));
  CHECK(bits_equal(p1.alpha, p2.alpha));
  CHECK(p1.beta == p2.beta);

  const PowermatUpdate d1 = powermat_step_derived(u, v, a, 0.3, c, h);
  const PowermatUpdate d2 = powermat_step_derived(u, v, a, 0.3, c, h);
  CHECK(bits_equal(d1.u, d2.u));
  CHECK(bits_equal(d1.v, d2.v));

  const FactorUpdate m1 = classic_mf_step(u, v, 2.0, h);
  const FactorUpdate m2 = classic_mf_step(u, v, 2.0, h);
  CHECK(bits_equal(m1.u, m2.u));
  CHECK(bits_equal(m1.v, m2.v));
}

TEST_CASE("clamp safety: finite loss and prediction for any finite embeddings") {
  testutil::Gen gen(24);
  Hyperparams h = base_hyper();
  h.k = 3;
  for (int trial = 0; trial < 200; ++trial) {
    const Embedding u = gen.vec(3, -10.0, 10.0);
    const Embedding v = gen.vec(3, -10.0, 10.0);
    const std::vector<double> a = gen.vec(2, -5.0, 5.0);
    const ContextVector c = gen.vec(2, 0.0, 1.0);
    const double beta = gen.uniform(-5.0, 5.0);
    CHECK(std::isfinite(dotmat_loss(u, v, gen.uniform(0.0, h.r_max), h)));
    CHECK(std::isfinite(predict_power(u, v, a, c, beta, h)));
  }
}
