#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "sdeh/contrasts.hpp"
#include "sdeh/errors.hpp"
#include "sdeh/optimize.hpp"
#include "sdeh/rng.hpp"

using namespace sdeh;

namespace {

// 1-d model with constant diffusion sqrt(alpha) and constant drift beta.
ModelSpec const_model() {
  ModelSpec m;
  m.d = 1;
  m.r = 1;
  m.m1 = 1;
  m.m2 = 1;
  m.drift = [](const Vec&, const Vec& b) { return Vec::Constant(1, b(0)); };
  m.diffusion = [](const Vec&, const Vec& a) {
    return Mat::Constant(1, 1, std::sqrt(a(0)));
  };
  m.dA_dalpha = [](const Vec&, const Vec&) {
    return std::vector<Mat>{Mat::Constant(1, 1, 1.0)};
  };
  m.d2A_dalpha2 = [](const Vec&, const Vec&) {
    return std::vector<Mat>{Mat::Zero(1, 1)};
  };
  m.db_dbeta = [](const Vec&, const Vec&) { return Mat::Constant(1, 1, 1.0); };
  m.d2b_dbeta2 = [](const Vec&, const Vec&) {
    return std::vector<Vec>{Vec::Zero(1)};
  };
  return m;
}

BlockSchedule make_sched(std::int64_t k, double delta, std::int64_t k_reduced = -1) {
  BlockSchedule sched;
  sched.tau = 2.0;
  sched.p = 4;
  sched.delta = delta;
  sched.k = k;
  sched.k_reduced = k_reduced >= 0 ? k_reduced : k;
  sched.t_reduced = static_cast<double>(sched.k_reduced) * delta;
  return sched;
}

LocalMeanSeries random_walk_series(std::int64_t k, double delta,
                                   std::uint64_t seed, double scale) {
  LocalMeanSeries series;
  series.schedule = make_sched(k, delta);
  series.ybar.resize(k, 1);
  Philox rng(seed, 0);
  double x = 0.0;
  for (std::int64_t j = 0; j < k; ++j) {
    series.ybar(j, 0) = x;
    x += scale * std::sqrt(delta) * rng.next_gaussian();
  }
  return series;
}

EffectiveDiffusion plain_eff(const BlockSchedule& sched) {
  return make_effective_diffusion(EffDiffMode::stage3, sched);
}

double mean_sq_scaled_increment(const LocalMeanSeries& s, std::int64_t k_used) {
  double acc = 0.0;
  for (std::int64_t j = 1; j <= k_used - 2; ++j) {
    const double v = s.ybar(j + 1, 0) - s.ybar(j, 0);
    acc += v * v / s.schedule.delta;
  }
  return acc / static_cast<double>(k_used - 2);
}

double mean_increment(const LocalMeanSeries& s, std::int64_t k_used) {
  double acc = 0.0;
  for (std::int64_t j = 1; j <= k_used - 2; ++j) {
    acc += s.ybar(j + 1, 0) - s.ybar(j, 0);
  }
  return acc / static_cast<double>(k_used - 2);
}

}  // namespace

TEST_CASE("effective diffusion coefficients") {
  BlockSchedule sched = make_sched(100, 0.04);
  SUBCASE("limit mode: indicator at tau = 2") {
    EffectiveDiffusion eff{EffDiffMode::limit, 2.0, sched.delta, false};
    CHECK(eff.noise_coeff() == 3.0);
    eff.tau = 1.5;
    CHECK(eff.noise_coeff() == 0.0);
  }
  SUBCASE("stage3 mode: delta power with exponent 0 at tau = 2") {
    EffectiveDiffusion eff{EffDiffMode::stage3, 2.0, sched.delta, false};
    CHECK(eff.noise_coeff() == 3.0);
    eff.tau = 1.5;
    CHECK(eff.noise_coeff() ==
          doctest::Approx(3.0 * std::pow(sched.delta, (2.0 - 1.5) / 0.5)));
  }
  SUBCASE("drop_noise zeroes the term") {
    EffectiveDiffusion eff{EffDiffMode::stage3, 2.0, sched.delta, true};
    CHECK(eff.noise_coeff() == 0.0);
    const Mat A = Mat::Identity(2, 2);
    CHECK((eff.apply(A, Mat::Ones(2, 2)) - A).norm() == 0.0);
  }
}

TEST_CASE("W1 and W2 are non-positive on random inputs") {
  const auto model = const_model();
  Philox rng(55, 0);
  for (int trial = 0; trial < 50; ++trial) {
    const auto series = random_walk_series(50, 0.04, 1000 + trial, 1.0 + rng.next_double());
    const Vec alpha = Vec::Constant(1, 0.1 + 3.0 * rng.next_double());
    const Vec beta = Vec::Constant(1, -2.0 + 4.0 * rng.next_double());
    const Mat Lambda = Mat::Constant(1, 1, rng.next_double() * 0.01);
    CHECK(W1(model, alpha, Lambda, series, 50, plain_eff(series.schedule)) <= 0.0);
    CHECK(W2(model, beta, series, 50) <= 0.0);
  }
}

TEST_CASE("single-block construction makes W1 vanish") {
  const auto model = const_model();
  const double c = 1.7;
  const double delta = 0.04;
  LocalMeanSeries series;
  series.schedule = make_sched(3, delta);
  series.ybar.resize(3, 1);
  series.ybar << 0.0, 0.3, 0.3 + std::sqrt(2.0 * delta * c / 3.0);
  const double w1 = W1(model, Vec::Constant(1, c), Mat::Zero(1, 1), series, 3,
                       plain_eff(series.schedule));
  CHECK(std::abs(w1) < 1e-30);
}

TEST_CASE("W1 is an exact parabola: analytic maximizer matches the numeric one") {
  const auto model = const_model();
  const auto series = random_walk_series(300, 0.04, 12, 1.3);
  const Mat Lambda = Mat::Zero(1, 1);
  const auto eff = plain_eff(series.schedule);
  const double analytic = 1.5 * mean_sq_scaled_increment(series, 300);

  ParamSpace box;
  box.lower = Vec::Constant(1, 0.01);
  box.upper = Vec::Constant(1, 20.0);
  const auto result = maximize_box(
      [&](const Vec& a) { return W1(model, a, Lambda, series, 300, eff); },
      [&](const Vec& a) {
        DerivativeRequest req;
        req.gradient = true;
        return W1_derivatives(model, a, Lambda, series, 300, eff, req).gradient;
      },
      box, Vec::Constant(1, 5.0));
  CHECK(result.converged);
  CHECK(result.x(0) == doctest::Approx(analytic).epsilon(1e-10));
}

TEST_CASE("W2 closed form for constant drift") {
  const auto model = const_model();
  const auto series = random_walk_series(300, 0.04, 21, 0.8);
  const double analytic = mean_increment(series, 300) / series.schedule.delta;
  ParamSpace box;
  box.lower = Vec::Constant(1, -30.0);
  box.upper = Vec::Constant(1, 30.0);
  const auto result = maximize_box(
      [&](const Vec& b) { return W2(model, b, series, 300); },
      [&](const Vec& b) {
        DerivativeRequest req;
        req.gradient = true;
        return W2_derivatives(model, b, series, 300, req).gradient;
      },
      box, Vec::Constant(1, 7.0));
  CHECK(result.converged);
  CHECK(result.x(0) == doctest::Approx(analytic).epsilon(1e-10));
}

TEST_CASE("W2 on an exact line is zero at the matching slope") {
  const auto model = const_model();
  const double v = 1.25;
  LocalMeanSeries series;
  series.schedule = make_sched(40, 0.05);
  series.ybar.resize(40, 1);
  for (std::int64_t j = 0; j < 40; ++j) {
    series.ybar(j, 0) = v * static_cast<double>(j) * 0.05;
  }
  CHECK(W2(model, Vec::Constant(1, v), series, 40) ==
        doctest::Approx(0.0).epsilon(1e-18));
  CHECK(W2(model, Vec::Constant(1, v + 0.5), series, 40) < -1e-6);
}

TEST_CASE("beta-free drift makes W2 constant in beta") {
  ModelSpec model = const_model();
  model.drift = [](const Vec&, const Vec&) { return Vec::Zero(1); };
  model.db_dbeta = [](const Vec&, const Vec&) { return Mat::Zero(1, 1); };
  const auto series = random_walk_series(100, 0.04, 8, 1.0);
  const double w_a = W2(model, Vec::Constant(1, -3.0), series, 100);
  const double w_b = W2(model, Vec::Constant(1, 4.0), series, 100);
  CHECK(w_a == w_b);
}

TEST_CASE("H1_full closed form, concavity, and log-det barrier") {
  const auto model = const_model();
  const auto series = random_walk_series(400, 0.04, 5, 1.1);
  const Mat Lambda = Mat::Zero(1, 1);
  const auto eff = plain_eff(series.schedule);
  const double alpha_hat = 1.5 * mean_sq_scaled_increment(series, 400);

  ParamSpace box;
  box.lower = Vec::Constant(1, 1e-4);
  box.upper = Vec::Constant(1, 50.0);
  const auto result = maximize_box(
      [&](const Vec& a) { return H1_full(model, a, Lambda, series, eff); },
      [&](const Vec& a) {
        DerivativeRequest req;
        req.gradient = true;
        return H1_full_derivatives(model, a, Lambda, series, eff, req).gradient;
      },
      box, Vec::Constant(1, 4.0));
  CHECK(result.converged);
  CHECK(result.x(0) == doctest::Approx(alpha_hat).epsilon(1e-8));

  DerivativeRequest req;
  req.gradient = true;
  req.hessian = true;
  const auto at_opt = H1_full_derivatives(model, Vec::Constant(1, alpha_hat),
                                          Lambda, series, eff, req);
  CHECK(at_opt.hessian(0, 0) < 0.0);  // strict local max

  // shrinking the diffusion toward zero runs into the log-det barrier
  const double at_hat = H1_full(model, Vec::Constant(1, alpha_hat), Lambda, series, eff);
  const double at_tenth =
      H1_full(model, Vec::Constant(1, alpha_hat / 10.0), Lambda, series, eff);
  const double at_hundredth =
      H1_full(model, Vec::Constant(1, alpha_hat / 100.0), Lambda, series, eff);
  CHECK(at_tenth < at_hat);
  CHECK(at_hundredth < at_tenth);
}

TEST_CASE("H1_full depends only on increments when A is state-free") {
  const auto model = const_model();
  auto series = random_walk_series(100, 0.04, 9, 1.0);
  const Mat Lambda = Mat::Constant(1, 1, 2e-3);
  const auto eff = plain_eff(series.schedule);
  const double base = H1_full(model, Vec::Ones(1), Lambda, series, eff);
  series.ybar.array() += 17.5;  // constant shift
  const double shifted = H1_full(model, Vec::Ones(1), Lambda, series, eff);
  // equality up to the rounding of the shifted increments
  CHECK(shifted == doctest::Approx(base).epsilon(1e-10));
}

TEST_CASE("H2_full weights use plain A as weighted least squares") {
  // state-dependent diffusion: the maximizer is the A^{-1}-weighted slope
  ModelSpec model = const_model();
  model.diffusion = [](const Vec& x, const Vec& a) {
    return Mat::Constant(1, 1, std::sqrt(a(0) * (2.0 + std::sin(x(0)))));
  };
  model.dA_dalpha = nullptr;
  model.d2A_dalpha2 = nullptr;
  const auto series = random_walk_series(200, 0.05, 3, 1.0);
  const Vec alpha = Vec::Constant(1, 1.4);
  const double delta = series.schedule.delta;

  double num = 0.0, den = 0.0;
  for (std::int64_t j = 1; j <= 198; ++j) {
    const double Aj = 1.4 * (2.0 + std::sin(series.ybar(j - 1, 0)));
    const double v = series.ybar(j + 1, 0) - series.ybar(j, 0);
    num += v / Aj;
    den += 1.0 / Aj;
  }
  const double analytic = num / (delta * den);

  ParamSpace box;
  box.lower = Vec::Constant(1, -30.0);
  box.upper = Vec::Constant(1, 30.0);
  const auto result = maximize_box(
      [&](const Vec& b) { return H2_full(model, b, alpha, series); },
      [&](const Vec& b) {
        DerivativeRequest req;
        req.gradient = true;
        return H2_full_derivatives(model, b, alpha, series, req).gradient;
      },
      box, Vec::Constant(1, 3.0));
  CHECK(result.converged);
  CHECK(result.x(0) == doctest::Approx(analytic).epsilon(1e-10));
}

TEST_CASE("beta-free drift makes H2_full constant in beta") {
  ModelSpec model = const_model();
  model.drift = [](const Vec&, const Vec&) { return Vec::Zero(1); };
  model.db_dbeta = nullptr;
  model.d2b_dbeta2 = nullptr;
  const auto series = random_walk_series(80, 0.04, 4, 1.0);
  CHECK(H2_full(model, Vec::Constant(1, -5.0), Vec::Ones(1), series) ==
        H2_full(model, Vec::Constant(1, 2.0), Vec::Ones(1), series));
}

TEST_CASE("tempering: q = 1/2 reduces to the raw contrast") {
  const auto model = const_model();
  const auto series = random_walk_series(120, 0.04, 6, 1.0);
  const Mat Lambda = Mat::Zero(1, 1);
  const auto eff = plain_eff(series.schedule);
  const Vec alpha = Vec::Constant(1, 1.2);
  CHECK(H1_tempered(model, alpha, Lambda, series, 0.5, eff) ==
        W1(model, alpha, Lambda, series, series.schedule.k_reduced, eff));
  const Vec beta = Vec::Constant(1, 0.4);
  CHECK(H2_tempered(model, beta, series, 0.5) ==
        W2(model, beta, series, series.schedule.k_reduced));
}

TEST_CASE("tempering factor k_reduced^{-(1-2q)} is applied literally") {
  const auto model = const_model();
  const auto series = random_walk_series(10000, 0.04, 61, 1.0);
  const Mat Lambda = Mat::Zero(1, 1);
  const auto eff = plain_eff(series.schedule);
  const Vec alpha = Vec::Constant(1, 0.9);
  const double w1 = W1(model, alpha, Lambda, series, 10000, eff);
  const double h1 = H1_tempered(model, alpha, Lambda, series, 0.25, eff);
  CHECK(h1 == doctest::Approx(0.01 * w1).epsilon(1e-14));  // 1e4^{-1/2}
}

TEST_CASE("positive tempering preserves the grid argmax exactly") {
  const auto model = const_model();
  const auto series = random_walk_series(150, 0.04, 17, 1.0);
  const Mat Lambda = Mat::Zero(1, 1);
  const auto eff = plain_eff(series.schedule);
  std::vector<double> w_vals, h_vals;
  for (double a = 0.1; a <= 5.0; a += 0.05) {
    const Vec alpha = Vec::Constant(1, a);
    w_vals.push_back(W1(model, alpha, Lambda, series, series.schedule.k_reduced, eff));
    h_vals.push_back(H1_tempered(model, alpha, Lambda, series, 0.3, eff));
  }
  const auto w_arg = std::max_element(w_vals.begin(), w_vals.end()) - w_vals.begin();
  const auto h_arg = std::max_element(h_vals.begin(), h_vals.end()) - h_vals.begin();
  CHECK(w_arg == h_arg);
}

TEST_CASE("objective evaluation is deterministic") {
  const auto model = const_model();
  const auto series = random_walk_series(500, 0.04, 23, 1.0);
  const Mat Lambda = Mat::Constant(1, 1, 1e-3);
  const auto eff = plain_eff(series.schedule);
  const Vec alpha = Vec::Constant(1, 1.7);
  CHECK(W1(model, alpha, Lambda, series, 500, eff) ==
        W1(model, alpha, Lambda, series, 500, eff));
  CHECK(H1_full(model, alpha, Lambda, series, eff) ==
        H1_full(model, alpha, Lambda, series, eff));
}

TEST_CASE("finite-difference derivatives agree with the analytic chain rule") {
  const auto reg = model_from_name("paper-3d");
  // synthetic 3-d block means
  LocalMeanSeries series;
  series.schedule = make_sched(60, 0.02);
  series.ybar.resize(60, 3);
  Philox rng(31, 2);
  Eigen::RowVector3d x(1.0, 1.0, 1.0);
  for (std::int64_t j = 0; j < 60; ++j) {
    series.ybar.row(j) = x;
    for (int c = 0; c < 3; ++c) x(c) += 0.1 * std::sqrt(0.02) * rng.next_gaussian();
  }
  const Mat Lambda = 1e-3 * Mat::Identity(3, 3);
  const auto eff = plain_eff(series.schedule);

  Philox prng(77, 3);
  for (int trial = 0; trial < 3; ++trial) {
    Vec alpha(3), beta(6);
    for (int i = 0; i < 3; ++i) alpha(i) = 0.5 + 3.0 * prng.next_double();
    for (int i = 0; i < 6; ++i) beta(i) = 0.5 + 3.5 * prng.next_double();

    DerivativeRequest analytic_req;
    analytic_req.gradient = true;
    analytic_req.hessian = true;
    DerivativeRequest fd_req = analytic_req;
    fd_req.force_fd = true;

    const auto check_pair = [&](const ContrastValue& an, const ContrastValue& fd) {
      CHECK(an.value == fd.value);
      const double gscale = std::max(1.0, an.gradient.lpNorm<Eigen::Infinity>());
      CHECK((an.gradient - fd.gradient).lpNorm<Eigen::Infinity>() <= 1e-4 * gscale);
      const double hscale = std::max(1.0, an.hessian.lpNorm<Eigen::Infinity>());
      CHECK((an.hessian - fd.hessian).lpNorm<Eigen::Infinity>() <= 2e-3 * hscale);
      CHECK((an.hessian - an.hessian.transpose()).lpNorm<Eigen::Infinity>() <=
            1e-8 * hscale);
      CHECK((fd.hessian - fd.hessian.transpose()).lpNorm<Eigen::Infinity>() <=
            1e-8 * hscale);
    };

    check_pair(W1_derivatives(reg.spec, alpha, Lambda, series, 60, eff, analytic_req),
               W1_derivatives(reg.spec, alpha, Lambda, series, 60, eff, fd_req));
    check_pair(W2_derivatives(reg.spec, beta, series, 60, analytic_req),
               W2_derivatives(reg.spec, beta, series, 60, fd_req));
    check_pair(H1_full_derivatives(reg.spec, alpha, Lambda, series, eff, analytic_req),
               H1_full_derivatives(reg.spec, alpha, Lambda, series, eff, fd_req));
    check_pair(H2_full_derivatives(reg.spec, beta, alpha, series, analytic_req),
               H2_full_derivatives(reg.spec, beta, alpha, series, fd_req));
  }
}

TEST_CASE("linear-in-beta drift has a beta-independent W2 Hessian") {
  const auto model = const_model();
  const auto series = random_walk_series(150, 0.04, 41, 1.0);
  DerivativeRequest req;
  req.gradient = true;
  req.hessian = true;
  const auto h1 = W2_derivatives(model, Vec::Constant(1, -2.0), series, 150, req);
  const auto h2 = W2_derivatives(model, Vec::Constant(1, 3.0), series, 150, req);
  CHECK(h1.hessian(0, 0) == doctest::Approx(h2.hessian(0, 0)).epsilon(1e-8));
}

TEST_CASE("singular block diffusion raises NonPdError with the block index") {
  ModelSpec model;
  model.d = 2;
  model.r = 2;
  model.m1 = 1;
  model.m2 = 1;
  model.drift = [](const Vec&, const Vec&) { return Vec::Zero(2); };
  model.diffusion = [](const Vec&, const Vec& a) {
    Mat out = Mat::Zero(2, 2);
    out(0, 0) = std::sqrt(a(0));  // second row identically zero: A singular
    return out;
  };
  LocalMeanSeries series;
  series.schedule = make_sched(10, 0.04);
  series.ybar = Mat::Zero(10, 2);
  const auto eff = plain_eff(series.schedule);
  try {
    H1_full(model, Vec::Ones(1), Mat::Zero(2, 2), series, eff);
    FAIL("expected NonPdError");
  } catch (const NonPdError& e) {
    CHECK(e.block == 1);
  }
}

TEST_CASE("contrast sums require at least one term") {
  const auto model = const_model();
  const auto series = random_walk_series(10, 0.04, 2, 1.0);
  CHECK_THROWS_AS(W1(model, Vec::Ones(1), Mat::Zero(1, 1), series, 2,
                     plain_eff(series.schedule)),
                  ConfigError);
  CHECK_THROWS_AS(W2(model, Vec::Ones(1), series, 30), ConfigError);  // k_used > k
}

TEST_CASE("umbrella dispatch matches the per-objective entry points") {
  const auto model = const_model();
  const auto series = random_walk_series(80, 0.04, 71, 1.0);
  const Mat Lambda = Mat::Constant(1, 1, 1e-3);
  const auto eff = plain_eff(series.schedule);
  const Vec alpha = Vec::Constant(1, 1.1);
  const Vec beta = Vec::Constant(1, 0.2);
  DerivativeRequest req;
  req.gradient = true;

  const auto w1 = contrast_derivatives(Objective::w1, model, alpha, Lambda,
                                       Vec(), series, 80, eff, req);
  CHECK(w1.value == W1(model, alpha, Lambda, series, 80, eff));
  const auto h2 = contrast_derivatives(Objective::h2_full, model, beta, Lambda,
                                       alpha, series, 80, eff, req);
  CHECK(h2.value == H2_full(model, beta, alpha, series));
}
