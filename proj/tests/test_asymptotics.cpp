#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sdeh/asymptotics.hpp"
#include "sdeh/errors.hpp"
#include "sdeh/experiment.hpp"
#include "sdeh/rng.hpp"
#include "sdeh/simulate.hpp"

using namespace sdeh;

TEST_CASE("sigma index map: printed values and exhaustive bijection") {
  CHECK(sigma_index(3, 1, 3) == 3);
  CHECK(sigma_index(3, 2, 2) == 4);
  CHECK(sigma_index(3, 3, 3) == 6);
  CHECK(sigma_index(1, 1, 1) == 1);

  for (int d = 1; d <= 50; ++d) {
    std::vector<int> seen(d * (d + 1) / 2, 0);
    for (int i = 1; i <= d; ++i) {
      for (int j = i; j <= d; ++j) {
        const int idx = sigma_index(d, i, j);
        REQUIRE(idx >= 1);
        REQUIRE(idx <= d * (d + 1) / 2);
        ++seen[idx - 1];
        const auto [bi, bj] = sigma_inverse(d, idx);
        REQUIRE(bi == i);
        REQUIRE(bj == j);
      }
    }
    CHECK(*std::min_element(seen.begin(), seen.end()) == 1);
    CHECK(*std::max_element(seen.begin(), seen.end()) == 1);
  }
}

TEST_CASE("sigma index rejects out-of-range input") {
  CHECK_THROWS_AS(sigma_index(3, 2, 1), ConfigError);  // j < i
  CHECK_THROWS_AS(sigma_index(3, 0, 1), ConfigError);
  CHECK_THROWS_AS(sigma_index(3, 1, 4), ConfigError);
  CHECK_THROWS_AS(sigma_inverse(3, 0), ConfigError);
  CHECK_THROWS_AS(sigma_inverse(3, 7), ConfigError);
}

TEST_CASE("vech stacks the upper triangle in sigma order") {
  Mat m(3, 3);
  m << 1, 2, 3, 2, 4, 5, 3, 5, 6;
  const Vec v = vech(m);
  REQUIRE(v.size() == 6);
  for (int i = 0; i < 6; ++i) CHECK(v(i) == static_cast<double>(i + 1));
}

TEST_CASE("scalar gaussian noise matrix equals 3 lambda^2") {
  const double lam = 7e-4;
  const Mat w1 = noise_matrix_W1(Mat::Constant(1, 1, lam), Vec::Constant(1, 3.0));
  REQUIRE(w1.rows() == 1);
  CHECK(w1(0, 0) == doctest::Approx(3.0 * lam * lam).epsilon(1e-12));
}

TEST_CASE("gaussian fourth moments cancel the kurtosis term") {
  Philox rng(8, 0);
  Mat root(3, 3);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) root(i, j) = rng.next_gaussian();
  }
  const Mat Lambda = root * root.transpose() + 0.1 * Mat::Identity(3, 3);
  const Mat w1 = noise_matrix_W1(Lambda, Vec::Constant(3, 3.0));
  // direct evaluation of the lambda-only expression
  Mat direct(6, 6);
  for (int i1 = 1; i1 <= 6; ++i1) {
    const auto [a, b] = sigma_inverse(3, i1);
    for (int i2 = 1; i2 <= 6; ++i2) {
      const auto [c, e] = sigma_inverse(3, i2);
      direct(i1 - 1, i2 - 1) =
          1.5 * (Lambda(a - 1, c - 1) * Lambda(b - 1, e - 1) +
                 Lambda(a - 1, e - 1) * Lambda(b - 1, c - 1));
    }
  }
  CHECK((w1 - direct).lpNorm<Eigen::Infinity>() <=
        1e-12 * direct.lpNorm<Eigen::Infinity>());
}

TEST_CASE("noise matrix is symmetric and PSD for random inputs") {
  Philox rng(44, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const int d = 1 + static_cast<int>(rng.next_double() * 4);
    Mat root(d, d);
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) root(i, j) = rng.next_gaussian();
    }
    const Mat Lambda = root * root.transpose() + 0.05 * Mat::Identity(d, d);
    Vec fourth = Vec::Constant(d, 3.0);
    if (trial % 2 == 1) {
      for (int i = 0; i < d; ++i) fourth(i) = 1.5 + 4.0 * rng.next_double();
    }
    const Mat w1 = noise_matrix_W1(Lambda, fourth);
    CHECK((w1 - w1.transpose()).lpNorm<Eigen::Infinity>() <=
          1e-12 * std::max(1.0, w1.lpNorm<Eigen::Infinity>()));
    if (trial % 2 == 0) {  // gaussian case: PSD
      Eigen::SelfAdjointEigenSolver<Mat> eig(w1);
      CHECK(eig.eigenvalues().minCoeff() >= -1e-10 * w1.trace());
    }
  }
}

namespace {

LocalMeanSeries synthetic_series(std::int64_t k, double delta, int d,
                                 std::uint64_t seed) {
  LocalMeanSeries series;
  series.schedule.tau = 2.0;
  series.schedule.p = 4;
  series.schedule.delta = delta;
  series.schedule.k = k;
  series.schedule.k_reduced = k;
  series.schedule.t_reduced = static_cast<double>(k) * delta;
  series.ybar.resize(k, d);
  Philox rng(seed, 0);
  Eigen::RowVectorXd x = Eigen::RowVectorXd::Ones(d);
  for (std::int64_t j = 0; j < k; ++j) {
    series.ybar.row(j) = x;
    for (int c = 0; c < d; ++c) x(c) += std::sqrt(delta) * rng.next_gaussian();
  }
  return series;
}

}  // namespace

TEST_CASE("scalar plug-in blocks match direct arithmetic") {
  const auto reg = model_from_name("ou-1d");
  const auto series = synthetic_series(500, 0.02, 1, 5);
  const double alpha = 1.3, beta = 0.8, lam = 2e-3;
  const auto est = plug_in_information(reg.spec, series, Vec::Constant(1, alpha),
                                       Vec::Constant(1, beta),
                                       Mat::Constant(1, 1, lam), 2.0, 1e5,
                                       200.0);
  // state-independent model: the averages collapse to scalar formulas
  const double m = alpha + 3.0 * lam;
  CHECK(est.J_alpha(0, 0) == doctest::Approx(0.5 / (m * m)).epsilon(1e-12));
  const double bmat = 0.75 / (m * m);
  const double i_expected =
      bmat * bmat * (alpha * alpha + 4.0 * alpha * lam + 12.0 * lam * lam);
  CHECK(est.I_alpha(0, 0) == doctest::Approx(i_expected).epsilon(1e-12));

  // beta block: average of x^2 / alpha over the states ybar_{j-1}
  double acc = 0.0;
  for (std::int64_t j = 1; j <= 498; ++j) {
    acc += series.ybar(j - 1, 0) * series.ybar(j - 1, 0) / alpha;
  }
  acc /= 498.0;
  CHECK(est.J_beta(0, 0) == doctest::Approx(acc).epsilon(1e-12));

  // rates: se_alpha uses sqrt(k), se_beta uses sqrt(T_n), se_lambda sqrt(n)
  const double cov_alpha = i_expected / (est.J_alpha(0, 0) * est.J_alpha(0, 0));
  CHECK(est.se_alpha(0) == doctest::Approx(std::sqrt(cov_alpha / 500.0)));
  CHECK(est.se_beta(0) ==
        doctest::Approx(std::sqrt((1.0 / acc) / 200.0)).epsilon(1e-12));
  CHECK(est.se_lambda(0) ==
        doctest::Approx(std::sqrt(3.0 * lam * lam / 1e5)).epsilon(1e-12));
}

TEST_CASE("tau below 2 drops the noise terms from the alpha covariance") {
  const auto reg = model_from_name("ou-1d");
  const auto series = synthetic_series(200, 0.02, 1, 6);
  const double alpha = 1.1, lam = 5e-3;
  const auto est = plug_in_information(reg.spec, series, Vec::Constant(1, alpha),
                                       Vec::Constant(1, 1.0),
                                       Mat::Constant(1, 1, lam), 1.5, 1e5, 100.0);
  // A^tau = A for tau < 2 and the covariance functional has no Lambda terms
  CHECK(est.J_alpha(0, 0) == doctest::Approx(0.5 / (alpha * alpha)).epsilon(1e-12));
  const double bmat = 0.75 / (alpha * alpha);
  CHECK(est.I_alpha(0, 0) ==
        doctest::Approx(bmat * bmat * alpha * alpha).epsilon(1e-12));
}

TEST_CASE("drift information blocks are bit-equal") {
  const auto reg = model_from_name("paper-3d");
  const auto series = synthetic_series(100, 0.02, 3, 7);
  const auto est = plug_in_information(
      reg.spec, series, reg.alpha_default, reg.beta_default,
      1e-3 * Mat::Identity(3, 3), 2.0, 1e6, 100.0);
  CHECK((est.I_beta - est.J_beta).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(est.alpha_block_ok);
  CHECK(est.beta_block_ok);
  CHECK(est.se_alpha.minCoeff() >= 0.0);
  CHECK(est.se_beta.minCoeff() >= 0.0);
}

TEST_CASE("plug-in averages are invariant under block permutations") {
  const auto reg = model_from_name("ou-1d");
  auto series = synthetic_series(300, 0.02, 1, 9);
  const auto base = plug_in_information(reg.spec, series, Vec::Ones(1),
                                        Vec::Ones(1), Mat::Constant(1, 1, 1e-3),
                                        2.0, 1e5, 100.0);
  // permute the states feeding the averages (rows 0..k-3)
  std::vector<std::int64_t> perm(298);
  std::iota(perm.begin(), perm.end(), 0);
  Philox rng(123, 0);
  for (std::size_t i = perm.size(); i > 1; --i) {
    std::swap(perm[i - 1],
              perm[static_cast<std::size_t>(rng.next_double() * i)]);
  }
  auto shuffled = series;
  for (std::size_t i = 0; i < perm.size(); ++i) {
    shuffled.ybar.row(static_cast<Eigen::Index>(i)) =
        series.ybar.row(perm[i]);
  }
  const auto permuted = plug_in_information(
      reg.spec, shuffled, Vec::Ones(1), Vec::Ones(1),
      Mat::Constant(1, 1, 1e-3), 2.0, 1e5, 100.0);
  CHECK(std::abs(permuted.J_beta(0, 0) - base.J_beta(0, 0)) <=
        1e-12 * std::abs(base.J_beta(0, 0)));
  CHECK(std::abs(permuted.J_alpha(0, 0) - base.J_alpha(0, 0)) <=
        1e-12 * std::abs(base.J_alpha(0, 0)));
}

TEST_CASE("singular information block is flagged, not fabricated") {
  // diffusion does not depend on alpha: dA = 0, J_alpha = 0
  ModelSpec model;
  model.d = 1;
  model.r = 1;
  model.m1 = 1;
  model.m2 = 1;
  model.drift = [](const Vec& x, const Vec& b) {
    return Vec::Constant(1, -b(0) * x(0));
  };
  model.diffusion = [](const Vec&, const Vec&) { return Mat::Constant(1, 1, 1.0); };
  model.dA_dalpha = [](const Vec&, const Vec&) {
    return std::vector<Mat>{Mat::Zero(1, 1)};
  };
  const auto series = synthetic_series(100, 0.02, 1, 10);
  const auto est = plug_in_information(model, series, Vec::Ones(1), Vec::Ones(1),
                                       Mat::Constant(1, 1, 1e-3), 2.0, 1e5, 100.0);
  CHECK_FALSE(est.alpha_block_ok);
  CHECK(est.se_alpha.size() == 0);
  CHECK(est.beta_block_ok);  // drift block is fine
}

TEST_CASE("confidence intervals cover the truth at roughly nominal rate") {
  // 100 desk-scale OU replications, quasi-likelihood fits from the truth,
  // plug-in standard errors; coverage of the 95% intervals should land in
  // [88, 99] out of 100 for both parameter blocks.
  const auto reg = model_from_name("ou-1d");
  const std::int64_t n = 100000;
  const double h = std::pow(static_cast<double>(n), -0.7);

  SimulationConfig sim;
  sim.model = reg.spec;
  sim.alpha_true = Vec::Ones(1);
  sim.beta_true = Vec::Ones(1);
  sim.x0 = Vec::Ones(1);
  sim.n = n;
  sim.h = h;
  sim.substeps = 5;
  sim.Lambda = Mat::Constant(1, 1, 1e-3);

  TuningConfig tuning;
  tuning.n = n;
  tuning.h = h;
  tuning.gamma = 0.7;
  tuning.gamma_prime = 0.7;
  tuning.eta1 = 61.0 / 70.0;
  tuning.eta2 = 61.0 / 70.0;

  int cover_alpha = 0, cover_beta = 0;
  const int reps = 100;
  BatchSimulator batch(sim, reps, 31415, 8);
  for (int r = 0; r < reps; ++r) {
    const auto path = batch.replication(r);
    const auto ml = ml_from_init(path.obs, reg.spec, reg.alpha_space,
                                 reg.beta_space, tuning, sim.alpha_true,
                                 sim.beta_true);
    const auto sched3 = make_schedule(tuning, tuning.tau3);
    const auto ybar3 = local_means(path.obs, sched3);
    const auto lambda_hat = estimate_noise_variance(path.obs);
    const auto info = plug_in_information(reg.spec, ybar3, ml.alpha, ml.beta,
                                          lambda_hat.lambda_hat, tuning.tau3,
                                          static_cast<double>(n), tuning.T());
    REQUIRE(info.alpha_block_ok);
    REQUIRE(info.beta_block_ok);
    if (std::abs(ml.alpha(0) - 1.0) <= 1.96 * info.se_alpha(0)) ++cover_alpha;
    if (std::abs(ml.beta(0) - 1.0) <= 1.96 * info.se_beta(0)) ++cover_beta;
  }
  INFO("coverage alpha ", cover_alpha, " beta ", cover_beta);
  CHECK(cover_alpha >= 88);
  CHECK(cover_alpha <= 99);
  CHECK(cover_beta >= 88);
  CHECK(cover_beta <= 99);
}
