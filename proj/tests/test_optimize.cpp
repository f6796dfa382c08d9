#include <doctest.h>

#include <cmath>

#include "sdeh/optimize.hpp"

using namespace sdeh;

TEST_CASE("one-dimensional quadratic converges in a handful of iterations") {
  ParamSpace box;
  box.lower = Vec::Constant(1, -5.0);
  box.upper = Vec::Constant(1, 5.0);
  const auto value = [](const Vec& x) { return -(x(0) - 0.3) * (x(0) - 0.3); };
  const auto grad = [](const Vec& x) {
    return Vec::Constant(1, -2.0 * (x(0) - 0.3));
  };
  const auto result = maximize_box(value, grad, box, Vec::Constant(1, -4.0));
  CHECK(result.converged);
  CHECK(result.iterations <= 5);
  CHECK(result.x(0) == doctest::Approx(0.3).epsilon(1e-8));
}

TEST_CASE("anisotropic quadratic in five dimensions") {
  const int m = 5;
  Vec target(m);
  target << 1.0, -2.0, 0.5, 3.0, -0.75;
  Vec weights(m);
  weights << 100.0, 1.0, 10.0, 0.1, 5.0;
  ParamSpace box;
  box.lower = Vec::Constant(m, -10.0);
  box.upper = Vec::Constant(m, 10.0);
  const auto value = [&](const Vec& x) {
    return -0.5 * (weights.array() * (x - target).array().square()).sum();
  };
  const auto grad = [&](const Vec& x) {
    return Vec(-(weights.array() * (x - target).array()));
  };
  const auto result = maximize_box(value, grad, box, Vec::Zero(m));
  CHECK(result.converged);
  CHECK((result.x - target).lpNorm<Eigen::Infinity>() < 1e-6);
}

TEST_CASE("rosenbrock valley (maximizing the negative)") {
  ParamSpace box;
  box.lower = Vec::Constant(2, -2.0);
  box.upper = Vec::Constant(2, 2.0);
  const auto value = [](const Vec& x) {
    const double a = 1.0 - x(0);
    const double b = x(1) - x(0) * x(0);
    return -(a * a + 100.0 * b * b);
  };
  const auto grad = [](const Vec& x) {
    Vec g(2);
    const double b = x(1) - x(0) * x(0);
    g(0) = 2.0 * (1.0 - x(0)) + 400.0 * x(0) * b;
    g(1) = -200.0 * b;
    return g;
  };
  MaximizeOptions opts;
  opts.max_iters = 500;
  const auto result = maximize_box(value, grad, box, (Vec(2) << -1.2, 1.0).finished(), opts);
  CHECK((result.x - Vec::Ones(2)).lpNorm<Eigen::Infinity>() < 1e-4);
}

TEST_CASE("active bound: maximum on the box face") {
  ParamSpace box;
  box.lower = Vec::Constant(2, 0.0);
  box.upper = Vec::Constant(2, 1.0);
  const auto value = [](const Vec& x) { return x(0) + 0.5 * x(1); };
  const auto grad = [](const Vec&) {
    return (Vec(2) << 1.0, 0.5).finished();
  };
  const auto result = maximize_box(value, grad, box, Vec::Constant(2, 0.25));
  CHECK(result.converged);
  CHECK(result.x(0) == doctest::Approx(1.0));
  CHECK(result.x(1) == doctest::Approx(1.0));
}

TEST_CASE("non-convergence within the budget is reported") {
  ParamSpace box;
  box.lower = Vec::Constant(2, -2.0);
  box.upper = Vec::Constant(2, 2.0);
  const auto value = [](const Vec& x) {
    const double a = 1.0 - x(0);
    const double b = x(1) - x(0) * x(0);
    return -(a * a + 100.0 * b * b);
  };
  const auto grad = [](const Vec& x) {
    Vec g(2);
    const double b = x(1) - x(0) * x(0);
    g(0) = 2.0 * (1.0 - x(0)) + 400.0 * x(0) * b;
    g(1) = -200.0 * b;
    return g;
  };
  MaximizeOptions opts;
  opts.max_iters = 3;  // far too few for Rosenbrock
  const auto result = maximize_box(value, grad, box, (Vec(2) << -1.2, 1.0).finished(), opts);
  CHECK_FALSE(result.converged);
  // best iterate is still returned
  CHECK(std::isfinite(result.value));
}
