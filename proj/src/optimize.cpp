#include "sdeh/optimize.hpp"

#include <cmath>

namespace sdeh {

namespace {

// Zero out gradient components that push against an active bound.
Vec projected_gradient(const Vec& g, const Vec& x, const ParamSpace& box) {
  Vec pg = g;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const bool at_lower = x(i) <= box.lower(i);
    const bool at_upper = x(i) >= box.upper(i);
    if ((at_lower && g(i) < 0.0) || (at_upper && g(i) > 0.0)) pg(i) = 0.0;
  }
  return pg;
}

}  // namespace

MaximizeResult maximize_box(const std::function<double(const Vec&)>& value,
                            const std::function<Vec(const Vec&)>& gradient,
                            const ParamSpace& box, const Vec& x0,
                            const MaximizeOptions& opts) {
  box.validate();
  const int m = box.dim();

  MaximizeResult result;
  Vec x = box.clamp(x0);
  double f = value(x);
  Vec g = gradient(x);
  Mat hinv = Mat::Identity(m, m);
  int skipped_updates = 0;

  result.x = x;
  result.value = f;

  for (int it = 0; it < opts.max_iters; ++it) {
    result.iterations = it + 1;
    const Vec pg = projected_gradient(g, x, box);
    if (pg.lpNorm<Eigen::Infinity>() == 0.0) {
      result.converged = true;
      break;
    }

    Vec dir = hinv * pg;
    if (dir.dot(pg) <= 0.0) dir = pg;  // keep an ascent direction

    // Backtracking Armijo search along the projected path.
    double t = 1.0;
    bool accepted = false;
    Vec x_new;
    double f_new = f;
    for (int ls = 0; ls < 50; ++ls) {
      x_new = box.clamp(x + t * dir);
      const Vec step = x_new - x;
      if (step.lpNorm<Eigen::Infinity>() == 0.0) break;
      f_new = value(x_new);
      if (std::isfinite(f_new) && f_new >= f + 1e-4 * g.dot(step)) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      // try the raw projected gradient before giving up
      if ((dir - pg).lpNorm<Eigen::Infinity>() > 0.0) {
        hinv = Mat::Identity(m, m);
        dir = pg;
        t = 1.0;
        for (int ls = 0; ls < 60; ++ls) {
          x_new = box.clamp(x + t * dir);
          const Vec step = x_new - x;
          if (step.lpNorm<Eigen::Infinity>() == 0.0) break;
          f_new = value(x_new);
          if (std::isfinite(f_new) && f_new >= f + 1e-4 * g.dot(step)) {
            accepted = true;
            break;
          }
          t *= 0.5;
        }
      }
      if (!accepted) {
        result.converged = pg.lpNorm<Eigen::Infinity>() *
                               std::abs(f) * 1e-16 <
                           opts.tol;
        break;
      }
    }

    const Vec s = x_new - x;
    const Vec g_new = gradient(x_new);
    const Vec y = g_new - g;

    x = x_new;
    f = f_new;
    g = g_new;
    if (f > result.value) {
      result.value = f;
      result.x = x;
    }

    if (pg.lpNorm<Eigen::Infinity>() * s.lpNorm<Eigen::Infinity>() < opts.tol) {
      result.converged = true;
      break;
    }

    // BFGS update for maximization: curvature condition s'y < 0, so update
    // with (s, -y) in the minimization convention.
    const double sy = -s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      const Vec ym = -y;
      const double rho = 1.0 / sy;
      const Mat eye = Mat::Identity(m, m);
      hinv = (eye - rho * s * ym.transpose()) * hinv *
                 (eye - rho * ym * s.transpose()) +
             rho * s * s.transpose();
      skipped_updates = 0;
    } else if (++skipped_updates >= 3) {
      hinv = Mat::Identity(m, m);
      skipped_updates = 0;
    }
  }
  return result;
}

}  // namespace sdeh
