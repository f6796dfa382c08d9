#include "sdeh/contrasts.hpp"

#include <cmath>
#include <sstream>

#include "sdeh/errors.hpp"

namespace sdeh {

double EffectiveDiffusion::noise_coeff() const {
  if (drop_noise) return 0.0;
  switch (mode) {
    case EffDiffMode::limit:
      return tau == 2.0 ? 3.0 : 0.0;
    case EffDiffMode::stage3: {
      if (tau == 2.0) return 3.0;  // exponent 0, delta^0 = 1
      const double expo = (2.0 - tau) / (tau - 1.0);
      return 3.0 * std::pow(delta, expo);
    }
  }
  return 0.0;
}

namespace {

void check_k_used(const LocalMeanSeries& ybar, std::int64_t k_used) {
  if (k_used > ybar.schedule.k || k_used > ybar.ybar.rows()) {
    throw ConfigError("k_used exceeds the available block count");
  }
  if (k_used - 2 < 1) {
    throw ConfigError("insufficient blocks: need k_used >= 3 for contrast sums");
  }
}

// Per-block PD factorization of M; throws NonPdError carrying the block
// index and the offending parameter on failure.
Eigen::LLT<Mat> factor_pd(const Mat& M, std::int64_t j, const Vec& theta) {
  Eigen::LLT<Mat> llt(M);
  if (llt.info() != Eigen::Success) {
    std::ostringstream err;
    err << "non-PD effective diffusion at block " << j << ", theta = ["
        << theta.transpose() << "]";
    throw NonPdError(err.str(), j);
  }
  return llt;
}

double logdet_from_llt(const Eigen::LLT<Mat>& llt) {
  double out = 0.0;
  const auto& L = llt.matrixLLT();
  for (Eigen::Index i = 0; i < L.rows(); ++i) out += std::log(L(i, i));
  return 2.0 * out;
}

}  // namespace

double W1(const ModelSpec& model, const Vec& alpha, const Mat& Lambda,
          const LocalMeanSeries& ybar, std::int64_t k_used,
          const EffectiveDiffusion& eff) {
  check_k_used(ybar, k_used);
  const double inv_delta = 1.0 / ybar.schedule.delta;
  NeumaierSum acc;
  for (std::int64_t j = 1; j <= k_used - 2; ++j) {
    const Vec x = ybar.ybar.row(j - 1);
    const Vec v = ybar.ybar.row(j + 1) - ybar.ybar.row(j);
    const Mat M = eff.apply(eval_A(model, x, alpha), Lambda);
    const Mat R = inv_delta * (v * v.transpose()) - (2.0 / 3.0) * M;
    acc.add(R.squaredNorm());
  }
  return -0.5 * acc.value();
}

double W2(const ModelSpec& model, const Vec& beta,
          const LocalMeanSeries& ybar, std::int64_t k_used) {
  check_k_used(ybar, k_used);
  const double delta = ybar.schedule.delta;
  NeumaierSum acc;
  for (std::int64_t j = 1; j <= k_used - 2; ++j) {
    const Vec x = ybar.ybar.row(j - 1);
    const Vec v = ybar.ybar.row(j + 1) - ybar.ybar.row(j);
    const Vec r = v - delta * eval_drift(model, x, beta);
    acc.add(r.squaredNorm() / delta);
  }
  return -0.5 * acc.value();
}

double H1_tempered(const ModelSpec& model, const Vec& alpha, const Mat& Lambda,
                   const LocalMeanSeries& ybar, double q1,
                   const EffectiveDiffusion& eff) {
  const double factor =
      std::pow(static_cast<double>(ybar.schedule.k_reduced), -(1.0 - 2.0 * q1));
  return factor * W1(model, alpha, Lambda, ybar, ybar.schedule.k_reduced, eff);
}

double H2_tempered(const ModelSpec& model, const Vec& beta,
                   const LocalMeanSeries& ybar, double q2) {
  const double factor = std::pow(ybar.schedule.t_reduced, -(1.0 - 2.0 * q2));
  return factor * W2(model, beta, ybar, ybar.schedule.k_reduced);
}

double H1_full(const ModelSpec& model, const Vec& alpha, const Mat& Lambda,
               const LocalMeanSeries& ybar, const EffectiveDiffusion& eff) {
  check_k_used(ybar, ybar.schedule.k);
  const double delta = ybar.schedule.delta;
  NeumaierSum acc;
  for (std::int64_t j = 1; j <= ybar.schedule.k - 2; ++j) {
    const Vec x = ybar.ybar.row(j - 1);
    const Vec v = ybar.ybar.row(j + 1) - ybar.ybar.row(j);
    const Mat M = eff.apply(eval_A(model, x, alpha), Lambda);
    const auto llt = factor_pd(M, j, alpha);
    const double quad = v.dot(llt.solve(v));
    acc.add(1.5 / delta * quad + logdet_from_llt(llt));
  }
  return -0.5 * acc.value();
}

double H2_full(const ModelSpec& model, const Vec& beta, const Vec& alpha,
               const LocalMeanSeries& ybar) {
  check_k_used(ybar, ybar.schedule.k);
  const double delta = ybar.schedule.delta;
  NeumaierSum acc;
  for (std::int64_t j = 1; j <= ybar.schedule.k - 2; ++j) {
    const Vec x = ybar.ybar.row(j - 1);
    const Vec v = ybar.ybar.row(j + 1) - ybar.ybar.row(j);
    const Vec r = v - delta * eval_drift(model, x, beta);
    const Mat A = eval_A(model, x, alpha);
    const auto llt = factor_pd(A, j, beta);
    acc.add(r.dot(llt.solve(r)) / delta);
  }
  return -0.5 * acc.value();
}

namespace {

// Finite differences of a scalar objective with spec'd step sizes.
ContrastValue scalar_fd(const std::function<double(const Vec&)>& f,
                        const Vec& theta, const DerivativeRequest& req) {
  ContrastValue out;
  out.value = f(theta);
  const int m = static_cast<int>(theta.size());

  const auto side_ok = [&](int i, double eps, int direction) {
    if (req.box == nullptr) return true;
    const double t = theta(i) + direction * eps;
    return t >= req.box->lower(i) && t <= req.box->upper(i);
  };

  if (req.gradient) {
    out.gradient.resize(m);
    for (int i = 0; i < m; ++i) {
      const double eps = fd::step(theta(i), 1e-6);
      Vec t = theta;
      if (side_ok(i, eps, +1) && side_ok(i, eps, -1)) {
        t(i) = theta(i) + eps;
        const double up = f(t);
        t(i) = theta(i) - eps;
        const double down = f(t);
        out.gradient(i) = (up - down) / (2.0 * eps);
      } else if (side_ok(i, 2.0 * eps, -1)) {
        t(i) = theta(i) - eps;
        const double f1 = f(t);
        t(i) = theta(i) - 2.0 * eps;
        const double f2 = f(t);
        out.gradient(i) = (3.0 * out.value - 4.0 * f1 + f2) / (2.0 * eps);
      } else if (side_ok(i, 2.0 * eps, +1)) {
        t(i) = theta(i) + eps;
        const double f1 = f(t);
        t(i) = theta(i) + 2.0 * eps;
        const double f2 = f(t);
        out.gradient(i) = (-3.0 * out.value + 4.0 * f1 - f2) / (2.0 * eps);
      } else {
        throw ConfigError("parameter box too thin for finite differences");
      }
    }
    out.has_gradient = true;
  }

  if (req.hessian) {
    out.hessian.resize(m, m);
    // steps, possibly shrunk to stay inside the box
    Vec steps(m);
    for (int i = 0; i < m; ++i) {
      double eps = fd::step(theta(i), 1e-4);
      if (req.box != nullptr) {
        const double room = std::min(req.box->upper(i) - theta(i),
                                     theta(i) - req.box->lower(i));
        if (room > 0.0 && eps > room) eps = room;
      }
      steps(i) = eps;
    }
    const auto shifted = [&](int i, double si, int l, double sl) {
      Vec t = theta;
      t(i) += si;
      t(l) += sl;
      return f(t);
    };
    for (int i = 0; i < m; ++i) {
      const double si = steps(i);
      out.hessian(i, i) =
          (shifted(i, si, i, 0.0) - 2.0 * out.value + shifted(i, -si, i, 0.0)) /
          (si * si);
      for (int l = i + 1; l < m; ++l) {
        const double sl = steps(l);
        const double v =
            (shifted(i, si, l, sl) - shifted(i, si, l, -sl) -
             shifted(i, -si, l, sl) + shifted(i, -si, l, -sl)) /
            (4.0 * si * sl);
        out.hessian(i, l) = v;
        out.hessian(l, i) = v;
      }
    }
    out.hessian = symmetrize(out.hessian);
    out.has_hessian = true;
  }
  return out;
}

}  // namespace

ContrastValue W1_derivatives(const ModelSpec& model, const Vec& alpha,
                             const Mat& Lambda, const LocalMeanSeries& ybar,
                             std::int64_t k_used, const EffectiveDiffusion& eff,
                             const DerivativeRequest& req) {
  const bool analytic = model.has_alpha_derivatives() && !req.force_fd;
  if (!analytic) {
    return scalar_fd(
        [&](const Vec& a) { return W1(model, a, Lambda, ybar, k_used, eff); },
        alpha, req);
  }
  check_k_used(ybar, k_used);
  const int m = model.m1;
  const double inv_delta = 1.0 / ybar.schedule.delta;
  NeumaierSum value_acc;
  std::vector<NeumaierSum> grad_acc(req.gradient ? m : 0);
  std::vector<NeumaierSum> hess_acc(req.hessian ? m * m : 0);
  for (std::int64_t j = 1; j <= k_used - 2; ++j) {
    const Vec x = ybar.ybar.row(j - 1);
    const Vec v = ybar.ybar.row(j + 1) - ybar.ybar.row(j);
    const Mat M = eff.apply(eval_A(model, x, alpha), Lambda);
    const Mat R = inv_delta * (v * v.transpose()) - (2.0 / 3.0) * M;
    value_acc.add(R.squaredNorm());
    const auto dA = model.dA_dalpha(x, alpha);
    if (req.gradient) {
      for (int i = 0; i < m; ++i) {
        grad_acc[static_cast<std::size_t>(i)].add(
            (2.0 / 3.0) * (R.cwiseProduct(dA[static_cast<std::size_t>(i)])).sum());
      }
    }
    if (req.hessian) {
      const auto d2A = model.d2A_dalpha2(x, alpha);
      for (int i = 0; i < m; ++i) {
        for (int l = i; l < m; ++l) {
          const double term =
              -(4.0 / 9.0) * (dA[static_cast<std::size_t>(i)]
                                  .cwiseProduct(dA[static_cast<std::size_t>(l)]))
                                 .sum() +
              (2.0 / 3.0) *
                  (R.cwiseProduct(d2A[static_cast<std::size_t>(i) * m + l])).sum();
          hess_acc[static_cast<std::size_t>(i) * m + l].add(term);
          if (l != i) hess_acc[static_cast<std::size_t>(l) * m + i].add(term);
        }
      }
    }
  }
  ContrastValue out;
  out.value = -0.5 * value_acc.value();
  if (req.gradient) {
    out.gradient.resize(m);
    for (int i = 0; i < m; ++i) out.gradient(i) = grad_acc[static_cast<std::size_t>(i)].value();
    out.has_gradient = true;
  }
  if (req.hessian) {
    out.hessian.resize(m, m);
    for (int i = 0; i < m; ++i) {
      for (int l = 0; l < m; ++l) {
        out.hessian(i, l) = hess_acc[static_cast<std::size_t>(i) * m + l].value();
      }
    }
    out.hessian = symmetrize(out.hessian);
    out.has_hessian = true;
  }
  return out;
}

ContrastValue W2_derivatives(const ModelSpec& model, const Vec& beta,
                             const LocalMeanSeries& ybar, std::int64_t k_used,
                             const DerivativeRequest& req) {
  const bool analytic = model.has_beta_derivatives() && !req.force_fd;
  if (!analytic) {
    return scalar_fd(
        [&](const Vec& b) { return W2(model, b, ybar, k_used); }, beta, req);
  }
  check_k_used(ybar, k_used);
  const int m = model.m2;
  const double delta = ybar.schedule.delta;
  NeumaierSum value_acc;
  std::vector<NeumaierSum> grad_acc(req.gradient ? m : 0);
  std::vector<NeumaierSum> hess_acc(req.hessian ? m * m : 0);
  for (std::int64_t j = 1; j <= k_used - 2; ++j) {
    const Vec x = ybar.ybar.row(j - 1);
    const Vec v = ybar.ybar.row(j + 1) - ybar.ybar.row(j);
    const Vec r = v - delta * eval_drift(model, x, beta);
    value_acc.add(r.squaredNorm() / delta);
    const Mat Jb = model.db_dbeta(x, beta);
    if (req.gradient) {
      const Vec g = Jb.transpose() * r;
      for (int i = 0; i < m; ++i) grad_acc[static_cast<std::size_t>(i)].add(g(i));
    }
    if (req.hessian) {
      const auto d2b = model.d2b_dbeta2(x, beta);
      const Mat cross = Jb.transpose() * Jb;
      for (int i = 0; i < m; ++i) {
        for (int l = i; l < m; ++l) {
          const double term = -delta * cross(i, l) +
                              r.dot(d2b[static_cast<std::size_t>(i) * m + l]);
          hess_acc[static_cast<std::size_t>(i) * m + l].add(term);
          if (l != i) hess_acc[static_cast<std::size_t>(l) * m + i].add(term);
        }
      }
    }
  }
  ContrastValue out;
  out.value = -0.5 * value_acc.value();
  if (req.gradient) {
    out.gradient.resize(m);
    for (int i = 0; i < m; ++i) out.gradient(i) = grad_acc[static_cast<std::size_t>(i)].value();
    out.has_gradient = true;
  }
  if (req.hessian) {
    out.hessian.resize(m, m);
    for (int i = 0; i < m; ++i) {
      for (int l = 0; l < m; ++l) {
        out.hessian(i, l) = hess_acc[static_cast<std::size_t>(i) * m + l].value();
      }
    }
    out.hessian = symmetrize(out.hessian);
    out.has_hessian = true;
  }
  return out;
}

ContrastValue H1_full_derivatives(const ModelSpec& model, const Vec& alpha,
                                  const Mat& Lambda,
                                  const LocalMeanSeries& ybar,
                                  const EffectiveDiffusion& eff,
                                  const DerivativeRequest& req) {
  const bool analytic = model.has_alpha_derivatives() && !req.force_fd;
  if (!analytic) {
    return scalar_fd(
        [&](const Vec& a) { return H1_full(model, a, Lambda, ybar, eff); },
        alpha, req);
  }
  check_k_used(ybar, ybar.schedule.k);
  const int m = model.m1;
  const double delta = ybar.schedule.delta;
  NeumaierSum value_acc;
  std::vector<NeumaierSum> grad_acc(req.gradient ? m : 0);
  std::vector<NeumaierSum> hess_acc(req.hessian ? m * m : 0);
  std::vector<Mat> S(static_cast<std::size_t>(m));   // M^{-1} dA_i
  std::vector<Vec> dAu(static_cast<std::size_t>(m)); // dA_i u
  for (std::int64_t j = 1; j <= ybar.schedule.k - 2; ++j) {
    const Vec x = ybar.ybar.row(j - 1);
    const Vec v = ybar.ybar.row(j + 1) - ybar.ybar.row(j);
    const Mat M = eff.apply(eval_A(model, x, alpha), Lambda);
    const auto llt = factor_pd(M, j, alpha);
    const Vec u = llt.solve(v);
    value_acc.add(1.5 / delta * v.dot(u) + logdet_from_llt(llt));
    const auto dA = model.dA_dalpha(x, alpha);
    for (int i = 0; i < m; ++i) {
      S[static_cast<std::size_t>(i)] = llt.solve(dA[static_cast<std::size_t>(i)]);
      dAu[static_cast<std::size_t>(i)] = dA[static_cast<std::size_t>(i)] * u;
    }
    if (req.gradient) {
      for (int i = 0; i < m; ++i) {
        grad_acc[static_cast<std::size_t>(i)].add(
            -1.5 / delta * u.dot(dAu[static_cast<std::size_t>(i)]) +
            S[static_cast<std::size_t>(i)].trace());
      }
    }
    if (req.hessian) {
      const auto d2A = model.d2A_dalpha2(x, alpha);
      for (int i = 0; i < m; ++i) {
        const Vec Minv_dAu_i = llt.solve(dAu[static_cast<std::size_t>(i)]);
        for (int l = i; l < m; ++l) {
          const Mat& d2 = d2A[static_cast<std::size_t>(i) * m + l];
          const double quad_term =
              1.5 / delta *
              (2.0 * Minv_dAu_i.dot(dAu[static_cast<std::size_t>(l)]) -
               u.dot(d2 * u));
          const double logdet_term =
              -(S[static_cast<std::size_t>(l)] * S[static_cast<std::size_t>(i)])
                   .trace() +
              llt.solve(d2).trace();
          hess_acc[static_cast<std::size_t>(i) * m + l].add(quad_term + logdet_term);
          if (l != i) {
            hess_acc[static_cast<std::size_t>(l) * m + i].add(quad_term + logdet_term);
          }
        }
      }
    }
  }
  ContrastValue out;
  out.value = -0.5 * value_acc.value();
  if (req.gradient) {
    out.gradient.resize(m);
    for (int i = 0; i < m; ++i) {
      out.gradient(i) = -0.5 * grad_acc[static_cast<std::size_t>(i)].value();
    }
    out.has_gradient = true;
  }
  if (req.hessian) {
    out.hessian.resize(m, m);
    for (int i = 0; i < m; ++i) {
      for (int l = 0; l < m; ++l) {
        out.hessian(i, l) = -0.5 * hess_acc[static_cast<std::size_t>(i) * m + l].value();
      }
    }
    out.hessian = symmetrize(out.hessian);
    out.has_hessian = true;
  }
  return out;
}

ContrastValue H2_full_derivatives(const ModelSpec& model, const Vec& beta,
                                  const Vec& alpha,
                                  const LocalMeanSeries& ybar,
                                  const DerivativeRequest& req) {
  const bool analytic = model.has_beta_derivatives() && !req.force_fd;
  if (!analytic) {
    return scalar_fd(
        [&](const Vec& b) { return H2_full(model, b, alpha, ybar); }, beta, req);
  }
  check_k_used(ybar, ybar.schedule.k);
  const int m = model.m2;
  const double delta = ybar.schedule.delta;
  NeumaierSum value_acc;
  std::vector<NeumaierSum> grad_acc(req.gradient ? m : 0);
  std::vector<NeumaierSum> hess_acc(req.hessian ? m * m : 0);
  for (std::int64_t j = 1; j <= ybar.schedule.k - 2; ++j) {
    const Vec x = ybar.ybar.row(j - 1);
    const Vec v = ybar.ybar.row(j + 1) - ybar.ybar.row(j);
    const Vec r = v - delta * eval_drift(model, x, beta);
    const Mat A = eval_A(model, x, alpha);
    const auto llt = factor_pd(A, j, beta);
    const Vec w = llt.solve(r);
    value_acc.add(r.dot(w) / delta);
    const Mat Jb = model.db_dbeta(x, beta);
    if (req.gradient) {
      const Vec g = Jb.transpose() * w;
      for (int i = 0; i < m; ++i) grad_acc[static_cast<std::size_t>(i)].add(g(i));
    }
    if (req.hessian) {
      const auto d2b = model.d2b_dbeta2(x, beta);
      const Mat AinvJb = llt.solve(Jb);
      const Mat cross = Jb.transpose() * AinvJb;
      for (int i = 0; i < m; ++i) {
        for (int l = i; l < m; ++l) {
          const double term = -delta * cross(i, l) +
                              w.dot(d2b[static_cast<std::size_t>(i) * m + l]);
          hess_acc[static_cast<std::size_t>(i) * m + l].add(term);
          if (l != i) hess_acc[static_cast<std::size_t>(l) * m + i].add(term);
        }
      }
    }
  }
  ContrastValue out;
  out.value = -0.5 * value_acc.value();
  if (req.gradient) {
    out.gradient.resize(m);
    for (int i = 0; i < m; ++i) out.gradient(i) = grad_acc[static_cast<std::size_t>(i)].value();
    out.has_gradient = true;
  }
  if (req.hessian) {
    out.hessian.resize(m, m);
    for (int i = 0; i < m; ++i) {
      for (int l = 0; l < m; ++l) {
        out.hessian(i, l) = hess_acc[static_cast<std::size_t>(i) * m + l].value();
      }
    }
    out.hessian = symmetrize(out.hessian);
    out.has_hessian = true;
  }
  return out;
}

ContrastValue contrast_derivatives(Objective which, const ModelSpec& model,
                                   const Vec& theta, const Mat& Lambda,
                                   const Vec& alpha_cond,
                                   const LocalMeanSeries& ybar,
                                   std::int64_t k_used,
                                   const EffectiveDiffusion& eff,
                                   const DerivativeRequest& req) {
  switch (which) {
    case Objective::w1:
      return W1_derivatives(model, theta, Lambda, ybar, k_used, eff, req);
    case Objective::w2:
      return W2_derivatives(model, theta, ybar, k_used, req);
    case Objective::h1_full:
      return H1_full_derivatives(model, theta, Lambda, ybar, eff, req);
    case Objective::h2_full:
      return H2_full_derivatives(model, theta, alpha_cond, ybar, req);
  }
  throw ConfigError("unknown objective");
}

}  // namespace sdeh
