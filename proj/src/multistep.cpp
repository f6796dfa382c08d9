#include "sdeh/multistep.hpp"

#include <chrono>

#include "sdeh/errors.hpp"

namespace sdeh {

NewtonTrace newton_refine(const Vec& theta0,
                          const std::function<double(const Vec&)>& objective,
                          const std::function<Vec(const Vec&)>& gradient,
                          const std::function<Mat(const Vec&)>& hessian,
                          double normalizer, int steps,
                          const NewtonSettings& settings) {
  if (!(normalizer > 0.0)) throw ConfigError("newton normalizer must be positive");
  if (steps < 0) throw ConfigError("newton step count must be >= 0");

  NewtonTrace trace;
  Vec theta = settings.box ? settings.box->clamp(theta0) : theta0;
  try {
    trace.iterates.push_back(theta);
    trace.objective_values.push_back(objective(theta));
    trace.grad_norms.push_back(gradient(theta).norm() / normalizer);
    trace.used_identity_fallback.push_back(false);
    trace.clamped_to_box.push_back(false);
  } catch (const std::runtime_error& e) {
    trace.aborted = true;
    trace.abort_reason = std::string("initial evaluation failed: ") + e.what();
    if (trace.iterates.empty()) trace.iterates.push_back(theta);
    while (trace.objective_values.size() < trace.iterates.size()) {
      trace.objective_values.push_back(std::numeric_limits<double>::quiet_NaN());
    }
    while (trace.grad_norms.size() < trace.iterates.size()) {
      trace.grad_norms.push_back(std::numeric_limits<double>::quiet_NaN());
    }
    while (trace.used_identity_fallback.size() < trace.iterates.size()) {
      trace.used_identity_fallback.push_back(false);
    }
    while (trace.clamped_to_box.size() < trace.iterates.size()) {
      trace.clamped_to_box.push_back(false);
    }
    return trace;
  }

  for (int step = 1; step <= steps; ++step) {
    try {
      const Vec g = gradient(theta) / normalizer;
      const Mat J = symmetrize(hessian(theta) / normalizer);
      const auto solved = sym_solve(J, g, settings.rcond_min);
      Vec delta;
      bool fallback = false;
      if (solved.ok) {
        delta = -solved.x;
      } else {
        fallback = true;
        delta = -g;
      }
      Vec next = theta + delta;
      bool clamped = false;
      if (settings.box) {
        const Vec clamped_next = settings.box->clamp(next);
        clamped = (clamped_next - next).lpNorm<Eigen::Infinity>() > 0.0;
        next = clamped_next;
      }
      theta = next;
      trace.iterates.push_back(theta);
      trace.objective_values.push_back(objective(theta));
      trace.grad_norms.push_back(gradient(theta).norm() / normalizer);
      trace.used_identity_fallback.push_back(fallback);
      trace.clamped_to_box.push_back(clamped);
    } catch (const std::runtime_error& e) {
      trace.aborted = true;
      trace.abort_reason = std::string("step ") + std::to_string(step) +
                           " failed: " + e.what();
      break;
    }
  }
  return trace;
}

NewtonTrace newton_refine_alpha(const ModelSpec& model, const Vec& alpha0,
                                const Mat& Lambda_hat,
                                const LocalMeanSeries& ybar3, int J1,
                                const EffectiveDiffusion& eff,
                                const NewtonSettings& settings) {
  const auto value = [&](const Vec& a) {
    return H1_full(model, a, Lambda_hat, ybar3, eff);
  };
  DerivativeRequest grad_req;
  grad_req.gradient = true;
  grad_req.hessian = false;
  grad_req.box = settings.box;
  DerivativeRequest hess_req;
  hess_req.gradient = false;
  hess_req.hessian = true;
  hess_req.box = settings.box;
  const auto grad = [&, grad_req](const Vec& a) {
    return H1_full_derivatives(model, a, Lambda_hat, ybar3, eff, grad_req)
        .gradient;
  };
  const auto hess = [&, hess_req](const Vec& a) {
    return H1_full_derivatives(model, a, Lambda_hat, ybar3, eff, hess_req)
        .hessian;
  };
  return newton_refine(alpha0, value, grad, hess,
                       static_cast<double>(ybar3.schedule.k), J1, settings);
}

NewtonTrace newton_refine_beta(const ModelSpec& model, const Vec& beta0,
                               const Vec& alpha_final,
                               const LocalMeanSeries& ybar3, int J2,
                               double T_n, const NewtonSettings& settings) {
  const auto value = [&](const Vec& b) {
    return H2_full(model, b, alpha_final, ybar3);
  };
  DerivativeRequest grad_req;
  grad_req.gradient = true;
  grad_req.hessian = false;
  grad_req.box = settings.box;
  DerivativeRequest hess_req;
  hess_req.gradient = false;
  hess_req.hessian = true;
  hess_req.box = settings.box;
  const auto grad = [&, grad_req](const Vec& b) {
    return H2_full_derivatives(model, b, alpha_final, ybar3, grad_req).gradient;
  };
  const auto hess = [&, hess_req](const Vec& b) {
    return H2_full_derivatives(model, b, alpha_final, ybar3, hess_req).hessian;
  };
  return newton_refine(beta0, value, grad, hess, T_n, J2, settings);
}

namespace {

class StageTimer {
 public:
  explicit StageTimer(std::map<std::string, double>& sink) : sink_(sink) {}
  template <typename F>
  auto run(const std::string& name, F&& f) {
    const auto start = std::chrono::steady_clock::now();
    auto result = f();
    const auto stop = std::chrono::steady_clock::now();
    sink_[name] = std::chrono::duration<double>(stop - start).count();
    return result;
  }

 private:
  std::map<std::string, double>& sink_;
};

}  // namespace

HybridResult hybrid_estimate(const NoisyObservations& obs,
                             const ModelSpec& model,
                             const ParamSpace& alpha_space,
                             const ParamSpace& beta_space,
                             const TuningConfig& cfg,
                             const McmcConfig& mcmc_alpha,
                             const McmcConfig& mcmc_beta,
                             const HybridOptions& opts) {
  HybridResult result;
  StageTimer timer(result.stage_seconds);
  std::string stage = "validate";
  try {
    cfg.validate();
    obs.validate();
    alpha_space.validate();
    beta_space.validate();
    result.J1 = compute_J1(cfg);
    result.J2 = compute_J2(cfg);
    result.sched1 = make_schedule(cfg, cfg.tau1, cfg.eta1);
    result.sched2 = make_schedule(cfg, cfg.tau2, cfg.eta2);
    result.sched3 = make_schedule(cfg, cfg.tau3);

    stage = "noise-variance";
    result.lambda_hat =
        timer.run(stage, [&] { return estimate_noise_variance(obs); });

    stage = "alpha-init";
    const auto ybar1 = local_means(obs, result.sched1);
    const auto eff1 = make_effective_diffusion(opts.w1_mode, result.sched1,
                                               opts.drop_noise_in_A);
    McmcConfig mcmc_a = mcmc_alpha;
    mcmc_a.store_chain = mcmc_a.store_chain || opts.store_chains;
    result.alpha_init = timer.run(stage, [&] {
      return initial_alpha(model, alpha_space, ybar1,
                           result.lambda_hat.lambda_hat, cfg.q1, eff1, mcmc_a);
    });

    stage = "alpha-newton";
    const auto ybar3 = local_means(obs, result.sched3);
    const auto eff3 = make_effective_diffusion(EffDiffMode::stage3,
                                               result.sched3,
                                               opts.drop_noise_in_A);
    NewtonSettings newton;
    newton.rcond_min = opts.rcond_min;
    newton.box = &alpha_space;
    result.alpha_trace = timer.run(stage, [&] {
      return newton_refine_alpha(model, result.alpha_init.mean,
                                 result.lambda_hat.lambda_hat, ybar3,
                                 result.J1, eff3, newton);
    });
    if (result.alpha_trace.aborted) {
      result.failed_stage = stage;
      result.failure_message = result.alpha_trace.abort_reason;
      return result;
    }

    stage = "beta-init";
    const auto ybar2 = local_means(obs, result.sched2);
    McmcConfig mcmc_b = mcmc_beta;
    mcmc_b.store_chain = mcmc_b.store_chain || opts.store_chains;
    result.beta_init = timer.run(stage, [&] {
      return initial_beta(model, beta_space, ybar2, cfg.q2, mcmc_b);
    });

    stage = "beta-newton";
    NewtonSettings newton_b = newton;
    newton_b.box = &beta_space;
    result.beta_trace = timer.run(stage, [&] {
      return newton_refine_beta(model, result.beta_init.mean,
                                result.alpha_trace.final_iterate(), ybar3,
                                result.J2, cfg.T(), newton_b);
    });
    if (result.beta_trace.aborted) {
      result.failed_stage = stage;
      result.failure_message = result.beta_trace.abort_reason;
      return result;
    }
  } catch (const std::exception& e) {
    result.failed_stage = stage;
    result.failure_message = e.what();
  }
  return result;
}

}  // namespace sdeh
