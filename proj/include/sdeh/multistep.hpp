#pragma once

#include <map>
#include <string>

#include "sdeh/bayes.hpp"
#include "sdeh/contrasts.hpp"
#include "sdeh/model.hpp"
#include "sdeh/preprocess.hpp"
#include "sdeh/schedule.hpp"

namespace sdeh {

// Record of a Newton refinement: entry 0 is the initializer, entries 1..J
// the refined iterates. All vectors have length J+1 (index 0 of the
// fallback/clamp flags is a false placeholder).
struct NewtonTrace {
  std::vector<Vec> iterates;
  std::vector<double> grad_norms;  // norm of the normalized gradient
  std::vector<bool> used_identity_fallback;
  std::vector<bool> clamped_to_box;
  std::vector<double> objective_values;
  bool aborted = false;
  std::string abort_reason;

  const Vec& final_iterate() const { return iterates.back(); }
};

struct NewtonSettings {
  double rcond_min = 1e-12;         // invertibility guard for the Hessian
  const ParamSpace* box = nullptr;  // iterates leaving the box are clamped
};

// Generic guarded Newton recursion on a maximization objective:
//   J(t) = hessian(t)/normalizer;  g(t) = gradient(t)/normalizer;
//   t' = t - Jbar^{-1} g,  Jbar = J when invertible, identity otherwise.
// Evaluation failures abort the refinement and return the trace so far.
NewtonTrace newton_refine(const Vec& theta0,
                          const std::function<double(const Vec&)>& objective,
                          const std::function<Vec(const Vec&)>& gradient,
                          const std::function<Mat(const Vec&)>& hessian,
                          double normalizer, int steps,
                          const NewtonSettings& settings = {});

// Refinement of the diffusion parameter on the full quasi-likelihood,
// normalized by the block count k of the tau3 schedule.
NewtonTrace newton_refine_alpha(const ModelSpec& model, const Vec& alpha0,
                                const Mat& Lambda_hat,
                                const LocalMeanSeries& ybar3, int J1,
                                const EffectiveDiffusion& eff,
                                const NewtonSettings& settings = {});

// Refinement of the drift parameter, normalized by T_n = n h and
// conditioned on the final alpha iterate throughout.
NewtonTrace newton_refine_beta(const ModelSpec& model, const Vec& beta0,
                               const Vec& alpha_final,
                               const LocalMeanSeries& ybar3, int J2,
                               double T_n, const NewtonSettings& settings = {});

struct HybridOptions {
  EffDiffMode w1_mode = EffDiffMode::stage3;
  bool drop_noise_in_A = false;
  bool store_chains = false;
  double rcond_min = 1e-12;
};

struct HybridResult {
  NoiseVariance lambda_hat;
  PosteriorSummary alpha_init;
  PosteriorSummary beta_init;
  NewtonTrace alpha_trace;
  NewtonTrace beta_trace;
  int J1 = 0;
  int J2 = 0;
  BlockSchedule sched1, sched2, sched3;
  std::map<std::string, double> stage_seconds;
  std::string failed_stage;  // empty on success
  std::string failure_message;

  bool ok() const { return failed_stage.empty(); }
  Vec alpha_hat() const { return alpha_trace.iterates.back(); }
  Vec beta_hat() const { return beta_trace.iterates.back(); }
};

// Full pipeline: noise variance -> Bayes-type alpha initializer -> J1
// Newton steps -> Bayes-type beta initializer -> J2 Newton steps. The beta
// stage conditions on the final alpha iterate. A failing stage returns the
// partial result with the stage label set.
HybridResult hybrid_estimate(const NoisyObservations& obs,
                             const ModelSpec& model,
                             const ParamSpace& alpha_space,
                             const ParamSpace& beta_space,
                             const TuningConfig& cfg,
                             const McmcConfig& mcmc_alpha,
                             const McmcConfig& mcmc_beta,
                             const HybridOptions& opts = {});

}  // namespace sdeh
