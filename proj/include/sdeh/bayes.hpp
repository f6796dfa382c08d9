#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sdeh/contrasts.hpp"
#include "sdeh/model.hpp"
#include "sdeh/preprocess.hpp"
#include "sdeh/rng.hpp"
#include "sdeh/schedule.hpp"

namespace sdeh {

struct McmcConfig {
  std::int64_t n_iters = 10000;
  std::int64_t burn_in = 1000;
  // Absolute proposal scales: one entry per coordinate, or a single entry
  // broadcast to all. Empty selects 0.1 * box width.
  Vec proposal_scale;
  enum class Sampler { rwm, mpcn };
  Sampler sampler = Sampler::rwm;
  std::uint64_t seed = 1;
  std::uint64_t stream = 0;
  // When set, a Robbins-Monro recursion adapts a global scale factor toward
  // this acceptance rate during burn-in only; it is frozen afterwards.
  std::optional<double> target_accept;
  double mpcn_rho = 0.8;  // autoregression weight of the mpcn proposal
  bool store_chain = false;

  void validate() const;
};

struct PosteriorSummary {
  Vec mean;  // post-burn-in average, inside the closed box
  Vec sd;    // post-burn-in marginal standard deviations
  double acceptance_rate = 0.0;  // post-burn-in
  double ess_estimate = 0.0;     // batch-means estimate, min over coordinates
  double final_scale_factor = 1.0;
  // Populated when store_chain is set; one row per iteration.
  std::optional<Mat> chain;
  std::vector<double> chain_log_target;
  std::vector<char> chain_accepted;
};

// Posterior mean of exp(log_target) restricted to the box under a uniform
// prior, estimated by MCMC started at the box center.
//
// rwm: Gaussian random walk with coordinate-wise reflection at the box
// boundary (reflection keeps the proposal symmetric, so plain Metropolis
// acceptance applies). mpcn: mixed preconditioned Crank-Nicolson update
// centered at the box center; proposals outside the box are rejected
// through the target.
//
// Throws DegeneratePosteriorError after 1000 consecutive proposals with
// log_target = -inf, and ConfigError when log_target is not finite at the
// box center.
PosteriorSummary posterior_mean(
    const std::function<double(const Vec&)>& log_target,
    const ParamSpace& space, const McmcConfig& mcmc);

struct InitialEstimatorOptions {
  EffDiffMode w1_mode = EffDiffMode::stage3;
  bool drop_noise_in_A = false;
};

// Bayes-type initial estimators: posterior means of the tempered contrasts
// over the reduced data (schedules built from (tau1, eta1) and (tau2, eta2)).
// Model evaluation failures inside the target are mapped to -inf.
PosteriorSummary initial_alpha(const NoisyObservations& obs,
                               const ModelSpec& model,
                               const ParamSpace& alpha_space,
                               const TuningConfig& cfg, const Mat& Lambda_hat,
                               const McmcConfig& mcmc,
                               const InitialEstimatorOptions& opts = {});
PosteriorSummary initial_beta(const NoisyObservations& obs,
                              const ModelSpec& model,
                              const ParamSpace& beta_space,
                              const TuningConfig& cfg, const McmcConfig& mcmc);

// Series-level variants reusing precomputed local means.
PosteriorSummary initial_alpha(const ModelSpec& model,
                               const ParamSpace& alpha_space,
                               const LocalMeanSeries& ybar1,
                               const Mat& Lambda_hat, double q1,
                               const EffectiveDiffusion& eff,
                               const McmcConfig& mcmc);
PosteriorSummary initial_beta(const ModelSpec& model,
                              const ParamSpace& beta_space,
                              const LocalMeanSeries& ybar2, double q2,
                              const McmcConfig& mcmc);

// Chain dump: header iter,theta_1..theta_m,log_target,accepted.
void write_chain_csv(const std::string& path, const PosteriorSummary& summary);

}  // namespace sdeh
