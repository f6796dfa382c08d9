#pragma once

#include "sdeh/model.hpp"
#include "sdeh/preprocess.hpp"

namespace sdeh {

enum class EffDiffMode {
  limit,   // A + 3 Lambda [tau == 2]
  stage3,  // A + 3 delta^{(2-tau)/(tau-1)} Lambda (exponent 0 at tau = 2)
};

// Effective block diffusion A_eff(x, alpha, Lambda) = A(x, alpha) + c Lambda.
// drop_noise forces c = 0, reproducing the variant that ignores the noise
// term inside the full quasi-likelihood at tau = 2.
struct EffectiveDiffusion {
  EffDiffMode mode = EffDiffMode::stage3;
  double tau = 2.0;
  double delta = 0.0;
  bool drop_noise = false;

  double noise_coeff() const;
  Mat apply(const Mat& A, const Mat& Lambda) const {
    const double c = noise_coeff();
    if (c == 0.0) return A;
    return A + c * Lambda;
  }
};

inline EffectiveDiffusion make_effective_diffusion(EffDiffMode mode,
                                                   const BlockSchedule& sched,
                                                   bool drop_noise = false) {
  return EffectiveDiffusion{mode, sched.tau, sched.delta, drop_noise};
}

// Least-squares contrast for the diffusion parameter:
// -1/2 sum_{j=1}^{k_used-2} || (ybar_{j+1}-ybar_j)^{x2}/delta
//                              - (2/3) A_eff(ybar_{j-1}, alpha, Lambda) ||_F^2.
double W1(const ModelSpec& model, const Vec& alpha, const Mat& Lambda,
          const LocalMeanSeries& ybar, std::int64_t k_used,
          const EffectiveDiffusion& eff);

// Least-squares contrast for the drift parameter:
// -1/2 sum delta^{-1} | ybar_{j+1}-ybar_j - delta b(ybar_{j-1}, beta) |^2.
double W2(const ModelSpec& model, const Vec& beta,
          const LocalMeanSeries& ybar, std::int64_t k_used);

// Tempered initial-stage objectives over the reduced data:
// k_reduced^{-(1-2q1)} W1 and t_reduced^{-(1-2q2)} W2.
double H1_tempered(const ModelSpec& model, const Vec& alpha, const Mat& Lambda,
                   const LocalMeanSeries& ybar, double q1,
                   const EffectiveDiffusion& eff);
double H2_tempered(const ModelSpec& model, const Vec& beta,
                   const LocalMeanSeries& ybar, double q2);

// Full quasi-log-likelihoods over all k blocks:
// H1 = -1/2 sum { ((2/3) delta A_eff)^{-1}[v v^T] + log det A_eff },
// H2 = -1/2 sum (delta A)^{-1}[r r^T]  with r = v - delta b
// (the beta weighting uses plain A, not A_eff).
double H1_full(const ModelSpec& model, const Vec& alpha, const Mat& Lambda,
               const LocalMeanSeries& ybar, const EffectiveDiffusion& eff);
double H2_full(const ModelSpec& model, const Vec& beta, const Vec& alpha,
               const LocalMeanSeries& ybar);

struct ContrastValue {
  double value = 0.0;
  Vec gradient;
  Mat hessian;
  bool has_gradient = false;
  bool has_hessian = false;
};

struct DerivativeRequest {
  bool gradient = true;
  bool hessian = false;
  const ParamSpace* box = nullptr;  // one-sided FD steps near the boundary
  bool force_fd = false;            // ignore analytic model derivatives
};

// Gradient/Hessian in the active parameter block: analytic chain rule when
// the model carries the needed derivatives, otherwise central finite
// differences of the scalar objective (gradient step 1e-6 (1+|t_i|),
// Hessian step 1e-4 (1+|t_i|)). Hessians are symmetrized.
ContrastValue W1_derivatives(const ModelSpec& model, const Vec& alpha,
                             const Mat& Lambda, const LocalMeanSeries& ybar,
                             std::int64_t k_used, const EffectiveDiffusion& eff,
                             const DerivativeRequest& req = {});
ContrastValue W2_derivatives(const ModelSpec& model, const Vec& beta,
                             const LocalMeanSeries& ybar, std::int64_t k_used,
                             const DerivativeRequest& req = {});
ContrastValue H1_full_derivatives(const ModelSpec& model, const Vec& alpha,
                                  const Mat& Lambda,
                                  const LocalMeanSeries& ybar,
                                  const EffectiveDiffusion& eff,
                                  const DerivativeRequest& req = {});
ContrastValue H2_full_derivatives(const ModelSpec& model, const Vec& beta,
                                  const Vec& alpha,
                                  const LocalMeanSeries& ybar,
                                  const DerivativeRequest& req = {});

enum class Objective { w1, w2, h1_full, h2_full };

// Umbrella dispatch; Lambda is ignored by w2/h2_full, alpha_cond only feeds
// h2_full, and k_used only limits w1/w2 (the full objectives always use k).
ContrastValue contrast_derivatives(Objective which, const ModelSpec& model,
                                   const Vec& theta, const Mat& Lambda,
                                   const Vec& alpha_cond,
                                   const LocalMeanSeries& ybar,
                                   std::int64_t k_used,
                                   const EffectiveDiffusion& eff,
                                   const DerivativeRequest& req = {});

}  // namespace sdeh
