#include "sdeh/bayes.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "sdeh/errors.hpp"

namespace sdeh {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr int kDegenerateLimit = 1000;

// Fold a point into [lo, hi] by repeated reflection, in O(1).
double reflect_into(double x, double lo, double hi) {
  const double w = hi - lo;
  double y = std::fmod(x - lo, 2.0 * w);
  if (y < 0.0) y += 2.0 * w;
  if (y > w) y = 2.0 * w - y;
  return lo + y;
}

// Batch-means effective sample size, min over coordinates.
class EssAccumulator {
 public:
  EssAccumulator(int m, std::int64_t n_post)
      : m_(m),
        batch_size_(std::max<std::int64_t>(
            1, static_cast<std::int64_t>(std::sqrt(static_cast<double>(
                   std::max<std::int64_t>(1, n_post)))))),
        count_(0),
        mean_(Vec::Zero(m)),
        m2_(Vec::Zero(m)),
        batch_acc_(Vec::Zero(m)),
        in_batch_(0) {}

  void add(const Vec& x) {
    ++count_;
    const Vec delta = x - mean_;
    mean_ += delta / static_cast<double>(count_);
    m2_ += delta.cwiseProduct(x - mean_);
    batch_acc_ += x;
    if (++in_batch_ == batch_size_) {
      batch_means_.push_back(batch_acc_ / static_cast<double>(batch_size_));
      batch_acc_.setZero();
      in_batch_ = 0;
    }
  }

  Vec mean() const { return mean_; }
  Vec sd() const {
    if (count_ < 2) return Vec::Zero(m_);
    return (m2_ / static_cast<double>(count_ - 1)).cwiseSqrt();
  }

  double ess() const {
    if (count_ < 2 || batch_means_.size() < 2) {
      return static_cast<double>(count_);
    }
    const auto nb = static_cast<double>(batch_means_.size());
    Vec bm_mean = Vec::Zero(m_);
    for (const auto& b : batch_means_) bm_mean += b;
    bm_mean /= nb;
    Vec bm_var = Vec::Zero(m_);
    for (const auto& b : batch_means_) {
      bm_var += (b - bm_mean).cwiseAbs2();
    }
    bm_var /= (nb - 1.0);
    const Vec sample_var = m2_ / static_cast<double>(count_ - 1);
    double min_ess = static_cast<double>(count_);
    for (int i = 0; i < m_; ++i) {
      if (bm_var(i) <= 0.0) continue;
      const double sigma2_inf = static_cast<double>(batch_size_) * bm_var(i);
      const double e = static_cast<double>(count_) * sample_var(i) / sigma2_inf;
      min_ess = std::min(min_ess, std::max(1.0, e));
    }
    return min_ess;
  }

 private:
  int m_;
  std::int64_t batch_size_;
  std::int64_t count_;
  Vec mean_;
  Vec m2_;
  Vec batch_acc_;
  std::int64_t in_batch_;
  std::vector<Vec> batch_means_;
};

}  // namespace

void McmcConfig::validate() const {
  if (n_iters < 1) throw ConfigError("mcmc n_iters must be >= 1");
  if (burn_in < 0 || burn_in >= n_iters) {
    throw ConfigError("mcmc burn_in must satisfy 0 <= burn_in < n_iters");
  }
  if (proposal_scale.size() > 0 && !(proposal_scale.minCoeff() > 0.0)) {
    throw ConfigError("mcmc proposal_scale entries must be positive");
  }
  if (target_accept && !(*target_accept > 0.0 && *target_accept < 1.0)) {
    throw ConfigError("mcmc target_accept must lie in (0, 1)");
  }
  if (!(mpcn_rho > 0.0 && mpcn_rho < 1.0)) {
    throw ConfigError("mcmc mpcn_rho must lie in (0, 1)");
  }
}

PosteriorSummary posterior_mean(
    const std::function<double(const Vec&)>& log_target,
    const ParamSpace& space, const McmcConfig& mcmc) {
  space.validate();
  mcmc.validate();
  const int m = space.dim();

  Vec scale;
  if (mcmc.proposal_scale.size() == 0) {
    scale = 0.1 * space.width();
  } else if (mcmc.proposal_scale.size() == 1) {
    scale = Vec::Constant(m, mcmc.proposal_scale(0));
  } else if (mcmc.proposal_scale.size() == m) {
    scale = mcmc.proposal_scale;
  } else {
    throw ConfigError("proposal_scale must be scalar or match the box dimension");
  }

  Philox rng(mcmc.seed, mcmc.stream);
  const Vec mu = space.center();

  Vec x = mu;
  double lt = log_target(x);
  if (!std::isfinite(lt)) {
    throw ConfigError("log_target is not finite at the box center");
  }
  if (mcmc.sampler == McmcConfig::Sampler::mpcn) {
    // The mpcn proposal scale is proportional to |x - mu|; a chain started
    // exactly at the centering point can never leave it in floating point.
    // Start from a deterministic interior offset instead.
    Vec offset = 0.25 * space.width();
    for (int i = 1; i < m; i += 2) offset(i) = -offset(i);
    x = mu + offset;
    lt = log_target(x);
  }

  PosteriorSummary summary;
  if (mcmc.store_chain) {
    summary.chain = Mat(mcmc.n_iters, m);
    summary.chain_log_target.reserve(static_cast<std::size_t>(mcmc.n_iters));
    summary.chain_accepted.reserve(static_cast<std::size_t>(mcmc.n_iters));
  }

  EssAccumulator acc(m, mcmc.n_iters - mcmc.burn_in);
  double log_scale_factor = 0.0;
  std::int64_t accepted_post = 0;
  int consecutive_neg_inf = 0;
  Vec proposal(m);
  Vec z(m);

  for (std::int64_t it = 0; it < mcmc.n_iters; ++it) {
    bool accept = false;
    double lt_prop = kNegInf;

    if (mcmc.sampler == McmcConfig::Sampler::rwm) {
      const double s = std::exp(log_scale_factor);
      for (int i = 0; i < m; ++i) {
        proposal(i) = reflect_into(x(i) + s * scale(i) * rng.next_gaussian(),
                                   space.lower(i), space.upper(i));
      }
      lt_prop = log_target(proposal);
      if (lt_prop == kNegInf) {
        ++consecutive_neg_inf;
      } else {
        consecutive_neg_inf = 0;
        const double log_ratio = lt_prop - lt;
        accept = log_ratio >= 0.0 || std::log(rng.next_double()) < log_ratio;
      }
    } else {
      // mpcn: w ~ Gamma(m/2, |x-mu|^2/2); proposal is a pCN step whose
      // innovation variance is 1/w. Reversible w.r.t. |x-mu|^{-m} dx, which
      // contributes the m log|.| correction to the acceptance ratio.
      const Vec dx = x - mu;
      const double norm2 = std::max(dx.squaredNorm(), 1e-300);
      const double w = 2.0 * rng.next_gamma(0.5 * m) / norm2;
      const double innov_sd = std::sqrt((1.0 - mcmc.mpcn_rho) / w);
      for (int i = 0; i < m; ++i) z(i) = rng.next_gaussian();
      proposal = mu + std::sqrt(mcmc.mpcn_rho) * dx + innov_sd * z;
      const bool inside = space.contains(proposal);
      lt_prop = inside ? log_target(proposal) : kNegInf;
      if (lt_prop == kNegInf) {
        ++consecutive_neg_inf;
      } else {
        consecutive_neg_inf = 0;
        const double prop_norm2 = std::max((proposal - mu).squaredNorm(), 1e-300);
        const double log_ratio =
            lt_prop - lt + 0.5 * m * (std::log(prop_norm2) - std::log(norm2));
        accept = log_ratio >= 0.0 || std::log(rng.next_double()) < log_ratio;
      }
    }

    if (consecutive_neg_inf >= kDegenerateLimit) {
      throw DegeneratePosteriorError(
          "degenerate posterior: log_target = -inf for 1000 consecutive proposals");
    }
    if (accept) {
      x = proposal;
      lt = lt_prop;
    }

    if (mcmc.target_accept && it < mcmc.burn_in) {
      const double gain = 1.0 / std::pow(static_cast<double>(it + 1), 0.66);
      log_scale_factor += gain * ((accept ? 1.0 : 0.0) - *mcmc.target_accept);
    }

    if (it >= mcmc.burn_in) {
      acc.add(x);
      if (accept) ++accepted_post;
    }
    if (mcmc.store_chain) {
      summary.chain->row(it) = x;
      summary.chain_log_target.push_back(lt);
      summary.chain_accepted.push_back(accept ? 1 : 0);
    }
  }

  summary.mean = acc.mean();
  summary.sd = acc.sd();
  summary.acceptance_rate = static_cast<double>(accepted_post) /
                            static_cast<double>(mcmc.n_iters - mcmc.burn_in);
  summary.ess_estimate = acc.ess();
  summary.final_scale_factor = std::exp(log_scale_factor);
  return summary;
}

namespace {

std::function<double(const Vec&)> guard_target(
    std::function<double(const Vec&)> raw) {
  return [raw = std::move(raw)](const Vec& theta) {
    try {
      const double v = raw(theta);
      return std::isfinite(v) ? v : kNegInf;
    } catch (const NonPdError&) {
      return kNegInf;
    } catch (const ModelEvalError&) {
      return kNegInf;
    }
  };
}

}  // namespace

PosteriorSummary initial_alpha(const ModelSpec& model,
                               const ParamSpace& alpha_space,
                               const LocalMeanSeries& ybar1,
                               const Mat& Lambda_hat, double q1,
                               const EffectiveDiffusion& eff,
                               const McmcConfig& mcmc) {
  auto target = guard_target([&model, &ybar1, Lambda_hat, q1, eff](const Vec& a) {
    return H1_tempered(model, a, Lambda_hat, ybar1, q1, eff);
  });
  return posterior_mean(target, alpha_space, mcmc);
}

PosteriorSummary initial_beta(const ModelSpec& model,
                              const ParamSpace& beta_space,
                              const LocalMeanSeries& ybar2, double q2,
                              const McmcConfig& mcmc) {
  auto target = guard_target([&model, &ybar2, q2](const Vec& b) {
    return H2_tempered(model, b, ybar2, q2);
  });
  return posterior_mean(target, beta_space, mcmc);
}

PosteriorSummary initial_alpha(const NoisyObservations& obs,
                               const ModelSpec& model,
                               const ParamSpace& alpha_space,
                               const TuningConfig& cfg, const Mat& Lambda_hat,
                               const McmcConfig& mcmc,
                               const InitialEstimatorOptions& opts) {
  const auto sched = make_schedule(cfg, cfg.tau1, cfg.eta1);
  const auto ybar = local_means(obs, sched);
  const auto eff =
      make_effective_diffusion(opts.w1_mode, sched, opts.drop_noise_in_A);
  return initial_alpha(model, alpha_space, ybar, Lambda_hat, cfg.q1, eff, mcmc);
}

PosteriorSummary initial_beta(const NoisyObservations& obs,
                              const ModelSpec& model,
                              const ParamSpace& beta_space,
                              const TuningConfig& cfg, const McmcConfig& mcmc) {
  const auto sched = make_schedule(cfg, cfg.tau2, cfg.eta2);
  const auto ybar = local_means(obs, sched);
  return initial_beta(model, beta_space, ybar, cfg.q2, mcmc);
}

void write_chain_csv(const std::string& path, const PosteriorSummary& summary) {
  if (!summary.chain) {
    throw ConfigError("chain dump requested but the chain was not stored");
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("cannot open for writing: " + path);
  out.precision(17);
  const auto& chain = *summary.chain;
  out << "iter";
  for (Eigen::Index j = 0; j < chain.cols(); ++j) out << ",theta_" << (j + 1);
  out << ",log_target,accepted\n";
  for (Eigen::Index i = 0; i < chain.rows(); ++i) {
    out << i;
    for (Eigen::Index j = 0; j < chain.cols(); ++j) out << ',' << chain(i, j);
    out << ',' << summary.chain_log_target[static_cast<std::size_t>(i)] << ','
        << static_cast<int>(summary.chain_accepted[static_cast<std::size_t>(i)])
        << '\n';
  }
}

}  // namespace sdeh
