#include "sdeh/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sdeh/errors.hpp"

namespace sdeh {

namespace detail {

std::int64_t floor_guarded(double x) {
  if (!(x > 0.0)) return 0;
  return static_cast<std::int64_t>(
      std::floor(x + std::max(1e-12, 4e-13 * x)));
}

}  // namespace detail

void TuningConfig::validate() const {
  std::ostringstream err;
  if (n < 1) {
    err << "n must be a positive integer, got " << n;
    throw ConfigError(err.str());
  }
  if (!(h > 0.0) || !std::isfinite(h)) {
    err << "h must be a positive real, got " << h;
    throw ConfigError(err.str());
  }
  for (const auto& [name, tau] : {std::pair{"tau1", tau1}, {"tau2", tau2}, {"tau3", tau3}}) {
    if (!(tau > 1.0 && tau <= 2.0)) {
      err << name << " must lie in (1, 2], got " << tau;
      throw ConfigError(err.str());
    }
  }
  for (const auto& [name, q] : {std::pair{"q1", q1}, {"q2", q2}}) {
    if (!(q > 0.0 && q <= 0.5)) {
      err << name << " must lie in (0, 1/2], got " << q;
      throw ConfigError(err.str());
    }
  }
  if (!(gamma > 2.0 / 3.0 && gamma < 1.0)) {
    err << "gamma must lie in (2/3, 1), got " << gamma;
    throw ConfigError(err.str());
  }
  if (!(gamma_prime > 0.0 && gamma_prime <= gamma)) {
    err << "gamma_prime must lie in (0, gamma], got " << gamma_prime;
    throw ConfigError(err.str());
  }
  for (const auto& [name, eta] : {std::pair{"eta1", eta1}, {"eta2", eta2}}) {
    if (!(eta > gamma && eta <= 1.0)) {
      err << name << " must lie in (gamma, 1], got " << eta << " with gamma " << gamma;
      throw ConfigError(err.str());
    }
  }
  const double nd = static_cast<double>(n);
  const double lo = std::pow(nd, -gamma);
  const double hi = std::pow(nd, -gamma_prime);
  if (h < lo * (1.0 - 1e-9) || h > hi * (1.0 + 1e-9)) {
    err << "h = " << h << " violates n^-gamma <= h <= n^-gamma' (window [" << lo
        << ", " << hi << "])";
    throw ConfigError(err.str());
  }
}

BlockSchedule make_schedule(const TuningConfig& cfg, double tau,
                            std::optional<double> eta) {
  // Only local preconditions here; the full [A6]-style window check runs in
  // TuningConfig::validate() at pipeline entry.
  if (cfg.n < 1) throw ConfigError("make_schedule requires n >= 1");
  if (!(cfg.h > 0.0) || !std::isfinite(cfg.h)) {
    throw ConfigError("make_schedule requires h > 0");
  }
  if (!(tau > 1.0 && tau <= 2.0)) {
    std::ostringstream err;
    err << "tau must lie in (1, 2], got " << tau;
    throw ConfigError(err.str());
  }
  if (eta && !(*eta > cfg.gamma && *eta <= 1.0)) {
    std::ostringstream err;
    err << "eta must lie in (gamma, 1], got " << *eta;
    throw ConfigError(err.str());
  }

  BlockSchedule sched;
  sched.tau = tau;
  sched.p = std::max<std::int64_t>(1, detail::floor_guarded(std::pow(cfg.h, -1.0 / tau)));
  sched.delta = static_cast<double>(sched.p) * cfg.h;
  sched.k = cfg.n / sched.p;
  if (sched.k - 2 < 1) {
    std::ostringstream err;
    err << "insufficient blocks: k = " << sched.k << " with p = " << sched.p
        << ", need k >= 3";
    throw ConfigError(err.str());
  }
  if (eta) {
    const double n_eta = std::pow(static_cast<double>(cfg.n), *eta);
    sched.k_reduced = std::min<std::int64_t>(
        sched.k, detail::floor_guarded(n_eta / static_cast<double>(sched.p)));
    if (sched.k_reduced - 2 < 1) {
      std::ostringstream err;
      err << "insufficient blocks: k_reduced = " << sched.k_reduced
          << " with eta = " << *eta << ", need k_reduced >= 3";
      throw ConfigError(err.str());
    }
  } else {
    sched.k_reduced = sched.k;
  }
  sched.t_reduced = static_cast<double>(sched.k_reduced) * sched.delta;
  return sched;
}

namespace {

int newton_step_count(double q, double numerator, double denominator,
                      const char* label) {
  const double arg = q * numerator / denominator;
  if (!(arg > 0.0) || !std::isfinite(arg)) {
    std::ostringstream err;
    err << label << ": log2 argument must be positive, got " << arg;
    throw ConfigError(err.str());
  }
  const double steps = std::floor(-std::log2(arg) + 1e-12);
  return std::max(1, static_cast<int>(steps));
}

}  // namespace

int compute_J1(const TuningConfig& cfg) {
  cfg.validate();
  return newton_step_count(cfg.q1, cfg.eta1 - cfg.gamma / cfg.tau1,
                           1.0 - cfg.gamma_prime / cfg.tau3, "J1");
}

int compute_J2(const TuningConfig& cfg) {
  cfg.validate();
  return newton_step_count(cfg.q2, cfg.eta2 - cfg.gamma,
                           1.0 - cfg.gamma_prime, "J2");
}

}  // namespace sdeh
