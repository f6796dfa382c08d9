#pragma once

#include <cstdint>
#include <optional>

namespace sdeh {

// Rate and tempering parameters shared by the whole estimation pipeline.
// h must sit inside [n^-gamma, n^-gamma_prime]; the block exponents tau live
// in (1,2], the tempering exponents q in (0,1/2], and the data-reduction
// exponents eta must exceed gamma.
struct TuningConfig {
  std::int64_t n = 0;
  double h = 0.0;
  double tau1 = 2.0;
  double tau2 = 2.0;
  double tau3 = 2.0;
  double q1 = 0.5;
  double q2 = 0.5;
  double eta1 = 1.0;
  double eta2 = 1.0;
  double gamma = 0.7;
  double gamma_prime = 0.7;

  double T() const { return static_cast<double>(n) * h; }

  // Throws ConfigError on any violated constraint.
  void validate() const;
};

// Block geometry derived from (n, h, tau): p observations per block of
// duration delta = p*h, k full-data blocks, and the reduced block count
// used by the initial estimators.
struct BlockSchedule {
  double tau = 2.0;
  std::int64_t p = 1;
  double delta = 0.0;
  std::int64_t k = 0;
  std::int64_t k_reduced = 0;
  double t_reduced = 0.0;
};

// p = max(1, floor(h^{-1/tau})), k = floor(n/p). When eta is given,
// k_reduced = min(k, floor(n^eta / p)); otherwise k_reduced = k.
BlockSchedule make_schedule(const TuningConfig& cfg, double tau,
                            std::optional<double> eta = std::nullopt);

// Newton step counts floor(-log2(q (eta - gamma/tau) / (1 - gamma'/tau3))),
// clamped below at one step.
int compute_J1(const TuningConfig& cfg);
int compute_J2(const TuningConfig& cfg);

namespace detail {
// floor with a relative guard so that values a few ulps below an integer
// (e.g. pow(0.01, -0.5) = 9.999...98) land on that integer.
std::int64_t floor_guarded(double x);
}  // namespace detail

}  // namespace sdeh
