#pragma once

#include <optional>

#include "sdeh/model.hpp"
#include "sdeh/preprocess.hpp"
#include "sdeh/rng.hpp"

namespace sdeh {

enum class NoiseLaw {
  gaussian,
  rademacher,  // +/-1 with equal probability
  uniform,     // uniform on [-sqrt(3), sqrt(3)]
};

struct SimulationConfig {
  ModelSpec model;
  Vec alpha_true;
  Vec beta_true;
  Vec x0;
  std::int64_t n = 0;
  double h = 0.0;
  int substeps = 10;  // internal Euler step = h / substeps
  Mat Lambda;         // d x d PSD; empty means no observation noise
  NoiseLaw noise_law = NoiseLaw::gaussian;
  std::uint64_t seed = 1;
  bool store_latent = false;  // keep X and eps alongside Y

  void validate() const;
};

struct SimulatedPath {
  NoisyObservations obs;
  std::optional<Mat> latent_x;   // (n+1) x d
  std::optional<Mat> noise_eps;  // (n+1) x d, pre Lambda^{1/2}
};

// Euler scheme X_{t+dt} = X_t + b dt + a sqrt(dt) Z with dt = h/substeps,
// recorded every h; then Y_i = X_i + Lambda^{1/2} eps_i. The path consumes
// RNG streams (stream, stream+1): one for the Brownian increments, one for
// the observation noise. Throws ExplosionError when |X|_inf > 1e12.
SimulatedPath simulate_path(const SimulationConfig& cfg,
                            std::uint64_t stream = 0);

// Independent replications: replication r runs on stream base + stride * r,
// so each one is individually reproducible from (seed, r).
class BatchSimulator {
 public:
  BatchSimulator(SimulationConfig cfg, std::int64_t replications,
                 std::uint64_t seed_base, std::uint64_t stream_stride = 2);

  std::int64_t size() const { return replications_; }
  SimulatedPath replication(std::int64_t r) const;
  // Iterator-style access; returns nullopt after the last replication.
  std::optional<SimulatedPath> next();

 private:
  SimulationConfig cfg_;
  std::int64_t replications_;
  std::uint64_t stream_stride_;
  std::int64_t cursor_ = 0;
};

}  // namespace sdeh
