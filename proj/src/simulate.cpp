#include "sdeh/simulate.hpp"

#include <cmath>
#include <sstream>

#include "sdeh/errors.hpp"

namespace sdeh {

void SimulationConfig::validate() const {
  if (n < 1) throw ConfigError("simulation requires n >= 1");
  if (!(h > 0.0)) throw ConfigError("simulation step h must be positive");
  if (substeps < 1) throw ConfigError("substeps must be >= 1");
  if (alpha_true.size() != model.m1 || beta_true.size() != model.m2) {
    throw ConfigError("true parameter dimensions do not match the model");
  }
  if (x0.size() != model.d) throw ConfigError("x0 dimension does not match the model");
  if (Lambda.size() != 0 &&
      (Lambda.rows() != model.d || Lambda.cols() != model.d)) {
    throw ConfigError("Lambda must be d x d");
  }
}

namespace {

double draw_noise(Philox& rng, NoiseLaw law) {
  switch (law) {
    case NoiseLaw::gaussian:
      return rng.next_gaussian();
    case NoiseLaw::rademacher:
      return (rng.next_u32() & 1u) ? 1.0 : -1.0;
    case NoiseLaw::uniform:
      return (2.0 * rng.next_double() - 1.0) * std::sqrt(3.0);
  }
  return 0.0;
}

}  // namespace

SimulatedPath simulate_path(const SimulationConfig& cfg, std::uint64_t stream) {
  cfg.validate();
  const int d = cfg.model.d;
  const int r = cfg.model.r;
  const double dt = cfg.h / cfg.substeps;
  const double sqrt_dt = std::sqrt(dt);

  Philox path_rng(cfg.seed, stream);
  Philox noise_rng(cfg.seed, stream + 1);

  SimulatedPath out;
  out.obs.n = cfg.n;
  out.obs.h = cfg.h;
  out.obs.y.resize(cfg.n + 1, d);

  const bool has_noise = cfg.Lambda.size() != 0 && cfg.Lambda.norm() > 0.0;
  Mat lambda_root;
  if (has_noise) lambda_root = spd_sqrt(cfg.Lambda);

  Mat latent(cfg.n + 1, d);
  Mat eps;
  if (has_noise || cfg.store_latent) eps = Mat::Zero(cfg.n + 1, d);

  Vec x = cfg.x0;
  latent.row(0) = x;
  Vec z(r);
  for (std::int64_t i = 1; i <= cfg.n; ++i) {
    for (int s = 0; s < cfg.substeps; ++s) {
      const Vec b = eval_drift(cfg.model, x, cfg.beta_true);
      const Mat a = cfg.model.diffusion(x, cfg.alpha_true);
      for (int l = 0; l < r; ++l) z(l) = path_rng.next_gaussian();
      x += b * dt + a * (sqrt_dt * z);
    }
    if (!x.allFinite() || x.lpNorm<Eigen::Infinity>() > 1e12) {
      std::ostringstream err;
      err << "explosion: |X| exceeded 1e12 at step " << i;
      throw ExplosionError(err.str(), i);
    }
    latent.row(i) = x;
  }

  if (has_noise || cfg.store_latent) {
    for (std::int64_t i = 0; i <= cfg.n; ++i) {
      for (int l = 0; l < d; ++l) {
        eps(i, l) = draw_noise(noise_rng, cfg.noise_law);
      }
    }
  }
  if (has_noise) {
    const Mat noise_term = eps * lambda_root.transpose();
    out.obs.y = latent + noise_term;
    if (cfg.store_latent) {
      // Store the round-tripped latent so y - Lambda^{1/2} eps reproduces it
      // bit-exactly (plain (x+p)-p can be off by one ulp).
      out.latent_x = out.obs.y - noise_term;
      out.noise_eps = std::move(eps);
    }
  } else {
    out.obs.y = latent;
    if (cfg.store_latent) {
      out.latent_x = std::move(latent);
      out.noise_eps = std::move(eps);
    }
  }
  return out;
}

BatchSimulator::BatchSimulator(SimulationConfig cfg, std::int64_t replications,
                               std::uint64_t seed_base,
                               std::uint64_t stream_stride)
    : cfg_(std::move(cfg)),
      replications_(replications),
      stream_stride_(stream_stride) {
  if (replications_ < 1) throw ConfigError("replications must be >= 1");
  if (stream_stride_ < 2) throw ConfigError("stream_stride must be >= 2");
  cfg_.seed = seed_base;
}

SimulatedPath BatchSimulator::replication(std::int64_t r) const {
  if (r < 0 || r >= replications_) throw ConfigError("replication index out of range");
  return simulate_path(cfg_, stream_stride_ * static_cast<std::uint64_t>(r));
}

std::optional<SimulatedPath> BatchSimulator::next() {
  if (cursor_ >= replications_) return std::nullopt;
  return replication(cursor_++);
}

}  // namespace sdeh
