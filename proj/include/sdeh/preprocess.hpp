#pragma once

#include <string>

#include "sdeh/linalg.hpp"
#include "sdeh/schedule.hpp"

namespace sdeh {

// The (n+1) x d matrix of noisy observations on the grid {0, h, ..., nh}.
struct NoisyObservations {
  Mat y;
  double h = 0.0;
  std::int64_t n = 0;

  int d() const { return static_cast<int>(y.cols()); }
  void validate() const;  // row count n+1, finite entries, h > 0
};

// Block means of p consecutive observations; row j averages rows
// jp .. jp+p-1 of the input. Tail observations beyond k*p are unused here
// (the noise-variance estimator below still sees the whole sample).
struct LocalMeanSeries {
  Mat ybar;  // k x d
  BlockSchedule schedule;
};

struct NoiseVariance {
  Mat lambda_hat;  // d x d, symmetric PSD
};

LocalMeanSeries local_means(const NoisyObservations& obs,
                            const BlockSchedule& sched);

// lambda_hat = (1/2n) sum (Y_{i+1} - Y_i)^{x2}, compensated accumulation.
NoiseVariance estimate_noise_variance(const NoisyObservations& obs);

// Binary observation file: little-endian header (magic "NOBS", u32 version,
// u64 n, u32 d, f64 h) followed by row-major float64 payload.
void write_observations_binary(const std::string& path,
                               const NoisyObservations& obs);
NoisyObservations read_observations_binary(const std::string& path);

// Plain CSV (one row per observation, d columns); the step h is not stored
// and must be supplied on import.
void write_observations_csv(const std::string& path,
                            const NoisyObservations& obs);
NoisyObservations read_observations_csv(const std::string& path, double h);

}  // namespace sdeh
