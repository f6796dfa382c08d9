#include "sdeh/preprocess.hpp"

#include <sstream>

#include "sdeh/errors.hpp"

namespace sdeh {

void NoisyObservations::validate() const {
  if (n < 1) throw ConfigError("observations require n >= 1");
  if (y.rows() != n + 1) {
    std::ostringstream err;
    err << "observation matrix has " << y.rows() << " rows, expected n+1 = "
        << n + 1;
    throw ConfigError(err.str());
  }
  if (y.cols() < 1) throw ConfigError("observations need at least one column");
  if (!(h > 0.0)) throw ConfigError("observation step h must be positive");
  if (!y.allFinite()) throw ConfigError("observations contain non-finite entries");
}

LocalMeanSeries local_means(const NoisyObservations& obs,
                            const BlockSchedule& sched) {
  obs.validate();
  if (sched.p < 1 || sched.k < 1 || sched.k * sched.p > obs.n + 1) {
    throw ConfigError("block schedule does not fit the observation sample");
  }
  LocalMeanSeries series;
  series.schedule = sched;
  series.ybar.resize(sched.k, obs.y.cols());
  const double inv_p = 1.0 / static_cast<double>(sched.p);
  for (std::int64_t j = 0; j < sched.k; ++j) {
    series.ybar.row(j) =
        obs.y.middleRows(j * sched.p, sched.p).colwise().sum() * inv_p;
  }
  return series;
}

NoiseVariance estimate_noise_variance(const NoisyObservations& obs) {
  obs.validate();
  const int d = obs.d();
  NeumaierMatSum acc(d, d);
  Mat outer(d, d);
  for (std::int64_t i = 0; i < obs.n; ++i) {
    const auto dy = obs.y.row(i + 1) - obs.y.row(i);
    outer.noalias() = dy.transpose() * dy;
    acc.add(outer);
  }
  NoiseVariance nv;
  nv.lambda_hat = symmetrize(acc.value() / (2.0 * static_cast<double>(obs.n)));
  return nv;
}

}  // namespace sdeh
