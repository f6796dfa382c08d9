#pragma once

#include <utility>

#include "sdeh/contrasts.hpp"
#include "sdeh/model.hpp"
#include "sdeh/preprocess.hpp"

namespace sdeh {

// Row-wise upper-triangle index map: (1,1) -> 1, (1,2) -> 2, ...,
// (2,2) -> d+1, ..., (d,d) -> d(d+1)/2. One-based on both sides.
int sigma_index(int d, int i, int j);
std::pair<int, int> sigma_inverse(int d, int idx);

// Half-vectorization of a symmetric matrix in sigma order.
Vec vech(const Mat& m);

// Asymptotic covariance of the noise-variance estimator: entry (i1, i2) is
// the fourth-moment functional V(sigma^-1(i1), sigma^-1(i2)) built from the
// symmetric root of Lambda and the per-component fourth moments of the
// noise (3 for Gaussian components).
Mat noise_matrix_W1(const Mat& Lambda, const Vec& fourth_moments);

struct InformationEstimate {
  // Block-diagonal information matrices over (vech Lambda, alpha, beta).
  Mat I_lambda, J_lambda;
  Mat I_alpha, J_alpha;
  Mat I_beta, J_beta;
  // Rate-scaled standard errors: sqrt(diag(J^-1 I J^-1)) divided by
  // sqrt(n), sqrt(k), sqrt(T_n) respectively. Empty when the block's J is
  // numerically singular.
  Vec se_lambda, se_alpha, se_beta;
  bool alpha_block_ok = true;
  bool beta_block_ok = true;
  Vec noise_fourth_moments;
};

// Plug-in information estimate: every invariant-measure integral is
// replaced by the sample average over the local-mean states ybar_{j-1},
// j = 1..k-2, evaluated at the fitted parameters. The alpha block uses the
// limit effective diffusion A + 3 Lambda [tau == 2]; at tau = 2 its
// covariance functional carries the extra Lambda terms.
InformationEstimate plug_in_information(const ModelSpec& model,
                                        const LocalMeanSeries& ybar3,
                                        const Vec& alpha_hat,
                                        const Vec& beta_hat,
                                        const Mat& Lambda_hat, double tau,
                                        double n, double T_n,
                                        Vec fourth_moments = Vec());

}  // namespace sdeh
