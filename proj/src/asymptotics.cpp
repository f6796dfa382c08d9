#include "sdeh/asymptotics.hpp"

#include <cmath>
#include <sstream>

#include "sdeh/errors.hpp"

namespace sdeh {

int sigma_index(int d, int i, int j) {
  if (d < 1 || i < 1 || j < i || j > d) {
    std::ostringstream err;
    err << "sigma_index out of range: d = " << d << ", (i, j) = (" << i << ", "
        << j << ")";
    throw ConfigError(err.str());
  }
  if (i == 1) return j;
  int acc = 0;
  for (int l = 1; l <= i - 1; ++l) acc += d - l + 1;
  return acc + j - i + 1;
}

std::pair<int, int> sigma_inverse(int d, int idx) {
  if (d < 1 || idx < 1 || idx > d * (d + 1) / 2) {
    std::ostringstream err;
    err << "sigma_inverse out of range: d = " << d << ", idx = " << idx;
    throw ConfigError(err.str());
  }
  int i = 1;
  int remaining = idx;
  while (remaining > d - i + 1) {
    remaining -= d - i + 1;
    ++i;
  }
  return {i, i + remaining - 1};
}

Vec vech(const Mat& m) {
  const int d = static_cast<int>(m.rows());
  Vec out(d * (d + 1) / 2);
  for (int idx = 1; idx <= out.size(); ++idx) {
    const auto [i, j] = sigma_inverse(d, idx);
    out(idx - 1) = m(i - 1, j - 1);
  }
  return out;
}

Mat noise_matrix_W1(const Mat& Lambda, const Vec& fourth_moments) {
  const int d = static_cast<int>(Lambda.rows());
  if (fourth_moments.size() != d) {
    throw ConfigError("fourth_moments must have one entry per noise component");
  }
  const Mat root = spd_sqrt(Lambda);
  const Vec excess = fourth_moments.array() - 3.0;
  const int dim = d * (d + 1) / 2;

  const auto V = [&](int l1, int l2, int l3, int l4) {
    double kurt = 0.0;
    for (int k = 0; k < d; ++k) {
      kurt += root(l1, k) * root(l2, k) * root(l3, k) * root(l4, k) * excess(k);
    }
    return kurt + 1.5 * (Lambda(l1, l3) * Lambda(l2, l4) +
                         Lambda(l1, l4) * Lambda(l2, l3));
  };

  Mat w1(dim, dim);
  for (int i1 = 1; i1 <= dim; ++i1) {
    const auto [a, b] = sigma_inverse(d, i1);
    for (int i2 = 1; i2 <= dim; ++i2) {
      const auto [c, e] = sigma_inverse(d, i2);
      w1(i1 - 1, i2 - 1) = V(a - 1, b - 1, c - 1, e - 1);
    }
  }
  return w1;
}

InformationEstimate plug_in_information(const ModelSpec& model,
                                        const LocalMeanSeries& ybar3,
                                        const Vec& alpha_hat,
                                        const Vec& beta_hat,
                                        const Mat& Lambda_hat, double tau,
                                        double n, double T_n,
                                        Vec fourth_moments) {
  const int d = model.d;
  const int m1 = model.m1;
  const int m2 = model.m2;
  if (fourth_moments.size() == 0) fourth_moments = Vec::Constant(d, 3.0);

  InformationEstimate est;
  est.noise_fourth_moments = fourth_moments;
  est.I_lambda = noise_matrix_W1(Lambda_hat, fourth_moments);
  est.J_lambda = Mat::Identity(d * (d + 1) / 2, d * (d + 1) / 2);

  const std::int64_t k = ybar3.schedule.k;
  if (k - 2 < 1) throw ConfigError("insufficient blocks for plug-in information");
  const double count = static_cast<double>(k - 2);
  const bool tau_noise = tau == 2.0;

  std::vector<NeumaierSum> i_alpha_acc(static_cast<std::size_t>(m1) * m1);
  std::vector<NeumaierSum> j_alpha_acc(static_cast<std::size_t>(m1) * m1);
  std::vector<NeumaierSum> j_beta_acc(static_cast<std::size_t>(m2) * m2);

  std::vector<Mat> B(static_cast<std::size_t>(m1));
  std::vector<Mat> Minv_dA(static_cast<std::size_t>(m1));
  for (std::int64_t j = 1; j <= k - 2; ++j) {
    const Vec x = ybar3.ybar.row(j - 1);
    const Mat A = eval_A(model, x, alpha_hat);
    const Mat M = tau_noise ? Mat(A + 3.0 * Lambda_hat) : A;
    Eigen::LLT<Mat> llt(M);
    if (llt.info() != Eigen::Success) {
      throw NonPdError("non-PD effective diffusion in plug-in information", j);
    }
    const auto dA = eval_dA_dalpha(model, x, alpha_hat);
    for (int i = 0; i < m1; ++i) {
      Minv_dA[static_cast<std::size_t>(i)] =
          llt.solve(dA[static_cast<std::size_t>(i)]);
      // B_i = (3/4) M^{-1} dA_i M^{-1}, symmetric
      B[static_cast<std::size_t>(i)] = symmetrize(
          0.75 * llt.solve(Mat(Minv_dA[static_cast<std::size_t>(i)].transpose())));
    }
    for (int i = 0; i < m1; ++i) {
      for (int l = i; l < m1; ++l) {
        // J^(2,2): (1/2) tr{M^-1 dA_i M^-1 dA_l}
        const double jval = 0.5 * (Minv_dA[static_cast<std::size_t>(i)] *
                                   Minv_dA[static_cast<std::size_t>(l)])
                                      .trace();
        // I^(2,2) via the covariance functional of the B_i
        const Mat& Bi = B[static_cast<std::size_t>(i)];
        const Mat& Bl = B[static_cast<std::size_t>(l)];
        double ival = (Bi * A * Bl * A).trace();
        if (tau_noise) {
          ival += 4.0 * (Bi * A * Bl * Lambda_hat).trace() +
                  12.0 * (Bi * Lambda_hat * Bl * Lambda_hat).trace();
        }
        j_alpha_acc[static_cast<std::size_t>(i) * m1 + l].add(jval);
        i_alpha_acc[static_cast<std::size_t>(i) * m1 + l].add(ival);
        if (l != i) {
          j_alpha_acc[static_cast<std::size_t>(l) * m1 + i].add(jval);
          i_alpha_acc[static_cast<std::size_t>(l) * m1 + i].add(ival);
        }
      }
    }
    // beta block: A^{-1}[db_i, db_l] averaged (plain A, no noise term)
    Eigen::LLT<Mat> llt_a(A);
    if (llt_a.info() != Eigen::Success) {
      throw NonPdError("non-PD diffusion in plug-in information", j);
    }
    const Mat Jb = eval_db_dbeta(model, x, beta_hat);
    const Mat cross = Jb.transpose() * llt_a.solve(Jb);
    for (int i = 0; i < m2; ++i) {
      for (int l = i; l < m2; ++l) {
        j_beta_acc[static_cast<std::size_t>(i) * m2 + l].add(cross(i, l));
        if (l != i) j_beta_acc[static_cast<std::size_t>(l) * m2 + i].add(cross(i, l));
      }
    }
  }

  est.I_alpha.resize(m1, m1);
  est.J_alpha.resize(m1, m1);
  for (int i = 0; i < m1; ++i) {
    for (int l = 0; l < m1; ++l) {
      est.I_alpha(i, l) = i_alpha_acc[static_cast<std::size_t>(i) * m1 + l].value() / count;
      est.J_alpha(i, l) = j_alpha_acc[static_cast<std::size_t>(i) * m1 + l].value() / count;
    }
  }
  est.J_beta.resize(m2, m2);
  for (int i = 0; i < m2; ++i) {
    for (int l = 0; l < m2; ++l) {
      est.J_beta(i, l) = j_beta_acc[static_cast<std::size_t>(i) * m2 + l].value() / count;
    }
  }
  est.I_beta = est.J_beta;  // identical functionals for the drift block

  est.se_lambda = (est.I_lambda.diagonal() / n).cwiseSqrt();

  const auto j_alpha_inv = sym_inverse(est.J_alpha);
  est.alpha_block_ok = j_alpha_inv.ok;
  if (j_alpha_inv.ok) {
    const Mat cov = j_alpha_inv.inverse * est.I_alpha * j_alpha_inv.inverse;
    est.se_alpha = (cov.diagonal() / static_cast<double>(k)).cwiseSqrt();
  }
  const auto j_beta_inv = sym_inverse(est.J_beta);
  est.beta_block_ok = j_beta_inv.ok;
  if (j_beta_inv.ok) {
    const Mat cov = j_beta_inv.inverse * est.I_beta * j_beta_inv.inverse;
    est.se_beta = (cov.diagonal() / T_n).cwiseSqrt();
  }
  return est;
}

}  // namespace sdeh
