#pragma once

#include <functional>
#include <string>
#include <vector>

#include "sdeh/linalg.hpp"

namespace sdeh {

// Open box parameter space, one interval per coordinate.
struct ParamSpace {
  Vec lower;
  Vec upper;

  int dim() const { return static_cast<int>(lower.size()); }
  void validate() const;
  bool contains(const Vec& theta) const;  // closed box
  Vec center() const { return 0.5 * (lower + upper); }
  Vec width() const { return upper - lower; }
  Vec clamp(const Vec& theta) const;
};

// User-specified diffusion model dX = b(X, beta) dt + a(X, alpha) dW.
//
// Evaluation callables must be pure: they may be invoked concurrently from
// several threads and must not keep mutable state. Analytic derivatives are
// optional; when absent, the eval_* accessors below fall back to central
// finite differences.
struct ModelSpec {
  int d = 1;   // state dimension
  int r = 1;   // driving-noise dimension
  int m1 = 1;  // dim(alpha)
  int m2 = 1;  // dim(beta)

  std::function<Vec(const Vec& x, const Vec& beta)> drift;       // -> d
  std::function<Mat(const Vec& x, const Vec& alpha)> diffusion;  // -> d x r

  // Optional analytic derivatives. Layouts:
  //   dA_dalpha:    m1 matrices (d x d), entry i = dA/dalpha_i
  //   d2A_dalpha2:  m1*m1 matrices, entry i*m1+l = d2A/(dalpha_i dalpha_l)
  //   db_dbeta:     d x m2 Jacobian
  //   d2b_dbeta2:   m2*m2 vectors (d), entry i*m2+l = d2b/(dbeta_i dbeta_l)
  std::function<std::vector<Mat>(const Vec&, const Vec&)> dA_dalpha;
  std::function<std::vector<Mat>(const Vec&, const Vec&)> d2A_dalpha2;
  std::function<Mat(const Vec&, const Vec&)> db_dbeta;
  std::function<std::vector<Vec>(const Vec&, const Vec&)> d2b_dbeta2;

  bool has_alpha_derivatives() const {
    return static_cast<bool>(dA_dalpha) && static_cast<bool>(d2A_dalpha2);
  }
  bool has_beta_derivatives() const {
    return static_cast<bool>(db_dbeta) && static_cast<bool>(d2b_dbeta2);
  }
};

// A(x, alpha) = a a^T, symmetrized after the product. Throws ModelEvalError
// on non-finite output or shape mismatch.
Mat eval_A(const ModelSpec& spec, const Vec& x, const Vec& alpha);
Vec eval_drift(const ModelSpec& spec, const Vec& x, const Vec& beta);

// Derivative access: analytic when supplied, otherwise central differences
// with per-coordinate step 1e-6 * (1 + |theta_i|). When a step would leave
// the box, a second-order one-sided difference is used instead. Third
// derivatives are always finite differences of the second.
std::vector<Mat> eval_dA_dalpha(const ModelSpec& spec, const Vec& x,
                                const Vec& alpha,
                                const ParamSpace* box = nullptr);
std::vector<Mat> eval_d2A_dalpha2(const ModelSpec& spec, const Vec& x,
                                  const Vec& alpha,
                                  const ParamSpace* box = nullptr);
Mat eval_db_dbeta(const ModelSpec& spec, const Vec& x, const Vec& beta,
                  const ParamSpace* box = nullptr);
std::vector<Vec> eval_d2b_dbeta2(const ModelSpec& spec, const Vec& x,
                                 const Vec& beta,
                                 const ParamSpace* box = nullptr);
// m1^3 matrices, entry (i*m1+l)*m1+s.
std::vector<Mat> eval_d3A_dalpha3(const ModelSpec& spec, const Vec& x,
                                  const Vec& alpha,
                                  const ParamSpace* box = nullptr);
// m2^3 vectors, entry (i*m2+l)*m2+s.
std::vector<Vec> eval_d3b_dbeta3(const ModelSpec& spec, const Vec& x,
                                 const Vec& beta,
                                 const ParamSpace* box = nullptr);

struct RegisteredModel {
  std::string name;
  ModelSpec spec;
  ParamSpace alpha_space;
  ParamSpace beta_space;
  Vec alpha_default;  // conventional truth used by the CLI presets
  Vec beta_default;
  Vec x0_default;
};

// Built-in models: "paper-3d" (three-dimensional trigonometric drift /
// diagonal diffusion benchmark) and "ou-1d" (dX = -beta X dt + sqrt(alpha) dW).
RegisteredModel model_from_name(const std::string& name);

namespace fd {
// Central-difference step used throughout.
inline double step(double theta_i, double scale = 1e-6) {
  return scale * (1.0 + std::abs(theta_i));
}
// First derivative of a matrix-valued function of theta, one matrix per
// coordinate. Exposed for step-size studies in tests.
std::vector<Mat> jacobian_mats(
    const std::function<Mat(const Vec&)>& f, const Vec& theta,
    const ParamSpace* box, double scale = 1e-6);
}  // namespace fd

}  // namespace sdeh
