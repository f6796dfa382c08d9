#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>

namespace sdeh {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Neumaier-compensated scalar accumulator. Sums with k up to 1e8 terms of
// mixed magnitude stay accurate to a few ulps of the true sum.
class NeumaierSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// Entrywise compensated accumulator for fixed-shape matrices.
class NeumaierMatSum {
 public:
  NeumaierMatSum(Eigen::Index rows, Eigen::Index cols)
      : sum_(Mat::Zero(rows, cols)), comp_(Mat::Zero(rows, cols)) {}

  void add(const Mat& x) {
    for (Eigen::Index j = 0; j < sum_.cols(); ++j) {
      for (Eigen::Index i = 0; i < sum_.rows(); ++i) {
        const double s = sum_(i, j);
        const double v = x(i, j);
        const double t = s + v;
        if (std::abs(s) >= std::abs(v)) {
          comp_(i, j) += (s - t) + v;
        } else {
          comp_(i, j) += (v - t) + s;
        }
        sum_(i, j) = t;
      }
    }
  }
  Mat value() const { return sum_ + comp_; }

 private:
  Mat sum_;
  Mat comp_;
};

inline Mat symmetrize(const Mat& m) { return 0.5 * (m + m.transpose()); }

// Symmetric PSD square root via eigendecomposition. Eigenvalues below
// -psd_tol * trace are rejected; small negative ones are clamped to zero.
Mat spd_sqrt(const Mat& m, double psd_tol = 1e-10);

// Reciprocal condition number min|eig| / max|eig| of a symmetric matrix.
// Returns 0 for the zero matrix.
double sym_rcond(const Mat& m);

// Solves m * x = b for symmetric m via eigendecomposition.
// ok=false when the reciprocal condition estimate falls below rcond_min.
struct SymSolveResult {
  bool ok = false;
  Vec x;
};
SymSolveResult sym_solve(const Mat& m, const Vec& b, double rcond_min = 1e-12);

// Inverse of a symmetric matrix with the same conditioning guard.
struct SymInverseResult {
  bool ok = false;
  Mat inverse;
};
SymInverseResult sym_inverse(const Mat& m, double rcond_min = 1e-12);

}  // namespace sdeh
