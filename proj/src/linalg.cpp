#include "sdeh/linalg.hpp"

#include "sdeh/errors.hpp"

namespace sdeh {

Mat spd_sqrt(const Mat& m, double psd_tol) {
  Eigen::SelfAdjointEigenSolver<Mat> eig(symmetrize(m));
  if (eig.info() != Eigen::Success) {
    throw ModelEvalError("eigendecomposition failed in spd_sqrt");
  }
  const double floor = -psd_tol * std::max(1e-300, std::abs(m.trace()));
  Vec vals = eig.eigenvalues();
  for (Eigen::Index i = 0; i < vals.size(); ++i) {
    if (vals(i) < floor) {
      throw ModelEvalError("matrix is not positive semi-definite in spd_sqrt");
    }
    vals(i) = std::sqrt(std::max(0.0, vals(i)));
  }
  return symmetrize(eig.eigenvectors() * vals.asDiagonal() *
                    eig.eigenvectors().transpose());
}

double sym_rcond(const Mat& m) {
  Eigen::SelfAdjointEigenSolver<Mat> eig(symmetrize(m));
  if (eig.info() != Eigen::Success) return 0.0;
  const Vec vals = eig.eigenvalues().cwiseAbs();
  const double hi = vals.maxCoeff();
  if (!(hi > 0.0)) return 0.0;
  return vals.minCoeff() / hi;
}

SymSolveResult sym_solve(const Mat& m, const Vec& b, double rcond_min) {
  SymSolveResult result;
  Eigen::SelfAdjointEigenSolver<Mat> eig(symmetrize(m));
  if (eig.info() != Eigen::Success) return result;
  const Vec vals = eig.eigenvalues();
  const double hi = vals.cwiseAbs().maxCoeff();
  if (!(hi > 0.0) || vals.cwiseAbs().minCoeff() < rcond_min * hi) return result;
  result.ok = true;
  result.x = eig.eigenvectors() *
             (eig.eigenvectors().transpose() * b).cwiseQuotient(vals);
  return result;
}

SymInverseResult sym_inverse(const Mat& m, double rcond_min) {
  SymInverseResult result;
  Eigen::SelfAdjointEigenSolver<Mat> eig(symmetrize(m));
  if (eig.info() != Eigen::Success) return result;
  const Vec vals = eig.eigenvalues();
  const double hi = vals.cwiseAbs().maxCoeff();
  if (!(hi > 0.0) || vals.cwiseAbs().minCoeff() < rcond_min * hi) return result;
  result.ok = true;
  result.inverse = eig.eigenvectors() * vals.cwiseInverse().asDiagonal() *
                   eig.eigenvectors().transpose();
  return result;
}

}  // namespace sdeh
