#pragma once

#include <functional>

#include "sdeh/model.hpp"

namespace sdeh {

struct MaximizeOptions {
  int max_iters = 200;
  // Stop when ||projected gradient||_inf * ||step||_inf < tol.
  double tol = 1e-8;
};

struct MaximizeResult {
  Vec x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Box-constrained quasi-Newton ascent: BFGS inverse-Hessian updates with
// projection onto the box and an Armijo backtracking line search on the
// projected path. On non-convergence the best iterate is returned with
// converged = false.
MaximizeResult maximize_box(const std::function<double(const Vec&)>& value,
                            const std::function<Vec(const Vec&)>& gradient,
                            const ParamSpace& box, const Vec& x0,
                            const MaximizeOptions& opts = {});

}  // namespace sdeh
