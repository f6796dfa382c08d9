#include "sdeh/model.hpp"

#include <cmath>
#include <sstream>

#include "sdeh/errors.hpp"

namespace sdeh {

void ParamSpace::validate() const {
  if (lower.size() != upper.size() || lower.size() == 0) {
    throw ConfigError("parameter space bounds must have equal positive length");
  }
  for (Eigen::Index i = 0; i < lower.size(); ++i) {
    if (!(lower(i) < upper(i))) {
      std::ostringstream err;
      err << "parameter space requires lower < upper, got [" << lower(i)
          << ", " << upper(i) << "] at coordinate " << i;
      throw ConfigError(err.str());
    }
  }
}

bool ParamSpace::contains(const Vec& theta) const {
  if (theta.size() != lower.size()) return false;
  return (theta.array() >= lower.array()).all() &&
         (theta.array() <= upper.array()).all();
}

Vec ParamSpace::clamp(const Vec& theta) const {
  return theta.cwiseMax(lower).cwiseMin(upper);
}

namespace {

std::string format_point(const Vec& x, const Vec& theta) {
  std::ostringstream os;
  os << "x = [" << x.transpose() << "], theta = [" << theta.transpose() << "]";
  return os.str();
}

}  // namespace

Mat eval_A(const ModelSpec& spec, const Vec& x, const Vec& alpha) {
  const Mat a = spec.diffusion(x, alpha);
  if (a.rows() != spec.d || a.cols() != spec.r) {
    throw ModelEvalError("diffusion output has wrong shape at " +
                         format_point(x, alpha));
  }
  Mat A = symmetrize(a * a.transpose());
  if (!A.allFinite()) {
    throw ModelEvalError("model evaluation error: non-finite A at " +
                         format_point(x, alpha));
  }
  return A;
}

Vec eval_drift(const ModelSpec& spec, const Vec& x, const Vec& beta) {
  const Vec b = spec.drift(x, beta);
  if (b.size() != spec.d) {
    throw ModelEvalError("drift output has wrong shape at " +
                         format_point(x, beta));
  }
  if (!b.allFinite()) {
    throw ModelEvalError("model evaluation error: non-finite drift at " +
                         format_point(x, beta));
  }
  return b;
}

namespace fd {

namespace {

enum class Side { central, backward, forward };

Side pick_side(double theta_i, double eps, const ParamSpace* box, int i) {
  if (box == nullptr) return Side::central;
  const bool up_ok = theta_i + eps <= box->upper(i);
  const bool down_ok = theta_i - eps >= box->lower(i);
  if (up_ok && down_ok) return Side::central;
  if (down_ok) return Side::backward;
  if (up_ok) return Side::forward;
  throw ConfigError("parameter box too thin for finite differences");
}

}  // namespace

std::vector<Mat> jacobian_mats(const std::function<Mat(const Vec&)>& f,
                               const Vec& theta, const ParamSpace* box,
                               double scale) {
  const int m = static_cast<int>(theta.size());
  std::vector<Mat> out(m);
  for (int i = 0; i < m; ++i) {
    const double eps = step(theta(i), scale);
    Vec t = theta;
    switch (pick_side(theta(i), eps, box, i)) {
      case Side::central: {
        t(i) = theta(i) + eps;
        const Mat up = f(t);
        t(i) = theta(i) - eps;
        const Mat down = f(t);
        out[i] = (up - down) / (2.0 * eps);
        break;
      }
      case Side::backward: {
        const Mat f0 = f(theta);
        t(i) = theta(i) - eps;
        const Mat f1 = f(t);
        t(i) = theta(i) - 2.0 * eps;
        const Mat f2 = f(t);
        out[i] = (3.0 * f0 - 4.0 * f1 + f2) / (2.0 * eps);
        break;
      }
      case Side::forward: {
        const Mat f0 = f(theta);
        t(i) = theta(i) + eps;
        const Mat f1 = f(t);
        t(i) = theta(i) + 2.0 * eps;
        const Mat f2 = f(t);
        out[i] = (-3.0 * f0 + 4.0 * f1 - f2) / (2.0 * eps);
        break;
      }
    }
  }
  return out;
}

}  // namespace fd

std::vector<Mat> eval_dA_dalpha(const ModelSpec& spec, const Vec& x,
                                const Vec& alpha, const ParamSpace* box) {
  if (spec.dA_dalpha) return spec.dA_dalpha(x, alpha);
  return fd::jacobian_mats(
      [&](const Vec& a) { return eval_A(spec, x, a); }, alpha, box);
}

std::vector<Mat> eval_d2A_dalpha2(const ModelSpec& spec, const Vec& x,
                                  const Vec& alpha, const ParamSpace* box) {
  if (spec.d2A_dalpha2) return spec.d2A_dalpha2(x, alpha);
  const int m = static_cast<int>(alpha.size());
  std::vector<Mat> out(static_cast<std::size_t>(m) * m);
  for (int i = 0; i < m; ++i) {
    const auto d_i = fd::jacobian_mats(
        [&](const Vec& a) {
          return eval_dA_dalpha(spec, x, a, box)[static_cast<std::size_t>(i)];
        },
        alpha, box);
    for (int l = 0; l < m; ++l) out[static_cast<std::size_t>(i) * m + l] = d_i[l];
  }
  // enforce symmetry in (i, l)
  for (int i = 0; i < m; ++i) {
    for (int l = i + 1; l < m; ++l) {
      const Mat avg = 0.5 * (out[static_cast<std::size_t>(i) * m + l] +
                             out[static_cast<std::size_t>(l) * m + i]);
      out[static_cast<std::size_t>(i) * m + l] = avg;
      out[static_cast<std::size_t>(l) * m + i] = avg;
    }
  }
  return out;
}

Mat eval_db_dbeta(const ModelSpec& spec, const Vec& x, const Vec& beta,
                  const ParamSpace* box) {
  if (spec.db_dbeta) return spec.db_dbeta(x, beta);
  const auto cols = fd::jacobian_mats(
      [&](const Vec& b) { return Mat(eval_drift(spec, x, b)); }, beta, box);
  Mat jac(spec.d, beta.size());
  for (int i = 0; i < static_cast<int>(beta.size()); ++i) {
    jac.col(i) = cols[static_cast<std::size_t>(i)].col(0);
  }
  return jac;
}

std::vector<Vec> eval_d2b_dbeta2(const ModelSpec& spec, const Vec& x,
                                 const Vec& beta, const ParamSpace* box) {
  if (spec.d2b_dbeta2) return spec.d2b_dbeta2(x, beta);
  const int m = static_cast<int>(beta.size());
  std::vector<Vec> out(static_cast<std::size_t>(m) * m);
  for (int i = 0; i < m; ++i) {
    const auto d_i = fd::jacobian_mats(
        [&](const Vec& b) {
          return Mat(eval_db_dbeta(spec, x, b, box).col(i));
        },
        beta, box);
    for (int l = 0; l < m; ++l) {
      out[static_cast<std::size_t>(i) * m + l] = d_i[l].col(0);
    }
  }
  for (int i = 0; i < m; ++i) {
    for (int l = i + 1; l < m; ++l) {
      const Vec avg = 0.5 * (out[static_cast<std::size_t>(i) * m + l] +
                             out[static_cast<std::size_t>(l) * m + i]);
      out[static_cast<std::size_t>(i) * m + l] = avg;
      out[static_cast<std::size_t>(l) * m + i] = avg;
    }
  }
  return out;
}

std::vector<Mat> eval_d3A_dalpha3(const ModelSpec& spec, const Vec& x,
                                  const Vec& alpha, const ParamSpace* box) {
  const int m = static_cast<int>(alpha.size());
  std::vector<Mat> out(static_cast<std::size_t>(m) * m * m);
  for (int i = 0; i < m; ++i) {
    for (int l = 0; l < m; ++l) {
      const auto d_il = fd::jacobian_mats(
          [&](const Vec& a) {
            return eval_d2A_dalpha2(spec, x, a, box)
                [static_cast<std::size_t>(i) * m + l];
          },
          alpha, box);
      for (int s = 0; s < m; ++s) {
        out[(static_cast<std::size_t>(i) * m + l) * m + s] = d_il[s];
      }
    }
  }
  return out;
}

std::vector<Vec> eval_d3b_dbeta3(const ModelSpec& spec, const Vec& x,
                                 const Vec& beta, const ParamSpace* box) {
  const int m = static_cast<int>(beta.size());
  std::vector<Vec> out(static_cast<std::size_t>(m) * m * m);
  for (int i = 0; i < m; ++i) {
    for (int l = 0; l < m; ++l) {
      const auto d_il = fd::jacobian_mats(
          [&](const Vec& b) {
            return Mat(eval_d2b_dbeta2(spec, x, b, box)
                           [static_cast<std::size_t>(i) * m + l]);
          },
          beta, box);
      for (int s = 0; s < m; ++s) {
        out[(static_cast<std::size_t>(i) * m + l) * m + s] = d_il[s].col(0);
      }
    }
  }
  return out;
}

namespace {

ParamSpace box_0p01_10(int m) {
  ParamSpace space;
  space.lower = Vec::Constant(m, 0.01);
  space.upper = Vec::Constant(m, 10.0);
  return space;
}

RegisteredModel make_paper3d() {
  RegisteredModel reg;
  reg.name = "paper-3d";
  ModelSpec& m = reg.spec;
  m.d = 3;
  m.r = 3;
  m.m1 = 3;
  m.m2 = 6;
  m.drift = [](const Vec& x, const Vec& b) {
    Vec out(3);
    out(0) = 1.0 - b(0) * x(0) - 10.0 * std::sin(b(1) * x(1) * x(1));
    out(1) = 1.0 - b(2) * x(1) - 10.0 * std::sin(b(3) * x(2) * x(2));
    out(2) = 1.0 - b(4) * x(2) - 10.0 * std::sin(b(5) * x(0) * x(0));
    return out;
  };
  m.diffusion = [](const Vec& x, const Vec& a) {
    Mat out = Mat::Zero(3, 3);
    out(0, 0) = std::sqrt(a(0) * (2.0 + std::cos(x(2) * x(2))));
    out(1, 1) = std::sqrt(a(1) * (2.0 + std::cos(x(0) * x(0))));
    out(2, 2) = std::sqrt(a(2) * (2.0 + std::cos(x(1) * x(1))));
    return out;
  };
  m.dA_dalpha = [](const Vec& x, const Vec&) {
    std::vector<Mat> g(3, Mat::Zero(3, 3));
    g[0](0, 0) = 2.0 + std::cos(x(2) * x(2));
    g[1](1, 1) = 2.0 + std::cos(x(0) * x(0));
    g[2](2, 2) = 2.0 + std::cos(x(1) * x(1));
    return g;
  };
  m.d2A_dalpha2 = [](const Vec&, const Vec&) {
    return std::vector<Mat>(9, Mat::Zero(3, 3));
  };
  m.db_dbeta = [](const Vec& x, const Vec& b) {
    Mat jac = Mat::Zero(3, 6);
    jac(0, 0) = -x(0);
    jac(0, 1) = -10.0 * x(1) * x(1) * std::cos(b(1) * x(1) * x(1));
    jac(1, 2) = -x(1);
    jac(1, 3) = -10.0 * x(2) * x(2) * std::cos(b(3) * x(2) * x(2));
    jac(2, 4) = -x(2);
    jac(2, 5) = -10.0 * x(0) * x(0) * std::cos(b(5) * x(0) * x(0));
    return jac;
  };
  m.d2b_dbeta2 = [](const Vec& x, const Vec& b) {
    std::vector<Vec> hess(36, Vec::Zero(3));
    const double x0sq = x(0) * x(0);
    const double x1sq = x(1) * x(1);
    const double x2sq = x(2) * x(2);
    hess[1 * 6 + 1](0) = 10.0 * x1sq * x1sq * std::sin(b(1) * x1sq);
    hess[3 * 6 + 3](1) = 10.0 * x2sq * x2sq * std::sin(b(3) * x2sq);
    hess[5 * 6 + 5](2) = 10.0 * x0sq * x0sq * std::sin(b(5) * x0sq);
    return hess;
  };
  reg.alpha_space = box_0p01_10(3);
  reg.beta_space = box_0p01_10(6);
  reg.alpha_default = (Vec(3) << 1.0, 2.0, 3.0).finished();
  reg.beta_default = (Vec(6) << 1.0, 2.0, 2.0, 3.0, 3.0, 4.0).finished();
  reg.x0_default = Vec::Ones(3);
  return reg;
}

RegisteredModel make_ou1d() {
  RegisteredModel reg;
  reg.name = "ou-1d";
  ModelSpec& m = reg.spec;
  m.d = 1;
  m.r = 1;
  m.m1 = 1;
  m.m2 = 1;
  m.drift = [](const Vec& x, const Vec& b) {
    return Vec::Constant(1, -b(0) * x(0));
  };
  m.diffusion = [](const Vec&, const Vec& a) {
    return Mat::Constant(1, 1, std::sqrt(a(0)));
  };
  m.dA_dalpha = [](const Vec&, const Vec&) {
    return std::vector<Mat>{Mat::Constant(1, 1, 1.0)};
  };
  m.d2A_dalpha2 = [](const Vec&, const Vec&) {
    return std::vector<Mat>{Mat::Zero(1, 1)};
  };
  m.db_dbeta = [](const Vec& x, const Vec&) {
    return Mat::Constant(1, 1, -x(0));
  };
  m.d2b_dbeta2 = [](const Vec&, const Vec&) {
    return std::vector<Vec>{Vec::Zero(1)};
  };
  reg.alpha_space = box_0p01_10(1);
  reg.beta_space = box_0p01_10(1);
  reg.alpha_default = Vec::Ones(1);
  reg.beta_default = Vec::Ones(1);
  reg.x0_default = Vec::Ones(1);
  return reg;
}

}  // namespace

RegisteredModel model_from_name(const std::string& name) {
  if (name == "paper-3d") return make_paper3d();
  if (name == "ou-1d") return make_ou1d();
  throw ConfigError("unknown model name: " + name +
                    " (available: paper-3d, ou-1d)");
}

}  // namespace sdeh
