#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>

namespace uwoc {

struct LmOptions {
  int max_iterations = 500;
  double gradient_tolerance = 1e-12;
  double step_tolerance = 1e-12;
  double relative_cost_tolerance = 1e-15;
  double initial_damping = 1e-3;
  double fd_step = 1e-7;  // relative step of the forward-difference Jacobian
};

template <typename Scalar>
struct LmResult {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> params;
  Scalar cost = 0;  // 0.5 * ||r||^2 at params
  int iterations = 0;
  bool converged = false;
};

/// Minimises 0.5 * ||r(p)||^2 with a damped Gauss-Newton (Marquardt) iteration.
/// `residual` maps a parameter vector to the residual vector; the Jacobian is
/// taken by forward differences.
template <typename Scalar, typename Residual>
LmResult<Scalar> levenberg_marquardt(Residual&& residual, Eigen::Matrix<Scalar, Eigen::Dynamic, 1> p,
                                     const LmOptions& opt = {}) {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  auto jacobian = [&](const Vector& x, const Vector& r0) {
    Matrix jac(r0.size(), x.size());
    for (Eigen::Index k = 0; k < x.size(); ++k) {
      Vector xp = x;
      const Scalar h = Scalar(opt.fd_step) * std::max(Scalar(1), std::abs(x(k)));
      xp(k) += h;
      jac.col(k) = (residual(xp) - r0) / h;
    }
    return jac;
  };

  LmResult<Scalar> out;
  Vector r = residual(p);
  Scalar cost = Scalar(0.5) * r.squaredNorm();
  Scalar lambda = Scalar(opt.initial_damping);

  for (int it = 0; it < opt.max_iterations; ++it) {
    out.iterations = it + 1;
    const Matrix jac = jacobian(p, r);
    const Vector grad = jac.transpose() * r;
    if (grad.template lpNorm<Eigen::Infinity>() <= Scalar(opt.gradient_tolerance) * (Scalar(1) + cost)) {
      out.converged = true;
      break;
    }
    const Matrix jtj = jac.transpose() * jac;
    bool improved = false;
    for (int inner = 0; inner < 30 && !improved; ++inner) {
      Matrix a = jtj;
      a.diagonal() += lambda * (jtj.diagonal().array() + Scalar(1e-12)).matrix();
      const Vector step = a.ldlt().solve(-grad);
      if (!step.allFinite()) {
        lambda *= 10;
        continue;
      }
      const Vector trial = p + step;
      const Vector r_trial = residual(trial);
      const Scalar cost_trial = Scalar(0.5) * r_trial.squaredNorm();
      if (std::isfinite(double(cost_trial)) && cost_trial < cost) {
        const Scalar rel = (cost - cost_trial) / std::max(cost, std::numeric_limits<Scalar>::min());
        const bool small_step = step.norm() <= Scalar(opt.step_tolerance) * (p.norm() + Scalar(opt.step_tolerance));
        p = trial;
        r = r_trial;
        cost = cost_trial;
        lambda = std::max(lambda / 3, Scalar(1e-15));
        improved = true;
        if (small_step || rel < Scalar(opt.relative_cost_tolerance)) out.converged = true;
      } else {
        lambda *= 4;
      }
    }
    if (!improved) {
      // No descent direction at any damping: stationary to working precision.
      out.converged = true;
      break;
    }
    if (out.converged) break;
  }
  out.params = p;
  out.cost = cost;
  return out;
}

}  // namespace uwoc
