#include <algorithm>
#include <cmath>
#include <limits>

#include "uwoc/channel.hpp"
#include "uwoc/error.hpp"
#include "uwoc/levenberg_marquardt.hpp"

namespace uwoc::channel {

namespace {

// Fit state in scaled units: time in bins (u = dt / bin_width), amplitude
// relative to the histogram peak density. Parameters are log(a1, b1, a3, b3).
struct ScaledData {
  Eigen::VectorXd u;
  Eigen::VectorXd y;
};

Eigen::VectorXd scaled_model(const Eigen::VectorXd& logp, const Eigen::VectorXd& u) {
  const double a1 = std::exp(logp(0)), b1 = std::exp(logp(1)), a3 = std::exp(logp(2)), b3 = std::exp(logp(3));
  return (a1 * u.array() * (-b1 * u.array()).exp() + a3 * u.array() * (-b3 * u.array()).exp()).matrix();
}

// Slope of log(y / u) against u over [first, last], by ordinary least squares.
double log_linear_decay(const ScaledData& d, Eigen::Index first, Eigen::Index last) {
  double su = 0, sl = 0, suu = 0, sul = 0;
  int n = 0;
  for (Eigen::Index k = first; k <= last; ++k) {
    if (d.y(k) <= 0) continue;
    const double l = std::log(d.y(k) / d.u(k));
    su += d.u(k);
    sl += l;
    suu += d.u(k) * d.u(k);
    sul += d.u(k) * l;
    ++n;
  }
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  const double denom = n * suu - su * su;
  if (denom <= 0) return std::numeric_limits<double>::quiet_NaN();
  return -(n * sul - su * sl) / denom;
}

// Amplitudes of the two Gamma terms given their rates, by linear least squares.
Eigen::Vector2d linear_amplitudes(const ScaledData& d, double b1, double b3) {
  Eigen::MatrixXd basis(d.u.size(), 2);
  basis.col(0) = (d.u.array() * (-b1 * d.u.array()).exp()).matrix();
  basis.col(1) = (d.u.array() * (-b3 * d.u.array()).exp()).matrix();
  Eigen::Vector2d a = basis.colPivHouseholderQr().solve(d.y);
  const double floor = 1e-9;
  return a.cwiseMax(floor);
}

}  // namespace

DoubleGammaFit fit_double_gamma(const ImpulseResponse& response) {
  const Eigen::Index n_all = response.weights.size();
  if (n_all == 0 || !(response.bin_width > 0)) throw DegenerateError("empty impulse response");
  Eigen::Index last = -1;
  for (Eigen::Index k = 0; k < n_all; ++k) {
    if (response.weights(k) > 0) last = k;
  }
  if (last < 0) throw DegenerateError("impulse response carries no energy");

  const double dt = response.bin_width;
  const Eigen::Index n = last + 1;
  const Eigen::VectorXd density = response.weights.head(n) / dt;
  const double peak_density = density.maxCoeff();

  ScaledData data;
  data.u = Eigen::VectorXd::LinSpaced(n, 0.5, static_cast<double>(n) - 0.5);
  data.y = density / peak_density;

  Eigen::Index peak = 0;
  data.y.maxCoeff(&peak);

  // Early decay: from the peak until the density drops below e^-3 of it.
  Eigen::Index split = peak;
  while (split < n - 1 && data.y(split) > std::exp(-3.0)) ++split;
  double b1 = log_linear_decay(data, peak, std::max(split, peak + 1));
  double b3 = log_linear_decay(data, split, n - 1);
  const double b_peak = 1.0 / data.u(peak);
  if (!(b1 > 0) || !std::isfinite(b1)) b1 = b_peak;
  if (!(b3 > 0) || !std::isfinite(b3)) b3 = 0.1 * b1;
  if (b3 >= b1) b3 = 0.5 * b1;

  auto residual = [&](const Eigen::VectorXd& p) -> Eigen::VectorXd { return scaled_model(p, data.u) - data.y; };

  LmOptions opt;
  opt.max_iterations = 2000;
  LmResult<double> best;
  best.cost = std::numeric_limits<double>::infinity();
  const double starts[][2] = {{b1, b3}, {b_peak, b3}, {b_peak, 0.5 * b1}, {std::max(b1, b_peak) * 2.0, b3 * 0.5}};
  for (const auto& s : starts) {
    double r1 = s[0], r3 = s[1];
    if (r3 >= r1) std::swap(r1, r3);
    const Eigen::Vector2d a = linear_amplitudes(data, r1, r3);
    Eigen::VectorXd p0(4);
    p0 << std::log(a(0)), std::log(r1), std::log(a(1)), std::log(r3);
    auto fit = levenberg_marquardt<double>(residual, p0, opt);
    if (fit.cost < best.cost) best = fit;
  }

  DoubleGammaFit out;
  const Eigen::VectorXd& p = best.params;
  // Undo the scaling: C1 = a1 * peak / dt, C2 = b1 / dt.
  double c1 = std::exp(p(0)) * peak_density / dt, c2 = std::exp(p(1)) / dt;
  double c3 = std::exp(p(2)) * peak_density / dt, c4 = std::exp(p(3)) / dt;
  if (c4 > c2) {
    std::swap(c1, c3);
    std::swap(c2, c4);
  }
  out.params = {c1, c2, c3, c4, response.t0};
  out.iterations = best.iterations;
  out.converged = best.converged;

  double res_sq = 0, norm_sq = 0;
  for (Eigen::Index k = 0; k < n_all; ++k) {
    const double t = response.t0 + (static_cast<double>(k) + 0.5) * dt;
    const double h_mc = response.weights(k) / dt;
    const double diff = eval_double_gamma(out.params, t) - h_mc;
    res_sq += diff * diff * dt;
    norm_sq += h_mc * h_mc * dt;
  }
  out.residual = std::sqrt(res_sq);
  out.relative_residual = out.residual / std::sqrt(norm_sq);
  return out;
}

}  // namespace uwoc::channel
