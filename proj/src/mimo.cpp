#include <algorithm>
#include <cmath>
#include <random>

#include "uwoc/ber.hpp"
#include "uwoc/error.hpp"
#include "uwoc/quadrature.hpp"
#include "uwoc/rng.hpp"
#include "uwoc/special.hpp"

namespace uwoc::ber {

int MimoConfig::memory() const {
  std::size_t l = 0;
  for (const auto& p : paths) l = std::max(l, p.gamma_k.size());
  return static_cast<int>(l);
}

void MimoConfig::validate() const {
  if (nt < 1 || nr < 1) throw ParameterError("MIMO link needs Nt, Nr >= 1");
  if (paths.size() != static_cast<std::size_t>(nt * nr)) throw ParameterError("MIMO link needs Nt * Nr paths");
  if (!(sigma_bit > 0)) throw ParameterError("bit noise standard deviation must be positive");
  for (const auto& p : paths) {
    if (p.sigma_x_sq < 0) throw ParameterError("log-amplitude variance must be non-negative");
  }
  if (memory() > 20) throw ParameterError("channel memory above 20 bits is not supported");
}

double mimo_conditional_ber(const MimoConfig& cfg, int b0, const Eigen::MatrixXd& fading,
                            std::span<const int> previous_bits) {
  cfg.validate();
  if (fading.rows() != cfg.nt || fading.cols() != cfg.nr) throw ParameterError("fading matrix must be Nt x Nr");
  if ((fading.array() <= 0).any()) throw ParameterError("fading coefficients must be positive");
  if (static_cast<int>(previous_bits.size()) < cfg.memory()) throw ParameterError("bit history shorter than L_max");
  double signal = 0.0;
  double isi = 0.0;
  for (int j = 0; j < cfg.nr; ++j) {
    for (int i = 0; i < cfg.nt; ++i) {
      const auto& p = cfg.path(i, j);
      signal += fading(i, j) * p.gamma_s;
      double tail = 0.0;
      for (std::size_t m = 0; m < p.gamma_k.size(); ++m) tail += 2.0 * previous_bits[m] * p.gamma_k[m];
      isi += fading(i, j) * tail;
    }
  }
  const double sign = b0 == 0 ? 1.0 : -1.0;  // (-1)^b0
  return gaussian_q((signal - sign * isi) / (2.0 * std::sqrt(static_cast<double>(cfg.nr)) * cfg.sigma_bit));
}

namespace {

// Sums over sequences of the bit error average 1/2 [P(.|1) + P(.|0)] given the
// fading-weighted signal and per-lag ISI sums g[m] = sum_ij h_ij gamma_k[m].
double sequence_average(double signal, const std::vector<double>& g, double scale) {
  const int lmax = static_cast<int>(g.size());
  const long long count = 1LL << lmax;
  double acc = 0.0;
  for (long long s = 0; s < count; ++s) {
    double isi = 0.0;
    for (int m = 0; m < lmax; ++m) {
      if (s >> m & 1) isi += 2.0 * g[static_cast<std::size_t>(m)];
    }
    acc += 0.5 * (gaussian_q((signal - isi) * scale) + gaussian_q((signal + isi) * scale));
  }
  return acc / static_cast<double>(count);
}

template <typename Eval>
MimoBerResult average_over_fading(const MimoConfig& cfg, const MimoBerOptions& opt, long long per_point, Eval&& eval) {
  const int dims = cfg.nt * cfg.nr;
  std::vector<LognormalNodes> nodes;
  long double grid = 1;
  for (const auto& p : cfg.paths) {
    nodes.push_back(lognormal_nodes(p.sigma_x_sq, opt.quadrature_nodes));
    grid *= nodes.back().values.size();
  }
  MimoBerResult out;
  Eigen::VectorXd h(dims);
  if (grid * per_point <= static_cast<long double>(opt.budget)) {
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(dims), 0);
    for (;;) {
      double w = 1.0;
      for (int d = 0; d < dims; ++d) {
        h(d) = nodes[static_cast<std::size_t>(d)].values(idx[static_cast<std::size_t>(d)]);
        w *= nodes[static_cast<std::size_t>(d)].probabilities(idx[static_cast<std::size_t>(d)]);
      }
      out.ber += w * eval(h);
      int d = 0;
      for (; d < dims; ++d) {
        auto& i = idx[static_cast<std::size_t>(d)];
        if (++i < nodes[static_cast<std::size_t>(d)].values.size()) break;
        i = 0;
      }
      if (d == dims) break;
    }
    return out;
  }
  if (opt.mc_samples < 2) throw ParameterError("Monte Carlo fallback needs at least two samples");
  Rng rng = make_stream(opt.seed, 0);
  std::normal_distribution<double> gauss;
  double sum = 0.0, sum_sq = 0.0;
  for (long long s = 0; s < opt.mc_samples; ++s) {
    for (int d = 0; d < dims; ++d) {
      const double v = cfg.paths[static_cast<std::size_t>(d)].sigma_x_sq;
      h(d) = std::exp(2.0 * (-v + std::sqrt(v) * gauss(rng)));
    }
    const double value = eval(h);
    sum += value;
    sum_sq += value * value;
  }
  const double n = static_cast<double>(opt.mc_samples);
  out.ber = sum / n;
  out.std_error = std::sqrt(std::max(0.0, sum_sq / n - out.ber * out.ber) / (n - 1.0));
  out.monte_carlo = true;
  return out;
}

}  // namespace

MimoBerResult mimo_average_ber(const MimoConfig& cfg, const MimoBerOptions& options) {
  cfg.validate();
  const int lmax = cfg.memory();
  const double scale = 1.0 / (2.0 * std::sqrt(static_cast<double>(cfg.nr)) * cfg.sigma_bit);
  std::vector<double> g(static_cast<std::size_t>(lmax));
  return average_over_fading(cfg, options, 1LL << lmax, [&](const Eigen::VectorXd& h) {
    double signal = 0.0;
    std::fill(g.begin(), g.end(), 0.0);
    for (std::size_t d = 0; d < cfg.paths.size(); ++d) {
      const auto& p = cfg.paths[d];
      signal += h(static_cast<Eigen::Index>(d)) * p.gamma_s;
      for (std::size_t m = 0; m < p.gamma_k.size(); ++m) g[m] += h(static_cast<Eigen::Index>(d)) * p.gamma_k[m];
    }
    return sequence_average(signal, g, scale);
  });
}

MimoBerResult mimo_average_ber_isi_free(const MimoConfig& cfg, const MimoBerOptions& options) {
  cfg.validate();
  const double scale = 1.0 / (2.0 * std::sqrt(static_cast<double>(cfg.nr)) * cfg.sigma_bit);
  return average_over_fading(cfg, options, 1, [&](const Eigen::VectorXd& h) {
    double signal = 0.0;
    for (std::size_t d = 0; d < cfg.paths.size(); ++d) signal += h(static_cast<Eigen::Index>(d)) * cfg.paths[d].gamma_s;
    return gaussian_q(signal * scale);
  });
}

}  // namespace uwoc::ber
