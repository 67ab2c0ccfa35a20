#include "uwoc/ber.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <map>
#include <random>

#include "uwoc/error.hpp"
#include "uwoc/quadrature.hpp"
#include "uwoc/rng.hpp"
#include "uwoc/special.hpp"

namespace uwoc::ber {

ReceiverModel ReceiverModel::from_noise_psd(double responsivity, double noise_psd, double chip_power, double chip_time,
                                            int chips_per_bit) {
  if (!(noise_psd > 0) || !(chip_time > 0) || chips_per_bit < 1) {
    throw ParameterError("noise PSD, chip time and chips per bit must be positive");
  }
  ReceiverModel rx;
  rx.responsivity = responsivity;
  rx.chip_power = chip_power;
  rx.chip_time = chip_time;
  rx.sigma_chip = std::sqrt(noise_psd * chip_time);
  rx.sigma_bit = std::sqrt(noise_psd * chip_time * chips_per_bit);
  return rx;
}

double ReceiverModel::chip_snr_scale() const {
  if (!(sigma_chip > 0)) throw ParameterError("chip noise standard deviation must be positive");
  return chip_amplitude() / sigma_chip;
}

double responsivity(double quantum_efficiency, double wavelength_m) {
  const double frequency = physics::kSpeedOfLight / wavelength_m;
  return quantum_efficiency * physics::kElectronCharge / (physics::kPlanck * frequency);
}

double chip_power_from_average(double power_per_bit, int code_length, int code_weight) {
  return power_per_bit * 2.0 * code_length / code_weight;
}

int InterferencePattern::total() const {
  int l = 0;
  for (int a : alpha) l += a;
  return l;
}

double cer_first_hop_uplink(int bit, double h11, double beta, const ReceiverModel& rx, double loss) {
  const double k = rx.chip_snr_scale();
  const double half = 0.5 * h11 * loss;
  return bit == 0 ? gaussian_q(k * (half - beta)) : gaussian_q(k * (half + beta));
}

double cer_mai_free(double h, const ReceiverModel& rx, double loss) {
  return gaussian_q(rx.chip_snr_scale() * h * loss / 2.0);
}

double e2e_cer(std::span<const double> hop_cers) {
  double log_ok = 0.0;
  for (double p : hop_cers) log_ok += std::log1p(-p);
  return -std::expm1(log_ok);
}

ConditionalBer conditional_ber(std::span<const double> cer_off, std::span<const double> cer_on) {
  if (cer_off.size() != cer_on.size() || cer_off.empty()) {
    throw ParameterError("conditional_ber needs W matching OFF/ON chip error rates");
  }
  ConditionalBer out{1.0, 0.0};
  double log_ok = 0.0;
  for (std::size_t q = 0; q < cer_off.size(); ++q) {
    out.p10 *= cer_off[q];
    log_ok += std::log1p(-cer_on[q]);
  }
  out.p01 = -std::expm1(log_ok);
  return out;
}

double chip_hit_probability(int code_length, int code_weight) {
  return static_cast<double>(code_weight) / (2.0 * code_length);
}

namespace {

// Discrete distribution of log K = sum_i log(1 - p_i(h_i)) over the hops in
// [first, last), on the Gauss-Hermite product grid.
struct WeightedPoints {
  std::vector<double> value;
  std::vector<double> prob;
};

WeightedPoints log_survival_distribution(const RelayLink& link, std::size_t first, std::size_t last, int nodes) {
  WeightedPoints dist{{0.0}, {1.0}};
  const double k = link.rx.chip_snr_scale();
  for (std::size_t i = first; i < last; ++i) {
    const auto fading = lognormal_nodes(link.chain.hop_sigma_x_sq[i], nodes);
    WeightedPoints next;
    next.value.reserve(dist.value.size() * static_cast<std::size_t>(fading.values.size()));
    next.prob.reserve(next.value.capacity());
    for (std::size_t a = 0; a < dist.value.size(); ++a) {
      for (Eigen::Index b = 0; b < fading.values.size(); ++b) {
        const double p = gaussian_q(k * fading.values(b) * link.chain.hop_loss[i] / 2.0);
        next.value.push_back(dist.value[a] + std::log1p(-p));
        next.prob.push_back(dist.prob[a] * fading.probabilities(b));
      }
    }
    dist = std::move(next);
  }
  return dist;
}

void validate_link(const RelayLink& link) {
  if (link.code_length < 1 || link.code_weight < 1 || link.code_weight > link.code_length) {
    throw ParameterError("invalid code parameters for the relay link");
  }
  if (link.chain.hop_loss.empty() || link.chain.hop_loss.size() != link.chain.hop_sigma_x_sq.size()) {
    throw ParameterError("relay chain needs matching per-hop loss and fading");
  }
  for (double l : link.chain.hop_loss) {
    if (!(l > 0 && l <= 1)) throw ParameterError("hop losses must lie in (0, 1]");
  }
  if (!(link.rx.sigma_chip > 0)) throw ParameterError("chip noise standard deviation must be positive");
  const double hit = chip_hit_probability(link.code_length, link.code_weight) * link.code_weight;
  if (hit > 1.0) throw ParameterError("chip-collision model needs W^2 <= 2F");
}

RelayBerResult downlink_ber(const RelayLink& link, const RelayBerOptions& opt) {
  if (!ooc::synchronous_mai_free_condition(link.users(), link.code_length, link.code_weight)) {
    throw ParameterError("synchronous downlink requires M < F/W^2 + 1");
  }
  const auto dist = log_survival_distribution(link, 0, link.chain.hop_loss.size(), opt.quadrature_nodes);
  const int w = link.code_weight;
  RelayBerResult out;
  for (std::size_t a = 0; a < dist.value.size(); ++a) {
    const double e2e = -std::expm1(dist.value[a]);  // per-chip end-to-end error, OFF and ON alike
    out.p10 += dist.prob[a] * std::pow(e2e, w);
    out.p01 += dist.prob[a] * -std::expm1(w * dist.value[a]);
  }
  out.ber = 0.5 * (out.p10 + out.p01);
  return out;
}

struct HitExpectation {
  Eigen::VectorXd off;  // E[Q(k (h11 L11/2 - beta))] per h11 node
  Eigen::VectorXd on;   // E[Q(k (h11 L11/2 + beta))] per h11 node
};

RelayBerResult uplink_ber(const RelayLink& link, const RelayBerOptions& opt) {
  const int w = link.code_weight;
  const int n_int = static_cast<int>(link.interferers.size());
  if (n_int > 62) throw ParameterError("at most 62 interferers are supported");
  const double k = link.rx.chip_snr_scale();
  const double l11 = link.chain.hop_loss[0];
  const auto first_hop = lognormal_nodes(link.chain.hop_sigma_x_sq[0], opt.quadrature_nodes);
  const Eigen::Index n11 = first_hop.values.size();
  const auto later = log_survival_distribution(link, 1, link.chain.hop_loss.size(), opt.quadrature_nodes);

  // Chip patterns: every interferer misses or hits exactly one mark chip.
  // Patterns are keyed by the multiset of per-chip interferer sets, since the
  // bit error expressions are symmetric in the chip order.
  const double p_chip = chip_hit_probability(link.code_length, w);
  const double p_miss = 1.0 - w * p_chip;
  const double prune = opt.pattern_tolerance * 1e-4;
  std::map<std::vector<std::uint64_t>, double> patterns;
  std::vector<std::uint64_t> masks(static_cast<std::size_t>(w), 0);
  double covered = 0.0;
  std::function<void(int, double)> enumerate = [&](int n, double prob) {
    if (prob < prune) return;
    if (n == n_int) {
      auto key = masks;
      std::sort(key.begin(), key.end());
      patterns[key] += prob;
      covered += prob;
      return;
    }
    enumerate(n + 1, prob * p_miss);
    for (int q = 0; q < w; ++q) {
      masks[static_cast<std::size_t>(q)] |= (1ULL << n);
      enumerate(n + 1, prob * p_chip);
      masks[static_cast<std::size_t>(q)] &= ~(1ULL << n);
    }
  };
  enumerate(0, 1.0);

  std::map<std::uint64_t, HitExpectation> cache;
  auto expectation = [&](std::uint64_t mask) -> const HitExpectation& {
    auto it = cache.find(mask);
    if (it != cache.end()) return it->second;
    WeightedPoints beta{{0.0}, {1.0}};
    const int hits = std::popcount(mask);
    if (hits <= opt.max_quadrature_hits) {
      for (int n = 0; n < n_int; ++n) {
        if (!(mask & (1ULL << n))) continue;
        const auto& intf = link.interferers[static_cast<std::size_t>(n)];
        const auto fading = lognormal_nodes(intf.sigma_x_sq, opt.interferer_nodes);
        WeightedPoints next;
        for (std::size_t a = 0; a < beta.value.size(); ++a) {
          for (Eigen::Index b = 0; b < fading.values.size(); ++b) {
            next.value.push_back(beta.value[a] + intf.loss * fading.values(b));
            next.prob.push_back(beta.prob[a] * fading.probabilities(b));
          }
        }
        beta = std::move(next);
      }
    } else {
      Rng rng = make_stream(opt.seed, mask);
      const double share = 1.0 / opt.interference_mc_samples;
      beta.value.assign(static_cast<std::size_t>(opt.interference_mc_samples), 0.0);
      beta.prob.assign(beta.value.size(), share);
      for (auto& v : beta.value) {
        for (int n = 0; n < n_int; ++n) {
          if (!(mask & (1ULL << n))) continue;
          const auto& intf = link.interferers[static_cast<std::size_t>(n)];
          double h = 1.0;
          if (intf.sigma_x_sq > 0) {
            std::normal_distribution<double> gauss(-intf.sigma_x_sq, std::sqrt(intf.sigma_x_sq));
            h = std::exp(2.0 * gauss(rng));
          }
          v += intf.loss * h;
        }
      }
    }
    HitExpectation e{Eigen::VectorXd::Zero(n11), Eigen::VectorXd::Zero(n11)};
    for (Eigen::Index a = 0; a < n11; ++a) {
      const double half = 0.5 * first_hop.values(a) * l11;
      for (std::size_t b = 0; b < beta.value.size(); ++b) {
        e.off(a) += beta.prob[b] * gaussian_q(k * (half - beta.value[b]));
        e.on(a) += beta.prob[b] * gaussian_q(k * (half + beta.value[b]));
      }
    }
    return cache.emplace(mask, std::move(e)).first->second;
  };

  RelayBerResult out;
  std::vector<const HitExpectation*> chip(static_cast<std::size_t>(w));
  for (const auto& [key, p_pattern] : patterns) {
    for (int q = 0; q < w; ++q) chip[static_cast<std::size_t>(q)] = &expectation(key[static_cast<std::size_t>(q)]);
    for (Eigen::Index a = 0; a < n11; ++a) {
      const double pa = p_pattern * first_hop.probabilities(a);
      double log_on_ok = 0.0;
      for (int q = 0; q < w; ++q) log_on_ok += std::log1p(-chip[static_cast<std::size_t>(q)]->on(a));
      double p10 = 0.0, p01 = 0.0;
      for (std::size_t b = 0; b < later.value.size(); ++b) {
        const double keep = std::exp(later.value[b]);
        const double flip = -std::expm1(later.value[b]);
        double off = 1.0;
        for (int q = 0; q < w; ++q) off *= flip + keep * chip[static_cast<std::size_t>(q)]->off(a);
        p10 += later.prob[b] * off;
        p01 += later.prob[b] * -std::expm1(w * later.value[b] + log_on_ok);
      }
      out.p10 += pa * p10;
      out.p01 += pa * p01;
    }
  }
  out.uncovered_mass = std::max(0.0, 1.0 - covered);
  out.accuracy_warning = out.uncovered_mass > opt.pattern_tolerance;
  out.ber = 0.5 * (out.p10 + out.p01);
  return out;
}

}  // namespace

RelayBerResult average_ber_relay(const RelayLink& link, LinkDirection direction, const RelayBerOptions& options) {
  validate_link(link);
  if (options.quadrature_nodes < 1 || options.interferer_nodes < 1) throw ParameterError("quadrature order must be >= 1");
  return direction == LinkDirection::kDownlink ? downlink_ber(link, options) : uplink_ber(link, options);
}

}  // namespace uwoc::ber
