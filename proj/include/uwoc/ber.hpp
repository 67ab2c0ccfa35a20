#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <vector>

#include "uwoc/ooc.hpp"

namespace uwoc::ber {

/// Photodetector and front-end noise. Noise standard deviations are those of
/// the integrated current (charge) over one chip and one bit respectively.
struct ReceiverModel {
  double responsivity = 0.0;  // R = eta q / (h f), A/W
  double sigma_chip = 0.0;    // sigma_Tc, A s
  double sigma_bit = 0.0;     // sigma_Tb, A s
  double chip_power = 0.0;    // Pc, W
  double chip_time = 0.0;     // Tc, s

  /// White current noise with two-sided PSD `noise_psd` (A^2/Hz) integrated
  /// over the chip and bit windows.
  static ReceiverModel from_noise_psd(double responsivity, double noise_psd, double chip_power, double chip_time,
                                      int chips_per_bit);

  double chip_amplitude() const { return responsivity * chip_power * chip_time; }
  /// R Pc Tc / sigma_Tc.
  double chip_snr_scale() const;
};

double responsivity(double quantum_efficiency, double wavelength_m);

/// Chip power such that the average transmitted power per OOK bit equals
/// `power_per_bit`: P_avg = Pc W / (2F).
double chip_power_from_average(double power_per_bit, int code_length, int code_weight);

/// Interference pattern on the W mark chips of the desired code.
struct InterferencePattern {
  std::vector<int> alpha;  // hits per mark chip
  int users = 1;           // M, concurrent users including the desired one

  int total() const;
  bool is_valid() const { return total() <= users - 1; }
};

/// First-hop chip error rate of the uplink, conditioned on the fading of the
/// desired user and the loss-weighted interference sum beta = sum L_n h_n on
/// this chip; threshold R Pc Tc h11 L11 / 2.
double cer_first_hop_uplink(int bit, double h11, double beta, const ReceiverModel& rx, double loss);

/// Chip error rate of a hop without multiple-access interference; the same
/// for OFF and ON chips.
double cer_mai_free(double h, const ReceiverModel& rx, double loss);

/// End-to-end chip error rate 1 - prod(1 - p_i) over the hops of a relay chain.
double e2e_cer(std::span<const double> hop_cers);

struct ConditionalBer {
  double p10 = 0.0;  // P(decide 1 | sent 0)
  double p01 = 0.0;  // P(decide 0 | sent 1)
  double average() const { return 0.5 * (p10 + p01); }
};

/// AND-rule bit errors from per-mark-chip end-to-end chip error rates:
/// P(1|0) = prod_q P_off(q), P(0|1) = 1 - prod_q (1 - P_on(q)).
ConditionalBer conditional_ber(std::span<const double> cer_off, std::span<const double> cer_on);

struct RelayChain {
  std::vector<double> hop_loss;          // L^(i), i = 1..N+1
  std::vector<double> hop_sigma_x_sq;    // per-hop log-amplitude variance

  int relays() const { return static_cast<int>(hop_loss.size()) - 1; }
  /// N equidistant relays over a total range; per-hop loss and fading from
  /// callables of the hop length.
  template <typename LossFn, typename FadingFn>
  static RelayChain equidistant(int relays, double total_range, LossFn&& loss, FadingFn&& fading) {
    RelayChain c;
    const double hop = total_range / (relays + 1);
    for (int i = 0; i <= relays; ++i) {
      c.hop_loss.push_back(loss(hop));
      c.hop_sigma_x_sq.push_back(fading(hop));
    }
    return c;
  }
};

/// An interfering user as seen by the first relay (uplink).
struct Interferer {
  double loss = 1.0;
  double sigma_x_sq = 0.0;
};

struct RelayLink {
  ReceiverModel rx;
  int code_length = 0;  // F
  int code_weight = 0;  // W
  RelayChain chain;
  std::vector<Interferer> interferers;  // M - 1 other users

  int users() const { return static_cast<int>(interferers.size()) + 1; }
};

enum class LinkDirection { kUplink, kDownlink };

struct RelayBerOptions {
  int quadrature_nodes = 30;        // per desired-link fading variable
  int interferer_nodes = 20;        // per interferer fading variable
  int max_quadrature_hits = 3;      // larger chip hit sets are averaged by Monte Carlo
  int interference_mc_samples = 20000;
  double pattern_tolerance = 1e-9;  // allowed uncovered pattern probability
  std::uint64_t seed = 1;
};

struct RelayBerResult {
  double ber = 0.0;
  double p10 = 0.0;
  double p01 = 0.0;
  double uncovered_mass = 0.0;
  bool accuracy_warning = false;
};

/// Per-chip hit probabilities of the asynchronous chip-collision model: each
/// interferer is active with probability 1/2 and hits mark chip q with
/// probability W / (2F), at most one chip per interferer.
double chip_hit_probability(int code_length, int code_weight);

/// Average BER of a chip detect-and-forward relay chain, averaging over
/// per-hop log-normal fading (Gauss-Hermite) and interference patterns.
/// Downlink links must satisfy M < F/W^2 + 1 (synchronous MAI-free).
RelayBerResult average_ber_relay(const RelayLink& link, LinkDirection direction, const RelayBerOptions& options = {});

struct MonteCarloOptions {
  long long bits_per_block = 1 << 16;
  unsigned workers = 1;
};

struct MonteCarloResult {
  double estimate = 0.0;
  double std_error = 0.0;
  long long errors = 0;
  long long bits = 0;
};

/// Chip-level end-to-end simulation of the relay chain: OOC spreading with the
/// given family (code 0 is the desired user, codes 1..M-1 interfere), uniform
/// random chip offsets and data of asynchronous uplink interferers,
/// synchronous downlink superposition, per-bit fading draws, Gaussian noise,
/// hard chip decisions at every relay and the AND rule at the destination.
MonteCarloResult monte_carlo_ber(const RelayLink& link, const ooc::OocFamily& family, LinkDirection direction,
                                 long long n_bits, std::uint64_t seed, const MonteCarloOptions& options = {});

/// One transmitter/receiver path of a MIMO link.
struct MimoPath {
  double sigma_x_sq = 0.0;
  double gamma_s = 0.0;             // R * integral of Gamma over the current bit
  std::vector<double> gamma_k;      // gamma_k[m-1] is the m-th preceding bit's contribution
};

struct MimoConfig {
  int nt = 1;
  int nr = 1;
  std::vector<MimoPath> paths;  // row-major, index i * nr + j
  double sigma_bit = 0.0;       // sigma_Tb per receiver

  const MimoPath& path(int i, int j) const { return paths[static_cast<std::size_t>(i * nr + j)]; }
  int memory() const;  // L_max
  void validate() const;
};

/// Conditional BER of an equal-gain-combining MIMO receiver for current bit
/// b0, fading matrix H (nt x nr) and preceding bits b[m-1] = b_{-m}.
double mimo_conditional_ber(const MimoConfig& cfg, int b0, const Eigen::MatrixXd& fading, std::span<const int> previous_bits);

struct MimoBerOptions {
  int quadrature_nodes = 30;
  long long budget = 50'000'000;    // product-grid evaluations before falling back to Monte Carlo
  long long mc_samples = 400'000;
  std::uint64_t seed = 1;
};

struct MimoBerResult {
  double ber = 0.0;
  double std_error = 0.0;  // zero for quadrature results
  bool monte_carlo = false;
};

/// Average over all 2^L_max preceding-bit sequences and over the fading
/// vector by an (nt * nr)-dimensional Gauss-Hermite product rule.
MimoBerResult mimo_average_ber(const MimoConfig& cfg, const MimoBerOptions& options = {});

/// ISI-free average: E_H Q(sum h gamma_s / (2 sqrt(nr) sigma_Tb)).
MimoBerResult mimo_average_ber_isi_free(const MimoConfig& cfg, const MimoBerOptions& options = {});

}  // namespace uwoc::ber
