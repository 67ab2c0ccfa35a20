#include <algorithm>
#include <cmath>
#include <random>

#include "uwoc/ber.hpp"
#include "uwoc/error.hpp"
#include "uwoc/parallel.hpp"
#include "uwoc/rng.hpp"

namespace uwoc::ber {

namespace {

double draw_fading(Rng& rng, double sigma_x_sq) {
  if (sigma_x_sq <= 0) return 1.0;
  std::normal_distribution<double> gauss(-sigma_x_sq, std::sqrt(sigma_x_sq));
  return std::exp(2.0 * gauss(rng));
}

// hit[(n * F + tau) * W + q]: -1 when interferer n at chip offset tau leaves
// mark q of the desired code dark, otherwise 0 (previous bit) or 1 (current).
std::vector<std::int8_t> hit_table(const ooc::OocFamily& family, int interferers) {
  const int f = family.length;
  const int w = family.weight;
  const auto& desired = family.codes[0].marks;
  std::vector<std::int8_t> table(static_cast<std::size_t>(interferers) * f * w, -1);
  for (int n = 0; n < interferers; ++n) {
    const auto pattern = family.codes[static_cast<std::size_t>(n + 1)].pattern();
    for (int tau = 0; tau < f; ++tau) {
      for (int q = 0; q < w; ++q) {
        const int p = desired[static_cast<std::size_t>(q)];
        if (pattern[static_cast<std::size_t>(((p - tau) % f + f) % f)]) {
          table[(static_cast<std::size_t>(n) * f + tau) * w + q] = p >= tau ? 1 : 0;
        }
      }
    }
  }
  return table;
}

}  // namespace

MonteCarloResult monte_carlo_ber(const RelayLink& link, const ooc::OocFamily& family, LinkDirection direction,
                                 long long n_bits, std::uint64_t seed, const MonteCarloOptions& options) {
  if (n_bits < 1 || options.bits_per_block < 1) throw ParameterError("bit counts must be positive");
  if (family.length != link.code_length || family.weight != link.code_weight) {
    throw ParameterError("code family does not match the link's (F, W)");
  }
  if (static_cast<int>(family.size()) < link.users()) throw ParameterError("code family smaller than the user count");
  if (link.chain.hop_loss.empty() || link.chain.hop_loss.size() != link.chain.hop_sigma_x_sq.size()) {
    throw ParameterError("relay chain needs matching per-hop loss and fading");
  }
  const int f = link.code_length;
  const int w = link.code_weight;
  const int n_int = link.users() - 1;
  const int hops = static_cast<int>(link.chain.hop_loss.size());
  const double noise = 1.0 / link.rx.chip_snr_scale();  // noise std in units of R Pc Tc
  const bool uplink = direction == LinkDirection::kUplink;

  std::vector<std::int8_t> table;
  std::vector<std::vector<std::uint8_t>> zero_offset;  // downlink: interferer chips on desired marks
  if (uplink) {
    table = hit_table(family, n_int);
  } else {
    for (int n = 0; n < n_int; ++n) {
      const auto pattern = family.codes[static_cast<std::size_t>(n + 1)].pattern();
      std::vector<std::uint8_t> on(static_cast<std::size_t>(w));
      for (int q = 0; q < w; ++q) on[static_cast<std::size_t>(q)] = pattern[static_cast<std::size_t>(family.codes[0].marks[static_cast<std::size_t>(q)])];
      zero_offset.push_back(std::move(on));
    }
  }

  const long long blocks = (n_bits + options.bits_per_block - 1) / options.bits_per_block;
  std::vector<long long> errors(static_cast<std::size_t>(blocks), 0);
  parallel_for(static_cast<std::size_t>(blocks), options.workers, [&](std::size_t b) {
    Rng rng = make_stream(seed, b);
    std::normal_distribution<double> gauss(0.0, noise);
    std::uniform_int_distribution<int> offset(0, f - 1);
    const long long begin = static_cast<long long>(b) * options.bits_per_block;
    const long long count = std::min(options.bits_per_block, n_bits - begin);
    std::vector<double> level(static_cast<std::size_t>(w));
    std::vector<std::uint8_t> chip(static_cast<std::size_t>(w));
    long long local = 0;
    for (long long i = 0; i < count; ++i) {
      const int bit = static_cast<int>(rng() & 1U);
      for (int q = 0; q < w; ++q) level[static_cast<std::size_t>(q)] = bit;
      double h_first = draw_fading(rng, link.chain.hop_sigma_x_sq[0]);
      const double l_first = link.chain.hop_loss[0];
      if (uplink) {
        for (int q = 0; q < w; ++q) level[static_cast<std::size_t>(q)] *= h_first * l_first;
        for (int n = 0; n < n_int; ++n) {
          const int tau = offset(rng);
          const std::uint64_t bits = rng();
          const int previous = static_cast<int>(bits & 1U);
          const int current = static_cast<int>((bits >> 1) & 1U);
          const auto& intf = link.interferers[static_cast<std::size_t>(n)];
          const double amp = intf.loss * draw_fading(rng, intf.sigma_x_sq);
          const std::int8_t* row = &table[(static_cast<std::size_t>(n) * f + tau) * w];
          for (int q = 0; q < w; ++q) {
            if (row[q] < 0) continue;
            if ((row[q] == 1 ? current : previous) != 0) level[static_cast<std::size_t>(q)] += amp;
          }
        }
      } else {
        for (int n = 0; n < n_int; ++n) {
          const int other = static_cast<int>(rng() & 1U);
          if (!other) continue;
          for (int q = 0; q < w; ++q) level[static_cast<std::size_t>(q)] += zero_offset[static_cast<std::size_t>(n)][static_cast<std::size_t>(q)];
        }
        for (int q = 0; q < w; ++q) level[static_cast<std::size_t>(q)] *= h_first * l_first;
      }
      const double threshold_first = 0.5 * h_first * l_first;
      for (int q = 0; q < w; ++q) {
        chip[static_cast<std::size_t>(q)] = level[static_cast<std::size_t>(q)] + gauss(rng) > threshold_first;
      }
      for (int hop = 1; hop < hops; ++hop) {
        const double gain = draw_fading(rng, link.chain.hop_sigma_x_sq[static_cast<std::size_t>(hop)]) *
                            link.chain.hop_loss[static_cast<std::size_t>(hop)];
        for (int q = 0; q < w; ++q) {
          auto& c = chip[static_cast<std::size_t>(q)];
          c = c * gain + gauss(rng) > 0.5 * gain;
        }
      }
      int decided = 1;
      for (int q = 0; q < w; ++q) decided &= chip[static_cast<std::size_t>(q)];
      local += decided != bit;
    }
    errors[b] = local;
  });

  MonteCarloResult out;
  out.bits = n_bits;
  for (long long e : errors) out.errors += e;
  out.estimate = static_cast<double>(out.errors) / static_cast<double>(n_bits);
  out.std_error = std::sqrt(out.estimate * (1.0 - out.estimate) / static_cast<double>(n_bits));
  return out;
}

}  // namespace uwoc::ber
