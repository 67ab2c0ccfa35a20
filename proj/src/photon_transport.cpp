#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "uwoc/channel.hpp"
#include "uwoc/error.hpp"
#include "uwoc/parallel.hpp"
#include "uwoc/special.hpp"

namespace uwoc::channel {

double sample_henyey_greenstein(double g, double u) {
  if (std::abs(g) < 1e-9) return 2.0 * u - 1.0;
  const double frac = (1.0 - g * g) / (1.0 - g + 2.0 * g * u);
  const double mu = (1.0 + g * g - frac * frac) / (2.0 * g);
  return std::clamp(mu, -1.0, 1.0);
}

namespace {

struct Direction {
  double x, y, z;
};

Direction deflect(const Direction& d, double cos_theta, double phi) {
  const double sin_theta = std::sqrt(std::max(0.0, 1.0 - cos_theta * cos_theta));
  const double cos_phi = std::cos(phi);
  const double sin_phi = std::sin(phi);
  if (std::abs(d.z) > 0.99999) {
    return {sin_theta * cos_phi, sin_theta * sin_phi, std::copysign(cos_theta, d.z)};
  }
  const double tmp = std::sqrt(1.0 - d.z * d.z);
  Direction out{sin_theta * (d.x * d.z * cos_phi - d.y * sin_phi) / tmp + d.x * cos_theta,
                sin_theta * (d.y * d.z * cos_phi + d.x * sin_phi) / tmp + d.y * cos_theta,
                -sin_theta * cos_phi * tmp + d.z * cos_theta};
  const double norm = std::sqrt(out.x * out.x + out.y * out.y + out.z * out.z);
  return {out.x / norm, out.y / norm, out.z / norm};
}

struct BlockTally {
  std::vector<double> histogram;
  double weight_sq_sum = 0.0;
  long long captured = 0;
};

}  // namespace

ImpulseResponse simulate_impulse_response(const WaterType& water, const LinkGeometry& geom, long long n_photons,
                                          std::uint64_t seed, const PhotonTransportOptions& opt) {
  if (n_photons < 1) throw ParameterError("n_photons must be >= 1");
  if (!(geom.range > 0) || !(geom.aperture_diameter > 0)) throw ParameterError("link range and aperture must be positive");
  if (!(opt.bin_width > 0) || !(opt.time_window > 0)) throw ParameterError("bin width and time window must be positive");
  if (opt.block_size < 1) throw ParameterError("block size must be positive");

  const double v = physics::kSpeedInWater;
  const double c = water.extinction();
  const double albedo = water.albedo();
  const double length = geom.range;
  const double t0 = length / v;
  const double radius = 0.5 * geom.aperture_diameter;
  const double cos_fov = std::cos(0.5 * geom.field_of_view);
  const double cos_div = std::cos(0.5 * geom.beam_divergence);
  const auto n_bins = static_cast<std::size_t>(std::ceil(opt.time_window / opt.bin_width));
  const double max_path = (t0 + opt.time_window) * v;

  const long long n_blocks = (n_photons + opt.block_size - 1) / opt.block_size;
  std::vector<BlockTally> tallies(static_cast<std::size_t>(n_blocks));

  parallel_for(static_cast<std::size_t>(n_blocks), opt.workers, [&](std::size_t block) {
    BlockTally& tally = tallies[block];
    tally.histogram.assign(n_bins, 0.0);
    Rng rng = make_stream(seed, block);
    const long long first = static_cast<long long>(block) * opt.block_size;
    const long long count = std::min(opt.block_size, n_photons - first);

    for (long long p = 0; p < count; ++p) {
      const double cos0 = 1.0 - uniform01(rng) * (1.0 - cos_div);
      const double phi0 = 2.0 * std::numbers::pi * uniform01(rng);
      const double sin0 = std::sqrt(std::max(0.0, 1.0 - cos0 * cos0));
      Direction dir{sin0 * std::cos(phi0), sin0 * std::sin(phi0), cos0};
      double x = 0, y = 0, z = 0, path = 0, weight = 1.0;

      for (;;) {
        const double step = c > 0 ? -std::log(uniform_open0(rng)) / c : std::numeric_limits<double>::infinity();
        if (dir.z > 0 && z + step * dir.z >= length) {
          const double to_plane = (length - z) / dir.z;
          x += to_plane * dir.x;
          y += to_plane * dir.y;
          path += to_plane;
          if (std::hypot(x, y) <= radius && dir.z >= cos_fov && path <= max_path) {
            const double delay = std::max(0.0, path / v - t0);
            const auto bin = static_cast<std::size_t>(delay / opt.bin_width);
            if (bin < n_bins) {
              tally.histogram[bin] += weight;
              tally.weight_sq_sum += weight * weight;
              ++tally.captured;
            }
          }
          break;
        }
        x += step * dir.x;
        y += step * dir.y;
        z += step * dir.z;
        path += step;
        if (path > max_path) break;
        weight *= albedo;
        if (weight <= 0) break;
        if (weight < opt.roulette_threshold) {
          if (uniform01(rng) * opt.roulette_boost > 1.0) break;
          weight *= opt.roulette_boost;
        }
        const double mu = sample_henyey_greenstein(opt.asymmetry, uniform01(rng));
        dir = deflect(dir, mu, 2.0 * std::numbers::pi * uniform01(rng));
      }
    }
  });

  ImpulseResponse out;
  out.t0 = t0;
  out.bin_width = opt.bin_width;
  out.weights = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_bins));
  out.photons_launched = n_photons;
  for (const auto& tally : tallies) {
    for (std::size_t k = 0; k < n_bins; ++k) out.weights(static_cast<Eigen::Index>(k)) += tally.histogram[k];
    out.weight_sq_sum += tally.weight_sq_sum;
    out.photons_captured += tally.captured;
  }
  out.weights /= static_cast<double>(n_photons);
  out.empty_warning = out.photons_captured == 0;
  return out;
}

}  // namespace uwoc::channel
