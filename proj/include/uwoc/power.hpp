#pragma once

#include <Eigen/Dense>

#include <functional>
#include <iosfwd>
#include <vector>

#include "uwoc/ber.hpp"
#include "uwoc/channel.hpp"

namespace uwoc::power {

/// N_S equal angular sectors. Sector k covers bearings (k w, (k + 1) w] with
/// w = 2 pi / N_S, measured counter-clockwise from due east; bearing 0
/// belongs to sector 0.
struct SectorPlan {
  int sectors = 1;

  double width() const;
  /// Fraction of transmit elements that are active.
  double active_fraction() const { return 1.0 / sectors; }
};

/// Throws GeometryError when the MU coincides with the OBTS.
int sector_of(const Eigen::Vector2d& mu, const Eigen::Vector2d& obts, const SectorPlan& plan);

/// LED power drawn when only the serving sector is active.
double sector_transmit_power(double omnidirectional_power, const SectorPlan& plan);

/// Concentric rings 0 < r_1 < ... < r_NR = cell radius with per-ring powers.
struct RingPlan {
  std::vector<double> boundaries;  // m
  std::vector<double> powers;      // average transmitted power per bit, W

  int rings() const { return static_cast<int>(boundaries.size()); }
  double cell_radius() const { return boundaries.back(); }
  void validate() const;
};

/// Ring index in 1..N_R: the smallest i with distance <= r_i. Throws
/// GeometryError beyond the cell radius.
int ring_of(double distance, const RingPlan& plan);

std::vector<double> equal_area_boundaries(int rings, double cell_radius);

/// Downlink single-hop, MAI-free link budget of ring-based power control:
/// log-amplitude variance grows linearly from 0 at the OBTS to
/// `edge_sigma_x_sq` at the cell edge.
struct DownlinkBudget {
  channel::WaterType water = channel::water_type(channel::WaterLabel::kClearOcean);
  channel::LinkGeometry geometry;
  double cell_radius = 90.0;
  double edge_sigma_x_sq = 0.14;
  int code_length = 50;
  int code_weight = 3;
  double bit_rate = 2e6;
  double responsivity = 0.0;  // A/W
  double noise_psd = 0.0;     // two-sided, A^2/Hz
  int quadrature_nodes = 30;
  double floor_dbm = -60.0;
  double cap_dbm = 60.0;
  double resolution_db = 0.05;

  double sigma_x_sq(double distance) const;
  double ber(double distance, double power_dbm) const;
  /// Least power (dBm, within resolution_db, rounded up) with BER <= target
  /// at `distance`. Throws InfeasibleError above the cap.
  double required_power_dbm(double distance, double target_ber) const;
};

/// Minimal per-ring powers meeting the target at each ring's outer radius.
/// Throws InfeasibleError naming the first ring that exceeds the cap.
RingPlan allocate_ring_powers(double target_ber, const std::vector<double>& boundaries, const DownlinkBudget& budget);

/// Boundaries on a radial grid of `grid` points minimising the average power
/// per bit over uniformly distributed users (dynamic programming).
std::vector<double> optimized_boundaries(int rings, double target_ber, const DownlinkBudget& budget, int grid = 180);

/// Radial CDF of the user distance, G(r) = P(d <= r).
using RadialCdf = std::function<double(double)>;
RadialCdf uniform_disk(double cell_radius);

/// Expected allocated power over the users: sum_k P_k (G(r_k) - G(r_{k-1})).
double average_power_per_bit(const RingPlan& plan, const RadialCdf& users);
double average_power_per_bit(const RingPlan& plan);

struct Fig9Row {
  double target_ber = 0.0;
  int rings = 0;
  double avg_power_dbm = 0.0;
};

/// CSV: target_ber, n_rings, avg_power_per_bit_dbm.
void write_fig9_csv(std::ostream& os, const std::vector<Fig9Row>& rows);

}  // namespace uwoc::power
