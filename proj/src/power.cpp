#include "uwoc/power.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <string>

#include "uwoc/error.hpp"
#include "uwoc/special.hpp"

namespace uwoc::power {

double SectorPlan::width() const {
  if (sectors < 1) throw ParameterError("sector count must be >= 1");
  return 2.0 * std::numbers::pi / sectors;
}

int sector_of(const Eigen::Vector2d& mu, const Eigen::Vector2d& obts, const SectorPlan& plan) {
  const Eigen::Vector2d v = mu - obts;
  if (v.norm() == 0.0) throw GeometryError("bearing undefined: user coincides with the OBTS");
  double bearing = std::atan2(v.y(), v.x());
  if (bearing < 0) bearing += 2.0 * std::numbers::pi;
  const double w = plan.width();
  const double ratio = bearing / w;
  const double nearest = std::round(ratio);
  const double snapped = std::abs(ratio - nearest) < 1e-12 ? nearest : ratio;
  const int k = static_cast<int>(std::ceil(snapped)) - 1;
  return std::clamp(k, 0, plan.sectors - 1);
}

double sector_transmit_power(double omnidirectional_power, const SectorPlan& plan) {
  return omnidirectional_power * plan.active_fraction();
}

void RingPlan::validate() const {
  if (boundaries.empty()) throw ParameterError("ring plan needs at least one ring");
  double previous = 0.0;
  for (double r : boundaries) {
    if (!(r > previous)) throw ParameterError("ring boundaries must be strictly increasing and positive");
    previous = r;
  }
  if (!powers.empty()) {
    if (powers.size() != boundaries.size()) throw ParameterError("one power per ring is required");
    for (double p : powers) {
      if (!(p > 0)) throw ParameterError("ring powers must be positive");
    }
  }
}

int ring_of(double distance, const RingPlan& plan) {
  plan.validate();
  if (distance < 0) throw ParameterError("distance must be non-negative");
  if (distance > plan.cell_radius()) throw GeometryError("user outside the cell");
  const auto it = std::lower_bound(plan.boundaries.begin(), plan.boundaries.end(), distance);
  return static_cast<int>(it - plan.boundaries.begin()) + 1;
}

std::vector<double> equal_area_boundaries(int rings, double cell_radius) {
  if (rings < 1 || !(cell_radius > 0)) throw ParameterError("need rings >= 1 and a positive cell radius");
  std::vector<double> b;
  for (int k = 1; k <= rings; ++k) b.push_back(cell_radius * std::sqrt(static_cast<double>(k) / rings));
  b.back() = cell_radius;
  return b;
}

double DownlinkBudget::sigma_x_sq(double distance) const { return edge_sigma_x_sq * distance / cell_radius; }

double DownlinkBudget::ber(double distance, double power_dbm) const {
  ber::RelayLink link;
  link.code_length = code_length;
  link.code_weight = code_weight;
  const double tc = 1.0 / (bit_rate * code_length);
  const double pc = ber::chip_power_from_average(dbm_to_watt(power_dbm), code_length, code_weight);
  link.rx = ber::ReceiverModel::from_noise_psd(responsivity, noise_psd, pc, tc, code_length);
  link.chain.hop_loss = {channel::aggregated_loss(water, geometry, distance)};
  link.chain.hop_sigma_x_sq = {sigma_x_sq(distance)};
  ber::RelayBerOptions opt;
  opt.quadrature_nodes = quadrature_nodes;
  return ber::average_ber_relay(link, ber::LinkDirection::kDownlink, opt).ber;
}

double DownlinkBudget::required_power_dbm(double distance, double target_ber) const {
  if (!(target_ber > 0 && target_ber < 0.5)) throw ParameterError("target BER must lie in (0, 0.5)");
  double lo = floor_dbm, hi = cap_dbm;
  if (ber(distance, hi) > target_ber) {
    throw InfeasibleError("target BER not reachable within the power cap at " + std::to_string(distance) + " m");
  }
  if (ber(distance, lo) <= target_ber) return lo;
  while (hi - lo > resolution_db) {
    const double mid = 0.5 * (lo + hi);
    (ber(distance, mid) <= target_ber ? hi : lo) = mid;
  }
  return hi;
}

RingPlan allocate_ring_powers(double target_ber, const std::vector<double>& boundaries, const DownlinkBudget& budget) {
  RingPlan plan{boundaries, {}};
  plan.validate();
  double previous = 0.0;
  for (std::size_t k = 0; k < boundaries.size(); ++k) {
    double p;
    try {
      p = dbm_to_watt(budget.required_power_dbm(boundaries[k], target_ber));
    } catch (const InfeasibleError&) {
      throw InfeasibleError("ring " + std::to_string(k + 1) + " exceeds the power cap");
    }
    previous = std::max(previous, p);
    plan.powers.push_back(previous);
  }
  return plan;
}

std::vector<double> optimized_boundaries(int rings, double target_ber, const DownlinkBudget& budget, int grid) {
  if (rings < 1 || grid < rings) throw ParameterError("grid must hold at least one point per ring");
  const double r0 = budget.cell_radius;
  std::vector<double> radius(static_cast<std::size_t>(grid)), power(radius.size());
  for (int j = 0; j < grid; ++j) {
    radius[static_cast<std::size_t>(j)] = r0 * (j + 1) / grid;
    power[static_cast<std::size_t>(j)] = dbm_to_watt(budget.required_power_dbm(radius[static_cast<std::size_t>(j)], target_ber));
  }
  const double inf = std::numeric_limits<double>::infinity();
  // cost(k, j): least area-weighted power with k rings whose outermost ends at radius[j].
  Eigen::MatrixXd cost = Eigen::MatrixXd::Constant(rings + 1, grid, inf);
  Eigen::MatrixXi from = Eigen::MatrixXi::Constant(rings + 1, grid, -1);
  for (int j = 0; j < grid; ++j) cost(1, j) = power[static_cast<std::size_t>(j)] * std::pow(radius[static_cast<std::size_t>(j)] / r0, 2);
  for (int k = 2; k <= rings; ++k) {
    for (int j = k - 1; j < grid; ++j) {
      for (int i = k - 2; i < j; ++i) {
        const double c = cost(k - 1, i) + power[static_cast<std::size_t>(j)] *
                                              (std::pow(radius[static_cast<std::size_t>(j)] / r0, 2) -
                                               std::pow(radius[static_cast<std::size_t>(i)] / r0, 2));
        if (c < cost(k, j)) {
          cost(k, j) = c;
          from(k, j) = i;
        }
      }
    }
  }
  std::vector<double> b(static_cast<std::size_t>(rings));
  int j = grid - 1;
  for (int k = rings; k >= 1; --k) {
    b[static_cast<std::size_t>(k - 1)] = radius[static_cast<std::size_t>(j)];
    j = from(k, j);
  }
  b.back() = r0;
  return b;
}

RadialCdf uniform_disk(double cell_radius) {
  return [cell_radius](double r) { return std::clamp(r * r / (cell_radius * cell_radius), 0.0, 1.0); };
}

double average_power_per_bit(const RingPlan& plan, const RadialCdf& users) {
  plan.validate();
  if (plan.powers.empty()) throw ParameterError("ring plan has no powers allocated");
  double avg = 0.0, previous = 0.0;
  for (std::size_t k = 0; k < plan.boundaries.size(); ++k) {
    const double g = k + 1 == plan.boundaries.size() ? 1.0 : users(plan.boundaries[k]);
    avg += plan.powers[k] * (g - previous);
    previous = g;
  }
  return avg;
}

double average_power_per_bit(const RingPlan& plan) { return average_power_per_bit(plan, uniform_disk(plan.cell_radius())); }

void write_fig9_csv(std::ostream& os, const std::vector<Fig9Row>& rows) {
  os << "target_ber,n_rings,avg_power_per_bit_dbm\n";
  const auto precision = os.precision(10);
  for (const auto& r : rows) os << r.target_ber << ',' << r.rings << ',' << r.avg_power_dbm << '\n';
  os.precision(precision);
}

}  // namespace uwoc::power
