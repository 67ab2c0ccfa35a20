#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

#include "uwoc/error.hpp"
#include "uwoc/ooc.hpp"
#include "uwoc/parallel.hpp"
#include "uwoc/scenario.hpp"
#include "uwoc/special.hpp"

namespace uwoc::scenario {

namespace {

void require_valid(const Scenario& s, Kind kind) {
  if (s.kind != kind) throw ParameterError("scenario kind is " + to_string(s.kind) + ", expected " + to_string(kind));
  const auto diagnostics = validate(s);
  if (!diagnostics.empty()) throw ParameterError("invalid scenario: " + diagnostics.front());
}

ber::LinkDirection parse_direction(const std::string& d) {
  return d == "uplink" ? ber::LinkDirection::kUplink : ber::LinkDirection::kDownlink;
}

}  // namespace

ber::RelayLink relay_link(const Scenario& s, int relays, ber::LinkDirection direction, double power_dbm) {
  const auto& r = s.relay;
  auto fading = [&](double d) { return r.rytov_scaling ? channel::scale_logvar(r.sigma_x_sq, r.reference_range, d) : r.sigma_x_sq; };
  auto loss = [&](double d) { return channel::aggregated_loss(s.water, s.geometry, d); };
  ber::RelayLink link;
  link.code_length = s.code_length;
  link.code_weight = s.code_weight;
  link.chain = ber::RelayChain::equidistant(relays, r.range, loss, fading);
  const double tc = 1.0 / (s.bit_rate * s.code_length);
  const double pc = ber::chip_power_from_average(dbm_to_watt(power_dbm), s.code_length, s.code_weight);
  link.rx = ber::ReceiverModel::from_noise_psd(s.receiver.responsivity(), s.receiver.noise_psd(), pc, tc, s.code_length);

  const double hop = r.range / (relays + 1);
  for (int n = 0; n + 1 < s.users; ++n) {
    ber::Interferer intf{link.chain.hop_loss[0], link.chain.hop_sigma_x_sq[0]};
    if (direction == ber::LinkDirection::kUplink && r.placement == InterfererPlacement::kArc) {
      // Sensor at (range, 0), OBTS at the origin, first relay on the axis.
      const double bearing = r.interferer_bearings_deg[static_cast<std::size_t>(n)] * std::numbers::pi / 180.0;
      const double dx = r.range * std::cos(bearing) - (r.range - hop);
      const double dy = r.range * std::sin(bearing);
      const double d = std::hypot(dx, dy);
      intf = {loss(d), fading(d)};
    }
    link.interferers.push_back(intf);
  }
  return link;
}

std::vector<BerSweepRow> run_fig4(const Scenario& s, unsigned workers) {
  require_valid(s, Kind::kRelayBer);
  const auto& r = s.relay;
  const auto powers = r.sweep.points();
  const auto family = ooc::generate_family(s.code_length, s.code_weight, s.max_correlation, s.users, s.seed);
  if (static_cast<int>(family.size()) < s.users) {
    throw InfeasibleError("code search found " + std::to_string(family.size()) + " codes for " +
                          std::to_string(s.users) + " users");
  }
  std::vector<BerSweepRow> rows;
  for (const auto& dir : r.directions) {
    for (int n : r.relays) {
      for (double p : powers) rows.push_back({p, dir, n, 0.0, std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN(), false});
    }
  }
  ber::RelayBerOptions opt;
  opt.quadrature_nodes = r.quadrature_nodes;
  opt.seed = s.seed;
  parallel_for(rows.size(), workers, [&](std::size_t i) {
    auto& row = rows[i];
    const auto direction = parse_direction(row.direction);
    const auto link = relay_link(s, row.relays, direction, row.power_dbm);
    const auto a = ber::average_ber_relay(link, direction, opt);
    row.ber_analytic = a.ber;
    row.accuracy_warning = a.accuracy_warning;
    if (r.mc_bits > 0 && a.ber >= r.mc_min_ber) {
      const auto mc = ber::monte_carlo_ber(link, family, direction, r.mc_bits, stream_seed(s.seed, i));
      row.ber_mc = mc.estimate;
      row.mc_stderr = mc.std_error;
    }
  });
  return rows;
}

std::vector<locate::LocalizationTrial> run_fig5(const Scenario& s, unsigned workers) {
  require_valid(s, Kind::kLocalization);
  return locate::run_localization_trials(localization_config(s), s.localization.trials, s.seed, workers);
}

locate::LocalizationConfig localization_config(const Scenario& s) {
  const auto& l = s.localization;
  locate::LocalizationConfig c;
  c.cell_radius = l.cell_radius;
  c.sigma_x_sq = l.sigma_x_sq;
  c.rss_samples = l.rss_samples;
  c.degree = l.degree;
  c.calibration_points = l.calibration_points;
  c.anchor_counts = l.anchor_counts;
  c.methods = l.methods;
  c.tdoa_jitter = l.tdoa_jitter;
  c.model.responsivity = s.receiver.responsivity();
  c.model.power = dbm_to_watt(l.power_dbm);
  c.model.sample_time = l.sample_time;
  c.model.noise_sigma = std::sqrt(s.receiver.noise_psd() * l.sample_time);
  c.model.water = s.water;
  c.model.geometry = s.geometry;
  return c;
}

channel::ImpulseResponse mimo_impulse_response(const Scenario& s, unsigned workers) {
  channel::LinkGeometry g = s.geometry;
  g.range = s.mimo.range;
  channel::PhotonTransportOptions opt;
  opt.bin_width = s.mimo.bin_width;
  opt.time_window = s.mimo.time_window;
  opt.workers = workers;
  return channel::simulate_impulse_response(s.water, g, s.mimo.photons, s.seed, opt);
}

ber::MimoConfig mimo_config(const Scenario& s, const channel::ImpulseResponse& h0, int nt, double sigma_x_sq,
                            double power_dbm) {
  const double tb = 1.0 / s.bit_rate;
  // Total average power split over the transmitters; OOK peak is twice the average.
  const channel::RectPulse pulse{tb, 2.0 * dbm_to_watt(power_dbm) / nt};
  const int memory = channel::channel_memory(pulse, h0, tb, s.mimo.isi_tolerance);
  const auto isi = channel::isi_integrals(pulse, h0, tb, memory, s.receiver.responsivity());
  ber::MimoConfig cfg;
  cfg.nt = nt;
  cfg.nr = s.mimo.receivers;
  cfg.sigma_bit = std::sqrt(s.receiver.noise_psd() * tb);
  for (int i = 0; i < nt * cfg.nr; ++i) cfg.paths.push_back({sigma_x_sq, isi.gamma_s, isi.gamma_k});
  return cfg;
}

std::vector<MimoSweepRow> run_fig7(const Scenario& s, unsigned workers) {
  require_valid(s, Kind::kMimoBer);
  const auto h0 = mimo_impulse_response(s, workers);
  if (h0.empty_warning) throw InfeasibleError("photon transport captured no photons");
  std::vector<MimoSweepRow> rows;
  for (double v : s.mimo.sigma_x_sq) {
    for (int nt : s.mimo.transmitters) {
      for (double p : s.mimo.sweep.points()) rows.push_back({p, nt, s.mimo.receivers, v, 0.0, 0.0, false});
    }
  }
  ber::MimoBerOptions opt;
  opt.quadrature_nodes = s.mimo.quadrature_nodes;
  opt.seed = s.seed;
  parallel_for(rows.size(), workers, [&](std::size_t i) {
    auto& row = rows[i];
    const auto cfg = mimo_config(s, h0, row.nt, row.sigma_x_sq, row.power_dbm);
    const auto res = ber::mimo_average_ber(cfg, opt);
    row.ber = res.ber;
    row.std_error = res.std_error;
    row.monte_carlo = res.monte_carlo;
  });
  return rows;
}

power::DownlinkBudget downlink_budget(const Scenario& s) {
  power::DownlinkBudget b;
  b.water = s.water;
  b.geometry = s.geometry;
  b.cell_radius = s.power_control.cell_radius;
  b.edge_sigma_x_sq = s.power_control.edge_sigma_x_sq;
  b.code_length = s.code_length;
  b.code_weight = s.code_weight;
  b.bit_rate = s.bit_rate;
  b.responsivity = s.receiver.responsivity();
  b.noise_psd = s.receiver.noise_psd();
  b.quadrature_nodes = s.power_control.quadrature_nodes;
  b.cap_dbm = s.power_control.cap_dbm;
  return b;
}

std::vector<power::Fig9Row> run_fig9(const Scenario& s, unsigned workers) {
  require_valid(s, Kind::kPowerControl);
  const auto& p = s.power_control;
  const auto budget = downlink_budget(s);
  std::vector<power::Fig9Row> rows;
  for (double t : p.target_ber) {
    for (int n : p.rings) rows.push_back({t, n, 0.0});
  }
  parallel_for(rows.size(), workers, [&](std::size_t i) {
    auto& row = rows[i];
    const auto bounds = p.boundaries == "optimized" ? power::optimized_boundaries(row.rings, row.target_ber, budget, p.grid)
                                                    : power::equal_area_boundaries(row.rings, p.cell_radius);
    const auto plan = power::allocate_ring_powers(row.target_ber, bounds, budget);
    row.avg_power_dbm = watt_to_dbm(power::average_power_per_bit(plan));
  });
  return rows;
}

void write_ber_csv(std::ostream& os, const std::vector<BerSweepRow>& rows) {
  os << "power_dbm,direction,n_relays,ber_analytic,ber_mc,mc_stderr\n";
  const auto precision = os.precision(10);
  for (const auto& r : rows) {
    os << r.power_dbm << ',' << r.direction << ',' << r.relays << ',' << r.ber_analytic << ',' << r.ber_mc << ','
       << r.mc_stderr << '\n';
  }
  os.precision(precision);
}

void write_mimo_csv(std::ostream& os, const std::vector<MimoSweepRow>& rows) {
  os << "power_dbm,n_tx,n_rx,sigma_x_sq,ber,std_error\n";
  const auto precision = os.precision(10);
  for (const auto& r : rows) {
    os << r.power_dbm << ',' << r.nt << ',' << r.nr << ',' << r.sigma_x_sq << ',' << r.ber << ',' << r.std_error << '\n';
  }
  os.precision(precision);
}

void run(const Scenario& s, std::ostream& out, unsigned workers) {
  switch (s.kind) {
    case Kind::kRelayBer: write_ber_csv(out, run_fig4(s, workers)); break;
    case Kind::kLocalization: locate::write_trials_csv(out, run_fig5(s, workers)); break;
    case Kind::kMimoBer: write_mimo_csv(out, run_fig7(s, workers)); break;
    case Kind::kPowerControl: power::write_fig9_csv(out, run_fig9(s, workers)); break;
  }
}

}  // namespace uwoc::scenario
