#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "uwoc/ber.hpp"
#include "uwoc/channel.hpp"
#include "uwoc/locate.hpp"
#include "uwoc/power.hpp"

namespace uwoc::scenario {

enum class Kind { kRelayBer, kLocalization, kMimoBer, kPowerControl };

Kind parse_kind(const std::string& name);
std::string to_string(Kind kind);

struct ReceiverParams {
  double quantum_efficiency = 0.8;
  double wavelength_nm = 532.0;
  double temperature = 290.0;       // K
  double load_resistance = 100.0;   // ohm

  double responsivity() const;
  /// Two-sided thermal-noise current PSD 2 k T / R_L, A^2/Hz.
  double noise_psd() const;
};

struct PowerSweep {
  double min_dbm = 0.0;
  double max_dbm = 0.0;
  double step_db = 1.0;

  std::vector<double> points() const;
};

/// Where the uplink interferers sit relative to the first relay.
enum class InterfererPlacement { kArc, kCoLocated };

struct RelayBerParams {
  double range = 90.0;                   // sensor to OBTS, m
  std::vector<int> relays{0, 1, 2};
  double sigma_x_sq = 0.17;              // at the reference range
  double reference_range = 90.0;
  bool rytov_scaling = true;             // scale sigma_x^2 with hop length
  std::vector<std::string> directions{"uplink", "downlink"};
  InterfererPlacement placement = InterfererPlacement::kArc;
  std::vector<double> interferer_bearings_deg{15.0, -15.0, 30.0, -30.0};
  PowerSweep sweep{0.0, 40.0, 2.0};
  long long mc_bits = 1'000'000;
  double mc_min_ber = 1e-4;              // Monte Carlo only where the analytic BER reaches this
  int quadrature_nodes = 30;
};

struct MimoParams {
  double range = 25.0;
  std::vector<int> transmitters{1, 2, 3};
  int receivers = 1;
  std::vector<double> sigma_x_sq{0.01, 0.16};
  long long photons = 1'000'000;
  double bin_width = 0.05e-9;
  double time_window = 20e-9;
  double isi_tolerance = 1e-3;
  PowerSweep sweep{-10.0, 30.0, 1.0};
  int quadrature_nodes = 30;
};

struct LocalizationParams {
  int trials = 1000;
  double cell_radius = 50.0;
  double sigma_x_sq = 0.1;
  int rss_samples = 100;
  int degree = 5;
  int calibration_points = 50;
  double sample_time = 1e-6;
  double power_dbm = 0.0;
  std::vector<int> anchor_counts{3, 4, 5, 6, 7};
  std::vector<std::string> methods{"rss-lls"};
  double tdoa_jitter = 1e-9;
};

struct PowerControlParams {
  double cell_radius = 90.0;
  double edge_sigma_x_sq = 0.14;
  std::vector<int> rings{1, 2, 3};
  std::vector<double> target_ber{1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8, 1e-9};
  std::string boundaries = "optimized";  // or "equal-area"
  int grid = 180;
  double cap_dbm = 60.0;
  int quadrature_nodes = 30;
};

struct Scenario {
  Kind kind = Kind::kRelayBer;
  std::string name;
  std::uint64_t seed = 1;
  channel::WaterType water = channel::water_type(channel::WaterLabel::kClearOcean);
  channel::LinkGeometry geometry;
  int code_length = 50;
  int code_weight = 3;
  int max_correlation = 1;
  int users = 5;
  double bit_rate = 2e6;
  std::optional<double> chip_time;  // must equal 1 / (Rb F) when given
  ReceiverParams receiver;
  RelayBerParams relay;
  MimoParams mimo;
  LocalizationParams localization;
  PowerControlParams power_control;
};

/// Built-in defaults for the four experiments: "fig4", "fig5",
/// "fig7", "fig9".
Scenario preset(const std::string& name);

/// JSON scenario. "preset" (or the kind's default preset) supplies values
/// that the file does not set. Throws ParameterError on malformed input.
Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::string& path);

/// Cross-constraint diagnostics; empty when the scenario is valid.
std::vector<std::string> validate(const Scenario& s);

struct BerSweepRow {
  double power_dbm = 0.0;
  std::string direction;
  int relays = 0;
  double ber_analytic = 0.0;
  double ber_mc = 0.0;     // NaN when not simulated
  double mc_stderr = 0.0;  // NaN when not simulated
  bool accuracy_warning = false;
};

struct MimoSweepRow {
  double power_dbm = 0.0;
  int nt = 1;
  int nr = 1;
  double sigma_x_sq = 0.0;
  double ber = 0.0;
  double std_error = 0.0;
  bool monte_carlo = false;
};

/// Relay chain of the relay-BER experiment for a given relay count.
ber::RelayLink relay_link(const Scenario& s, int relays, ber::LinkDirection direction, double power_dbm);

std::vector<BerSweepRow> run_fig4(const Scenario& s, unsigned workers = 1);
std::vector<locate::LocalizationTrial> run_fig5(const Scenario& s, unsigned workers = 1);
std::vector<MimoSweepRow> run_fig7(const Scenario& s, unsigned workers = 1);
std::vector<power::Fig9Row> run_fig9(const Scenario& s, unsigned workers = 1);

/// MIMO link of the mimo-ber experiment (ISI integrals from photon transport).
ber::MimoConfig mimo_config(const Scenario& s, const channel::ImpulseResponse& h0, int nt, double sigma_x_sq,
                            double power_dbm);
channel::ImpulseResponse mimo_impulse_response(const Scenario& s, unsigned workers = 1);
power::DownlinkBudget downlink_budget(const Scenario& s);
locate::LocalizationConfig localization_config(const Scenario& s);

void write_ber_csv(std::ostream& os, const std::vector<BerSweepRow>& rows);
void write_mimo_csv(std::ostream& os, const std::vector<MimoSweepRow>& rows);

/// Runs the scenario's experiment and writes its CSV.
void run(const Scenario& s, std::ostream& out, unsigned workers = 1);

}  // namespace uwoc::scenario
