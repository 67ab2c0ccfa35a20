#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "uwoc/rng.hpp"

namespace uwoc::channel {

enum class WaterLabel { kPureSea, kClearOcean, kCoastal, kCustom };

/// Inherent optical properties of a water body, in 1/m.
struct WaterType {
  double absorption = 0.0;  // a
  double scattering = 0.0;  // b
  WaterLabel label = WaterLabel::kCustom;

  double extinction() const { return absorption + scattering; }  // c = a + b
  double albedo() const { return extinction() > 0 ? scattering / extinction() : 0.0; }
};

/// Standard (a, b) splits: pure sea (0.0405, 0.0025), clear ocean
/// (0.114, 0.037), coastal (0.179, 0.219).
WaterType water_type(WaterLabel label);
WaterType custom_water(double absorption, double scattering);
WaterLabel parse_water_label(const std::string& name);
std::string to_string(WaterLabel label);

struct LinkGeometry {
  double range = 0.0;                 // L, m
  double beam_divergence = 1e-3;      // full angle, rad
  double aperture_diameter = 0.2;     // D0, m
  double field_of_view = 0.7;         // full angle, rad
  double wavelength_nm = 532.0;       // label only
};

/// Beer's law extinction exp(-c L).
double beer_loss(double extinction, double range);

/// Fraction of a uniformly diverging beam that lands on the aperture,
/// min(1, (D0 / (theta d))^2).
double geometric_capture(const LinkGeometry& geom, double distance);

/// Aggregated deterministic loss used by the link budgets: Beer's law
/// times the geometric capture fraction.
double aggregated_loss(const WaterType& water, const LinkGeometry& geom, double distance);

/// Fading-free channel response binned in arrival time after t0 = L / v.
struct ImpulseResponse {
  double t0 = 0.0;                // s
  double bin_width = 0.0;         // s
  Eigen::VectorXd weights;        // received power fraction per bin
  long long photons_launched = 0;
  long long photons_captured = 0;
  double weight_sq_sum = 0.0;     // sum over launched photons of (captured weight)^2
  bool empty_warning = false;

  double total_weight() const { return weights.sum(); }
  /// Standard error of total_weight() as a per-photon sample mean.
  double standard_error() const;
  /// Bin center times relative to t0.
  Eigen::VectorXd bin_centers() const;
};

struct PhotonTransportOptions {
  double bin_width = 0.1e-9;       // s
  double time_window = 50e-9;      // s after t0; later arrivals are discarded
  double asymmetry = 0.924;        // Henyey-Greenstein g
  double roulette_threshold = 1e-6;
  double roulette_boost = 10.0;
  long long block_size = 8192;     // photons per RNG substream
  unsigned workers = 1;
};

/// Monte Carlo photon transport from a collimated source at the origin
/// (axis +z) to a receiver plane at z = L. Deterministic in `seed` and
/// independent of the worker count.
ImpulseResponse simulate_impulse_response(const WaterType& water, const LinkGeometry& geom, long long n_photons,
                                          std::uint64_t seed, const PhotonTransportOptions& options = {});

/// Samples cos(theta) from the Henyey-Greenstein phase function.
double sample_henyey_greenstein(double g, double u);

struct DoubleGammaParams {
  double c1 = 0.0;  // 1/s^2
  double c2 = 0.0;  // 1/s
  double c3 = 0.0;  // 1/s^2
  double c4 = 0.0;  // 1/s
  double t0 = 0.0;  // s
};

/// h0(t) = C1 dt exp(-C2 dt) + C3 dt exp(-C4 dt), dt = t - t0; zero before t0.
double eval_double_gamma(const DoubleGammaParams& p, double t);

struct DoubleGammaFit {
  DoubleGammaParams params;
  double residual = 0.0;           // sqrt(integral of (h0 - h_mc)^2 dt)
  double relative_residual = 0.0;  // residual / L2 norm of h_mc
  int iterations = 0;
  bool converged = false;
};

/// Nonlinear least-squares fit of the double-Gamma model to a binned
/// response. Internally works in units of the bin width.
DoubleGammaFit fit_double_gamma(const ImpulseResponse& response);

/// Log-normal turbulence fading h = exp(2x), x ~ N(mu_x, sigma_x^2), with
/// mu_x = -sigma_x^2 so that E[h] = 1.
class FadingModel {
 public:
  FadingModel() = default;
  explicit FadingModel(double sigma_x_sq);

  double sigma_x_sq() const { return sigma_x_sq_; }
  double mu_x() const { return -sigma_x_sq_; }

  /// Probability density of h (log-normal with the normalisation above).
  double pdf(double h) const;

 private:
  double sigma_x_sq_ = 0.0;
};

/// sigma_x^2 = ln(sigma_I^2 + 1) / 4.
double scintillation_to_logvar(double scintillation_index);
double logvar_to_scintillation(double sigma_x_sq);

/// Weak-turbulence scaling of the log-amplitude variance with path length,
/// sigma_x^2(d) = sigma_ref^2 (d / d_ref)^(11/6).
double scale_logvar(double sigma_ref_sq, double reference_distance, double distance);

double sample_fading(const FadingModel& model, Rng& rng);

/// Rectangular transmitted pulse of a given duration and peak power.
struct RectPulse {
  double duration = 0.0;  // s
  double power = 1.0;     // W
};

struct IsiIntegrals {
  double gamma_s = 0.0;         // R * integral of Gamma over [0, Tb)
  std::vector<double> gamma_k;  // index m-1 holds gamma_{-m}: window [m Tb, (m+1) Tb)
  double tail = 0.0;            // R * energy beyond the last window considered
  bool resampled = false;       // Tb is not an integer number of bins
};

/// Gamma(t) = pulse (*) h0 by discrete convolution, integrated over the
/// current bit window and `memory` preceding windows; times are measured
/// from t0.
IsiIntegrals isi_integrals(const RectPulse& pulse, const ImpulseResponse& h0, double bit_time, int memory,
                           double responsivity);

/// Smallest memory for which the energy beyond the last ISI window is at
/// most `tolerance` times gamma_s.
int channel_memory(const RectPulse& pulse, const ImpulseResponse& h0, double bit_time, double tolerance = 1e-3);

/// CSV: header "t0,dt" followed by their values, then one weight per line.
void write_impulse_response(std::ostream& os, const ImpulseResponse& h);
ImpulseResponse read_impulse_response(std::istream& is);
void write_fit_csv(std::ostream& os, const DoubleGammaFit& fit);

}  // namespace uwoc::channel
