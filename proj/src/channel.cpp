#include "uwoc/channel.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

#include "uwoc/error.hpp"

namespace uwoc::channel {

WaterType water_type(WaterLabel label) {
  switch (label) {
    case WaterLabel::kPureSea:
      return {0.0405, 0.0025, label};
    case WaterLabel::kClearOcean:
      return {0.114, 0.037, label};
    case WaterLabel::kCoastal:
      return {0.179, 0.219, label};
    case WaterLabel::kCustom:
      break;
  }
  throw ParameterError("custom water needs explicit absorption and scattering");
}

WaterType custom_water(double absorption, double scattering) {
  if (!(absorption >= 0) || !(scattering >= 0)) throw ParameterError("water coefficients must be non-negative");
  return {absorption, scattering, WaterLabel::kCustom};
}

WaterLabel parse_water_label(const std::string& name) {
  if (name == "pure-sea") return WaterLabel::kPureSea;
  if (name == "clear-ocean") return WaterLabel::kClearOcean;
  if (name == "coastal") return WaterLabel::kCoastal;
  if (name == "custom") return WaterLabel::kCustom;
  throw ParameterError("unknown water type '" + name + "'");
}

std::string to_string(WaterLabel label) {
  switch (label) {
    case WaterLabel::kPureSea:
      return "pure-sea";
    case WaterLabel::kClearOcean:
      return "clear-ocean";
    case WaterLabel::kCoastal:
      return "coastal";
    case WaterLabel::kCustom:
      return "custom";
  }
  return "custom";
}

double beer_loss(double extinction, double range) {
  if (extinction < 0 || range < 0) throw ParameterError("beer_loss needs c >= 0 and L >= 0");
  return std::exp(-extinction * range);
}

double geometric_capture(const LinkGeometry& geom, double distance) {
  if (geom.aperture_diameter <= 0) throw ParameterError("aperture diameter must be positive");
  if (distance <= 0 || geom.beam_divergence <= 0) return 1.0;
  const double ratio = geom.aperture_diameter / (geom.beam_divergence * distance);
  return std::min(1.0, ratio * ratio);
}

double aggregated_loss(const WaterType& water, const LinkGeometry& geom, double distance) {
  return beer_loss(water.extinction(), distance) * geometric_capture(geom, distance);
}

double ImpulseResponse::standard_error() const {
  if (photons_launched < 2) return 0.0;
  const double n = static_cast<double>(photons_launched);
  const double mean = total_weight();
  const double var = std::max(0.0, weight_sq_sum / n - mean * mean) * n / (n - 1.0);
  return std::sqrt(var / n);
}

Eigen::VectorXd ImpulseResponse::bin_centers() const {
  Eigen::VectorXd t(weights.size());
  for (Eigen::Index k = 0; k < t.size(); ++k) t(k) = (static_cast<double>(k) + 0.5) * bin_width;
  return t;
}

double eval_double_gamma(const DoubleGammaParams& p, double t) {
  const double dt = t - p.t0;
  if (dt < 0) return 0.0;
  return p.c1 * dt * std::exp(-p.c2 * dt) + p.c3 * dt * std::exp(-p.c4 * dt);
}

FadingModel::FadingModel(double sigma_x_sq) : sigma_x_sq_(sigma_x_sq) {
  if (!(sigma_x_sq >= 0)) throw ParameterError("log-amplitude variance must be non-negative");
}

double FadingModel::pdf(double h) const {
  if (h <= 0 || sigma_x_sq_ == 0) return 0.0;
  const double l = std::log(h) - 2.0 * mu_x();
  return std::exp(-l * l / (8.0 * sigma_x_sq_)) / (2.0 * h * std::sqrt(2.0 * std::numbers::pi * sigma_x_sq_));
}

double scintillation_to_logvar(double scintillation_index) {
  if (!(scintillation_index >= 0)) throw ParameterError("scintillation index must be non-negative");
  return 0.25 * std::log1p(scintillation_index);
}

double logvar_to_scintillation(double sigma_x_sq) { return std::expm1(4.0 * sigma_x_sq); }

double scale_logvar(double sigma_ref_sq, double reference_distance, double distance) {
  if (reference_distance <= 0 || distance < 0) throw ParameterError("distances must be positive");
  return sigma_ref_sq * std::pow(distance / reference_distance, 11.0 / 6.0);
}

double sample_fading(const FadingModel& model, Rng& rng) {
  if (model.sigma_x_sq() == 0) return 1.0;
  std::normal_distribution<double> gauss(model.mu_x(), std::sqrt(model.sigma_x_sq()));
  return std::exp(2.0 * gauss(rng));
}

namespace {

// Exact piecewise integrals of a binned density: H is the cumulative weight,
// G its running integral. Both are evaluated in continuous time.
class BinnedCumulative {
 public:
  BinnedCumulative(const Eigen::VectorXd& w, double dt) : w_(w), dt_(dt), cum_(w.size() + 1), integ_(w.size() + 1) {
    cum_(0) = 0;
    integ_(0) = 0;
    for (Eigen::Index k = 0; k < w.size(); ++k) {
      cum_(k + 1) = cum_(k) + w(k);
      integ_(k + 1) = integ_(k) + (cum_(k) + 0.5 * w(k)) * dt;
    }
  }

  double integral(double t) const {
    if (t <= 0) return 0.0;
    const Eigen::Index n = w_.size();
    const double pos = t / dt_;
    if (pos >= static_cast<double>(n)) return integ_(n) + cum_(n) * (t - static_cast<double>(n) * dt_);
    const auto k = static_cast<Eigen::Index>(std::floor(pos));
    const double u = t - static_cast<double>(k) * dt_;
    return integ_(k) + cum_(k) * u + w_(k) * u * u / (2.0 * dt_);
  }

  double total() const { return cum_(w_.size()); }
  double support_end() const { return static_cast<double>(w_.size()) * dt_; }

 private:
  const Eigen::VectorXd& w_;
  double dt_;
  Eigen::VectorXd cum_;
  Eigen::VectorXd integ_;
};

}  // namespace

IsiIntegrals isi_integrals(const RectPulse& pulse, const ImpulseResponse& h0, double bit_time, int memory,
                           double responsivity) {
  if (!(bit_time > 0)) throw ParameterError("bit time must be positive");
  if (memory < 0) throw ParameterError("channel memory must be non-negative");
  if (!(h0.bin_width > 0)) throw ParameterError("impulse response needs a positive bin width");
  if (!(pulse.duration > 0)) throw ParameterError("pulse duration must be positive");

  const BinnedCumulative g(h0.weights, h0.bin_width);
  // Integral of Gamma over [0, t]; Gamma(t) = P (H(t) - H(t - Tp)).
  auto energy_until = [&](double t) { return pulse.power * (g.integral(t) - g.integral(t - pulse.duration)); };

  IsiIntegrals out;
  const double ratio = bit_time / h0.bin_width;
  out.resampled = std::abs(ratio - std::round(ratio)) > 1e-9 * ratio;
  out.gamma_s = responsivity * energy_until(bit_time);
  out.gamma_k.resize(static_cast<std::size_t>(memory));
  for (int m = 1; m <= memory; ++m) {
    out.gamma_k[static_cast<std::size_t>(m - 1)] =
        responsivity * (energy_until((m + 1) * bit_time) - energy_until(m * bit_time));
  }
  const double total = responsivity * pulse.power * pulse.duration * g.total();
  out.tail = std::max(0.0, total - responsivity * energy_until((memory + 1) * bit_time));
  return out;
}

int channel_memory(const RectPulse& pulse, const ImpulseResponse& h0, double bit_time, double tolerance) {
  const double span = static_cast<double>(h0.weights.size()) * h0.bin_width + pulse.duration;
  const int max_memory = static_cast<int>(std::ceil(span / bit_time)) + 1;
  for (int m = 0; m <= max_memory; ++m) {
    const auto isi = isi_integrals(pulse, h0, bit_time, m, 1.0);
    if (isi.tail <= tolerance * isi.gamma_s) return m;
  }
  return max_memory;
}

void write_impulse_response(std::ostream& os, const ImpulseResponse& h) {
  os << "t0,dt\n" << std::setprecision(17) << h.t0 << ',' << h.bin_width << '\n';
  for (Eigen::Index k = 0; k < h.weights.size(); ++k) os << h.weights(k) << '\n';
}

ImpulseResponse read_impulse_response(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("t0,dt", 0) != 0) throw ParameterError("impulse response CSV needs a 't0,dt' header");
  ImpulseResponse h;
  if (!std::getline(is, line)) throw ParameterError("impulse response CSV is missing t0,dt values");
  {
    std::istringstream row(line);
    char comma = 0;
    if (!(row >> h.t0 >> comma >> h.bin_width) || comma != ',') throw ParameterError("malformed t0,dt row");
  }
  std::vector<double> w;
  while (std::getline(is, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    w.push_back(std::stod(line));
  }
  h.weights = Eigen::Map<Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
  return h;
}

void write_fit_csv(std::ostream& os, const DoubleGammaFit& fit) {
  os << "c1,c2,c3,c4,t0,residual,relative_residual,converged\n" << std::setprecision(10) << fit.params.c1 << ','
     << fit.params.c2 << ',' << fit.params.c3 << ',' << fit.params.c4 << ',' << fit.params.t0 << ',' << fit.residual
     << ',' << fit.relative_residual << ',' << (fit.converged ? 1 : 0) << '\n';
}

}  // namespace uwoc::channel
