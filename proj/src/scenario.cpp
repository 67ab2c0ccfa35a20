#include "uwoc/scenario.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "uwoc/error.hpp"
#include "uwoc/ooc.hpp"
#include "uwoc/special.hpp"

namespace uwoc::scenario {

using nlohmann::json;

Kind parse_kind(const std::string& name) {
  if (name == "relay-ber") return Kind::kRelayBer;
  if (name == "localization") return Kind::kLocalization;
  if (name == "mimo-ber") return Kind::kMimoBer;
  if (name == "power-control") return Kind::kPowerControl;
  throw ParameterError("unknown experiment kind: " + name);
}

std::string to_string(Kind kind) {
  switch (kind) {
    case Kind::kRelayBer: return "relay-ber";
    case Kind::kLocalization: return "localization";
    case Kind::kMimoBer: return "mimo-ber";
    case Kind::kPowerControl: return "power-control";
  }
  return "unknown";
}

double ReceiverParams::responsivity() const { return ber::responsivity(quantum_efficiency, wavelength_nm * 1e-9); }

double ReceiverParams::noise_psd() const { return 2.0 * physics::kBoltzmann * temperature / load_resistance; }

std::vector<double> PowerSweep::points() const {
  if (!(step_db > 0) || max_dbm < min_dbm) throw ParameterError("power sweep needs step > 0 and max >= min");
  std::vector<double> p;
  const int n = static_cast<int>(std::floor((max_dbm - min_dbm) / step_db + 1e-9));
  for (int i = 0; i <= n; ++i) p.push_back(min_dbm + i * step_db);
  return p;
}

Scenario preset(const std::string& name) {
  Scenario s;
  s.name = name;
  if (name == "fig4") {
    s.kind = Kind::kRelayBer;
  } else if (name == "fig5") {
    s.kind = Kind::kLocalization;
    s.water = channel::water_type(channel::WaterLabel::kPureSea);
  } else if (name == "fig7") {
    s.kind = Kind::kMimoBer;
    s.water = channel::water_type(channel::WaterLabel::kCoastal);
    s.bit_rate = 1e9;
  } else if (name == "fig9") {
    s.kind = Kind::kPowerControl;
  } else {
    throw ParameterError("unknown preset: " + name);
  }
  return s;
}

namespace {

std::string default_preset(Kind kind) {
  switch (kind) {
    case Kind::kRelayBer: return "fig4";
    case Kind::kLocalization: return "fig5";
    case Kind::kMimoBer: return "fig7";
    case Kind::kPowerControl: return "fig9";
  }
  return "fig4";
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void read_sweep(const json& j, PowerSweep& sweep) {
  if (!j.contains("sweep")) return;
  const auto& s = j.at("sweep");
  read(s, "min_dbm", sweep.min_dbm);
  read(s, "max_dbm", sweep.max_dbm);
  read(s, "step_db", sweep.step_db);
}

void read_water(const json& j, Scenario& s) {
  if (!j.contains("water")) return;
  const auto& w = j.at("water");
  if (w.is_string()) {
    s.water = channel::water_type(channel::parse_water_label(w.get<std::string>()));
  } else {
    s.water = channel::custom_water(w.at("absorption").get<double>(), w.at("scattering").get<double>());
  }
}

}  // namespace

Scenario parse_scenario(const std::string& text) {
  json j;
  try {
    j = json::parse(text, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ParameterError(std::string("scenario is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ParameterError("scenario must be a JSON object");
  try {
    std::string preset_name;
    if (j.contains("preset")) {
      preset_name = j.at("preset").get<std::string>();
    } else if (j.contains("kind")) {
      preset_name = default_preset(parse_kind(j.at("kind").get<std::string>()));
    } else {
      throw ParameterError("scenario needs a \"kind\" or a \"preset\"");
    }
    Scenario s = preset(preset_name);
    if (j.contains("kind")) s.kind = parse_kind(j.at("kind").get<std::string>());
    read(j, "name", s.name);
    read(j, "seed", s.seed);
    read_water(j, s);
    if (j.contains("geometry")) {
      const auto& g = j.at("geometry");
      read(g, "beam_divergence", s.geometry.beam_divergence);
      read(g, "aperture_diameter", s.geometry.aperture_diameter);
      read(g, "field_of_view", s.geometry.field_of_view);
      read(g, "wavelength_nm", s.geometry.wavelength_nm);
    }
    if (j.contains("code")) {
      const auto& c = j.at("code");
      read(c, "F", s.code_length);
      read(c, "W", s.code_weight);
      read(c, "rho", s.max_correlation);
      read(c, "users", s.users);
    }
    read(j, "bit_rate", s.bit_rate);
    if (j.contains("chip_time")) s.chip_time = j.at("chip_time").get<double>();
    if (j.contains("receiver")) {
      const auto& r = j.at("receiver");
      read(r, "quantum_efficiency", s.receiver.quantum_efficiency);
      read(r, "wavelength_nm", s.receiver.wavelength_nm);
      read(r, "temperature", s.receiver.temperature);
      read(r, "load_resistance", s.receiver.load_resistance);
    }
    if (j.contains("relay")) {
      const auto& r = j.at("relay");
      auto& p = s.relay;
      read(r, "range", p.range);
      read(r, "relays", p.relays);
      read(r, "sigma_x_sq", p.sigma_x_sq);
      read(r, "reference_range", p.reference_range);
      read(r, "rytov_scaling", p.rytov_scaling);
      read(r, "directions", p.directions);
      if (r.contains("interferers")) {
        const auto placement = r.at("interferers").get<std::string>();
        if (placement == "arc") {
          p.placement = InterfererPlacement::kArc;
        } else if (placement == "co-located") {
          p.placement = InterfererPlacement::kCoLocated;
        } else {
          throw ParameterError("unknown interferer placement: " + placement);
        }
      }
      read(r, "interferer_bearings_deg", p.interferer_bearings_deg);
      read_sweep(r, p.sweep);
      read(r, "mc_bits", p.mc_bits);
      read(r, "mc_min_ber", p.mc_min_ber);
      read(r, "quadrature_nodes", p.quadrature_nodes);
    }
    if (j.contains("mimo")) {
      const auto& m = j.at("mimo");
      auto& p = s.mimo;
      read(m, "range", p.range);
      read(m, "transmitters", p.transmitters);
      read(m, "receivers", p.receivers);
      read(m, "sigma_x_sq", p.sigma_x_sq);
      read(m, "photons", p.photons);
      read(m, "bin_width", p.bin_width);
      read(m, "time_window", p.time_window);
      read(m, "isi_tolerance", p.isi_tolerance);
      read_sweep(m, p.sweep);
      read(m, "quadrature_nodes", p.quadrature_nodes);
    }
    if (j.contains("localization")) {
      const auto& l = j.at("localization");
      auto& p = s.localization;
      read(l, "trials", p.trials);
      read(l, "cell_radius", p.cell_radius);
      read(l, "sigma_x_sq", p.sigma_x_sq);
      read(l, "rss_samples", p.rss_samples);
      read(l, "degree", p.degree);
      read(l, "calibration_points", p.calibration_points);
      read(l, "sample_time", p.sample_time);
      read(l, "power_dbm", p.power_dbm);
      read(l, "anchor_counts", p.anchor_counts);
      read(l, "methods", p.methods);
      read(l, "tdoa_jitter", p.tdoa_jitter);
    }
    if (j.contains("power_control")) {
      const auto& c = j.at("power_control");
      auto& p = s.power_control;
      read(c, "cell_radius", p.cell_radius);
      read(c, "edge_sigma_x_sq", p.edge_sigma_x_sq);
      read(c, "rings", p.rings);
      read(c, "target_ber", p.target_ber);
      read(c, "boundaries", p.boundaries);
      read(c, "grid", p.grid);
      read(c, "cap_dbm", p.cap_dbm);
      read(c, "quadrature_nodes", p.quadrature_nodes);
    }
    return s;
  } catch (const json::exception& e) {
    throw ParameterError(std::string("malformed scenario field: ") + e.what());
  }
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParameterError("cannot open scenario file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

std::vector<std::string> validate(const Scenario& s) {
  std::vector<std::string> d;
  auto need = [&](bool ok, const std::string& message) {
    if (!ok) d.push_back(message);
  };
  need(s.bit_rate > 0, "bit rate Rb must be positive");
  need(s.water.absorption >= 0 && s.water.scattering >= 0, "absorption and scattering coefficients must be non-negative");
  need(s.geometry.aperture_diameter > 0 && s.geometry.beam_divergence > 0 && s.geometry.field_of_view > 0,
       "aperture, beam divergence and field of view must be positive");
  need(s.receiver.quantum_efficiency > 0 && s.receiver.quantum_efficiency <= 1, "quantum efficiency must lie in (0, 1]");
  need(s.receiver.temperature > 0 && s.receiver.load_resistance > 0, "temperature and load resistance must be positive");

  const bool coded = s.kind == Kind::kRelayBer || s.kind == Kind::kPowerControl;
  if (coded) {
    const int f = s.code_length, w = s.code_weight, rho = s.max_correlation;
    const bool code_ok = w >= 1 && f >= w && rho >= 1;
    need(code_ok, "code parameters need 1 <= W <= F and rho >= 1");
    if (code_ok) {
      need(2 * f >= w * w, "chip-collision model needs W^2 <= 2F");
      if (s.chip_time) {
        const double expected = 1.0 / (s.bit_rate * f);
        std::ostringstream msg;
        msg << "chip time Tc = " << *s.chip_time << " s differs from 1/(Rb F) = " << expected << " s";
        need(std::abs(*s.chip_time - expected) <= 1e-9 * expected, msg.str());
      }
    }
    need(s.users >= 1, "user count M must be >= 1");
    if (code_ok && s.users >= 1) {
      bool downlink = s.kind == Kind::kPowerControl;
      for (const auto& dir : s.relay.directions) downlink = downlink || (s.kind == Kind::kRelayBer && dir == "downlink");
      if (downlink) {
        std::ostringstream msg;
        msg << "synchronous downlink needs M < F/W^2 + 1: M = " << s.users << ", F/W^2 + 1 = "
            << static_cast<double>(f) / (w * w) + 1.0;
        need(ooc::synchronous_mai_free_condition(s.users, f, w), msg.str());
      }
      if (rho < w && s.kind == Kind::kRelayBer) {
        const long long bound = ooc::johnson_bound(f, w, rho);
        need(s.users <= bound, "M = " + std::to_string(s.users) + " exceeds the Johnson bound " + std::to_string(bound));
      }
    }
  }

  if (s.kind == Kind::kRelayBer) {
    const auto& r = s.relay;
    need(r.range > 0 && r.reference_range > 0, "relay range must be positive");
    need(r.sigma_x_sq >= 0, "log-amplitude variance must be non-negative");
    need(!r.relays.empty(), "at least one relay count is required");
    for (int n : r.relays) need(n >= 0, "relay counts must be non-negative");
    for (const auto& dir : r.directions) need(dir == "uplink" || dir == "downlink", "unknown direction: " + dir);
    need(r.sweep.step_db > 0 && r.sweep.max_dbm >= r.sweep.min_dbm, "power sweep needs step > 0 and max >= min");
    need(r.placement != InterfererPlacement::kArc ||
             static_cast<int>(r.interferer_bearings_deg.size()) >= s.users - 1,
         "arc placement needs one bearing per interferer (M - 1)");
    need(r.mc_bits >= 0, "Monte Carlo bit count must be non-negative");
    need(r.quadrature_nodes >= 1, "quadrature order must be >= 1");
  } else if (s.kind == Kind::kMimoBer) {
    const auto& m = s.mimo;
    need(m.range > 0, "link range must be positive");
    need(!m.transmitters.empty(), "at least one transmitter count is required");
    for (int nt : m.transmitters) need(nt >= 1, "transmitter counts must be >= 1");
    need(m.receivers >= 1, "receiver count must be >= 1");
    for (double v : m.sigma_x_sq) need(v >= 0, "log-amplitude variance must be non-negative");
    need(m.photons > 0 && m.bin_width > 0 && m.time_window > m.bin_width, "photon transport settings must be positive");
    need(m.sweep.step_db > 0 && m.sweep.max_dbm >= m.sweep.min_dbm, "power sweep needs step > 0 and max >= min");
  } else if (s.kind == Kind::kLocalization) {
    const auto& l = s.localization;
    need(l.trials >= 0, "trial count must be non-negative");
    need(l.cell_radius > 0, "cell radius must be positive");
    need(l.sigma_x_sq >= 0, "log-amplitude variance must be non-negative");
    need(l.rss_samples >= 1, "at least one RSS sample is required");
    need(l.degree >= 0 && l.calibration_points > l.degree, "calibration needs more points than coefficients");
    need(l.sample_time > 0, "sample time must be positive");
    for (int k : l.anchor_counts) need(k >= 3 && k <= 7, "anchor counts must lie in [3, 7]");
    for (const auto& m : l.methods) need(m == "rss-lls" || m == "tdoa", "unknown localization method: " + m);
  } else {
    const auto& p = s.power_control;
    need(p.cell_radius > 0, "cell radius must be positive");
    need(p.edge_sigma_x_sq >= 0, "log-amplitude variance must be non-negative");
    for (int r : p.rings) need(r >= 1, "ring counts must be >= 1");
    for (double t : p.target_ber) need(t > 0 && t < 0.5, "target BER must lie in (0, 0.5)");
    need(p.boundaries == "optimized" || p.boundaries == "equal-area", "boundaries must be optimized or equal-area");
    for (int r : p.rings) need(p.grid >= r, "boundary grid must hold one point per ring");
  }
  return d;
}

}  // namespace uwoc::scenario
