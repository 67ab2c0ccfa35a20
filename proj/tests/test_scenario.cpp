#include <doctest.h>

#include <boost/math/quadrature/exp_sinh.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

#include "uwoc/channel.hpp"
#include "uwoc/error.hpp"
#include "uwoc/scenario.hpp"

using namespace uwoc;
using namespace uwoc::scenario;

namespace {

constexpr double kPlanck = 6.62607015e-34;
constexpr double kCharge = 1.602176634e-19;
constexpr double kLight = 2.99792458e8;
constexpr double kBoltzmann = 1.380649e-23;

bool mentions(const std::vector<std::string>& diagnostics, const std::string& text) {
  for (const auto& d : diagnostics) {
    if (d.find(text) != std::string::npos) return true;
  }
  return false;
}

double q_function(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

// Single-user direct link: BER averaged over log-normal fading h = exp(2x),
// x ~ N(-s2, s2), with chip error q = Q(k h / 2) on each of the W mark chips.
double single_user_ber(double k, int w, double s2) {
  auto pdf = [&](double h) {
    const double x = 0.5 * std::log(h);
    return std::exp(-std::pow(x + s2, 2) / (2.0 * s2)) / (2.0 * h * std::sqrt(2.0 * std::numbers::pi * s2));
  };
  auto ber = [&](double h) {
    const double q = q_function(k * h / 2.0);
    return 0.5 * (std::pow(q, w) + 1.0 - std::pow(1.0 - q, w));
  };
  boost::math::quadrature::exp_sinh<double> integrator;
  return integrator.integrate([&](double h) { return ber(h) * pdf(h); }, 1e-14);
}

std::string run_to_string(const Scenario& s, unsigned workers) {
  std::ostringstream os;
  run(s, os, workers);
  return os.str();
}

}  // namespace

TEST_CASE("presets validate") {
  for (const char* name : {"fig4", "fig5", "fig7", "fig9"}) {
    INFO(name);
    CHECK(validate(preset(name)).empty());
  }
  CHECK_THROWS_AS(preset("fig6"), ParameterError);
  CHECK(to_string(parse_kind("mimo-ber")) == "mimo-ber");
  CHECK_THROWS_AS(parse_kind("ber"), ParameterError);
}

TEST_CASE("relay scenario defaults are valid") {
  const auto s = parse_scenario(R"({"kind": "relay-ber"})");
  CHECK(s.kind == Kind::kRelayBer);
  CHECK(s.code_length == 50);
  CHECK(s.code_weight == 3);
  CHECK(s.users == 5);
  CHECK(validate(s).empty());
}

TEST_CASE("synchronous downlink capacity is enforced") {
  auto s = parse_scenario(R"({"kind": "relay-ber", "code": {"F": 50, "W": 3, "rho": 1, "users": 7},
                              "relay": {"directions": ["downlink"], "interferers": "co-located"}})");
  auto d = validate(s);
  CHECK(mentions(d, "M < F/W^2 + 1"));
  CHECK(mentions(d, "M = 7"));
  s.users = 6;
  CHECK(validate(s).empty());

  // the uplink alone has no synchronous constraint
  s.users = 7;
  s.relay.directions = {"uplink"};
  s.relay.placement = InterfererPlacement::kCoLocated;
  CHECK(!mentions(validate(s), "M < F/W^2 + 1"));
}

TEST_CASE("chip time must match the bit rate") {
  auto s = parse_scenario(R"({"kind": "relay-ber", "bit_rate": 2e6, "chip_time": 1e-8})");
  CHECK(validate(s).empty());
  s.chip_time = 2e-8;
  CHECK(mentions(validate(s), "chip time"));
}

TEST_CASE("other constraints") {
  auto s = preset("fig4");
  s.users = 30;
  s.relay.directions = {"uplink"};
  s.relay.placement = InterfererPlacement::kCoLocated;
  CHECK(mentions(validate(s), "Johnson bound"));

  s = preset("fig4");
  s.relay.interferer_bearings_deg = {10.0};
  CHECK(mentions(validate(s), "bearing"));

  s = preset("fig4");
  s.code_weight = 11;
  CHECK(mentions(validate(s), "W^2 <= 2F"));

  s = preset("fig5");
  s.localization.anchor_counts = {2};
  CHECK(mentions(validate(s), "anchor counts"));

  s = preset("fig9");
  s.power_control.target_ber = {0.7};
  CHECK(mentions(validate(s), "target BER"));

  s = preset("fig7");
  s.mimo.transmitters = {0};
  CHECK(mentions(validate(s), "transmitter"));
}

TEST_CASE("malformed scenarios") {
  CHECK_THROWS_AS(parse_scenario("{"), ParameterError);
  CHECK_THROWS_AS(parse_scenario("[1, 2]"), ParameterError);
  CHECK_THROWS_AS(parse_scenario("{}"), ParameterError);
  CHECK_THROWS_AS(parse_scenario(R"({"kind": "sonar"})"), ParameterError);
  CHECK_THROWS_AS(parse_scenario(R"({"kind": "relay-ber", "code": {"F": "fifty"}})"), ParameterError);
  CHECK_THROWS_AS(parse_scenario(R"({"kind": "relay-ber", "water": "lake"})"), ParameterError);
  CHECK_THROWS_AS(parse_scenario(R"({"kind": "relay-ber", "relay": {"interferers": "ring"}})"), ParameterError);
  CHECK_THROWS_AS(load_scenario("/nonexistent/scenario.json"), ParameterError);
}

TEST_CASE("file values override the preset") {
  const auto s = parse_scenario(R"({
    "preset": "fig7",
    // comments are allowed
    "water": {"absorption": 0.2, "scattering": 0.1},
    "mimo": {"transmitters": [1, 4], "sweep": {"min_dbm": 0, "max_dbm": 10, "step_db": 5}}
  })");
  CHECK(s.kind == Kind::kMimoBer);
  CHECK(s.bit_rate == 1e9);
  CHECK(s.water.absorption == 0.2);
  CHECK(s.water.extinction() == doctest::Approx(0.3));
  CHECK(s.mimo.transmitters == std::vector<int>{1, 4});
  CHECK(s.mimo.sweep.points() == std::vector<double>{0.0, 5.0, 10.0});
  CHECK(s.mimo.sigma_x_sq == std::vector<double>{0.01, 0.16});
}

TEST_CASE("receiver parameters") {
  ReceiverParams r;
  CHECK(r.responsivity() == doctest::Approx(0.8 * kCharge * 532e-9 / (kPlanck * kLight)).epsilon(1e-12));
  CHECK(r.noise_psd() == doctest::Approx(2.0 * kBoltzmann * 290.0 / 100.0).epsilon(1e-12));
}

TEST_CASE("single-user direct downlink reduces to the fading-averaged chip formula") {
  auto s = preset("fig4");
  s.users = 1;
  s.relay.directions = {"downlink"};
  s.relay.relays = {0};
  REQUIRE(validate(s).empty());

  const double resp = 0.8 * kCharge * 532e-9 / (kPlanck * kLight);
  const double tc = 1.0 / (2e6 * 50);
  const double sigma = std::sqrt(2.0 * kBoltzmann * 290.0 / 100.0 * tc);
  const double loss = std::exp(-(0.114 + 0.037) * 90.0);  // the 0.2 m aperture captures the whole 0.09 m beam

  for (double dbm : {10.0, 16.0, 20.0}) {
    const double pc = 1e-3 * std::pow(10.0, dbm / 10.0) * 2.0 * 50 / 3;
    const double k = resp * pc * tc / sigma * loss;
    const double expected = single_user_ber(k, 3, 0.17);
    const auto link = relay_link(s, 0, ber::LinkDirection::kDownlink, dbm);
    ber::RelayBerOptions opt;
    opt.quadrature_nodes = 100;
    const double got = ber::average_ber_relay(link, ber::LinkDirection::kDownlink, opt).ber;
    INFO(dbm, " dBm: ", got, " vs ", expected);
    CHECK(std::abs(got - expected) <= 1e-6 * expected);
  }
}

TEST_CASE("relay-ber run") {
  auto s = preset("fig4");
  s.relay.sweep = {0.0, 20.0, 10.0};
  s.relay.mc_bits = 20000;
  s.relay.mc_min_ber = 1e-3;
  const auto rows = run_fig4(s, 2);
  REQUIRE(rows.size() == 2 * 3 * 3);
  for (const auto& row : rows) {
    CHECK(row.ber_analytic >= 0.0);
    CHECK(row.ber_analytic <= 0.5);
    CHECK(std::isnan(row.ber_mc) == (row.ber_analytic < 1e-3));
    const auto link = relay_link(s, row.relays, row.direction == "uplink" ? ber::LinkDirection::kUplink
                                                                         : ber::LinkDirection::kDownlink, row.power_dbm);
    CHECK(link.chain.relays() == row.relays);
    CHECK(link.users() == 5);
  }

  const auto csv = run_to_string(s, 1);
  CHECK(csv.rfind("power_dbm,direction,n_relays,ber_analytic,ber_mc,mc_stderr\n", 0) == 0);
  CHECK(csv == run_to_string(s, 3));
  s.seed = 2;
  CHECK(csv != run_to_string(s, 1));
}

TEST_CASE("downlink beyond the code capacity is rejected at run time") {
  auto s = preset("fig4");
  s.users = 7;
  CHECK_THROWS_AS(run_fig4(s), ParameterError);
}

TEST_CASE("localization and power-control runs") {
  auto loc = preset("fig5");
  loc.localization.trials = 40;
  const auto csv = run_to_string(loc, 1);
  CHECK(csv.rfind("trial,true_x,true_y,est_x,est_y,err_m,n_anchors,method\n", 0) == 0);
  CHECK(csv == run_to_string(loc, 4));
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 40 * 5);

  auto pc = preset("fig9");
  pc.power_control.target_ber = {1e-4, 1e-6};
  const auto rows = run_fig9(pc);
  REQUIRE(rows.size() == 2 * 3);
  const auto out = run_to_string(pc, 1);
  CHECK(out.rfind("target_ber,n_rings,avg_power_per_bit_dbm\n", 0) == 0);
  pc.power_control.cap_dbm = -30.0;
  CHECK_THROWS_AS(run_fig9(pc), InfeasibleError);
}

TEST_CASE("mimo run") {
  auto s = preset("fig7");
  s.mimo.photons = 20000;
  s.mimo.transmitters = {1, 2};
  s.mimo.sweep = {0.0, 10.0, 5.0};
  std::ostringstream os;
  run(s, os, 2);
  const auto csv = os.str();
  CHECK(csv.rfind("power_dbm,n_tx,n_rx,sigma_x_sq,ber,std_error\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 3 * 2 * 2);
  const auto rows = run_fig7(s, 1);
  for (const auto& r : rows) {
    CHECK(r.ber >= 0.0);
    CHECK(r.ber <= 0.5);
  }
}
