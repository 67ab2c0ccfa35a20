#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

#include "uwoc/error.hpp"
#include "uwoc/locate.hpp"
#include "uwoc/special.hpp"

using namespace uwoc;
using namespace uwoc::locate;

namespace {

RssModel pure_sea_model() {
  RssModel m;
  m.responsivity = 0.34;
  m.power = 1e-3;
  m.sample_time = 1e-6;
  m.noise_sigma = 0.0;
  m.water = channel::water_type(channel::WaterLabel::kPureSea);
  return m;
}

std::vector<double> distances_from(const AnchorSet& a, const Eigen::Vector2d& p) {
  std::vector<double> d;
  for (Eigen::Index i = 0; i < a.size(); ++i) d.push_back((a.positions.col(i) - p).norm());
  return d;
}

}  // namespace

TEST_CASE("hexagonal anchors") {
  const auto a = hexagonal_anchors(50.0);
  CHECK(a.size() == 7);
  CHECK(a.positions.col(0).norm() == 0.0);
  for (int i = 1; i < 7; ++i) CHECK(a.positions.col(i).norm() == doctest::Approx(50.0 * std::sqrt(3.0)));
  CHECK(std::atan2(a.positions(1, 1), a.positions(0, 1)) == doctest::Approx(std::numbers::pi / 6));
  CHECK(a.head(3).size() == 3);
}

TEST_CASE("rss observation") {
  const auto m = pure_sea_model();
  const auto obs = rss_signal(m, 20.0, 1.0, 0.0);
  CHECK(obs.value == doctest::Approx(0.34 * 1e-3 * 1e-6 * std::exp(-0.043 * 20.0)).epsilon(1e-12));
  CHECK(obs.sample_time == 1e-6);
  CHECK(rss_signal(m, 1e5, 1.0, 2e-15).value == doctest::Approx(2e-15).epsilon(1e-9));
  CHECK_THROWS_AS(rss_signal(m, 0.0, 1.0, 0.0), ParameterError);

  Rng rng(3);
  const double avg = averaged_rss(m, 30.0, 0.1, 200000, rng);
  CHECK(std::abs(avg / m.mean_signal(30.0) - 1.0) < 0.01);
}

TEST_CASE("distance polynomial fit") {
  SUBCASE("exact quadratic data is recovered") {
    std::vector<double> y, d;
    for (int i = 0; i < 20; ++i) {
      const double v = 0.1 * i;
      y.push_back(v);
      d.push_back(3.0 - 2.0 * v + 0.5 * v * v);
    }
    const auto p = fit_distance_polynomial(y, d, 2);
    const auto b = p.coefficients();
    REQUIRE(b.size() == 3);
    CHECK(std::abs(b(0) - 3.0) / 3.0 < 1e-9);
    CHECK(std::abs(b(1) + 2.0) / 2.0 < 1e-9);
    CHECK(std::abs(b(2) - 0.5) / 0.5 < 1e-9);
    CHECK(p(0.75) == doctest::Approx(3.0 - 1.5 + 0.5 * 0.5625).epsilon(1e-12));
  }

  SUBCASE("degree zero is the mean") {
    const std::vector<double> y{1, 2, 3, 4}, d{10, 20, 30, 60};
    CHECK(fit_distance_polynomial(y, d, 0).coefficients()(0) == doctest::Approx(30.0));
  }

  SUBCASE("rank deficiency and size errors") {
    const std::vector<double> y(10, 1.0), d(10, 5.0);
    CHECK_THROWS_AS(fit_distance_polynomial(y, d, 2), ConditioningError);
    const std::vector<double> two{1, 2};
    CHECK_THROWS(fit_distance_polynomial(two, two, 3));
  }

  SUBCASE("pure-sea calibration residual") {
    const auto m = pure_sea_model();
    std::vector<double> y, d;
    for (int i = 0; i < 50; ++i) {
      const double dist = 5.0 + 55.0 * i / 49.0;
      d.push_back(dist);
      y.push_back(m.mean_signal(dist));
    }
    const auto p = fit_distance_polynomial(y, d, 5);
    double sq = 0;
    for (std::size_t i = 0; i < y.size(); ++i) sq += std::pow(p(y[i]) - d[i], 2);
    CHECK(std::sqrt(sq / y.size()) < 0.02 * 55.0);

    const auto near = estimate_distance(m.mean_signal(30.0), p, 100.0);
    CHECK(std::abs(near.distance - 30.0) < 0.3);
    CHECK(!near.extrapolated);
    const auto zero = estimate_distance(0.0, p, 100.0);
    CHECK(zero.extrapolated);
    CHECK(zero.distance == doctest::Approx(std::clamp(p(0.0), 0.0, 100.0)));
    CHECK(zero.distance >= 0.0);
    CHECK(zero.distance <= 100.0);
  }
}

TEST_CASE("calibration is the least-squares polynomial over the anchor range") {
  LocalizationConfig cfg;
  cfg.model = pure_sea_model();
  const auto poly = calibrate(cfg);
  CHECK(poly.degree() == 5);
  const double span = (std::sqrt(3.0) + 1.0) * cfg.cell_radius + 5.0;
  std::vector<double> y, r;
  for (int i = 0; i < cfg.calibration_points; ++i) {
    const double d = cfg.calibration_min + (span - cfg.calibration_min) * i / (cfg.calibration_points - 1);
    y.push_back(cfg.model.mean_signal(d));
    r.push_back(poly(y.back()) - d);
  }
  // residual orthogonal to every monomial of the normalised variable
  const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
  const double c = 0.5 * (*lo + *hi), s = 0.5 * (*hi - *lo);
  for (int k = 0; k <= 5; ++k) {
    double dot = 0, mag = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double t = std::pow((y[i] - c) / s, k);
      dot += t * r[i];
      mag += std::abs(t * r[i]);
    }
    CHECK(std::abs(dot) <= 1e-9 * mag);
  }
  CHECK(poly.y_min() == doctest::Approx(cfg.model.mean_signal(span)));
  CHECK(poly.y_max() == doctest::Approx(cfg.model.mean_signal(cfg.calibration_min)));
}

TEST_CASE("linear least-squares position") {
  const auto hex = hexagonal_anchors(50.0);
  const Eigen::Vector2d truth(12.5, -7.25);

  SUBCASE("three anchors, exact distances") {
    const auto a = hex.head(3);
    const auto est = lls_position(a, distances_from(a, truth));
    CHECK((est - truth).norm() < 1e-9);
  }

  SUBCASE("seven anchors and a user at the reference anchor") {
    CHECK((lls_position(hex, distances_from(hex, truth)) - truth).norm() < 1e-9);
    CHECK(lls_position(hex, distances_from(hex, Eigen::Vector2d::Zero())).norm() < 1e-9);
  }

  SUBCASE("translation equivariance") {
    const Eigen::Vector2d shift(-300.0, 125.0);
    AnchorSet moved{hex.positions.colwise() + shift};
    std::vector<double> noisy = distances_from(hex, truth);
    for (std::size_t i = 0; i < noisy.size(); ++i) noisy[i] *= 1.0 + 0.01 * std::sin(double(i));
    const auto a = lls_position(hex, noisy);
    const auto b = lls_position(moved, noisy);
    CHECK((b - (a + shift)).norm() < 1e-9);
  }

  SUBCASE("collinear anchors") {
    AnchorSet line{Eigen::Matrix2Xd(2, 3)};
    line.positions << 0, 10, 20, 0, 0, 0;
    const std::vector<double> d{1, 2, 3};
    CHECK_THROWS_AS(lls_position(line, d), GeometryError);
  }
}

TEST_CASE("hyperbolic positioning") {
  const auto hex = hexagonal_anchors(50.0);
  const double v = physics::kSpeedInWater;
  auto differences = [&](const AnchorSet& a, const Eigen::Vector2d& p) {
    const auto d = distances_from(a, p);
    std::vector<double> t;
    for (std::size_t i = 1; i < d.size(); ++i) t.push_back((d[i] - d[0]) / v);
    return t;
  };

  SUBCASE("exact differences from an interior point") {
    const Eigen::Vector2d truth(10.0, 20.0);
    for (int n : {4, 7}) {
      const auto a = hex.head(n);
      CHECK((tdoa_position(a, differences(a, truth), v) - truth).norm() < 1e-6);
    }
  }

  SUBCASE("equidistant user has zero difference for that pair") {
    const Eigen::Vector2d mid = 0.5 * (hex.positions.col(1) + hex.positions.col(0));
    const Eigen::Vector2d on_bisector = mid + 5.0 * Eigen::Vector2d(-hex.positions(1, 1), hex.positions(0, 1)).normalized();
    CHECK(std::abs(differences(hex.head(2 + 1), on_bisector)[0]) < 1e-15);
  }

  SUBCASE("timing jitter gives errors of the induced range error order") {
    Rng rng(4);
    std::normal_distribution<double> jitter(0.0, 1e-9);
    std::vector<double> errors;
    for (int t = 0; t < 200; ++t) {
      const Eigen::Vector2d truth(40.0 * (uniform01(rng) - 0.5), 40.0 * (uniform01(rng) - 0.5));
      auto dt = differences(hex, truth);
      for (auto& x : dt) x += jitter(rng) - jitter(rng);
      errors.push_back((tdoa_position(hex, dt, v) - truth).norm());
    }
    std::sort(errors.begin(), errors.end());
    const double median = errors[errors.size() / 2];
    CHECK(median > 0.02);
    CHECK(median < 1.0);
  }

  SUBCASE("argument errors") {
    const std::vector<double> one{0.0};
    CHECK_THROWS_AS(tdoa_position(hex.head(2), one, v), GeometryError);
    CHECK_THROWS_AS(tdoa_position(hex.head(3), one, v), ParameterError);
  }
}

TEST_CASE("localization trials") {
  LocalizationConfig cfg;
  cfg.model = pure_sea_model();
  cfg.model.noise_sigma = 1e-4 * cfg.model.mean_signal(1.0);
  cfg.methods = {"rss-lls", "tdoa"};
  const auto a = run_localization_trials(cfg, 50, 9, 1);
  const auto b = run_localization_trials(cfg, 50, 9, 4);
  REQUIRE(a.size() == 50 * 5 * 2);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].truth == b[i].truth);
    CHECK((a[i].estimate.array() == b[i].estimate.array() || (a[i].estimate.array().isNaN() && b[i].estimate.array().isNaN())).all());
    CHECK(a[i].truth.norm() <= cfg.cell_radius);
  }

  std::ostringstream os;
  write_trials_csv(os, a);
  CHECK(os.str().rfind("trial,true_x,true_y,est_x,est_y,err_m,n_anchors,method\n", 0) == 0);

  cfg.methods = {"bogus"};
  CHECK_THROWS_AS(run_localization_trials(cfg, 1, 1), ParameterError);
}
