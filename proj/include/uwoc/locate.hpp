#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "uwoc/channel.hpp"

namespace uwoc::locate {

/// Anchor (OBTS) positions as columns, in meters. Anchor 0 is the reference
/// anchor that the solvers translate to the origin.
struct AnchorSet {
  Eigen::Matrix2Xd positions;

  Eigen::Index size() const { return positions.cols(); }
  /// Leading `count` anchors.
  AnchorSet head(Eigen::Index count) const { return {positions.leftCols(count)}; }
};

/// Serving OBTS at the origin followed by its six neighbors at sqrt(3) r0,
/// bearings 30 + 60 k degrees, counter-clockwise.
AnchorSet hexagonal_anchors(double cell_radius);

struct RssModel {
  double responsivity = 0.0;   // A/W
  double power = 0.0;          // average transmitted power, W
  double sample_time = 0.0;    // T_s, s
  double noise_sigma = 0.0;    // std of the integrated noise current, A s
  channel::WaterType water;
  channel::LinkGeometry geometry;

  double loss(double distance) const;
  /// Fading- and noise-free observation R P T_s L(d).
  double mean_signal(double distance) const;
};

struct RssObservation {
  double value = 0.0;        // y, integrated current in A s
  double sample_time = 0.0;  // s
  double power = 0.0;        // W
};

/// y = R P T_s h L(d) + v for one fading draw h and noise sample v.
RssObservation rss_signal(const RssModel& model, double distance, double fading, double noise);

/// Mean of `samples` observations with independent fading (log-amplitude
/// variance sigma_x_sq) and noise draws.
double averaged_rss(const RssModel& model, double distance, double sigma_x_sq, int samples, Rng& rng);

/// Least-squares map from observation to distance, d(y) = sum_k b_k y^k.
/// Evaluated internally in the normalised variable t = (y - center) / scale.
class DistancePolynomial {
 public:
  DistancePolynomial() = default;
  DistancePolynomial(Eigen::VectorXd normalized, double center, double scale, double y_min, double y_max);

  int degree() const { return static_cast<int>(normalized_.size()) - 1; }
  double operator()(double y) const;
  /// Coefficients b_0..b_M of the raw-variable polynomial.
  Eigen::VectorXd coefficients() const;
  double y_min() const { return y_min_; }
  double y_max() const { return y_max_; }

 private:
  Eigen::VectorXd normalized_;
  double center_ = 0.0;
  double scale_ = 1.0;
  double y_min_ = 0.0;
  double y_max_ = 0.0;
};

/// Throws ConditioningError when the design matrix is rank deficient.
DistancePolynomial fit_distance_polynomial(std::span<const double> y, std::span<const double> d, int degree);

struct DistanceEstimate {
  double distance = 0.0;
  bool extrapolated = false;  // y outside the calibration range or value clamped
};

DistanceEstimate estimate_distance(double y, const DistancePolynomial& poly, double max_range);

/// Linear least-squares position from anchor distances (first anchor as
/// reference). Throws GeometryError for collinear anchors.
Eigen::Vector2d lls_position(const AnchorSet& anchors, std::span<const double> distances);

/// Hyperbolic positioning from arrival-time differences t_i - t_0,
/// i = 1..n-1, at propagation speed v. Throws AmbiguityError when several
/// positions inside the anchors' hull explain the data, or none does.
Eigen::Vector2d tdoa_position(const AnchorSet& anchors, std::span<const double> time_differences, double speed);

struct LocalizationConfig {
  double cell_radius = 50.0;
  double sigma_x_sq = 0.1;
  int rss_samples = 100;           // K, averaged before inversion
  int degree = 5;
  int calibration_points = 50;
  double calibration_min = 1.0;    // m; the maximum covers the farthest anchor
  RssModel model;
  double tdoa_jitter = 1e-9;       // s, std of the timing error per anchor
  std::vector<int> anchor_counts{3, 4, 5, 6, 7};
  std::vector<std::string> methods{"rss-lls"};  // "rss-lls", "tdoa"
};

struct LocalizationTrial {
  int trial = 0;
  Eigen::Vector2d truth = Eigen::Vector2d::Zero();
  Eigen::Vector2d estimate = Eigen::Vector2d::Zero();
  double error = 0.0;
  int anchors = 0;
  std::string method;
  bool extrapolated = false;
};

/// Users uniform over the serving cell's disk; one RSS (and/or TDOA)
/// measurement set per trial, solved with the leading anchors of each count.
/// Trial t uses RNG substream t, so results do not depend on `workers`.
std::vector<LocalizationTrial> run_localization_trials(const LocalizationConfig& config, int trials,
                                                       std::uint64_t seed, unsigned workers = 1);

/// Calibration of the distance polynomial against the fading-free model.
DistancePolynomial calibrate(const LocalizationConfig& config);

/// CSV: trial, true_x, true_y, est_x, est_y, err_m, n_anchors, method.
void write_trials_csv(std::ostream& os, const std::vector<LocalizationTrial>& trials);

}  // namespace uwoc::locate
