#include "uwoc/locate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>

#include "uwoc/error.hpp"
#include "uwoc/levenberg_marquardt.hpp"
#include "uwoc/parallel.hpp"
#include "uwoc/special.hpp"

namespace uwoc::locate {

AnchorSet hexagonal_anchors(double cell_radius) {
  if (!(cell_radius > 0)) throw ParameterError("cell radius must be positive");
  AnchorSet a{Eigen::Matrix2Xd::Zero(2, 7)};
  const double spacing = std::sqrt(3.0) * cell_radius;
  for (int k = 0; k < 6; ++k) {
    const double bearing = std::numbers::pi / 6.0 + k * std::numbers::pi / 3.0;
    a.positions.col(k + 1) << spacing * std::cos(bearing), spacing * std::sin(bearing);
  }
  return a;
}

double RssModel::loss(double distance) const { return channel::aggregated_loss(water, geometry, distance); }

double RssModel::mean_signal(double distance) const { return responsivity * power * sample_time * loss(distance); }

RssObservation rss_signal(const RssModel& model, double distance, double fading, double noise) {
  if (!(distance > 0)) throw ParameterError("distance must be positive");
  if (!(model.sample_time > 0)) throw ParameterError("sample time must be positive");
  return {model.mean_signal(distance) * fading + noise, model.sample_time, model.power};
}

double averaged_rss(const RssModel& model, double distance, double sigma_x_sq, int samples, Rng& rng) {
  if (samples < 1) throw ParameterError("at least one RSS sample is required");
  const channel::FadingModel fading(sigma_x_sq);
  std::normal_distribution<double> noise(0.0, model.noise_sigma);
  double sum = 0.0;
  for (int s = 0; s < samples; ++s) {
    const double h = channel::sample_fading(fading, rng);
    const double v = model.noise_sigma > 0 ? noise(rng) : 0.0;
    sum += rss_signal(model, distance, h, v).value;
  }
  return sum / samples;
}

DistancePolynomial::DistancePolynomial(Eigen::VectorXd normalized, double center, double scale, double y_min,
                                       double y_max)
    : normalized_(std::move(normalized)), center_(center), scale_(scale), y_min_(y_min), y_max_(y_max) {}

double DistancePolynomial::operator()(double y) const {
  const double t = (y - center_) / scale_;
  double acc = 0.0;
  for (Eigen::Index k = normalized_.size() - 1; k >= 0; --k) acc = acc * t + normalized_(k);
  return acc;
}

Eigen::VectorXd DistancePolynomial::coefficients() const {
  // sum_k a_k ((y - c) / s)^k expanded in powers of y.
  const Eigen::Index n = normalized_.size();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd term = Eigen::VectorXd::Zero(n);  // coefficients of ((y - c)/s)^k
  term(0) = 1.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    b += normalized_(k) * term;
    Eigen::VectorXd next = Eigen::VectorXd::Zero(n);
    for (Eigen::Index j = 0; j + 1 < n; ++j) {
      next(j + 1) += term(j) / scale_;
      next(j) -= term(j) * center_ / scale_;
    }
    term = next;
  }
  return b;
}

DistancePolynomial fit_distance_polynomial(std::span<const double> y, std::span<const double> d, int degree) {
  if (degree < 0) throw ParameterError("polynomial degree must be non-negative");
  if (y.size() != d.size()) throw ParameterError("observation and distance lists differ in length");
  if (y.size() < static_cast<std::size_t>(degree) + 1) throw ConditioningError("fewer calibration pairs than coefficients");
  const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
  const double center = 0.5 * (*lo + *hi);
  const double scale = *hi > *lo ? 0.5 * (*hi - *lo) : 1.0;
  const Eigen::Index n = static_cast<Eigen::Index>(y.size());
  Eigen::MatrixXd design(n, degree + 1);
  Eigen::VectorXd rhs(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = (y[static_cast<std::size_t>(i)] - center) / scale;
    double p = 1.0;
    for (int k = 0; k <= degree; ++k, p *= t) design(i, k) = p;
    rhs(i) = d[static_cast<std::size_t>(i)];
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  qr.setThreshold(1e-10);
  if (qr.rank() < degree + 1) throw ConditioningError("calibration design matrix is rank deficient");
  return DistancePolynomial(qr.solve(rhs), center, scale, *lo, *hi);
}

DistanceEstimate estimate_distance(double y, const DistancePolynomial& poly, double max_range) {
  DistanceEstimate out;
  out.extrapolated = y < poly.y_min() || y > poly.y_max();
  const double raw = poly(y);
  out.distance = std::clamp(raw, 0.0, max_range);
  out.extrapolated = out.extrapolated || out.distance != raw;
  return out;
}

Eigen::Vector2d lls_position(const AnchorSet& anchors, std::span<const double> distances) {
  const Eigen::Index n = anchors.size();
  if (n < 3) throw GeometryError("at least three anchors are required");
  if (static_cast<Eigen::Index>(distances.size()) != n) throw ParameterError("one distance per anchor is required");
  const Eigen::Vector2d origin = anchors.positions.col(0);
  const Eigen::MatrixX2d c = (anchors.positions.rightCols(n - 1).colwise() - origin).transpose();
  Eigen::VectorXd rhs(n - 1);
  for (Eigen::Index i = 1; i < n; ++i) {
    const double di = distances[static_cast<std::size_t>(i)];
    rhs(i - 1) = 0.5 * (c.row(i - 1).squaredNorm() - di * di + distances[0] * distances[0]);
  }
  const Eigen::Matrix2d normal = c.transpose() * c;
  if (std::abs(normal.determinant()) <= 1e-12 * normal.squaredNorm()) {
    throw GeometryError("anchors are collinear");
  }
  return origin + normal.inverse() * (c.transpose() * rhs);
}

namespace {

std::vector<Eigen::Vector2d> convex_hull(const Eigen::Matrix2Xd& p) {
  std::vector<Eigen::Vector2d> pts;
  for (Eigen::Index i = 0; i < p.cols(); ++i) pts.emplace_back(p.col(i));
  std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y()); });
  auto cross = [](const Eigen::Vector2d& o, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
  };
  std::vector<Eigen::Vector2d> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& q : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], q) <= 0) --k;
    hull[k++] = q;
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k > 1 ? k - 1 : k);
  return hull;
}

bool inside(const std::vector<Eigen::Vector2d>& hull, const Eigen::Vector2d& x, double tol) {
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const Eigen::Vector2d& a = hull[i];
    const Eigen::Vector2d& b = hull[(i + 1) % hull.size()];
    const Eigen::Vector2d e = b - a;
    const double side = e.x() * (x.y() - a.y()) - e.y() * (x.x() - a.x());
    if (side < -tol * e.norm()) return false;
  }
  return true;
}

}  // namespace

Eigen::Vector2d tdoa_position(const AnchorSet& anchors, std::span<const double> time_differences, double speed) {
  const Eigen::Index n = anchors.size();
  if (n < 3) throw GeometryError("at least three anchors are required");
  if (static_cast<Eigen::Index>(time_differences.size()) != n - 1) {
    throw ParameterError("one time difference per non-reference anchor is required");
  }
  if (!(speed > 0)) throw ParameterError("propagation speed must be positive");
  const Eigen::Matrix2Xd& a = anchors.positions;
  const Eigen::Vector2d centroid = a.rowwise().mean();
  const double spread = std::max(1e-9, (a.colwise() - centroid).colwise().norm().maxCoeff());

  auto residual = [&](const Eigen::VectorXd& x) {
    Eigen::VectorXd r(n - 1);
    const double r0 = (x - a.col(0)).norm();
    for (Eigen::Index i = 1; i < n; ++i) {
      r(i - 1) = ((x - a.col(i)).norm() - r0 - speed * time_differences[static_cast<std::size_t>(i - 1)]) / spread;
    }
    return r;
  };

  std::vector<Eigen::Vector2d> starts{centroid};
  for (int k = 0; k < 8; ++k) {
    const double t = k * std::numbers::pi / 4.0 + 0.1;
    starts.emplace_back(centroid + 0.6 * spread * Eigen::Vector2d(std::cos(t), std::sin(t)));
  }
  LmOptions opt;
  opt.max_iterations = 200;
  opt.fd_step = 1e-9;
  struct Candidate {
    Eigen::Vector2d x;
    double cost;
  };
  std::vector<Candidate> found;
  for (const auto& s : starts) {
    const auto fit = levenberg_marquardt<double>(residual, Eigen::VectorXd(s), opt);
    const Eigen::Vector2d x = fit.params;
    if (!x.allFinite()) continue;
    bool duplicate = false;
    for (auto& c : found) {
      if ((c.x - x).norm() < 1e-6 * spread) {
        duplicate = true;
        if (fit.cost < c.cost) c = {x, fit.cost};
      }
    }
    if (!duplicate) found.push_back({x, fit.cost});
  }
  std::vector<std::pair<double, double>> listing;
  for (const auto& c : found) listing.emplace_back(c.x.x(), c.x.y());
  if (found.empty()) throw AmbiguityError("hyperbolic positioning did not converge", listing);

  const auto hull = convex_hull(a);
  const double zero = 1e-16;
  std::vector<Candidate> in_hull;
  for (const auto& c : found) {
    if (inside(hull, c.x, 1e-9 * spread)) in_hull.push_back(c);
  }
  auto best_of = [](const std::vector<Candidate>& v) {
    return *std::min_element(v.begin(), v.end(), [](const auto& p, const auto& q) { return p.cost < q.cost; });
  };
  const auto& pool = in_hull.empty() ? found : in_hull;
  const Candidate best = best_of(pool);
  if (best.cost <= zero) {
    int exact = 0;
    for (const auto& c : pool) exact += c.cost <= zero;
    if (exact > 1) throw AmbiguityError("several positions match the time differences", listing);
  }
  return best.x;
}

DistancePolynomial calibrate(const LocalizationConfig& config) {
  const double max_range = (std::sqrt(3.0) + 1.0) * config.cell_radius + 5.0;
  if (config.calibration_points < 2 || !(config.calibration_min < max_range)) {
    throw ParameterError("invalid calibration range");
  }
  std::vector<double> y, d;
  for (int i = 0; i < config.calibration_points; ++i) {
    const double di = config.calibration_min +
                      (max_range - config.calibration_min) * i / (config.calibration_points - 1);
    d.push_back(di);
    y.push_back(config.model.mean_signal(di));
  }
  return fit_distance_polynomial(y, d, config.degree);
}

std::vector<LocalizationTrial> run_localization_trials(const LocalizationConfig& config, int trials,
                                                       std::uint64_t seed, unsigned workers) {
  if (trials < 0) throw ParameterError("trial count must be non-negative");
  const AnchorSet all = hexagonal_anchors(config.cell_radius);
  for (int k : config.anchor_counts) {
    if (k < 3 || k > all.size()) throw ParameterError("anchor counts must lie in [3, 7]");
  }
  const double max_range = (std::sqrt(3.0) + 1.0) * config.cell_radius + 5.0;
  const DistancePolynomial poly = calibrate(config);
  std::vector<std::vector<LocalizationTrial>> rows(static_cast<std::size_t>(trials));

  parallel_for(rows.size(), workers, [&](std::size_t t) {
    Rng rng = make_stream(seed, t);
    std::uniform_real_distribution<double> coord(-config.cell_radius, config.cell_radius);
    Eigen::Vector2d user;
    do {
      user << coord(rng), coord(rng);
    } while (user.norm() > config.cell_radius);

    std::vector<double> distance(static_cast<std::size_t>(all.size()));
    std::vector<bool> extrapolated(distance.size());
    for (Eigen::Index i = 0; i < all.size(); ++i) {
      const double truth = std::max(1e-6, (user - all.positions.col(i)).norm());
      const double y = averaged_rss(config.model, truth, config.sigma_x_sq, config.rss_samples, rng);
      const auto est = estimate_distance(y, poly, max_range);
      distance[static_cast<std::size_t>(i)] = est.distance;
      extrapolated[static_cast<std::size_t>(i)] = est.extrapolated;
    }
    std::vector<double> arrival(distance.size());
    std::normal_distribution<double> jitter(0.0, config.tdoa_jitter);
    for (Eigen::Index i = 0; i < all.size(); ++i) {
      arrival[static_cast<std::size_t>(i)] =
          (user - all.positions.col(i)).norm() / physics::kSpeedInWater + (config.tdoa_jitter > 0 ? jitter(rng) : 0.0);
    }

    for (const auto& method : config.methods) {
      for (int k : config.anchor_counts) {
        LocalizationTrial row;
        row.trial = static_cast<int>(t);
        row.truth = user;
        row.anchors = k;
        row.method = method;
        const AnchorSet used = all.head(k);
        if (method == "rss-lls") {
          row.estimate = lls_position(used, std::span<const double>(distance.data(), static_cast<std::size_t>(k)));
          row.extrapolated = std::any_of(extrapolated.begin(), extrapolated.begin() + k, [](bool b) { return b; });
        } else if (method == "tdoa") {
          std::vector<double> diffs;
          for (int i = 1; i < k; ++i) diffs.push_back(arrival[static_cast<std::size_t>(i)] - arrival[0]);
          try {
            row.estimate = tdoa_position(used, diffs, physics::kSpeedInWater);
          } catch (const AmbiguityError&) {
            row.estimate.setConstant(std::numeric_limits<double>::quiet_NaN());
          }
        } else {
          throw ParameterError("unknown localization method: " + method);
        }
        row.error = (row.estimate - user).norm();
        rows[t].push_back(row);
      }
    }
  });

  std::vector<LocalizationTrial> out;
  for (auto& r : rows) out.insert(out.end(), r.begin(), r.end());
  return out;
}

void write_trials_csv(std::ostream& os, const std::vector<LocalizationTrial>& trials) {
  os << "trial,true_x,true_y,est_x,est_y,err_m,n_anchors,method\n";
  const auto precision = os.precision(10);
  for (const auto& t : trials) {
    os << t.trial << ',' << t.truth.x() << ',' << t.truth.y() << ',' << t.estimate.x() << ',' << t.estimate.y() << ','
       << t.error << ',' << t.anchors << ',' << t.method << '\n';
  }
  os.precision(precision);
}

}  // namespace uwoc::locate
