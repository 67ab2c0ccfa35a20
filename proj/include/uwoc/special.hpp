#pragma once

#include <cmath>
#include <numbers>

namespace uwoc {

/// Gaussian tail probability Q(x) = P(Z > x), Z ~ N(0, 1).
template <typename Scalar>
inline Scalar gaussian_q(Scalar x) {
  using std::erfc;
  return Scalar(0.5) * erfc(x / std::numbers::sqrt2_v<Scalar>);
}

inline double dbm_to_watt(double dbm) { return std::pow(10.0, dbm / 10.0) * 1e-3; }
inline double watt_to_dbm(double watt) { return 10.0 * std::log10(watt / 1e-3); }
inline double to_db(double ratio) { return 10.0 * std::log10(ratio); }

namespace physics {
inline constexpr double kSpeedOfLight = 299792458.0;      // m/s, vacuum
inline constexpr double kWaterRefractiveIndex = 1.33;
inline constexpr double kSpeedInWater = kSpeedOfLight / kWaterRefractiveIndex;
inline constexpr double kElectronCharge = 1.602176634e-19;  // C
inline constexpr double kPlanck = 6.62607015e-34;           // J s
inline constexpr double kBoltzmann = 1.380649e-23;          // J/K
}  // namespace physics

}  // namespace uwoc
