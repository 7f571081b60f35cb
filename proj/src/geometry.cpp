#include "bgtse/geometry.hpp"

#include <cmath>
#include <numbers>

namespace bgtse {

namespace {
constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kRadToDeg = 180.0 / std::numbers::pi;
}  // namespace

Doa::Doa(double az, double el) : azimuth_deg(az), elevation_deg(el) {
  if (!(az >= 0.0 && az < 360.0))
    throw ConfigError("doa: azimuth must lie in [0, 360)");
  if (!(el >= -90.0 && el <= 90.0))
    throw ConfigError("doa: elevation must lie in [-90, 90]");
}

Doa Doa::wrapped(double az, double el) {
  double a = std::fmod(az, 360.0);
  if (a < 0.0) a += 360.0;
  if (a >= 360.0) a = 0.0;  // fmod rounding at the seam
  return Doa(a, std::clamp(el, -90.0, 90.0));
}

Eigen::Vector3d Doa::unit_vector() const {
  const double az = azimuth_deg * kDegToRad;
  const double el = elevation_deg * kDegToRad;
  return {std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el)};
}

void ArrayGeometry::validate() const {
  if (mic_positions.empty()) throw ConfigError("geometry: needs >= 1 microphone");
  for (size_t i = 0; i < mic_positions.size(); ++i) {
    if (!mic_positions[i].allFinite()) throw ConfigError("geometry: non-finite mic position");
    for (size_t j = i + 1; j < mic_positions.size(); ++j)
      if ((mic_positions[i] - mic_positions[j]).norm() < 1e-12)
        throw ConfigError("geometry: coincident microphones");
  }
}

ArrayGeometry circular_array(int mic_count, double radius_m) {
  if (mic_count < 1) throw ConfigError("circular_array: mic_count must be >= 1");
  if (!(radius_m > 0.0)) throw ConfigError("circular_array: radius must be > 0");
  ArrayGeometry g;
  g.mic_positions.reserve(static_cast<size_t>(mic_count));
  for (int m = 0; m < mic_count; ++m) {
    const double phi = 2.0 * std::numbers::pi * m / mic_count;
    g.mic_positions.emplace_back(radius_m * std::cos(phi), radius_m * std::sin(phi), 0.0);
  }
  return g;
}

Eigen::VectorXd plane_wave_delays(const ArrayGeometry& g, const Doa& doa, double c_sound) {
  if (!(c_sound > 0.0)) throw ConfigError("plane_wave_delays: c_sound must be > 0");
  const Eigen::Vector3d u = doa.unit_vector();
  Eigen::VectorXd tau(g.mic_count());
  for (Eigen::Index c = 0; c < g.mic_count(); ++c)
    tau[c] = -g.mic_positions[static_cast<size_t>(c)].dot(u) / c_sound;
  return tau;
}

SteeringVector steering_vector(const ArrayGeometry& g, const Doa& doa, const StftConfig& cfg,
                               double sample_rate, double c_sound) {
  const Eigen::VectorXd tau = plane_wave_delays(g, doa, c_sound);
  const Eigen::Index bins = cfg.bins();

  SteeringVector d;
  d.doa = doa;
  d.freq_hz.resize(bins);
  d.values.resize(bins, g.mic_count());
  for (Eigen::Index f = 0; f < bins; ++f) {
    const double hz = cfg.bin_hz(static_cast<int>(f), sample_rate);
    d.freq_hz[f] = hz;
    for (Eigen::Index c = 0; c < g.mic_count(); ++c) {
      const double phase = -2.0 * std::numbers::pi * hz * tau[c];
      d.values(f, c) = std::polar(1.0, phase);
    }
  }
  return d;
}

double angular_spacing_deg(const Doa& a, const Doa& b) {
  const double dot = std::clamp(a.unit_vector().dot(b.unit_vector()), -1.0, 1.0);
  return std::acos(dot) * kRadToDeg;
}

}  // namespace bgtse
