#pragma once

#include <Eigen/Dense>

#include "bgtse/stft.hpp"

namespace bgtse {

// Direction of arrival, degrees. Azimuth in [0, 360), elevation in [-90, 90].
struct Doa {
  double azimuth_deg = 0.0;
  double elevation_deg = 0.0;

  Doa() = default;
  Doa(double az, double el = 0.0);

  // Unit vector pointing from the array toward the source.
  Eigen::Vector3d unit_vector() const;

  // Construction that wraps azimuth into [0, 360) and clamps elevation.
  static Doa wrapped(double az, double el = 0.0);
};

// Microphone positions in meters, array-local frame, origin at array center.
struct ArrayGeometry {
  std::vector<Eigen::Vector3d> mic_positions;

  Eigen::Index mic_count() const { return static_cast<Eigen::Index>(mic_positions.size()); }
  double pair_distance(Eigen::Index i, Eigen::Index j) const {
    return (mic_positions[static_cast<size_t>(i)] - mic_positions[static_cast<size_t>(j)]).norm();
  }
  void validate() const;
};

// Mics equally spaced on a horizontal circle, mic 0 at azimuth 0.
ArrayGeometry circular_array(int mic_count, double radius_m);

constexpr double kDefaultSoundSpeed = 343.0;  // m/s

// Plane-wave propagation delay per mic, seconds. tau_c = -(p_c . u)/c where u
// points from the array toward the source: a mic displaced toward the source
// hears the wave earlier (more negative delay).
Eigen::VectorXd plane_wave_delays(const ArrayGeometry& g, const Doa& doa,
                                  double c_sound = kDefaultSoundSpeed);

// Free-field/far-field steering matrix, d[f][c] = exp(-j 2 pi f_Hz tau_c).
// Unit modulus everywhere.
struct SteeringVector {
  Eigen::MatrixXcd values;   // F x C
  Eigen::VectorXd freq_hz;   // per bin
  Doa doa;
};

SteeringVector steering_vector(const ArrayGeometry& g, const Doa& doa, const StftConfig& cfg,
                               double sample_rate, double c_sound = kDefaultSoundSpeed);

// Great-circle angle between two directions, degrees in [0, 180].
double angular_spacing_deg(const Doa& a, const Doa& b);

}  // namespace bgtse
