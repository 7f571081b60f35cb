#include "bgtse/features.hpp"

#include <cmath>

#include "bgtse/errors.hpp"

namespace bgtse {

namespace {
constexpr double kMagFloor = 1e-12;
constexpr double kCoherenceEps = 1e-12;
}  // namespace

void TfMask::validate() const {
  if (!values.allFinite()) throw NumericError("mask: non-finite entries");
  if (values.size() > 0 && (values.minCoeff() < 0.0 || values.maxCoeff() > 1.0))
    throw NumericError("mask: entries outside [0, 1]");
}

void FeatureTensor::validate() const {
  for (const auto& m : values) {
    if (!m.allFinite()) throw NumericError("feature: non-finite entries");
    if (m.size() > 0 && (m.minCoeff() < -1.0 - 1e-12 || m.maxCoeff() > 1.0 + 1e-12))
      throw NumericError("feature: entries outside [-1, 1]");
  }
}

std::vector<MicPair> default_pairs(Eigen::Index mic_count) {
  std::vector<MicPair> pairs;
  for (Eigen::Index i = 0; i < mic_count; ++i)
    for (Eigen::Index j = i + 1; j < mic_count; ++j) pairs.emplace_back(i, j);
  return pairs;
}

namespace {

void check_pairs(const SpectrogramTensor& s, const std::vector<MicPair>& pairs) {
  const auto c = static_cast<Eigen::Index>(s.channels.size());
  if (c < 2) throw ConfigError("features: need at least 2 channels");
  for (const auto& [i, j] : pairs)
    if (i < 0 || j < 0 || i >= c || j >= c)
      throw ConfigError("features: mic pair index out of range");
}

}  // namespace

FeatureTensor cos_ipd(const SpectrogramTensor& s, const std::vector<MicPair>& pairs) {
  check_pairs(s, pairs);
  FeatureTensor out;
  out.values.reserve(pairs.size());
  for (const auto& [i, j] : pairs) {
    const Eigen::MatrixXcd& a = s.channels[static_cast<size_t>(i)];
    const Eigen::MatrixXcd& b = s.channels[static_cast<size_t>(j)];
    Eigen::MatrixXd m(a.rows(), a.cols());
    for (Eigen::Index k = 0; k < a.cols(); ++k) {
      for (Eigen::Index f = 0; f < a.rows(); ++f) {
        const double ma = std::abs(a(f, k));
        const double mb = std::abs(b(f, k));
        // cos(angle a - angle b) = Re(a conj(b)) / (|a||b|)
        m(f, k) = (ma < kMagFloor || mb < kMagFloor)
                      ? 0.0
                      : (a(f, k) * std::conj(b(f, k))).real() / (ma * mb);
      }
    }
    out.values.push_back(std::move(m));
  }
  return out;
}

FeatureTensor angle_feature(const SpectrogramTensor& s, const SteeringVector& d,
                            const std::vector<MicPair>& pairs) {
  check_pairs(s, pairs);
  if (pairs.empty()) throw ConfigError("angle_feature: need at least one pair");
  const Eigen::Index bins = s.channels[0].rows();
  const Eigen::Index frames = s.channels[0].cols();
  if (d.values.rows() != bins ||
      d.values.cols() < static_cast<Eigen::Index>(s.channels.size()))
    throw ConfigError("angle_feature: steering vector shape does not match spectrogram");

  Eigen::MatrixXd af = Eigen::MatrixXd::Zero(bins, frames);
  for (const auto& [i, j] : pairs) {
    const Eigen::MatrixXcd& a = s.channels[static_cast<size_t>(i)];
    const Eigen::MatrixXcd& b = s.channels[static_cast<size_t>(j)];
    for (Eigen::Index k = 0; k < frames; ++k) {
      for (Eigen::Index f = 0; f < bins; ++f) {
        const double ma = std::abs(a(f, k));
        const double mb = std::abs(b(f, k));
        if (ma < kMagFloor || mb < kMagFloor) continue;
        // cos(IPD_obs - IPD_steer) = Re((a conj b) conj(d_i conj d_j)) / (|a||b|)
        // (steering entries are unit modulus)
        const std::complex<double> obs = a(f, k) * std::conj(b(f, k));
        const std::complex<double> steer = d.values(f, i) * std::conj(d.values(f, j));
        af(f, k) += (obs * std::conj(steer)).real() / (ma * mb);
      }
    }
  }
  af /= static_cast<double>(pairs.size());
  FeatureTensor out;
  out.values.push_back(std::move(af));
  return out;
}

namespace {

const Eigen::MatrixXcd& single_channel_of(const SpectrogramTensor& s, const char* what) {
  if (s.channels.size() != 1)
    throw ConfigError(std::string(what) + ": expected a single-channel spectrogram");
  return s.channels[0];
}

}  // namespace

TfMask irm(const SpectrogramTensor& target_spec, const SpectrogramTensor& interferer_spec,
           double exponent) {
  const Eigen::MatrixXcd& xs = single_channel_of(target_spec, "irm");
  const Eigen::MatrixXcd& xn = single_channel_of(interferer_spec, "irm");
  if (xs.rows() != xn.rows() || xs.cols() != xn.cols())
    throw ConfigError("irm: spectrogram shapes differ");
  if (!(exponent > 0.0)) throw ConfigError("irm: exponent must be > 0");

  TfMask m;
  m.values.resize(xs.rows(), xs.cols());
  for (Eigen::Index k = 0; k < xs.cols(); ++k) {
    for (Eigen::Index f = 0; f < xs.rows(); ++f) {
      const double ps = std::pow(std::abs(xs(f, k)), exponent);
      const double pn = std::pow(std::abs(xn(f, k)), exponent);
      const double denom = ps + pn;
      m.values(f, k) = denom > 0.0 ? ps / denom : 0.0;
    }
  }
  return m;
}

SpectrogramTensor apply_mask(const SpectrogramTensor& s, const TfMask& m) {
  const Eigen::MatrixXcd& x = single_channel_of(s, "apply_mask");
  if (m.values.rows() != x.rows() || m.values.cols() != x.cols())
    throw ConfigError("apply_mask: mask shape does not match spectrogram");
  SpectrogramTensor out = s;
  out.channels[0] = x.cwiseProduct(m.values.cast<std::complex<double>>());
  return out;
}

TfMask coherence_mask(const SpectrogramTensor& y_spec, const SpectrogramTensor& z_spec,
                      double smoothing) {
  const Eigen::MatrixXcd& y = single_channel_of(y_spec, "coherence_mask");
  const Eigen::MatrixXcd& z = single_channel_of(z_spec, "coherence_mask");
  if (y.rows() != z.rows() || y.cols() != z.cols())
    throw ConfigError("coherence_mask: spectrogram shapes differ");
  if (!(smoothing > 0.0 && smoothing < 1.0))
    throw ConfigError("coherence_mask: smoothing must lie in (0, 1)");

  const double lam = smoothing;
  Eigen::VectorXd s_yy = Eigen::VectorXd::Zero(y.rows());
  Eigen::VectorXd s_zz = Eigen::VectorXd::Zero(y.rows());
  Eigen::VectorXcd s_yz = Eigen::VectorXcd::Zero(y.rows());

  TfMask m;
  m.values.resize(y.rows(), y.cols());
  for (Eigen::Index k = 0; k < y.cols(); ++k) {
    s_yy = lam * s_yy + (1.0 - lam) * y.col(k).cwiseAbs2();
    s_zz = lam * s_zz + (1.0 - lam) * z.col(k).cwiseAbs2();
    s_yz = lam * s_yz + (1.0 - lam) * y.col(k).cwiseProduct(z.col(k).conjugate());
    for (Eigen::Index f = 0; f < y.rows(); ++f) {
      const double coh = s_yz[f].real() / std::sqrt(s_yy[f] * s_zz[f] + kCoherenceEps);
      m.values(f, k) = std::clamp(coh, 0.0, 1.0);
    }
  }
  return m;
}

}  // namespace bgtse
