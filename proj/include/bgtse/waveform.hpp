#pragma once

#include <Eigen/Dense>

#include "bgtse/errors.hpp"

namespace bgtse {

// Mono time-domain signal. Samples are dimensionless amplitudes.
struct Waveform {
  Eigen::VectorXd samples;
  double sample_rate = 8000.0;

  Waveform() = default;
  Waveform(Eigen::VectorXd s, double rate) : samples(std::move(s)), sample_rate(rate) {}

  Eigen::Index length() const { return samples.size(); }
  double energy() const { return samples.squaredNorm(); }

  // Checks the type invariants (positive rate, finite samples). Called at I/O
  // and scene boundaries, not in inner loops.
  void validate() const;
};

// C synchronous channels of equal length and sample rate, stored row-major
// (row c = channel c).
struct MultiChannelWaveform {
  Eigen::MatrixXd channels;  // C x T
  double sample_rate = 8000.0;

  MultiChannelWaveform() = default;
  MultiChannelWaveform(Eigen::MatrixXd ch, double rate)
      : channels(std::move(ch)), sample_rate(rate) {}

  static MultiChannelWaveform zeros(Eigen::Index num_channels, Eigen::Index length,
                                    double rate) {
    return {Eigen::MatrixXd::Zero(num_channels, length), rate};
  }
  static MultiChannelWaveform from_mono(const Waveform& w) {
    MultiChannelWaveform out;
    out.channels = w.samples.transpose();
    out.sample_rate = w.sample_rate;
    return out;
  }

  Eigen::Index channel_count() const { return channels.rows(); }
  Eigen::Index length() const { return channels.cols(); }

  Waveform channel(Eigen::Index c) const {
    return {channels.row(c).transpose(), sample_rate};
  }
  void set_channel(Eigen::Index c, const Waveform& w) {
    channels.row(c) = w.samples.transpose();
  }

  void validate() const;
};

}  // namespace bgtse
