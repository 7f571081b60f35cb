#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "bgtse/waveform.hpp"

namespace bgtse {

enum class WindowKind { kSqrtHann, kHann, kRect };

// Analysis/synthesis configuration shared by stft and istft. The same window
// is used on both sides (weighted overlap-add); synthesis divides by the
// per-sample sum of squared window overlaps, so reconstruction is exact for
// any config that covers every sample (hop <= window_size).
struct StftConfig {
  int window_size = 1024;
  int hop = 256;
  WindowKind window = WindowKind::kSqrtHann;
  int fft_size = 1024;  // >= window_size; frame is zero-padded to this length
  bool center_pad = false;  // reflect-pad window_size/2 on both ends before framing

  static StftConfig frontend() { return {1024, 256, WindowKind::kSqrtHann, 1024, false}; }
  static StftConfig backend() { return {4096, 1024, WindowKind::kSqrtHann, 4096, false}; }
  // Feature-parity config: 16-sample window zero-padded to a 64-point FFT,
  // hop 8 (matches a time-domain encoder with kernel 16 / stride 8).
  static StftConfig feature64() { return {16, 8, WindowKind::kSqrtHann, 64, false}; }

  int bins() const { return fft_size / 2 + 1; }
  double bin_hz(int f, double sample_rate) const { return f * sample_rate / fft_size; }

  // Throws ConfigError on invalid geometry or a window/hop pair that leaves
  // samples uncovered.
  void validate() const;
};

// Windows are sampled at half-integer positions, w[n] = f((n + 0.5)/N), so
// every tap is strictly positive for the Hann family. This keeps the
// overlap-add normalizer nonzero at the very first/last sample and makes the
// round trip exact without center padding.
Eigen::VectorXd make_window(WindowKind kind, int size);

// Complex one-sided STFT of a multichannel signal: C matrices of shape F x K.
struct SpectrogramTensor {
  std::vector<Eigen::MatrixXcd> channels;  // each F x K
  StftConfig config;
  double sample_rate = 8000.0;
  Eigen::Index original_length = 0;

  Eigen::Index channel_count() const { return static_cast<Eigen::Index>(channels.size()); }
  Eigen::Index bin_count() const { return channels.empty() ? 0 : channels[0].rows(); }
  Eigen::Index frame_count() const { return channels.empty() ? 0 : channels[0].cols(); }

  // C-row matrix of bin f across all frames (C x K). Gathers row f from each
  // channel; used by the per-frequency beamformer solves.
  Eigen::MatrixXcd bin_across_channels(Eigen::Index f) const;

  SpectrogramTensor single_channel(Eigen::Index c) const;
};

// Number of frames covering a signal of length T: frame k spans
// [k*hop, k*hop + window_size), the tail is zero-padded to a whole frame.
Eigen::Index frame_count(Eigen::Index length, const StftConfig& cfg);

SpectrogramTensor stft(const MultiChannelWaveform& x, const StftConfig& cfg);
SpectrogramTensor stft(const Waveform& x, const StftConfig& cfg);

// Weighted overlap-add synthesis, truncated or zero-padded to target_length.
MultiChannelWaveform istft(const SpectrogramTensor& s, Eigen::Index target_length);
// Convenience: synthesize to the recorded original length.
MultiChannelWaveform istft(const SpectrogramTensor& s);

// Zero padding (a whole number of hops, at least one window) that gives every
// true sample a fully overlapped analysis. Synthesis divides by the
// overlap-add normalizer, which is tiny at the ends of an unpadded signal and
// amplifies any inconsistency that beamformer weights or masks introduce into
// the coefficients; modified-spectrum paths pad by this much and crop after.
Eigen::Index stft_edge_padding(const StftConfig& cfg);

// The signal extended with `pad` zeros at both ends.
MultiChannelWaveform zero_pad_edges(const MultiChannelWaveform& x, Eigen::Index pad);
Waveform zero_pad_edges(const Waveform& x, Eigen::Index pad);

}  // namespace bgtse
