#include "bgtse/stft.hpp"

#include <cmath>
#include <numbers>

#include "bgtse/fft.hpp"

namespace bgtse {

void StftConfig::validate() const {
  if (window_size < 1) throw ConfigError("stft: window_size must be >= 1");
  if (hop < 1) throw ConfigError("stft: hop must be >= 1");
  if (hop > window_size)
    throw ConfigError("stft: hop > window_size leaves gaps (overlap-add cannot cover them)");
  if (fft_size < window_size) throw ConfigError("stft: fft_size must be >= window_size");
}

Eigen::VectorXd make_window(WindowKind kind, int size) {
  Eigen::VectorXd w(size);
  const double n = static_cast<double>(size);
  for (int i = 0; i < size; ++i) {
    const double s = std::sin(std::numbers::pi * (i + 0.5) / n);
    switch (kind) {
      case WindowKind::kSqrtHann: w[i] = s; break;
      case WindowKind::kHann: w[i] = s * s; break;
      case WindowKind::kRect: w[i] = 1.0; break;
    }
  }
  return w;
}

Eigen::Index frame_count(Eigen::Index length, const StftConfig& cfg) {
  if (length <= 0) return 0;
  const Eigen::Index padded = length + (cfg.center_pad ? 2 * (cfg.window_size / 2) : 0);
  if (padded <= cfg.window_size) return 1;
  return (padded - cfg.window_size + cfg.hop - 1) / cfg.hop + 1;
}

namespace {

// Reflect an out-of-range index back into [0, n), bouncing off both ends
// without repeating the boundary sample.
Eigen::Index reflect_index(Eigen::Index i, Eigen::Index n) {
  if (n == 1) return 0;
  const Eigen::Index period = 2 * (n - 1);
  i = ((i % period) + period) % period;
  return i < n ? i : period - i;
}

Eigen::VectorXd maybe_center_pad(const Eigen::VectorXd& x, const StftConfig& cfg) {
  if (!cfg.center_pad) return x;
  const Eigen::Index pad = cfg.window_size / 2;
  Eigen::VectorXd out(x.size() + 2 * pad);
  for (Eigen::Index i = 0; i < out.size(); ++i)
    out[i] = x[reflect_index(i - pad, x.size())];
  return out;
}

}  // namespace

Eigen::MatrixXcd SpectrogramTensor::bin_across_channels(Eigen::Index f) const {
  Eigen::MatrixXcd v(channel_count(), frame_count());
  for (Eigen::Index c = 0; c < channel_count(); ++c) v.row(c) = channels[c].row(f);
  return v;
}

SpectrogramTensor SpectrogramTensor::single_channel(Eigen::Index c) const {
  SpectrogramTensor out;
  out.channels = {channels.at(static_cast<size_t>(c))};
  out.config = config;
  out.sample_rate = sample_rate;
  out.original_length = original_length;
  return out;
}

SpectrogramTensor stft(const MultiChannelWaveform& x, const StftConfig& cfg) {
  cfg.validate();
  const Eigen::Index num_channels = x.channel_count();
  const Eigen::Index frames = frame_count(x.length(), cfg);
  const Eigen::Index bins = cfg.bins();

  SpectrogramTensor out;
  out.config = cfg;
  out.sample_rate = x.sample_rate;
  out.original_length = x.length();
  out.channels.assign(static_cast<size_t>(num_channels),
                      Eigen::MatrixXcd::Zero(bins, frames));
  if (frames == 0) return out;

  const Eigen::VectorXd win = make_window(cfg.window, cfg.window_size);
  RealFft fft(cfg.fft_size);
  std::vector<double> frame(static_cast<size_t>(cfg.fft_size), 0.0);
  std::vector<std::complex<double>> spec(static_cast<size_t>(bins));

  for (Eigen::Index c = 0; c < num_channels; ++c) {
    const Eigen::VectorXd sig = maybe_center_pad(x.channels.row(c).transpose(), cfg);
    for (Eigen::Index k = 0; k < frames; ++k) {
      const Eigen::Index start = k * cfg.hop;
      for (int i = 0; i < cfg.window_size; ++i) {
        const Eigen::Index n = start + i;
        frame[static_cast<size_t>(i)] = (n < sig.size()) ? sig[n] * win[i] : 0.0;
      }
      std::fill(frame.begin() + cfg.window_size, frame.end(), 0.0);
      fft.forward(frame.data(), spec.data());
      for (Eigen::Index f = 0; f < bins; ++f) out.channels[static_cast<size_t>(c)](f, k) = spec[static_cast<size_t>(f)];
    }
  }
  return out;
}

SpectrogramTensor stft(const Waveform& x, const StftConfig& cfg) {
  return stft(MultiChannelWaveform::from_mono(x), cfg);
}

MultiChannelWaveform istft(const SpectrogramTensor& s, Eigen::Index target_length) {
  const StftConfig& cfg = s.config;
  cfg.validate();
  const Eigen::Index num_channels = s.channel_count();
  const Eigen::Index frames = s.frame_count();
  const Eigen::Index pad = cfg.center_pad ? cfg.window_size / 2 : 0;

  MultiChannelWaveform out = MultiChannelWaveform::zeros(
      std::max<Eigen::Index>(num_channels, 1), target_length, s.sample_rate);
  if (frames == 0 || num_channels == 0 || target_length == 0) return out;

  const Eigen::Index synth_len = (frames - 1) * cfg.hop + cfg.window_size;
  const Eigen::VectorXd win = make_window(cfg.window, cfg.window_size);

  // Per-sample overlap-add normalizer: sum of squared windows over the frames
  // that actually exist. Dividing by it makes reconstruction exact wherever
  // a sample was covered at all.
  Eigen::VectorXd norm = Eigen::VectorXd::Zero(synth_len);
  for (Eigen::Index k = 0; k < frames; ++k)
    norm.segment(k * cfg.hop, cfg.window_size) += win.cwiseProduct(win);

  RealFft fft(cfg.fft_size);
  std::vector<std::complex<double>> spec(static_cast<size_t>(cfg.bins()));
  std::vector<double> frame(static_cast<size_t>(cfg.fft_size));

  for (Eigen::Index c = 0; c < num_channels; ++c) {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(synth_len);
    const Eigen::MatrixXcd& spec_mat = s.channels[static_cast<size_t>(c)];
    for (Eigen::Index k = 0; k < frames; ++k) {
      for (Eigen::Index f = 0; f < spec_mat.rows(); ++f) spec[static_cast<size_t>(f)] = spec_mat(f, k);
      fft.inverse(spec.data(), frame.data());
      for (int i = 0; i < cfg.window_size; ++i)
        acc[k * cfg.hop + i] += frame[static_cast<size_t>(i)] * win[i];
    }
    for (Eigen::Index n = 0; n < synth_len; ++n)
      acc[n] = norm[n] > 1e-300 ? acc[n] / norm[n] : 0.0;

    const Eigen::Index copy = std::min(target_length, synth_len - pad);
    out.channels.row(c).head(copy) = acc.segment(pad, copy).transpose();
  }
  return out;
}

MultiChannelWaveform istft(const SpectrogramTensor& s) {
  return istft(s, s.original_length);
}

Eigen::Index stft_edge_padding(const StftConfig& cfg) {
  const Eigen::Index hops = (cfg.window_size + cfg.hop - 1) / cfg.hop;
  return hops * static_cast<Eigen::Index>(cfg.hop);
}

MultiChannelWaveform zero_pad_edges(const MultiChannelWaveform& x, Eigen::Index pad) {
  if (pad < 0) throw ConfigError("zero_pad_edges: negative padding");
  MultiChannelWaveform out =
      MultiChannelWaveform::zeros(x.channel_count(), x.length() + 2 * pad, x.sample_rate);
  out.channels.middleCols(pad, x.length()) = x.channels;
  return out;
}

Waveform zero_pad_edges(const Waveform& x, Eigen::Index pad) {
  if (pad < 0) throw ConfigError("zero_pad_edges: negative padding");
  Eigen::VectorXd s = Eigen::VectorXd::Zero(x.length() + 2 * pad);
  s.segment(pad, x.length()) = x.samples;
  return {std::move(s), x.sample_rate};
}

}  // namespace bgtse
