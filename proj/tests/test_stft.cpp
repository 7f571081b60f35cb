#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "bgtse/rng.hpp"
#include "bgtse/stft.hpp"

using namespace bgtse;

namespace {

Waveform random_signal(uint64_t seed, Eigen::Index n, double rate = 8000.0) {
  Rng rng(seed);
  Eigen::VectorXd x(n);
  for (Eigen::Index i = 0; i < n; ++i) x[i] = rng.gaussian();
  return {std::move(x), rate};
}

double rel_l2_error(const Eigen::VectorXd& ref, const Eigen::VectorXd& est) {
  return (ref - est).norm() / ref.norm();
}

// O(N^2) reference DFT of one zero-padded frame.
Eigen::VectorXcd naive_dft(const Eigen::VectorXd& frame, int fft_size) {
  Eigen::VectorXcd out(fft_size / 2 + 1);
  for (int k = 0; k <= fft_size / 2; ++k) {
    std::complex<double> acc = 0.0;
    for (int n = 0; n < frame.size(); ++n)
      acc += frame[n] * std::polar(1.0, -2.0 * std::numbers::pi * k * n / fft_size);
    out[k] = acc;
  }
  return out;
}

}  // namespace

TEST_CASE("frame_count matches a direct covering construction") {
  StftConfig cfg;
  cfg.window_size = 32;
  cfg.hop = 8;
  cfg.fft_size = 32;

  CHECK(frame_count(0, cfg) == 0);
  CHECK(frame_count(1, cfg) == 1);
  CHECK(frame_count(32, cfg) == 1);
  CHECK(frame_count(33, cfg) == 2);

  // oracle: smallest K with (K-1)*hop + window >= length
  for (Eigen::Index len = 1; len <= 200; ++len) {
    Eigen::Index k = 1;
    while ((k - 1) * cfg.hop + cfg.window_size < len) ++k;
    CAPTURE(len);
    CHECK(frame_count(len, cfg) == k);
  }
}

TEST_CASE("windows are strictly positive and consistent across kinds") {
  for (int n : {16, 64, 1024}) {
    const Eigen::VectorXd sq = make_window(WindowKind::kSqrtHann, n);
    const Eigen::VectorXd hn = make_window(WindowKind::kHann, n);
    const Eigen::VectorXd rc = make_window(WindowKind::kRect, n);
    CHECK(sq.minCoeff() > 0.0);
    CHECK(hn.minCoeff() > 0.0);
    CHECK(rc.isApproxToConstant(1.0));
    // sqrt-hann squared is hann at the same (half-sample) positions
    CHECK((sq.cwiseProduct(sq) - hn).cwiseAbs().maxCoeff() == doctest::Approx(0.0).epsilon(1e-15));
    // symmetry of the half-sample grid
    for (int i = 0; i < n; ++i) CHECK(sq[i] == doctest::Approx(sq[n - 1 - i]).epsilon(1e-12));
  }
}

TEST_CASE("stft of one rectangular frame equals a naive DFT") {
  StftConfig cfg;
  cfg.window_size = 48;
  cfg.hop = 48;
  cfg.fft_size = 64;
  cfg.window = WindowKind::kRect;

  const Waveform x = random_signal(7, 48);
  const SpectrogramTensor s = stft(x, cfg);
  REQUIRE(s.frame_count() == 1);
  REQUIRE(s.bin_count() == 33);

  Eigen::VectorXd frame = Eigen::VectorXd::Zero(48);
  frame = x.samples;
  const Eigen::VectorXcd ref = naive_dft(frame, 64);
  for (int k = 0; k <= 32; ++k) {
    CAPTURE(k);
    CHECK(std::abs(s.channels[0](k, 0) - ref[k]) < 1e-9);
  }
}

TEST_CASE("round trip is exact for the standard analysis configs") {
  for (const StftConfig& cfg : {StftConfig::frontend(), StftConfig::backend(),
                                StftConfig::feature64()}) {
    for (int i = 0; i < 10; ++i) {
      const auto len = static_cast<Eigen::Index>(3000 + 977 * i);
      const Waveform x = random_signal(100 + static_cast<uint64_t>(i), len);
      const Waveform y = istft(stft(x, cfg), x.length()).channel(0);
      REQUIRE(y.length() == x.length());
      CHECK(rel_l2_error(x.samples, y.samples) < 1e-12);
    }
  }
}

TEST_CASE("round trip is exact for irregular window/hop combinations") {
  struct Combo {
    int window, hop, fft;
    WindowKind kind;
  };
  const Combo combos[] = {
      {100, 37, 128, WindowKind::kSqrtHann},
      {64, 64, 64, WindowKind::kRect},
      {33, 11, 64, WindowKind::kHann},
      {256, 1, 256, WindowKind::kSqrtHann},
  };
  for (const auto& c : combos) {
    StftConfig cfg;
    cfg.window_size = c.window;
    cfg.hop = c.hop;
    cfg.fft_size = c.fft;
    cfg.window = c.kind;
    const Waveform x = random_signal(42, 700);
    const Waveform y = istft(stft(x, cfg), x.length()).channel(0);
    CAPTURE(c.window);
    CAPTURE(c.hop);
    CHECK(rel_l2_error(x.samples, y.samples) < 1e-12);
  }
}

TEST_CASE("round trip with center padding") {
  StftConfig cfg = StftConfig::frontend();
  cfg.center_pad = true;
  const Waveform x = random_signal(5, 5000);
  const Waveform y = istft(stft(x, cfg), x.length()).channel(0);
  CHECK(rel_l2_error(x.samples, y.samples) < 1e-12);
}

TEST_CASE("multichannel stft equals stacked per-channel stfts") {
  const StftConfig cfg = StftConfig::frontend();
  MultiChannelWaveform x = MultiChannelWaveform::zeros(3, 4000, 8000.0);
  for (Eigen::Index c = 0; c < 3; ++c)
    x.set_channel(c, random_signal(200 + static_cast<uint64_t>(c), 4000));

  const SpectrogramTensor multi = stft(x, cfg);
  REQUIRE(multi.channel_count() == 3);
  for (Eigen::Index c = 0; c < 3; ++c) {
    const SpectrogramTensor mono = stft(x.channel(c), cfg);
    CHECK((multi.channels[static_cast<size_t>(c)] - mono.channels[0]).cwiseAbs().maxCoeff() ==
          doctest::Approx(0.0));
  }
}

TEST_CASE("istft length handling pads and truncates") {
  const StftConfig cfg = StftConfig::frontend();
  const Waveform x = random_signal(9, 3000);
  const SpectrogramTensor s = stft(x, cfg);

  const MultiChannelWaveform longer = istft(s, 3500);
  REQUIRE(longer.length() == 3500);
  CHECK(longer.channels.row(0).tail(500).cwiseAbs().maxCoeff() < 1e-9);

  const MultiChannelWaveform shorter = istft(s, 1000);
  REQUIRE(shorter.length() == 1000);
  CHECK(rel_l2_error(x.samples.head(1000), shorter.channels.row(0).transpose()) < 1e-12);
}

TEST_CASE("config validation rejects uncovering geometries") {
  StftConfig cfg;
  cfg.window_size = 64;
  cfg.hop = 65;  // gaps between frames
  cfg.fft_size = 64;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  cfg.hop = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  cfg.hop = 16;
  cfg.fft_size = 32;  // fft shorter than window
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("spectrogram helpers expose bins across channels") {
  const StftConfig cfg = StftConfig::feature64();
  MultiChannelWaveform x = MultiChannelWaveform::zeros(2, 256, 8000.0);
  x.set_channel(0, random_signal(1, 256));
  x.set_channel(1, random_signal(2, 256));
  const SpectrogramTensor s = stft(x, cfg);

  const Eigen::MatrixXcd bin5 = s.bin_across_channels(5);
  REQUIRE(bin5.rows() == 2);
  REQUIRE(bin5.cols() == s.frame_count());
  CHECK(bin5(0, 3) == s.channels[0](5, 3));
  CHECK(bin5(1, 3) == s.channels[1](5, 3));

  const SpectrogramTensor one = s.single_channel(1);
  CHECK(one.channel_count() == 1);
  CHECK((one.channels[0] - s.channels[1]).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}
