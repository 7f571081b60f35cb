#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "bgtse/features.hpp"
#include "bgtse/metrics.hpp"
#include "bgtse/rng.hpp"

using namespace bgtse;
using cd = std::complex<double>;

namespace {

SpectrogramTensor tensor_of(std::vector<Eigen::MatrixXcd> channels) {
  SpectrogramTensor s;
  const auto bins = channels[0].rows();
  s.config.window_size = 2 * (static_cast<int>(bins) - 1);
  s.config.hop = std::max(1, s.config.window_size / 2);
  s.config.fft_size = s.config.window_size;
  s.original_length = channels[0].cols() * s.config.hop;
  s.channels = std::move(channels);
  return s;
}

Eigen::MatrixXcd random_complex(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Eigen::MatrixXcd m(rows, cols);
  for (Eigen::Index k = 0; k < cols; ++k)
    for (Eigen::Index f = 0; f < rows; ++f) m(f, k) = cd(rng.gaussian(), rng.gaussian());
  return m;
}

}  // namespace

TEST_CASE("default_pairs enumerates unordered pairs in order") {
  const auto p4 = default_pairs(4);
  REQUIRE(p4.size() == 6);
  CHECK(p4[0] == MicPair{0, 1});
  CHECK(p4[1] == MicPair{0, 2});
  CHECK(p4[2] == MicPair{0, 3});
  CHECK(p4[3] == MicPair{1, 2});
  CHECK(p4[4] == MicPair{1, 3});
  CHECK(p4[5] == MicPair{2, 3});
  CHECK(default_pairs(2).size() == 1);
  CHECK(default_pairs(1).empty());
}

TEST_CASE("cosIPD hits the textbook values") {
  Rng rng(1);
  const Eigen::MatrixXcd a = random_complex(9, 6, rng);

  SUBCASE("identical channels give +1") {
    const auto t = tensor_of({a, a});
    const FeatureTensor f = cos_ipd(t, default_pairs(2));
    REQUIRE(f.values.size() == 1);
    CHECK((f.values[0].array() - 1.0).abs().maxCoeff() < 1e-12);
    CHECK_NOTHROW(f.validate());
  }
  SUBCASE("antiphase gives -1, quadrature gives 0") {
    const auto anti = tensor_of({a, -a});
    CHECK((cos_ipd(anti, default_pairs(2)).values[0].array() + 1.0).abs().maxCoeff() < 1e-12);
    const auto quad = tensor_of({a, cd(0, 1) * a});
    CHECK(cos_ipd(quad, default_pairs(2)).values[0].cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("silent bins are zeroed") {
    Eigen::MatrixXcd b = a;
    b(3, 2) = 0.0;
    const auto t = tensor_of({a, b});
    CHECK(cos_ipd(t, default_pairs(2)).values[0](3, 2) == 0.0);
  }
}

TEST_CASE("cosIPD of a pure delay follows cos(2 pi f dtau)") {
  Rng rng(2);
  const Eigen::Index bins = 17, frames = 5;
  const Eigen::MatrixXcd base = random_complex(bins, frames, rng);
  const double dtau = 2.3e-4;  // seconds
  const double rate = 8000.0;

  SpectrogramTensor s = tensor_of({base, base});
  s.sample_rate = rate;
  for (Eigen::Index f = 0; f < bins; ++f) {
    const double hz = s.config.bin_hz(static_cast<int>(f), rate);
    s.channels[1].row(f) *= std::exp(cd(0, -2.0 * std::numbers::pi * hz * dtau));
  }
  const FeatureTensor feat = cos_ipd(s, default_pairs(2));
  for (Eigen::Index f = 0; f < bins; ++f) {
    const double hz = s.config.bin_hz(static_cast<int>(f), rate);
    const double want = std::cos(2.0 * std::numbers::pi * hz * dtau);
    for (Eigen::Index k = 0; k < frames; ++k)
      CHECK(feat.values[0](f, k) == doctest::Approx(want).epsilon(1e-10));
  }
}

TEST_CASE("angle feature matches an explicit per-pair oracle") {
  Rng rng(3);
  const Eigen::Index channels = 3, bins = 9, frames = 4;
  std::vector<Eigen::MatrixXcd> ch;
  for (Eigen::Index c = 0; c < channels; ++c) ch.push_back(random_complex(bins, frames, rng));
  const SpectrogramTensor s = tensor_of(std::move(ch));

  SteeringVector d;
  d.values.resize(bins, channels);
  d.freq_hz.resize(bins);
  for (Eigen::Index f = 0; f < bins; ++f) {
    d.freq_hz[f] = 100.0 * static_cast<double>(f);
    for (Eigen::Index c = 0; c < channels; ++c)
      d.values(f, c) = std::exp(cd(0, rng.uniform(0, 2 * std::numbers::pi)));
  }

  const auto pairs = default_pairs(channels);
  const FeatureTensor feat = angle_feature(s, d, pairs);
  REQUIRE(feat.values.size() == 1);
  for (Eigen::Index f = 0; f < bins; ++f) {
    for (Eigen::Index k = 0; k < frames; ++k) {
      double want = 0.0;
      for (const auto& [i, j] : pairs) {
        const double obs = std::arg(s.channels[static_cast<size_t>(i)](f, k)) -
                           std::arg(s.channels[static_cast<size_t>(j)](f, k));
        const double steer = std::arg(d.values(f, i)) - std::arg(d.values(f, j));
        want += std::cos(obs - steer);
      }
      want /= static_cast<double>(pairs.size());
      CHECK(feat.values[0](f, k) == doctest::Approx(want).epsilon(1e-9));
    }
  }
}

TEST_CASE("angle feature peaks at the true direction") {
  const ArrayGeometry g = circular_array(4, 0.1);
  StftConfig cfg;
  cfg.window_size = 64;
  cfg.hop = 32;
  cfg.fft_size = 64;
  const SteeringVector d_true = steering_vector(g, Doa(40.0, 0.0), cfg, 8000.0);
  const SteeringVector d_off = steering_vector(g, Doa(220.0, 0.0), cfg, 8000.0);

  Rng rng(4);
  const Eigen::Index bins = d_true.values.rows(), frames = 8;
  const Eigen::MatrixXcd base = random_complex(bins, frames, rng);
  std::vector<Eigen::MatrixXcd> ch;
  for (Eigen::Index c = 0; c < 4; ++c) {
    Eigen::MatrixXcd m = base;
    for (Eigen::Index f = 0; f < bins; ++f) m.row(f) *= d_true.values(f, c);
    ch.push_back(std::move(m));
  }
  SpectrogramTensor s = tensor_of(std::move(ch));
  s.config = cfg;

  const auto pairs = default_pairs(4);
  const FeatureTensor at_true = angle_feature(s, d_true, pairs);
  const FeatureTensor at_off = angle_feature(s, d_off, pairs);
  CHECK((at_true.values[0].array() - 1.0).abs().maxCoeff() < 1e-10);
  CHECK(at_off.values[0].mean() < 0.5);
}

TEST_CASE("ideal ratio mask") {
  const auto spec_of = [](double mag) {
    Eigen::MatrixXcd m(2, 2);
    m.setConstant(cd(mag, 0.0));
    return tensor_of({m});
  };

  CHECK(irm(spec_of(3.0), spec_of(1.0), 1.0).values(0, 0) == doctest::Approx(0.75));
  CHECK(irm(spec_of(3.0), spec_of(1.0), 2.0).values(0, 0) == doctest::Approx(0.9));
  CHECK(irm(spec_of(0.0), spec_of(0.0), 1.0).values(0, 0) == 0.0);

  // complementary masks sum to one wherever there is any energy
  Rng rng(5);
  const auto a = tensor_of({random_complex(7, 5, rng)});
  const auto b = tensor_of({random_complex(7, 5, rng)});
  const Eigen::MatrixXd sum = irm(a, b, 1.0).values + irm(b, a, 1.0).values;
  CHECK((sum.array() - 1.0).abs().maxCoeff() < 1e-12);

  CHECK_THROWS_AS(irm(a, b, 0.0), ConfigError);
  CHECK_THROWS_AS(irm(a, b, -1.0), ConfigError);
  const auto two_channel = tensor_of({a.channels[0], a.channels[0]});
  CHECK_THROWS_AS(irm(two_channel, b, 1.0), ConfigError);
  const auto small = tensor_of({random_complex(3, 5, rng)});
  CHECK_THROWS_AS(irm(a, small, 1.0), ConfigError);
}

TEST_CASE("apply_mask scales bins elementwise") {
  Rng rng(6);
  const auto s = tensor_of({random_complex(5, 4, rng)});

  TfMask ones;
  ones.values = Eigen::MatrixXd::Ones(5, 4);
  CHECK((apply_mask(s, ones).channels[0] - s.channels[0]).cwiseAbs().maxCoeff() == 0.0);

  TfMask zero;
  zero.values = Eigen::MatrixXd::Zero(5, 4);
  CHECK(apply_mask(s, zero).channels[0].cwiseAbs().maxCoeff() == 0.0);

  TfMask half;
  half.values = Eigen::MatrixXd::Constant(5, 4, 0.5);
  CHECK((apply_mask(s, half).channels[0] - 0.5 * s.channels[0]).cwiseAbs().maxCoeff() < 1e-15);

  TfMask bad;
  bad.values = Eigen::MatrixXd::Ones(4, 4);
  CHECK_THROWS_AS(apply_mask(s, bad), ConfigError);
}

TEST_CASE("oracle IRM separates disjoint sinusoids") {
  const double rate = 8000.0;
  const Eigen::Index n = 8000;
  StftConfig cfg = StftConfig::frontend();
  // bin-centered tones so the leakage is purely from the analysis window
  const double f_target = 32.0 * rate / cfg.fft_size;   // 250 Hz
  const double f_noise = 160.0 * rate / cfg.fft_size;   // 1250 Hz
  Eigen::VectorXd xs(n), xn(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / rate;
    xs[i] = std::sin(2.0 * std::numbers::pi * f_target * t);
    xn[i] = 0.8 * std::sin(2.0 * std::numbers::pi * f_noise * t);
  }
  const Waveform target{xs, rate}, noise{xn, rate};
  const Waveform mix{xs + xn, rate};

  const TfMask m = irm(stft(target, cfg), stft(noise, cfg), 1.0);
  const Waveform est = istft(apply_mask(stft(mix, cfg), m), n).channel(0);
  const MetricResult r = measure(target, est, mix);
  CHECK(r.si_sdr_db > 25.0);
  CHECK(r.si_sdr_improvement_db > 20.0);
}

TEST_CASE("coherence mask tracks the guide") {
  Rng rng(7);
  const Eigen::Index bins = 33, frames = 200;
  const Eigen::MatrixXcd y = random_complex(bins, frames, rng);

  SUBCASE("guide equal to the mixture saturates the mask") {
    const TfMask m = coherence_mask(tensor_of({y}), tensor_of({y}), 0.7);
    CHECK(m.values.minCoeff() > 0.99);
    CHECK(m.values.maxCoeff() <= 1.0);
  }
  SUBCASE("independent guide stays low on average") {
    const Eigen::MatrixXcd z = random_complex(bins, frames, rng);
    const TfMask m = coherence_mask(tensor_of({y}), tensor_of({z}), 0.7);
    CHECK_NOTHROW(m.validate());
    CHECK(m.values.mean() < 0.35);
  }
  SUBCASE("mask is invariant to guide scaling") {
    const Eigen::MatrixXcd z = random_complex(bins, frames, rng);
    const TfMask m1 = coherence_mask(tensor_of({y}), tensor_of({z}), 0.7);
    const TfMask m2 = coherence_mask(tensor_of({y}), tensor_of({Eigen::MatrixXcd(10.0 * z)}), 0.7);
    CHECK((m1.values - m2.values).cwiseAbs().maxCoeff() < 1e-6);
  }
  SUBCASE("smoothing must lie strictly inside (0, 1)") {
    CHECK_THROWS_AS(coherence_mask(tensor_of({y}), tensor_of({y}), 0.0), ConfigError);
    CHECK_THROWS_AS(coherence_mask(tensor_of({y}), tensor_of({y}), 1.0), ConfigError);
  }
}

TEST_CASE("mask and feature validation catches out-of-range values") {
  TfMask m;
  m.values = Eigen::MatrixXd::Constant(2, 2, 1.5);
  CHECK_THROWS_AS(m.validate(), NumericError);
  m.values.setConstant(0.5);
  CHECK_NOTHROW(m.validate());
  m.values(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(m.validate(), NumericError);

  FeatureTensor f;
  f.values.push_back(Eigen::MatrixXd::Constant(2, 2, -1.5));
  CHECK_THROWS_AS(f.validate(), NumericError);
}
