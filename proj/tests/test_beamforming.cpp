#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "bgtse/beamforming.hpp"
#include "bgtse/rng.hpp"

using namespace bgtse;
using cd = std::complex<double>;

namespace {

SpectrogramTensor synthetic_tensor(Eigen::Index channels, Eigen::Index bins,
                                   Eigen::Index frames, std::uint64_t seed) {
  Rng rng(seed);
  SpectrogramTensor s;
  s.config.window_size = 2 * (static_cast<int>(bins) - 1);
  s.config.hop = s.config.window_size / 2;
  s.config.fft_size = s.config.window_size;
  s.original_length = frames * s.config.hop;
  for (Eigen::Index c = 0; c < channels; ++c) {
    Eigen::MatrixXcd m(bins, frames);
    for (Eigen::Index f = 0; f < bins; ++f)
      for (Eigen::Index k = 0; k < frames; ++k)
        m(f, k) = cd(rng.gaussian(), rng.gaussian());
    s.channels.push_back(std::move(m));
  }
  return s;
}

// Oracle: per-bin covariance from explicit loops over frames.
Eigen::MatrixXcd scm_oracle(const SpectrogramTensor& s, Eigen::Index f) {
  const Eigen::Index channels = s.channel_count();
  const Eigen::Index frames = s.frame_count();
  Eigen::MatrixXcd phi = Eigen::MatrixXcd::Zero(channels, channels);
  for (Eigen::Index k = 0; k < frames; ++k)
    for (Eigen::Index i = 0; i < channels; ++i)
      for (Eigen::Index j = 0; j < channels; ++j)
        phi(i, j) += s.channels[i](f, k) * std::conj(s.channels[j](f, k));
  return phi / static_cast<double>(frames);
}

SpatialCovariance identity_cov(Eigen::Index bins, Eigen::Index channels, double scale = 1.0) {
  SpatialCovariance phi;
  for (Eigen::Index f = 0; f < bins; ++f)
    phi.matrices.push_back(scale * Eigen::MatrixXcd::Identity(channels, channels));
  phi.frame_count_used = 1;
  return phi;
}

}  // namespace

TEST_CASE("estimate_scm averages outer products over frames") {
  const SpectrogramTensor s = synthetic_tensor(3, 5, 7, 99);
  const SpatialCovariance phi = estimate_scm(s);
  REQUIRE(phi.bin_count() == 5);
  REQUIRE(phi.channel_count() == 3);
  CHECK(phi.frame_count_used == 7);
  for (Eigen::Index f = 0; f < 5; ++f) {
    const Eigen::MatrixXcd want = scm_oracle(s, f);
    CHECK((phi.matrices[f] - want).cwiseAbs().maxCoeff() < 1e-12);
  }
  CHECK_NOTHROW(phi.validate());
}

TEST_CASE("covariance validation rejects non-Hermitian and indefinite input") {
  SpatialCovariance bad;
  Eigen::MatrixXcd m(2, 2);
  m << cd(1, 0), cd(0.5, 0.1), cd(0.5, 0.3), cd(1, 0);  // not Hermitian
  bad.matrices.push_back(m);
  CHECK_THROWS_AS(bad.validate(), NumericError);

  SpatialCovariance indef;
  Eigen::MatrixXcd n(2, 2);
  n << cd(1, 0), cd(2, 0), cd(2, 0), cd(1, 0);  // eigenvalues 3, -1
  indef.matrices.push_back(n);
  CHECK_THROWS_AS(indef.validate(), NumericError);
}

TEST_CASE("steered weights keep the look direction distortionless") {
  const ArrayGeometry g = circular_array(4, 0.1);
  StftConfig cfg;
  cfg.window_size = 64;
  cfg.hop = 32;
  cfg.fft_size = 64;
  const SteeringVector d = steering_vector(g, Doa(25.0, 0.0), cfg, 8000.0);
  const Eigen::Index bins = d.values.rows();

  // random PSD mixture covariance for MPDR
  Rng rng(17);
  SpatialCovariance phi;
  for (Eigen::Index f = 0; f < bins; ++f) {
    Eigen::MatrixXcd a(4, 4);
    for (Eigen::Index i = 0; i < 4; ++i)
      for (Eigen::Index j = 0; j < 4; ++j) a(i, j) = cd(rng.gaussian(), rng.gaussian());
    phi.matrices.push_back(a * a.adjoint() + 0.1 * Eigen::MatrixXcd::Identity(4, 4));
  }
  phi.frame_count_used = 8;

  const Eigen::Index ref = 2;
  const BeamformerWeights wd = dsb_weights(d, ref);
  const BeamformerWeights ws = sdb_weights(d, g, 1e-3, ref);
  const BeamformerWeights wm = mpdr_weights(d, phi, 1e-6, ref);

  // w^H d must equal the reference steering phase: the beamformer passes the
  // reference mic's direct path untouched.
  for (const auto* w : {&wd, &ws, &wm}) {
    REQUIRE(w->weights.rows() == bins);
    for (Eigen::Index f = 0; f < bins; ++f) {
      const cd gain = w->weights.row(f).conjugate().cwiseProduct(d.values.row(f)).sum();
      CHECK(std::abs(gain - d.values(f, ref)) < 1e-9);
    }
  }

  // DSB moduli are exactly 1/C
  for (Eigen::Index f = 0; f < bins; ++f)
    for (Eigen::Index c = 0; c < 4; ++c)
      CHECK(std::abs(wd.weights(f, c)) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("diffuse coherence matches the sinc model") {
  const ArrayGeometry g = circular_array(4, 0.1);
  const double c = 343.0;
  for (const double f : {0.0, 500.0, 1000.0, 3000.0}) {
    const Eigen::MatrixXcd gamma = diffuse_coherence(g, f, c);
    REQUIRE(gamma.rows() == 4);
    for (Eigen::Index i = 0; i < 4; ++i) {
      for (Eigen::Index j = 0; j < 4; ++j) {
        const double dist = g.pair_distance(i, j);
        const double x = 2.0 * f * dist / c;
        const double want =
            x == 0.0 ? 1.0 : std::sin(std::numbers::pi * x) / (std::numbers::pi * x);
        CHECK(std::abs(gamma(i, j) - cd(want, 0.0)) < 1e-12);
      }
    }
  }
  // at DC the field is fully coherent
  CHECK((diffuse_coherence(g, 0.0, c) - Eigen::MatrixXcd::Ones(4, 4)).cwiseAbs().maxCoeff() <
        1e-12);
}

TEST_CASE("heavy loading collapses SDB and MPDR onto DSB") {
  const ArrayGeometry g = circular_array(4, 0.1);
  StftConfig cfg;
  cfg.window_size = 32;
  cfg.hop = 16;
  cfg.fft_size = 32;
  const SteeringVector d = steering_vector(g, Doa(140.0, 10.0), cfg, 8000.0);
  const Eigen::Index bins = d.values.rows();

  const BeamformerWeights wd = dsb_weights(d, 0);
  const BeamformerWeights ws = sdb_weights(d, g, 1e9, 0);
  CHECK((ws.weights - wd.weights).cwiseAbs().maxCoeff() < 1e-6);

  // identity mixture SCM: MPDR reduces to DSB exactly (up to loading)
  const BeamformerWeights wm = mpdr_weights(d, identity_cov(bins, 4), 1e-9, 0);
  CHECK((wm.weights - wd.weights).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("MPDR nulls a discrete interferer") {
  const ArrayGeometry g = circular_array(4, 0.1);
  StftConfig cfg;
  cfg.window_size = 64;
  cfg.hop = 32;
  cfg.fft_size = 64;
  const SteeringVector d = steering_vector(g, Doa(0.0, 0.0), cfg, 8000.0);
  const SteeringVector v = steering_vector(g, Doa(90.0, 0.0), cfg, 8000.0);
  const Eigen::Index bins = d.values.rows();

  SpatialCovariance phi;
  for (Eigen::Index f = 0; f < bins; ++f) {
    const Eigen::VectorXcd ds = d.values.row(f).transpose();
    const Eigen::VectorXcd di = v.values.row(f).transpose();
    phi.matrices.push_back(ds * ds.adjoint() + 4.0 * di * di.adjoint() +
                           1e-4 * Eigen::MatrixXcd::Identity(4, 4));
  }
  phi.frame_count_used = 16;

  const BeamformerWeights wm = mpdr_weights(d, phi, 1e-6, 0);
  const BeamformerWeights wd = dsb_weights(d, 0);
  double mpdr_leak = 0.0, dsb_leak = 0.0;
  // skip DC where the two steering vectors coincide
  for (Eigen::Index f = 1; f < bins; ++f) {
    mpdr_leak += std::abs(wm.weights.row(f).conjugate().cwiseProduct(v.values.row(f)).sum());
    dsb_leak += std::abs(wd.weights.row(f).conjugate().cwiseProduct(v.values.row(f)).sum());
  }
  CHECK(mpdr_leak < 0.1 * dsb_leak);
}

TEST_CASE("Souden MVDR with a rank-one target and white noise is the aligned DSB") {
  const ArrayGeometry g = circular_array(4, 0.1);
  StftConfig cfg;
  cfg.window_size = 32;
  cfg.hop = 16;
  cfg.fft_size = 32;
  const SteeringVector d = steering_vector(g, Doa(60.0, 0.0), cfg, 8000.0);
  const Eigen::Index bins = d.values.rows();

  SpatialCovariance phi_s;
  for (Eigen::Index f = 0; f < bins; ++f) {
    const Eigen::VectorXcd ds = d.values.row(f).transpose();
    phi_s.matrices.push_back(2.5 * ds * ds.adjoint());
  }
  phi_s.frame_count_used = 8;
  const SpatialCovariance phi_n = identity_cov(bins, 4);

  const BeamformerWeights w = mvdr_weights_souden(phi_s, phi_n, 1, 0.0);
  const BeamformerWeights wd = dsb_weights(d, 1);
  CHECK((w.weights - wd.weights).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("Souden MVDR zeroes degenerate bins") {
  SpatialCovariance phi_s = identity_cov(3, 2, 0.0);   // no target energy anywhere
  const SpatialCovariance phi_n = identity_cov(3, 2);
  BeamformerWeights w = mvdr_weights_souden(phi_s, phi_n, 0, 0.0);
  CHECK(w.weights.cwiseAbs().maxCoeff() == 0.0);

  // vanishing noise SCM also yields zero weights rather than a blow-up
  const SpatialCovariance phi_s2 = identity_cov(3, 2);
  const SpatialCovariance phi_n2 = identity_cov(3, 2, 0.0);
  w = mvdr_weights_souden(phi_s2, phi_n2, 0, 0.0);
  CHECK(w.weights.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("apply_beamformer computes w^H x per bin and frame") {
  const SpectrogramTensor s = synthetic_tensor(3, 4, 5, 7);
  BeamformerWeights w;
  w.weights = Eigen::MatrixXcd::Zero(4, 3);
  Rng rng(8);
  for (Eigen::Index f = 0; f < 4; ++f)
    for (Eigen::Index c = 0; c < 3; ++c) w.weights(f, c) = cd(rng.gaussian(), rng.gaussian());

  const SpectrogramTensor out = apply_beamformer(s, w);
  REQUIRE(out.channel_count() == 1);
  REQUIRE(out.bin_count() == 4);
  REQUIRE(out.frame_count() == 5);
  for (Eigen::Index f = 0; f < 4; ++f) {
    for (Eigen::Index k = 0; k < 5; ++k) {
      cd want = 0.0;
      for (Eigen::Index c = 0; c < 3; ++c)
        want += std::conj(w.weights(f, c)) * s.channels[c](f, k);
      CHECK(std::abs(out.channels[0](f, k) - want) < 1e-12);
    }
  }

  // mismatched shapes are rejected
  BeamformerWeights bad = w;
  bad.weights = Eigen::MatrixXcd::Zero(3, 3);
  CHECK_THROWS_AS(apply_beamformer(s, bad), ConfigError);
  bad.weights = Eigen::MatrixXcd::Zero(4, 2);
  CHECK_THROWS_AS(apply_beamformer(s, bad), ConfigError);
}

TEST_CASE("realign swaps the reference phase without touching the solution") {
  const ArrayGeometry g = circular_array(4, 0.09);
  StftConfig cfg;
  cfg.window_size = 32;
  cfg.hop = 16;
  cfg.fft_size = 32;
  const SteeringVector d = steering_vector(g, Doa(200.0, -5.0), cfg, 8000.0);

  const BeamformerWeights w0 = sdb_weights(d, g, 1e-3, 0);
  const BeamformerWeights w3 = realign(w0, d, 3);
  CHECK(w3.ref_channel == 3);
  // distortionless toward the new reference...
  for (Eigen::Index f = 0; f < d.values.rows(); ++f) {
    const cd gain = w3.weights.row(f).conjugate().cwiseProduct(d.values.row(f)).sum();
    CHECK(std::abs(gain - d.values(f, 3)) < 1e-9);
  }
  // ...and a round trip restores the original weights.
  const BeamformerWeights back = realign(w3, d, 0);
  CHECK((back.weights - w0.weights).cwiseAbs().maxCoeff() < 1e-12);
  // direct construction at the new reference agrees
  const BeamformerWeights direct = sdb_weights(d, g, 1e-3, 3);
  CHECK((w3.weights - direct.weights).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("front-end passes a plane wave through to the reference channel") {
  const ArrayGeometry g = circular_array(4, 0.1);
  const double rate = 8000.0;
  const Doa doa(30.0, 0.0);
  const Eigen::VectorXd tau = plane_wave_delays(g, doa, kDefaultSoundSpeed);

  const Eigen::Index n = 8000;
  const auto wave_at = [](double t) {
    double v = 0.0;
    for (int h = 1; h <= 10; ++h)
      v += std::sin(2.0 * std::numbers::pi * (130.0 * h) * t + 0.3 * h * h);
    return v;
  };
  MultiChannelWaveform x = MultiChannelWaveform::zeros(4, n, rate);
  for (Eigen::Index c = 0; c < 4; ++c)
    for (Eigen::Index i = 0; i < n; ++i)
      x.channels(c, i) = wave_at(static_cast<double>(i) / rate - tau[c]);

  for (const FrontendKind kind : {FrontendKind::kDsb, FrontendKind::kSdb, FrontendKind::kMpdr}) {
    const Waveform y = beamform_frontend(x, g, doa, kind, 1);
    REQUIRE(y.length() == n);
    const Eigen::Index m = 1024;  // ignore frame-edge transients
    const Eigen::VectorXd ref = x.channels.row(1).segment(m, n - 2 * m).transpose();
    const Eigen::VectorXd est = y.samples.segment(m, n - 2 * m);
    const double err = (est - ref).norm() / ref.norm();
    CAPTURE(static_cast<int>(kind));
    CHECK(err < 0.02);
  }
}

TEST_CASE("back-end with oracle estimates moves the mixture toward the target") {
  const ArrayGeometry g = circular_array(4, 0.1);
  const double rate = 8000.0;
  Rng rng(55);
  const Eigen::Index n = 16000;

  const Eigen::VectorXd tau_s = plane_wave_delays(g, Doa(0.0, 0.0), kDefaultSoundSpeed);
  const Eigen::VectorXd tau_i = plane_wave_delays(g, Doa(120.0, 0.0), kDefaultSoundSpeed);

  // two independent band-limited random sources as delayed plane waves
  const auto tone_bank = [&](double t, const std::vector<double>& phases, double f0) {
    double v = 0.0;
    for (std::size_t h = 0; h < phases.size(); ++h)
      v += std::sin(2.0 * std::numbers::pi * f0 * (h + 1) * t + phases[h]);
    return v;
  };
  std::vector<double> ps, pi_;
  for (int h = 0; h < 14; ++h) {
    ps.push_back(rng.uniform(0, 2 * std::numbers::pi));
    pi_.push_back(rng.uniform(0, 2 * std::numbers::pi));
  }

  MultiChannelWaveform xs = MultiChannelWaveform::zeros(4, n, rate);
  MultiChannelWaveform xi = MultiChannelWaveform::zeros(4, n, rate);
  for (Eigen::Index c = 0; c < 4; ++c) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / rate;
      xs.channels(c, i) = tone_bank(t - tau_s[c], ps, 97.0);
      xi.channels(c, i) = tone_bank(t - tau_i[c], pi_, 131.0);
    }
  }
  MultiChannelWaveform y = xs;
  y.channels += xi.channels;

  const Waveform out = beamform_backend(y, xs, 0, StftConfig::backend());
  REQUIRE(out.length() == n);
  const Eigen::VectorXd target = xs.channels.row(0).transpose();
  const double err_out = (out.samples - target).norm();
  const double err_mix = (y.channels.row(0).transpose() - target).norm();
  CHECK(err_out < 0.2 * err_mix);
}
