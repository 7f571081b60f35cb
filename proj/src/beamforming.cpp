#include "bgtse/beamforming.hpp"

#include <cmath>
#include <numbers>

namespace bgtse {

void SpatialCovariance::validate() const {
  for (const auto& m : matrices) {
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if ((m - m.adjoint()).cwiseAbs().maxCoeff() > 1e-10 * scale)
      throw NumericError("scm: matrix not Hermitian");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(m, Eigen::EigenvaluesOnly);
    const double tr = m.real().trace();
    if (eig.eigenvalues().minCoeff() < -1e-8 * std::max(tr, 1.0))
      throw NumericError("scm: matrix not positive semidefinite");
  }
}

SpatialCovariance estimate_scm(const SpectrogramTensor& s) {
  if (s.channel_count() < 2) throw ConfigError("estimate_scm: needs >= 2 channels");
  if (s.frame_count() < 1) throw ConfigError("estimate_scm: empty input (no frames)");

  const Eigen::Index bins = s.bin_count();
  const Eigen::Index frames = s.frame_count();
  SpatialCovariance scm;
  scm.frame_count_used = frames;
  scm.matrices.reserve(static_cast<size_t>(bins));
  for (Eigen::Index f = 0; f < bins; ++f) {
    const Eigen::MatrixXcd v = s.bin_across_channels(f);  // C x K
    Eigen::MatrixXcd phi = (v * v.adjoint()) / static_cast<double>(frames);
    // symmetrize away rounding skew
    phi = 0.5 * (phi + phi.adjoint()).eval();
    scm.matrices.push_back(std::move(phi));
  }
  return scm;
}

namespace {

// Multiplying the weights by conj(d_ref) makes w^H v carry the reference
// channel's direct-path phase: w'^H v = d_ref (w^H v).
void align_to_reference(Eigen::MatrixXcd& w, const Eigen::MatrixXcd& d, Eigen::Index ref) {
  for (Eigen::Index f = 0; f < w.rows(); ++f) w.row(f) *= std::conj(d(f, ref));
}

void check_ref(Eigen::Index ref, Eigen::Index num_channels, const char* where) {
  if (ref < 0 || ref >= num_channels)
    throw ConfigError(std::string(where) + ": reference channel out of range");
}

}  // namespace

BeamformerWeights dsb_weights(const SteeringVector& d, Eigen::Index ref_channel) {
  check_ref(ref_channel, d.values.cols(), "dsb_weights");
  BeamformerWeights w;
  w.kind = BeamformerKind::kDsb;
  w.ref_channel = ref_channel;
  w.weights = d.values / static_cast<double>(d.values.cols());
  align_to_reference(w.weights, d.values, ref_channel);
  return w;
}

Eigen::MatrixXcd diffuse_coherence(const ArrayGeometry& g, double freq_hz, double c_sound) {
  if (freq_hz < 0.0) throw ConfigError("diffuse_coherence: negative frequency");
  const Eigen::Index n = g.mic_count();
  Eigen::MatrixXcd gamma = Eigen::MatrixXcd::Identity(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double x = 2.0 * freq_hz * g.pair_distance(i, j) / c_sound;
      const double v = x == 0.0 ? 1.0 : std::sin(std::numbers::pi * x) / (std::numbers::pi * x);
      gamma(i, j) = v;
      gamma(j, i) = v;
    }
  }
  return gamma;
}

namespace {

// w = M^-1 d / (d^H M^-1 d) for one bin; throws on a singular solve.
Eigen::VectorXcd distortionless_solve(const Eigen::MatrixXcd& m, const Eigen::VectorXcd& d,
                                      const char* where) {
  Eigen::FullPivLU<Eigen::MatrixXcd> lu(m);
  if (!lu.isInvertible())
    throw NumericError(std::string(where) + ": singular matrix after loading");
  const Eigen::VectorXcd mi_d = lu.solve(d);
  const std::complex<double> denom = d.dot(mi_d);  // Eigen dot conjugates the left side
  if (std::abs(denom) < 1e-300)
    throw NumericError(std::string(where) + ": vanishing distortionless denominator");
  return mi_d / denom;
}

}  // namespace

BeamformerWeights sdb_weights(const SteeringVector& d, const ArrayGeometry& g, double loading,
                              Eigen::Index ref_channel, double c_sound) {
  check_ref(ref_channel, d.values.cols(), "sdb_weights");
  if (loading < 0.0) throw ConfigError("sdb_weights: loading must be >= 0");
  const Eigen::Index bins = d.values.rows();
  const Eigen::Index num_channels = d.values.cols();

  BeamformerWeights w;
  w.kind = BeamformerKind::kSdb;
  w.ref_channel = ref_channel;
  w.weights.resize(bins, num_channels);
  const Eigen::MatrixXcd eye = Eigen::MatrixXcd::Identity(num_channels, num_channels);
  for (Eigen::Index f = 0; f < bins; ++f) {
    const Eigen::MatrixXcd gamma =
        diffuse_coherence(g, d.freq_hz[f], c_sound) + loading * eye;
    w.weights.row(f) = distortionless_solve(gamma, d.values.row(f).transpose(), "sdb_weights");
  }
  align_to_reference(w.weights, d.values, ref_channel);
  return w;
}

BeamformerWeights mpdr_weights(const SteeringVector& d, const SpatialCovariance& phi_y,
                               double loading, Eigen::Index ref_channel) {
  const Eigen::Index num_channels = phi_y.channel_count();
  check_ref(ref_channel, num_channels, "mpdr_weights");
  if (d.values.rows() != phi_y.bin_count() || d.values.cols() != num_channels)
    throw ConfigError("mpdr_weights: steering/SCM shape mismatch");

  BeamformerWeights w;
  w.kind = BeamformerKind::kMpdr;
  w.ref_channel = ref_channel;
  w.weights.resize(phi_y.bin_count(), num_channels);
  const Eigen::MatrixXcd eye = Eigen::MatrixXcd::Identity(num_channels, num_channels);
  for (Eigen::Index f = 0; f < phi_y.bin_count(); ++f) {
    const Eigen::MatrixXcd& phi = phi_y.matrices[static_cast<size_t>(f)];
    const double tr = std::max(phi.real().trace(), 0.0);
    const Eigen::MatrixXcd loaded =
        phi + (loading * tr / static_cast<double>(num_channels) + 1e-300) * eye;
    w.weights.row(f) = distortionless_solve(loaded, d.values.row(f).transpose(), "mpdr_weights");
  }
  align_to_reference(w.weights, d.values, ref_channel);
  return w;
}

BeamformerWeights mvdr_weights_souden(const SpatialCovariance& phi_s,
                                      const SpatialCovariance& phi_n,
                                      Eigen::Index ref_channel, double loading) {
  const Eigen::Index num_channels = phi_n.channel_count();
  check_ref(ref_channel, num_channels, "mvdr_weights_souden");
  if (phi_s.bin_count() != phi_n.bin_count() || phi_s.channel_count() != num_channels)
    throw ConfigError("mvdr_weights_souden: SCM shape mismatch");

  BeamformerWeights w;
  w.kind = BeamformerKind::kMvdr;
  w.ref_channel = ref_channel;
  w.weights = Eigen::MatrixXcd::Zero(phi_n.bin_count(), num_channels);
  const Eigen::MatrixXcd eye = Eigen::MatrixXcd::Identity(num_channels, num_channels);

  double max_tr_s = 0.0;
  for (const auto& m : phi_s.matrices) max_tr_s = std::max(max_tr_s, m.real().trace());

  for (Eigen::Index f = 0; f < phi_n.bin_count(); ++f) {
    const Eigen::MatrixXcd& pn = phi_n.matrices[static_cast<size_t>(f)];
    const Eigen::MatrixXcd& ps = phi_s.matrices[static_cast<size_t>(f)];
    const double tr_n = pn.real().trace();
    if (!(tr_n > 1e-300)) continue;  // vanishing noise SCM: leave this bin zero
    // bins with no usable target energy produce 0/0 weight ratios; mute them
    if (!(ps.real().trace() > 1e-10 * max_tr_s)) continue;
    const Eigen::MatrixXcd loaded =
        pn + (loading * tr_n / static_cast<double>(num_channels)) * eye;
    Eigen::FullPivLU<Eigen::MatrixXcd> lu(loaded);
    if (!lu.isInvertible()) continue;
    const Eigen::MatrixXcd num = lu.solve(ps);  // PhiN^-1 PhiS
    const std::complex<double> tr = num.trace();
    if (std::abs(tr) <= 1e-12) continue;  // no target energy at this bin
    // w = (num/tr) u_ref, i.e. the reference column of the normalized matrix
    w.weights.row(f) = (num / tr).col(ref_channel).transpose();
  }
  return w;
}

SpectrogramTensor apply_beamformer(const SpectrogramTensor& s, const BeamformerWeights& w) {
  if (s.channel_count() != w.weights.cols())
    throw ConfigError("apply_beamformer: channel count mismatch");
  if (s.bin_count() != w.weights.rows())
    throw ConfigError("apply_beamformer: bin count mismatch");

  SpectrogramTensor out;
  out.config = s.config;
  out.sample_rate = s.sample_rate;
  out.original_length = s.original_length;
  Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(s.bin_count(), s.frame_count());
  for (Eigen::Index c = 0; c < s.channel_count(); ++c) {
    // out(f,k) += conj(w(f,c)) * v_c(f,k)
    acc.array() += s.channels[static_cast<size_t>(c)].array().colwise() *
                   w.weights.col(c).conjugate().array();
  }
  out.channels = {std::move(acc)};
  return out;
}

namespace {

// Distortionless solve against base + lam * reg with lam escalated from
// `loading` until C*||w||^2 <= cap. Every iterate keeps w^H d = 1 exactly; in
// the heavy-loading limit the solution is the DSB weights (C*||w||^2 = 1), so
// any cap >= 1 terminates the escalation.
Eigen::VectorXcd wng_capped_solve(const Eigen::MatrixXcd& base, const Eigen::MatrixXcd& reg,
                                  const Eigen::VectorXcd& d, double loading, double cap,
                                  const char* where) {
  double lam = loading;
  for (;;) {
    const Eigen::VectorXcd w = distortionless_solve(base + lam * reg, d, where);
    const double wng = static_cast<double>(d.size()) * w.squaredNorm();
    if (!(wng > cap) || lam >= 1e9) return w;
    lam = std::max(lam * 4.0, 1e-8);
  }
}

}  // namespace

BeamformerWeights frontend_weights(const SpectrogramTensor& s, const SteeringVector& d,
                                   const ArrayGeometry& g, FrontendKind kind,
                                   Eigen::Index ref_channel, const FrontendOptions& opts) {
  if (!(opts.wng_factor >= 1.0))
    throw ConfigError("frontend_weights: wng_factor must be >= 1");
  const bool capped = std::isfinite(opts.wng_factor);
  const Eigen::Index num_channels = d.values.cols();
  const Eigen::MatrixXcd eye = Eigen::MatrixXcd::Identity(num_channels, num_channels);

  switch (kind) {
    case FrontendKind::kDsb:
      return dsb_weights(d, ref_channel);
    case FrontendKind::kSdb: {
      if (!capped) return sdb_weights(d, g, opts.loading, ref_channel, opts.c_sound);
      check_ref(ref_channel, num_channels, "frontend_weights");
      BeamformerWeights w;
      w.kind = BeamformerKind::kSdb;
      w.ref_channel = ref_channel;
      w.weights.resize(d.values.rows(), num_channels);
      for (Eigen::Index f = 0; f < d.values.rows(); ++f) {
        const Eigen::MatrixXcd gamma = diffuse_coherence(g, d.freq_hz[f], opts.c_sound);
        w.weights.row(f) = wng_capped_solve(gamma, eye, d.values.row(f).transpose(),
                                            opts.loading, opts.wng_factor, "sdb_weights");
      }
      align_to_reference(w.weights, d.values, ref_channel);
      return w;
    }
    case FrontendKind::kMpdr: {
      const SpatialCovariance phi_y = estimate_scm(s);
      if (!capped) return mpdr_weights(d, phi_y, opts.loading, ref_channel);
      check_ref(ref_channel, num_channels, "frontend_weights");
      if (d.values.rows() != phi_y.bin_count())
        throw ConfigError("frontend_weights: steering/SCM shape mismatch");
      BeamformerWeights w;
      w.kind = BeamformerKind::kMpdr;
      w.ref_channel = ref_channel;
      w.weights.resize(d.values.rows(), num_channels);
      for (Eigen::Index f = 0; f < d.values.rows(); ++f) {
        const Eigen::MatrixXcd& phi = phi_y.matrices[static_cast<size_t>(f)];
        const double tr = std::max(phi.real().trace(), 0.0);
        const Eigen::MatrixXcd reg =
            (tr / static_cast<double>(num_channels) + 1e-300) * eye;
        w.weights.row(f) = wng_capped_solve(phi, reg, d.values.row(f).transpose(), opts.loading,
                                            opts.wng_factor, "mpdr_weights");
      }
      align_to_reference(w.weights, d.values, ref_channel);
      return w;
    }
  }
  throw ConfigError("frontend_weights: unknown kind");
}

BeamformerWeights realign(const BeamformerWeights& w, const SteeringVector& d,
                          Eigen::Index new_ref) {
  check_ref(new_ref, w.weights.cols(), "realign");
  if (d.values.rows() != w.weights.rows() || d.values.cols() != w.weights.cols())
    throw ConfigError("realign: steering vector shape mismatch");
  BeamformerWeights out = w;
  out.ref_channel = new_ref;
  for (Eigen::Index f = 0; f < out.weights.rows(); ++f) {
    // undo the old unit-modulus alignment, apply the new one
    out.weights.row(f) *= d.values(f, w.ref_channel) * std::conj(d.values(f, new_ref));
  }
  return out;
}

Waveform beamform_frontend(const MultiChannelWaveform& y, const ArrayGeometry& g,
                           const Doa& target_doa, FrontendKind kind, Eigen::Index ref_channel,
                           const FrontendOptions& opts) {
  if (y.channel_count() != g.mic_count())
    throw ConfigError("beamform_frontend: channel count does not match geometry");
  if (y.length() < 1) throw ConfigError("beamform_frontend: empty signal");

  const SpectrogramTensor spec = stft(y, opts.stft);
  const SteeringVector d = steering_vector(g, target_doa, opts.stft, y.sample_rate, opts.c_sound);
  const BeamformerWeights w = frontend_weights(spec, d, g, kind, ref_channel, opts);
  // synthesize on an edge-padded copy; the weights are per bin, so they apply
  // to the padded analysis unchanged
  const Eigen::Index pad = stft_edge_padding(opts.stft);
  const MultiChannelWaveform yp = zero_pad_edges(y, pad);
  const Waveform z = istft(apply_beamformer(stft(yp, opts.stft), w), yp.length()).channel(0);
  return {z.samples.segment(pad, y.length()).eval(), y.sample_rate};
}

Waveform beamform_backend(const MultiChannelWaveform& y,
                          const MultiChannelWaveform& target_estimates,
                          Eigen::Index ref_channel, const StftConfig& backend_stft,
                          double loading) {
  if (target_estimates.channel_count() != y.channel_count())
    throw ConfigError("beamform_backend: one target estimate per mixture channel required");
  if (target_estimates.length() != y.length())
    throw ConfigError("beamform_backend: estimate length mismatch");

  MultiChannelWaveform interferer_estimates = y;
  interferer_estimates.channels -= target_estimates.channels;

  const SpatialCovariance phi_s = estimate_scm(stft(target_estimates, backend_stft));
  const SpatialCovariance phi_n = estimate_scm(stft(interferer_estimates, backend_stft));
  const BeamformerWeights w = mvdr_weights_souden(phi_s, phi_n, ref_channel, loading);
  const Eigen::Index pad = stft_edge_padding(backend_stft);
  const MultiChannelWaveform yp = zero_pad_edges(y, pad);
  const Waveform out = istft(apply_beamformer(stft(yp, backend_stft), w), yp.length()).channel(0);
  return {out.samples.segment(pad, y.length()).eval(), y.sample_rate};
}

}  // namespace bgtse
