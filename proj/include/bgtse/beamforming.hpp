#pragma once

#include "bgtse/geometry.hpp"
#include "bgtse/stft.hpp"

namespace bgtse {

// Per-frequency Hermitian C x C spatial covariance matrices.
struct SpatialCovariance {
  std::vector<Eigen::MatrixXcd> matrices;  // F entries, each C x C
  Eigen::Index frame_count_used = 0;

  Eigen::Index bin_count() const { return static_cast<Eigen::Index>(matrices.size()); }
  Eigen::Index channel_count() const { return matrices.empty() ? 0 : matrices[0].rows(); }

  // Hermitian within 1e-10, eigenvalues >= -1e-8 * trace.
  void validate() const;
};

enum class BeamformerKind { kDsb, kSdb, kMpdr, kMvdr };

struct BeamformerWeights {
  Eigen::MatrixXcd weights;  // F x C
  BeamformerKind kind = BeamformerKind::kDsb;
  Eigen::Index ref_channel = 0;
};

constexpr double kDefaultLoading = 1e-6;

// Phi(f) = (1/K) sum_k v(f,k) v(f,k)^H over all frames.
SpatialCovariance estimate_scm(const SpectrogramTensor& s);

// Delay-and-sum: w = d/C, then phase-aligned to the reference channel so the
// beamformer output carries the reference mic's direct-path phase.
BeamformerWeights dsb_weights(const SteeringVector& d, Eigen::Index ref_channel);

// Spherically isotropic (diffuse) coherence, Gamma_ij = sinc(2 f d_ij / c)
// with sinc(x) = sin(pi x)/(pi x).
Eigen::MatrixXcd diffuse_coherence(const ArrayGeometry& g, double freq_hz,
                                   double c_sound = kDefaultSoundSpeed);

// Superdirective: w = (Gamma + eps I)^-1 d / (d^H (Gamma + eps I)^-1 d),
// reference-aligned. Loading is absolute on Gamma.
BeamformerWeights sdb_weights(const SteeringVector& d, const ArrayGeometry& g,
                              double loading, Eigen::Index ref_channel,
                              double c_sound = kDefaultSoundSpeed);

// Minimum power distortionless response against the mixture SCM. Loading is
// scaled by trace/C per bin.
BeamformerWeights mpdr_weights(const SteeringVector& d, const SpatialCovariance& phi_y,
                               double loading, Eigen::Index ref_channel);

// Souden MVDR from target/noise SCMs (steering-free):
//   w(f) = (PhiN^-1 PhiS / tr(PhiN^-1 PhiS)) u_ref.
// Bins with tr <= 1e-12 (no target energy) or with a vanishing noise SCM get
// all-zero weights.
BeamformerWeights mvdr_weights_souden(const SpatialCovariance& phi_s,
                                      const SpatialCovariance& phi_n,
                                      Eigen::Index ref_channel, double loading);

// out(f,k) = w(f)^H v(f,k); returns a single-channel tensor.
SpectrogramTensor apply_beamformer(const SpectrogramTensor& s, const BeamformerWeights& w);

enum class FrontendKind { kDsb, kSdb, kMpdr };

struct FrontendOptions {
  StftConfig stft = StftConfig::frontend();
  double loading = kDefaultLoading;
  double c_sound = kDefaultSoundSpeed;
  // Cap on C*||w(f)||^2, the white-noise gain relative to DSB's. The adaptive
  // kinds escalate their per-bin diagonal loading until the cap holds, which
  // bounds how much a superdirective or minimum-power solve can amplify
  // steering mismatch and uncorrelated noise. Infinity disables the cap.
  double wng_factor = 2.0;
};

// Weights for one of the steered front-end kinds. The spectrogram is only
// consulted for MPDR (mixture SCM); DSB/SDB derive purely from the steering
// vector and geometry.
BeamformerWeights frontend_weights(const SpectrogramTensor& s, const SteeringVector& d,
                                   const ArrayGeometry& g, FrontendKind kind,
                                   Eigen::Index ref_channel, const FrontendOptions& opts = {});

// Re-targets steered (reference-aligned) weights to another reference channel
// by swapping the alignment phase; the underlying distortionless solution is
// untouched.
BeamformerWeights realign(const BeamformerWeights& w, const SteeringVector& d,
                          Eigen::Index new_ref);

// Steered front-end: STFT -> weights for the requested kind -> apply -> iSTFT
// back to the input length. Output is synchronous with the direct-path signal
// of the steered direction at the reference channel.
Waveform beamform_frontend(const MultiChannelWaveform& y, const ArrayGeometry& g,
                           const Doa& target_doa, FrontendKind kind, Eigen::Index ref_channel,
                           const FrontendOptions& opts = {});

// Mask/signal-driven back-end: per-channel interferer estimates by
// subtraction, SCMs from the estimate STFTs, Souden MVDR applied to the
// mixture.
Waveform beamform_backend(const MultiChannelWaveform& y,
                          const MultiChannelWaveform& target_estimates,
                          Eigen::Index ref_channel, const StftConfig& backend_stft,
                          double loading = kDefaultLoading);

}  // namespace bgtse
