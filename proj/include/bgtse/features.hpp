#pragma once

#include <utility>
#include <vector>

#include "bgtse/geometry.hpp"
#include "bgtse/stft.hpp"

namespace bgtse {

// Real-valued time-frequency mask, entries in [0, 1].
struct TfMask {
  Eigen::MatrixXd values;  // F x K

  void validate() const;
};

// Stack of per-pair feature maps (cosIPD: one F x K matrix per mic pair) or a
// single map (AF).
struct FeatureTensor {
  std::vector<Eigen::MatrixXd> values;

  void validate() const;  // checks all entries in [-1, 1]
};

using MicPair = std::pair<Eigen::Index, Eigen::Index>;

// All C(C-1)/2 unordered pairs (i < j); the 6 pairs of a 4-mic array.
std::vector<MicPair> default_pairs(Eigen::Index mic_count);

// cosIPD_p(f,k) = cos(angle s_i(f,k) - angle s_j(f,k)); zero where either bin
// magnitude is < 1e-12.
FeatureTensor cos_ipd(const SpectrogramTensor& s, const std::vector<MicPair>& pairs);

// Angle feature for a target direction: mean over pairs of
// cos(observed IPD_p(f,k) - steering IPD_p(f)). Same tiny-magnitude zeroing
// as cos_ipd.
FeatureTensor angle_feature(const SpectrogramTensor& s, const SteeringVector& d,
                            const std::vector<MicPair>& pairs);

// Oracle ideal ratio mask M = |X_S|^beta / (|X_S|^beta + |X_N|^beta); 0/0 -> 0.
TfMask irm(const SpectrogramTensor& target_spec, const SpectrogramTensor& interferer_spec,
           double exponent = 1.0);

// Elementwise product of a real mask with a single-channel spectrogram.
SpectrogramTensor apply_mask(const SpectrogramTensor& s, const TfMask& m);

// Deterministic guide-coherence mask: per-frame recursive smoothing of
// auto/cross spectra, mask = clamp(Re(S_yz) / sqrt(S_yy S_zz + eps), 0, 1).
TfMask coherence_mask(const SpectrogramTensor& y_spec, const SpectrogramTensor& z_spec,
                      double smoothing = 0.7);

}  // namespace bgtse
