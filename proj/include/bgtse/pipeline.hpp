#pragma once

#include <string>

#include "bgtse/beamforming.hpp"
#include "bgtse/room_sim.hpp"

namespace bgtse {

// The TSE block of x_hat_S = TSE(y, z). The neural extractor is out of scope;
// these stand-ins preserve its (mixture, auxiliary) -> estimate shape so a
// trained model can be plugged in via kExternalCommand.
enum class ExtractorKind {
  kOracleIrm,       // ideal ratio mask from the true source images
  kOracleSignal,    // the true target image itself
  kCoherenceMask,   // deterministic guide-coherence mask (no oracle needed)
  kExternalCommand  // user executable: `command mixture.wav aux.wav out.wav`
};

bool extractor_needs_oracle(ExtractorKind kind);

struct ExtractorSpec {
  ExtractorKind kind = ExtractorKind::kCoherenceMask;
  double irm_exponent = 1.0;         // kOracleIrm
  double coherence_smoothing = 0.7;  // kCoherenceMask
  std::string command;               // kExternalCommand

  void validate() const;
};

struct PipelineConfig {
  FrontendKind frontend_kind = FrontendKind::kDsb;
  StftConfig frontend_stft = StftConfig::frontend();
  bool backend_enabled = false;
  StftConfig backend_stft = StftConfig::backend();
  Eigen::Index ref_channel = 0;
  ExtractorSpec extractor;
  double c_sound = kDefaultSoundSpeed;
  double loading = kDefaultLoading;

  void validate() const;
};

// Which of the two oracle images the auxiliary signal points at: argmax over
// sources of the regression coefficient |<z, x_s>| / ||x_s||^2 at the given
// channel. This compares the front-end's gain toward each source, so a badly
// steered auxiliary identifies (and extracts) the wrong speaker -- the failure
// mode DOA-error sweeps measure. 0 = target image, 1 = interferer image.
Eigen::Index select_oracle_source(const Waveform& aux, const SceneSignals& oracle,
                                  Eigen::Index channel);

// One extractor application: estimate the target in mixture_channel guided by
// aux. mask_stft is the analysis config for the mask-based kinds. oracle may
// be null for kinds that do not need it. channel selects the oracle image row.
Waveform extract_target(const Waveform& mixture_channel, const Waveform& aux,
                        const ExtractorSpec& spec, const StftConfig& mask_stft,
                        const SceneSignals* oracle, Eigen::Index channel);

// Front-end composition: z = BF(y, theta_S); x_hat = TSE(y[ref], z). Output
// length always equals the mixture length.
Waveform run_bg_tse(const MultiChannelWaveform& y, const ArrayGeometry& g, const Doa& target_doa,
                    const PipelineConfig& cfg, const SceneSignals* oracle = nullptr);

// Back-end extension: the front-end/extractor pair runs once per channel
// (sharing one mixture STFT; only the reference alignment changes), interferer
// estimates come from subtraction, and a Souden MVDR on the estimate SCMs
// produces the final reference-channel output.
Waveform run_bg_tse_with_backend(const MultiChannelWaveform& y, const ArrayGeometry& g,
                                 const Doa& target_doa, const PipelineConfig& cfg,
                                 const SceneSignals* oracle = nullptr);

// x_hat_N = y - x_hat_S, samplewise.
Waveform interferer_estimate(const Waveform& mixture_channel, const Waveform& target_estimate);

}  // namespace bgtse
