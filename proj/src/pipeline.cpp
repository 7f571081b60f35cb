#include "bgtse/pipeline.hpp"

#include <unistd.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>

#include "bgtse/features.hpp"
#include "bgtse/wav_io.hpp"

namespace bgtse {

bool extractor_needs_oracle(ExtractorKind kind) {
  return kind == ExtractorKind::kOracleIrm || kind == ExtractorKind::kOracleSignal;
}

void ExtractorSpec::validate() const {
  if (!(irm_exponent > 0.0)) throw ConfigError("extractor: irm exponent must be > 0");
  if (!(coherence_smoothing > 0.0 && coherence_smoothing < 1.0))
    throw ConfigError("extractor: coherence smoothing must lie in (0, 1)");
  if (kind == ExtractorKind::kExternalCommand && command.empty())
    throw ConfigError("extractor: external command must not be empty");
}

void PipelineConfig::validate() const {
  frontend_stft.validate();
  backend_stft.validate();
  extractor.validate();
  if (ref_channel < 0) throw ConfigError("pipeline: reference channel must be >= 0");
  if (!(c_sound > 0.0)) throw ConfigError("pipeline: c_sound must be > 0");
  if (loading < 0.0) throw ConfigError("pipeline: loading must be >= 0");
}

namespace {

// First difference: 6 dB/oct pre-emphasis. Reverberant tails pile up at low
// frequencies where a small array has no directivity; the pre-emphasis makes
// the source-selection fit read the band where the beamformer discriminates.
Eigen::VectorXd pre_emphasis(const Eigen::VectorXd& x) {
  Eigen::VectorXd y = x;
  for (Eigen::Index n = x.size() - 1; n > 0; --n) y[n] -= y[n - 1];
  return y;
}

}  // namespace

Eigen::Index select_oracle_source(const Waveform& aux, const SceneSignals& oracle,
                                  Eigen::Index channel) {
  if (oracle.target_image.length() != aux.length() ||
      oracle.interferer_image.length() != aux.length())
    throw ConfigError("select_oracle_source: oracle image length mismatch");
  const Eigen::VectorXd xt = pre_emphasis(oracle.target_image.channels.row(channel).transpose());
  const Eigen::VectorXd xi =
      pre_emphasis(oracle.interferer_image.channels.row(channel).transpose());
  const Eigen::VectorXd z = pre_emphasis(aux.samples);
  const double gtt = xt.squaredNorm();
  const double gii = xi.squaredNorm();
  const double gti = xt.dot(xi);
  const double bt = xt.dot(z);
  const double bi = xi.dot(z);
  // Joint least squares aux ~ a*target + b*interferer. Fitting both images at
  // once orthogonalizes the regressors, so speech cross-correlation cannot
  // inflate the coefficient of the weaker source the way per-source regression
  // does; |a| and |b| estimate the gains the guide applies to each source.
  const double det = gtt * gii - gti * gti;
  double coeff_t = -1.0;
  double coeff_i = -1.0;
  if (det > 1e-12 * gtt * gii) {
    coeff_t = std::abs((gii * bt - gti * bi) / det);
    coeff_i = std::abs((gtt * bi - gti * bt) / det);
  } else {
    // a silent or collinear image makes the joint fit singular
    if (gtt > 0.0) coeff_t = std::abs(bt) / gtt;
    if (gii > 0.0) coeff_i = std::abs(bi) / gii;
  }
  return coeff_t >= coeff_i ? 0 : 1;
}

namespace {

Waveform oracle_image_channel(const SceneSignals& oracle, Eigen::Index source,
                              Eigen::Index channel) {
  const MultiChannelWaveform& img = source == 0 ? oracle.target_image : oracle.interferer_image;
  return img.channel(channel);
}

Waveform extract_external(const Waveform& mixture_channel, const Waveform& aux,
                          const std::string& command) {
  namespace fs = std::filesystem;
  static std::atomic<uint64_t> counter{0};
  const fs::path dir = fs::temp_directory_path() /
                       ("bgtse-extract-" + std::to_string(::getpid()) + "-" +
                        std::to_string(counter.fetch_add(1)));
  fs::create_directories(dir);
  const fs::path mix_path = dir / "mixture.wav";
  const fs::path aux_path = dir / "aux.wav";
  const fs::path out_path = dir / "out.wav";

  Waveform result;
  try {
    write_wav(mix_path.string(), mixture_channel, WavFormat::kFloat32);
    write_wav(aux_path.string(), aux, WavFormat::kFloat32);
    const std::string cmd = command + " '" + mix_path.string() + "' '" + aux_path.string() +
                            "' '" + out_path.string() + "'";
    const int status = std::system(cmd.c_str());
    if (status != 0)
      throw IoError("external extractor failed with status " + std::to_string(status) + ": " +
                    command);
    result = read_wav_mono(out_path.string());
  } catch (...) {
    std::error_code ec;
    fs::remove_all(dir, ec);
    throw;
  }
  std::error_code ec;
  fs::remove_all(dir, ec);

  if (result.length() != mixture_channel.length())
    throw IoError("external extractor returned " + std::to_string(result.length()) +
                  " samples, expected " + std::to_string(mixture_channel.length()));
  result.sample_rate = mixture_channel.sample_rate;
  return result;
}

}  // namespace

Waveform extract_target(const Waveform& mixture_channel, const Waveform& aux,
                        const ExtractorSpec& spec, const StftConfig& mask_stft,
                        const SceneSignals* oracle, Eigen::Index channel) {
  spec.validate();
  if (mixture_channel.length() < 1) throw ConfigError("extract_target: empty mixture");
  if (extractor_needs_oracle(spec.kind) && oracle == nullptr)
    throw ConfigError("extract_target: oracle extractor requires scene signals");

  switch (spec.kind) {
    case ExtractorKind::kOracleSignal: {
      const Eigen::Index src = select_oracle_source(aux, *oracle, channel);
      return oracle_image_channel(*oracle, src, channel);
    }
    case ExtractorKind::kOracleIrm: {
      const Eigen::Index src = select_oracle_source(aux, *oracle, channel);
      // masking modifies the spectrum, so synthesize on an edge-padded copy
      const Eigen::Index pad = stft_edge_padding(mask_stft);
      const SpectrogramTensor xs =
          stft(zero_pad_edges(oracle_image_channel(*oracle, src, channel), pad), mask_stft);
      const SpectrogramTensor xn =
          stft(zero_pad_edges(oracle_image_channel(*oracle, 1 - src, channel), pad), mask_stft);
      const Waveform yp = zero_pad_edges(mixture_channel, pad);
      const SpectrogramTensor y = stft(yp, mask_stft);
      const Waveform out =
          istft(apply_mask(y, irm(xs, xn, spec.irm_exponent)), yp.length()).channel(0);
      return {out.samples.segment(pad, mixture_channel.length()).eval(),
              mixture_channel.sample_rate};
    }
    case ExtractorKind::kCoherenceMask: {
      const Eigen::Index pad = stft_edge_padding(mask_stft);
      const Waveform yp = zero_pad_edges(mixture_channel, pad);
      const SpectrogramTensor y = stft(yp, mask_stft);
      const SpectrogramTensor z = stft(zero_pad_edges(aux, pad), mask_stft);
      const Waveform out =
          istft(apply_mask(y, coherence_mask(y, z, spec.coherence_smoothing)), yp.length())
              .channel(0);
      return {out.samples.segment(pad, mixture_channel.length()).eval(),
              mixture_channel.sample_rate};
    }
    case ExtractorKind::kExternalCommand:
      return extract_external(mixture_channel, aux, spec.command);
  }
  throw ConfigError("extract_target: unknown extractor kind");
}

namespace {

void check_pipeline_inputs(const MultiChannelWaveform& y, const ArrayGeometry& g,
                           const PipelineConfig& cfg, const SceneSignals* oracle,
                           const char* where) {
  cfg.validate();
  if (y.length() < 1) throw ConfigError(std::string(where) + ": empty mixture");
  if (y.channel_count() != g.mic_count())
    throw ConfigError(std::string(where) + ": channel count does not match geometry");
  if (cfg.ref_channel >= y.channel_count())
    throw ConfigError(std::string(where) + ": reference channel out of range");
  if (extractor_needs_oracle(cfg.extractor.kind) && oracle == nullptr)
    throw ConfigError(std::string(where) + ": oracle extractor requires scene signals");
}

}  // namespace

Waveform run_bg_tse(const MultiChannelWaveform& y, const ArrayGeometry& g, const Doa& target_doa,
                    const PipelineConfig& cfg, const SceneSignals* oracle) {
  check_pipeline_inputs(y, g, cfg, oracle, "run_bg_tse");
  const FrontendOptions opts{cfg.frontend_stft, cfg.loading, cfg.c_sound};
  const Waveform z =
      beamform_frontend(y, g, target_doa, cfg.frontend_kind, cfg.ref_channel, opts);
  return extract_target(y.channel(cfg.ref_channel), z, cfg.extractor, cfg.frontend_stft, oracle,
                        cfg.ref_channel);
}

Waveform run_bg_tse_with_backend(const MultiChannelWaveform& y, const ArrayGeometry& g,
                                 const Doa& target_doa, const PipelineConfig& cfg,
                                 const SceneSignals* oracle) {
  check_pipeline_inputs(y, g, cfg, oracle, "run_bg_tse_with_backend");
  if (!cfg.backend_enabled)
    throw ConfigError("run_bg_tse_with_backend: back-end disabled in configuration");
  if (y.channel_count() < 2)
    throw ConfigError("run_bg_tse_with_backend: back-end requires a multichannel mixture");

  const FrontendOptions opts{cfg.frontend_stft, cfg.loading, cfg.c_sound};
  const SpectrogramTensor spec = stft(y, cfg.frontend_stft);
  const SteeringVector d =
      steering_vector(g, target_doa, cfg.frontend_stft, y.sample_rate, cfg.c_sound);
  const BeamformerWeights base = frontend_weights(spec, d, g, cfg.frontend_kind, 0, opts);

  // per-bin weights apply to the edge-padded analysis unchanged (see
  // stft_edge_padding); synthesize the guides there and crop
  const Eigen::Index pad = stft_edge_padding(cfg.frontend_stft);
  const MultiChannelWaveform yp = zero_pad_edges(y, pad);
  const SpectrogramTensor spec_p = stft(yp, cfg.frontend_stft);

  MultiChannelWaveform target_estimates =
      MultiChannelWaveform::zeros(y.channel_count(), y.length(), y.sample_rate);
  for (Eigen::Index c = 0; c < y.channel_count(); ++c) {
    const BeamformerWeights w_c = c == 0 ? base : realign(base, d, c);
    const Waveform z_full = istft(apply_beamformer(spec_p, w_c), yp.length()).channel(0);
    const Waveform z_c{z_full.samples.segment(pad, y.length()).eval(), y.sample_rate};
    target_estimates.set_channel(
        c, extract_target(y.channel(c), z_c, cfg.extractor, cfg.frontend_stft, oracle, c));
  }
  return beamform_backend(y, target_estimates, cfg.ref_channel, cfg.backend_stft, cfg.loading);
}

Waveform interferer_estimate(const Waveform& mixture_channel, const Waveform& target_estimate) {
  if (mixture_channel.length() != target_estimate.length())
    throw ConfigError("interferer_estimate: signal lengths differ");
  return {mixture_channel.samples - target_estimate.samples, mixture_channel.sample_rate};
}

}  // namespace bgtse
