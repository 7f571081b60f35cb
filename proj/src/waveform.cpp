#include "bgtse/waveform.hpp"

namespace bgtse {

void Waveform::validate() const {
  if (!(sample_rate > 0.0)) throw ConfigError("waveform: sample_rate must be > 0");
  if (!samples.allFinite()) throw ConfigError("waveform: non-finite sample");
}

void MultiChannelWaveform::validate() const {
  if (channels.rows() < 1) throw ConfigError("multichannel waveform: needs >= 1 channel");
  if (!(sample_rate > 0.0)) throw ConfigError("multichannel waveform: sample_rate must be > 0");
  if (!channels.allFinite()) throw ConfigError("multichannel waveform: non-finite sample");
}

}  // namespace bgtse
