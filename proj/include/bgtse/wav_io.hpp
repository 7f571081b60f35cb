#pragma once

#include <string>

#include "bgtse/waveform.hpp"

namespace bgtse {

enum class WavFormat {
  kPcm16,    // 16-bit signed PCM, scaled by 32768, clipped, no dithering
  kFloat32,  // IEEE float32, lossless round-trip for float32-representable data
};

// Reads a RIFF/WAVE file (PCM16 or IEEE float32, any channel count).
// Malformed files raise IoError naming the missing/bad chunk and byte offset.
MultiChannelWaveform read_wav(const std::string& path);

// Mono convenience; errors if the file has more than one channel.
Waveform read_wav_mono(const std::string& path);

void write_wav(const std::string& path, const MultiChannelWaveform& wave,
               WavFormat format = WavFormat::kFloat32);
void write_wav(const std::string& path, const Waveform& wave,
               WavFormat format = WavFormat::kFloat32);

// Binary matrix container for masks/features. Layout (little-endian):
//   bytes 0-3   magic "BGTM"
//   u32         version (1)
//   u32         dtype (0 = float64)
//   u64         rows, u64 cols
//   rows*cols   float64 payload, row-major
void write_matrix(const std::string& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix(const std::string& path);

}  // namespace bgtse
