#pragma once

#include <array>
#include <cstdint>

#include "bgtse/geometry.hpp"
#include "bgtse/waveform.hpp"

namespace bgtse {

// Shoebox room with a uniform frequency-independent wall absorption derived
// from t60 (Eyring inversion). t60 = 0 means anechoic.
struct RoomSpec {
  Eigen::Vector3d dimensions{6.0, 5.0, 3.0};  // meters, L x W x H
  double t60 = 0.5;                           // seconds
  double c_sound = kDefaultSoundSpeed;

  void validate() const;
};

// Allen-Berkley image method with an 81-tap windowed-sinc fractional delay.
// Direct path amplitude is 1/(4 pi dist). max_order < 0 means unlimited
// (images are then bounded by the RIR time window, which covers the full
// 60 dB decay plus margin).
Waveform image_source_rir(const RoomSpec& room, const Eigen::Vector3d& source,
                          const Eigen::Vector3d& mic, int max_order, double sample_rate);

struct Range {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double v) const { return v >= lo && v <= hi; }
};

// Sampling ranges for WHAMR!-style 2-speaker scenes.
struct SceneRanges {
  Range room_length{5.0, 10.0};
  Range room_width{5.0, 10.0};
  Range room_height{2.5, 4.0};
  Range t60{0.1, 1.0};
  Range array_radius{0.075, 0.125};
  int mic_count = 4;
  Range source_distance{0.66, 2.0};
  Range sir_db{0.0, 5.0};
  Range angular_spacing{0.0, 180.0};  // between the two speakers, degrees
  Range array_z{0.9, 1.6};
  double array_wall_margin = 1.2;   // min horizontal distance array center <-> walls
  double source_wall_margin = 0.3;  // min distance source <-> walls
  double c_sound = kDefaultSoundSpeed;
  double sample_rate = 8000.0;

  void validate() const;
};

// A fully-specified 2-speaker scene. Everything needed to re-simulate it
// bit-identically lives here (including the seed the dry signals derive from).
struct SceneSpec {
  RoomSpec room;
  Eigen::Vector3d array_center{3.0, 2.5, 1.2};
  double array_radius = 0.1;
  int mic_count = 4;
  std::array<Eigen::Vector3d, 2> source_positions;
  std::array<Doa, 2> source_doas;  // derived from geometry, stored for convenience
  double sir_db = 0.0;
  uint64_t seed = 0;
  double sample_rate = 8000.0;

  ArrayGeometry geometry() const { return circular_array(mic_count, array_radius); }
  Eigen::Vector3d mic_world_position(Eigen::Index c) const;
  Doa doa_of(const Eigen::Vector3d& source_position) const;
  double angular_spacing() const { return angular_spacing_deg(source_doas[0], source_doas[1]); }

  void validate() const;
};

// Deterministic scene draw; identical (seed, ranges) give identical specs.
SceneSpec sample_scene(uint64_t seed, const SceneRanges& ranges = {});

// Reverberant per-source images and their mixture; y = x_S + x_N samplewise.
struct SceneSignals {
  MultiChannelWaveform mixture;
  MultiChannelWaveform target_image;
  MultiChannelWaveform interferer_image;
};

// Scales the interferer so the reference-channel energy ratio hits sir_db
// exactly, then sums.
SceneSignals mix_at_sir(const MultiChannelWaveform& target_image,
                        const MultiChannelWaveform& interferer_image, double sir_db,
                        Eigen::Index ref_channel);

// Convolves the dry signals with each mic's RIR, truncates both images to the
// shorter convolved length, and mixes at the spec's SIR.
SceneSignals simulate_scene(const SceneSpec& spec, const Waveform& dry_target,
                            const Waveform& dry_interferer, int max_order = -1);

// Speech-like test signal: spectrally tilted noise through a few random
// resonances, gated by a syllabic envelope with genuine pauses.
Waveform synth_speech(uint64_t seed, Eigen::Index num_samples, double sample_rate);

// Dry input pair for a scene's two sources, derived from the scene seed.
std::array<Waveform, 2> scene_dry_signals(const SceneSpec& spec, Eigen::Index num_samples);

}  // namespace bgtse
