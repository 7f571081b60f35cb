#include "bgtse/room_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "bgtse/fft.hpp"
#include "bgtse/rng.hpp"

namespace bgtse {

namespace {
constexpr int kSincTaps = 81;  // fractional-delay interpolator width
constexpr int kSincHalf = kSincTaps / 2;
constexpr double kPi = std::numbers::pi;
}  // namespace

void RoomSpec::validate() const {
  if (!(dimensions.minCoeff() > 0.0)) throw ConfigError("room: dimensions must be > 0");
  if (!(t60 >= 0.0 && t60 <= 2.0)) throw ConfigError("room: t60 must lie in [0, 2] s");
  if (!(c_sound > 0.0)) throw ConfigError("room: c_sound must be > 0");
}

namespace {

bool inside_room(const RoomSpec& room, const Eigen::Vector3d& p, double margin = 0.0) {
  for (int i = 0; i < 3; ++i)
    if (!(p[i] > margin && p[i] < room.dimensions[i] - margin)) return false;
  return true;
}

// Uniform wall reflection coefficient beta = sqrt(1 - alpha) from t60.
double reflection_coefficient(const RoomSpec& room) {
  if (room.t60 <= 0.0) return 0.0;
  const double v = room.dimensions.prod();
  const Eigen::Vector3d& d = room.dimensions;
  const double s = 2.0 * (d[0] * d[1] + d[0] * d[2] + d[1] * d[2]);
  // Sabine inversion: t60 = 0.161 V / (alpha S). Floored so that a t60 too
  // short for the room to realize saturates at a heavily damped wall instead
  // of going anechoic.
  const double alpha = 0.161 * v / (s * room.t60);
  return std::sqrt(std::max(1.0 - alpha, 0.01));
}

struct Biquad {
  double b0 = 1, b1 = 0, b2 = 0, a1 = 0, a2 = 0;
  double z1 = 0, z2 = 0;

  static Biquad bandpass(double freq_hz, double q, double sample_rate) {
    const double w = 2.0 * kPi * freq_hz / sample_rate;
    const double alpha = std::sin(w) / (2.0 * q);
    const double a0 = 1.0 + alpha;
    Biquad f;
    f.b0 = alpha / a0;
    f.b1 = 0.0;
    f.b2 = -alpha / a0;
    f.a1 = -2.0 * std::cos(w) / a0;
    f.a2 = (1.0 - alpha) / a0;
    return f;
  }

  // 2nd-order Butterworth high-pass (bilinear transform)
  static Biquad highpass(double freq_hz, double sample_rate) {
    const double k = std::tan(kPi * freq_hz / sample_rate);
    const double norm = 1.0 / (1.0 + std::numbers::sqrt2 * k + k * k);
    Biquad f;
    f.b0 = norm;
    f.b1 = -2.0 * norm;
    f.b2 = norm;
    f.a1 = 2.0 * (k * k - 1.0) * norm;
    f.a2 = (1.0 - std::numbers::sqrt2 * k + k * k) * norm;
    return f;
  }

  double step(double x) {
    const double y = b0 * x + z1;
    z1 = b1 * x - a1 * y + z2;
    z2 = b2 * x - a2 * y;
    return y;
  }
};

struct AxisImage {
  double delta;  // image coordinate minus mic coordinate, meters
  double amp;    // beta^(|m - q| + |m|)
  int order;     // |2m - q|
};

std::vector<AxisImage> axis_images(double source, double mic, double room_len, double beta,
                                   double max_dist, int max_order) {
  std::vector<AxisImage> out;
  const int n = static_cast<int>(std::ceil(max_dist / (2.0 * room_len))) + 1;
  for (int m = -n; m <= n; ++m) {
    for (int q = 0; q <= 1; ++q) {
      const int order = std::abs(2 * m - q);
      if (max_order >= 0 && order > max_order) continue;
      const double delta = (1 - 2 * q) * source + 2.0 * m * room_len - mic;
      if (std::abs(delta) > max_dist) continue;
      out.push_back({delta, std::pow(beta, std::abs(m - q) + std::abs(m)), order});
    }
  }
  return out;
}

// Hann-windowed sinc h(t) = 0.5 (1 + cos(2 pi t / taps)) sinc(t), |t| <= taps/2,
// tabulated at kTableOversample points per sample for linear interpolation.
// Covers t in [-(half+1), half+1] so any frac in [0,1) stays in range.
constexpr int kTableOversample = 128;

const std::vector<double>& windowed_sinc_table() {
  static const std::vector<double> table = [] {
    const int span = kSincHalf + 1;                      // 41
    const int n = 2 * span * kTableOversample + 2;       // guard entry for interpolation
    std::vector<double> t(static_cast<size_t>(n), 0.0);
    for (int j = 0; j < n; ++j) {
      const double x = static_cast<double>(j) / kTableOversample - span;
      if (std::abs(x) > kSincTaps / 2.0) continue;       // outside the 81-tap window
      const double sinc = std::abs(x) < 1e-12 ? 1.0 : std::sin(kPi * x) / (kPi * x);
      t[static_cast<size_t>(j)] = 0.5 * (1.0 + std::cos(2.0 * kPi * x / kSincTaps)) * sinc;
    }
    return t;
  }();
  return table;
}

// Adds gain * windowed-sinc centered at `arrival` (fractional samples) into h.
void add_fractional_impulse(Eigen::VectorXd& h, double arrival, double gain) {
  const std::vector<double>& table = windowed_sinc_table();
  const auto base = static_cast<Eigen::Index>(std::floor(arrival));
  const double frac = arrival - static_cast<double>(base);

  // tap m sits at t = m - frac -> table position (t + half + 1) * oversample
  const double pos0 = (static_cast<double>(-kSincHalf) - frac + kSincHalf + 1) * kTableOversample;
  const auto i0 = static_cast<Eigen::Index>(std::floor(pos0));
  const double blend = pos0 - static_cast<double>(i0);

  const Eigen::Index lo = std::max<Eigen::Index>(0, -(base - kSincHalf));
  const Eigen::Index hi =
      std::min<Eigen::Index>(2 * kSincHalf, h.size() - 1 - (base - kSincHalf));
  for (Eigen::Index m = lo; m <= hi; ++m) {
    const size_t j = static_cast<size_t>(i0 + m * kTableOversample);
    const double v = table[j] + blend * (table[j + 1] - table[j]);
    h[base - kSincHalf + m] += gain * v;
  }
}

Eigen::Index rir_length(const RoomSpec& room, double direct_dist, double sample_rate) {
  const double tail = room.t60 > 0.0 ? 1.15 * room.t60 + 0.01 : 0.002;
  const double t_len = direct_dist / room.c_sound + tail;
  return static_cast<Eigen::Index>(std::ceil(t_len * sample_rate)) + kSincHalf + 1;
}

Waveform image_source_rir_fixed(const RoomSpec& room, const Eigen::Vector3d& source,
                                const Eigen::Vector3d& mic, int max_order, double sample_rate,
                                Eigen::Index num_samples) {
  room.validate();
  if (!inside_room(room, source) || !inside_room(room, mic))
    throw ConfigError("image_source_rir: source/mic must be inside the room");
  if (!(sample_rate > 0.0)) throw ConfigError("image_source_rir: sample_rate must be > 0");

  const double beta = reflection_coefficient(room);
  const int effective_order = (beta == 0.0 && max_order < 0) ? 0 : max_order;
  const double max_dist =
      room.c_sound * static_cast<double>(num_samples + kSincHalf) / sample_rate;

  const auto xs = axis_images(source[0], mic[0], room.dimensions[0], beta, max_dist, effective_order);
  const auto ys = axis_images(source[1], mic[1], room.dimensions[1], beta, max_dist, effective_order);
  const auto zs = axis_images(source[2], mic[2], room.dimensions[2], beta, max_dist, effective_order);

  Eigen::VectorXd h = Eigen::VectorXd::Zero(num_samples);
  const double samples_per_meter = sample_rate / room.c_sound;
  const double min_dist = room.c_sound / sample_rate;  // floor: one sample of travel

  for (const auto& xi : xs) {
    const double dx2 = xi.delta * xi.delta;
    if (xi.delta * xi.delta > max_dist * max_dist) continue;
    for (const auto& yi : ys) {
      const double dxy2 = dx2 + yi.delta * yi.delta;
      if (dxy2 > max_dist * max_dist) continue;
      const double amp_xy = xi.amp * yi.amp;
      const int order_xy = xi.order + yi.order;
      if (effective_order >= 0 && order_xy > effective_order) continue;
      for (const auto& zi : zs) {
        if (effective_order >= 0 && order_xy + zi.order > effective_order) continue;
        const double dist = std::sqrt(dxy2 + zi.delta * zi.delta);
        if (dist > max_dist) continue;
        const double arrival = dist * samples_per_meter;
        if (arrival - kSincHalf >= static_cast<double>(num_samples)) continue;
        const double gain = amp_xy * zi.amp / (4.0 * kPi * std::max(dist, min_dist));
        add_fractional_impulse(h, arrival, gain);
      }
    }
  }

  // Every image has positive amplitude, so the raw sum piles up nonphysical
  // quasi-DC energy in the late tail. The method's final step removes it with
  // a low-frequency cutoff; a bare direct path has no such artifact.
  if (beta > 0.0 && effective_order != 0) {
    Biquad hp = Biquad::highpass(100.0, sample_rate);
    for (Eigen::Index i = 0; i < h.size(); ++i) h[i] = hp.step(h[i]);
  }
  return {std::move(h), sample_rate};
}

}  // namespace

Waveform image_source_rir(const RoomSpec& room, const Eigen::Vector3d& source,
                          const Eigen::Vector3d& mic, int max_order, double sample_rate) {
  const Eigen::Index len = rir_length(room, (source - mic).norm(), sample_rate);
  return image_source_rir_fixed(room, source, mic, max_order, sample_rate, len);
}

void SceneRanges::validate() const {
  auto check = [](const Range& r, const char* name) {
    if (!(r.lo <= r.hi)) throw ConfigError(std::string("scene ranges: empty range for ") + name);
  };
  check(room_length, "room_length");
  check(room_width, "room_width");
  check(room_height, "room_height");
  check(t60, "t60");
  check(array_radius, "array_radius");
  check(source_distance, "source_distance");
  check(sir_db, "sir_db");
  check(angular_spacing, "angular_spacing");
  check(array_z, "array_z");
  if (mic_count < 1) throw ConfigError("scene ranges: mic_count must be >= 1");
  if (!(sample_rate > 0.0)) throw ConfigError("scene ranges: sample_rate must be > 0");
  if (2.0 * array_wall_margin >= room_length.lo || 2.0 * array_wall_margin >= room_width.lo)
    throw ConfigError("scene ranges: array margin inconsistent with room size");
  if (array_z.lo < 0.2 || array_z.hi > room_height.lo - 0.2)
    throw ConfigError("scene ranges: array height range inconsistent with room size");
  if (source_distance.lo <= array_radius.hi)
    throw ConfigError("scene ranges: sources would fall inside the array");
}

Eigen::Vector3d SceneSpec::mic_world_position(Eigen::Index c) const {
  return array_center + geometry().mic_positions[static_cast<size_t>(c)];
}

Doa SceneSpec::doa_of(const Eigen::Vector3d& source_position) const {
  const Eigen::Vector3d v = source_position - array_center;
  const double az = std::atan2(v[1], v[0]) * 180.0 / kPi;
  const double el = std::asin(std::clamp(v[2] / v.norm(), -1.0, 1.0)) * 180.0 / kPi;
  return Doa::wrapped(az, el);
}

void SceneSpec::validate() const {
  room.validate();
  if (mic_count < 1) throw ConfigError("scene: mic_count must be >= 1");
  if (!(array_radius >= 0.075 && array_radius <= 0.125))
    throw ConfigError("scene: array radius must lie in [0.075, 0.125] m");
  if (!(sir_db >= 0.0 && sir_db <= 5.0)) throw ConfigError("scene: SIR must lie in [0, 5] dB");
  if (!(sample_rate > 0.0)) throw ConfigError("scene: sample_rate must be > 0");
  for (Eigen::Index c = 0; c < mic_count; ++c)
    if (!inside_room(room, mic_world_position(c)))
      throw ConfigError("scene: array not inside room");
  for (const auto& p : source_positions) {
    if (!inside_room(room, p)) throw ConfigError("scene: source not inside room");
    const double dist = (p - array_center).norm();
    if (!(dist >= 0.66 && dist <= 2.0))
      throw ConfigError("scene: source-array distance must lie in [0.66, 2.00] m");
  }
}

SceneSpec sample_scene(uint64_t seed, const SceneRanges& ranges) {
  ranges.validate();
  Rng rng(mix_seed(seed, 0));

  SceneSpec spec;
  spec.seed = seed;
  spec.sample_rate = ranges.sample_rate;
  spec.room.dimensions = {rng.uniform(ranges.room_length.lo, ranges.room_length.hi),
                          rng.uniform(ranges.room_width.lo, ranges.room_width.hi),
                          rng.uniform(ranges.room_height.lo, ranges.room_height.hi)};
  spec.room.t60 = rng.uniform(ranges.t60.lo, ranges.t60.hi);
  spec.room.c_sound = ranges.c_sound;

  spec.mic_count = ranges.mic_count;
  spec.array_radius = rng.uniform(ranges.array_radius.lo, ranges.array_radius.hi);
  const double m = ranges.array_wall_margin;
  spec.array_center = {rng.uniform(m, spec.room.dimensions[0] - m),
                       rng.uniform(m, spec.room.dimensions[1] - m),
                       rng.uniform(ranges.array_z.lo, ranges.array_z.hi)};

  bool placed = false;
  for (int attempt = 0; attempt < 200 && !placed; ++attempt) {
    const double az1 = rng.uniform(0.0, 360.0);
    const double spacing = rng.uniform(ranges.angular_spacing.lo, ranges.angular_spacing.hi);
    const double az2 = az1 + (rng.coin() ? spacing : -spacing);
    const double d1 = rng.uniform(ranges.source_distance.lo, ranges.source_distance.hi);
    const double d2 = rng.uniform(ranges.source_distance.lo, ranges.source_distance.hi);
    const Eigen::Vector3d p1 =
        spec.array_center + d1 * Eigen::Vector3d(std::cos(az1 * kPi / 180.0),
                                                 std::sin(az1 * kPi / 180.0), 0.0);
    const Eigen::Vector3d p2 =
        spec.array_center + d2 * Eigen::Vector3d(std::cos(az2 * kPi / 180.0),
                                                 std::sin(az2 * kPi / 180.0), 0.0);
    if (inside_room(spec.room, p1, ranges.source_wall_margin) &&
        inside_room(spec.room, p2, ranges.source_wall_margin)) {
      spec.source_positions = {p1, p2};
      placed = true;
    }
  }
  if (!placed)
    throw ConfigError("sample_scene: could not place sources (ranges inconsistent with room)");

  spec.source_doas = {spec.doa_of(spec.source_positions[0]),
                      spec.doa_of(spec.source_positions[1])};
  spec.sir_db = rng.uniform(ranges.sir_db.lo, ranges.sir_db.hi);
  spec.validate();
  return spec;
}

SceneSignals mix_at_sir(const MultiChannelWaveform& target_image,
                        const MultiChannelWaveform& interferer_image, double sir_db,
                        Eigen::Index ref_channel) {
  if (target_image.channel_count() != interferer_image.channel_count() ||
      target_image.length() != interferer_image.length())
    throw ConfigError("mix_at_sir: image shapes differ");
  const double e_target = target_image.channels.row(ref_channel).squaredNorm();
  const double e_interferer = interferer_image.channels.row(ref_channel).squaredNorm();
  if (!(e_target > 0.0) || !(e_interferer > 0.0))
    throw NumericError("mix_at_sir: zero-energy source at reference channel");

  const double gain = std::sqrt(e_target / e_interferer * std::pow(10.0, -sir_db / 10.0));
  SceneSignals out;
  out.target_image = target_image;
  out.interferer_image = interferer_image;
  out.interferer_image.channels *= gain;
  out.mixture = out.target_image;
  out.mixture.channels += out.interferer_image.channels;
  return out;
}

SceneSignals simulate_scene(const SceneSpec& spec, const Waveform& dry_target,
                            const Waveform& dry_interferer, int max_order) {
  spec.validate();
  for (const Waveform* dry : {&dry_target, &dry_interferer}) {
    if (dry->sample_rate != spec.sample_rate)
      throw ConfigError("simulate_scene: dry signal sample rate does not match scene");
    if (dry->length() < 1) throw ConfigError("simulate_scene: empty dry signal");
  }

  std::array<MultiChannelWaveform, 2> images;
  const std::array<const Waveform*, 2> dry = {&dry_target, &dry_interferer};
  for (int s = 0; s < 2; ++s) {
    // one RIR length per source so all channels convolve to the same length
    Eigen::Index len = 0;
    for (Eigen::Index c = 0; c < spec.mic_count; ++c) {
      const double dist = (spec.source_positions[static_cast<size_t>(s)] -
                           spec.mic_world_position(c)).norm();
      len = std::max(len, rir_length(spec.room, dist, spec.sample_rate));
    }
    MultiChannelWaveform img = MultiChannelWaveform::zeros(
        spec.mic_count, dry[static_cast<size_t>(s)]->length() + len - 1, spec.sample_rate);
    for (Eigen::Index c = 0; c < spec.mic_count; ++c) {
      const Waveform rir =
          image_source_rir_fixed(spec.room, spec.source_positions[static_cast<size_t>(s)],
                                 spec.mic_world_position(c), max_order, spec.sample_rate, len);
      img.channels.row(c) =
          fft_convolve(dry[static_cast<size_t>(s)]->samples, rir.samples).transpose();
    }
    images[static_cast<size_t>(s)] = std::move(img);
  }

  // min-style truncation to the shorter convolved source
  const Eigen::Index mix_len = std::min(images[0].length(), images[1].length());
  for (auto& img : images)
    img.channels.conservativeResize(Eigen::NoChange, mix_len);

  return mix_at_sir(images[0], images[1], spec.sir_db, 0);
}

Waveform synth_speech(uint64_t seed, Eigen::Index num_samples, double sample_rate) {
  if (num_samples < 1) throw ConfigError("synth_speech: num_samples must be >= 1");
  Rng rng(seed);

  // spectrally tilted noise through a few random resonances
  Eigen::VectorXd x(num_samples);
  for (Eigen::Index i = 0; i < num_samples; ++i) x[i] = rng.gaussian();

  const double a_tilt = std::exp(-2.0 * kPi * 260.0 / sample_rate);
  // formant-like resonances with the long-term level rolloff of speech: power
  // peaks below 500 Hz and the upper resonances sit well under the first
  std::array<Biquad, 3> resonators = {
      Biquad::bandpass(rng.uniform(180.0, 460.0), 5.0, sample_rate),
      Biquad::bandpass(rng.uniform(900.0, 2400.0), 5.0, sample_rate),
      Biquad::bandpass(rng.uniform(2400.0, 3400.0), 6.0, sample_rate)};
  const std::array<double, 3> resonator_gains = {2.3, 0.38, 0.18};
  double lp = 0.0, lp2 = 0.0;
  Eigen::VectorXd shaped(num_samples);
  for (Eigen::Index i = 0; i < num_samples; ++i) {
    lp = a_tilt * lp + (1.0 - a_tilt) * x[i];
    lp2 = a_tilt * lp2 + (1.0 - a_tilt) * lp;
    double v = 4.0 * lp2 + 0.013 * x[i];
    for (size_t r = 0; r < resonators.size(); ++r)
      v += resonator_gains[r] * resonators[r].step(x[i]);
    shaped[i] = v;
  }
  // infra cutoff: speech recordings carry next to nothing below ~100 Hz
  Biquad infra = Biquad::highpass(120.0, sample_rate);
  for (Eigen::Index i = 0; i < num_samples; ++i) shaped[i] = infra.step(shaped[i]);

  // syllabic gate: random segment levels with genuine pauses and 25 ms ramps
  Eigen::VectorXd env(num_samples);
  const auto ramp = static_cast<Eigen::Index>(0.025 * sample_rate);
  Eigen::Index pos = 0;
  double level = rng.uniform(0.5, 1.0);  // always start voiced
  while (pos < num_samples) {
    const auto seg_len = static_cast<Eigen::Index>(rng.uniform(0.12, 0.35) * sample_rate);
    // activity factor of conversational speech: a bit under two thirds voiced
    const double next = rng.uniform01() < 0.4 ? 0.0 : rng.uniform(0.35, 1.0);
    for (Eigen::Index i = 0; i < seg_len && pos < num_samples; ++i, ++pos) {
      if (i < ramp) {
        const double t = 0.5 - 0.5 * std::cos(kPi * static_cast<double>(i) / static_cast<double>(ramp));
        env[pos] = level + (next - level) * t;
      } else {
        env[pos] = next;
      }
    }
    level = next;
  }

  Eigen::VectorXd out = shaped.cwiseProduct(env);
  const double rms = std::sqrt(out.squaredNorm() / static_cast<double>(num_samples));
  if (rms > 1e-12) out *= 0.1 / rms;
  return {std::move(out), sample_rate};
}

std::array<Waveform, 2> scene_dry_signals(const SceneSpec& spec, Eigen::Index num_samples) {
  return {synth_speech(mix_seed(spec.seed, 11), num_samples, spec.sample_rate),
          synth_speech(mix_seed(spec.seed, 22), num_samples, spec.sample_rate)};
}

}  // namespace bgtse
