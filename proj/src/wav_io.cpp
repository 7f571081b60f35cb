#include "bgtse/wav_io.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "bgtse/errors.hpp"

namespace bgtse {

namespace {

constexpr uint16_t kFormatPcm = 1;
constexpr uint16_t kFormatFloat = 3;

[[noreturn]] void fail(const std::string& path, const std::string& what, std::streamoff offset) {
  throw IoError(path + ": " + what + " (offset " + std::to_string(offset) + ")");
}

class LeReader {
 public:
  LeReader(std::istream& in, const std::string& path) : in_(in), path_(path) {}

  std::streamoff offset() { return in_.tellg(); }

  void bytes(void* dst, size_t n, const char* what) {
    const std::streamoff at = offset();
    in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (static_cast<size_t>(in_.gcount()) != n)
      fail(path_, std::string("truncated file while reading ") + what, at);
  }

  uint32_t u32(const char* what) {
    std::array<unsigned char, 4> b;
    bytes(b.data(), 4, what);
    return static_cast<uint32_t>(b[0]) | static_cast<uint32_t>(b[1]) << 8 |
           static_cast<uint32_t>(b[2]) << 16 | static_cast<uint32_t>(b[3]) << 24;
  }

  uint16_t u16(const char* what) {
    std::array<unsigned char, 2> b;
    bytes(b.data(), 2, what);
    return static_cast<uint16_t>(b[0] | b[1] << 8);
  }

  std::string tag(const char* what) {
    std::array<char, 4> b;
    bytes(b.data(), 4, what);
    return std::string(b.data(), 4);
  }

  void skip(std::streamoff n) { in_.seekg(n, std::ios::cur); }

  std::string path() const { return path_; }

 private:
  std::istream& in_;
  std::string path_;
};

void put_u32(std::ostream& out, uint32_t v) {
  const std::array<char, 4> b = {static_cast<char>(v & 0xff), static_cast<char>(v >> 8 & 0xff),
                                 static_cast<char>(v >> 16 & 0xff),
                                 static_cast<char>(v >> 24 & 0xff)};
  out.write(b.data(), 4);
}

void put_u16(std::ostream& out, uint16_t v) {
  const std::array<char, 2> b = {static_cast<char>(v & 0xff), static_cast<char>(v >> 8 & 0xff)};
  out.write(b.data(), 2);
}

}  // namespace

MultiChannelWaveform read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path + ": cannot open for reading");
  LeReader r(in, path);

  if (r.tag("RIFF id") != "RIFF") fail(path, "missing RIFF chunk", 0);
  r.u32("RIFF size");
  if (r.tag("WAVE id") != "WAVE") fail(path, "not a WAVE file", 8);

  bool have_fmt = false;
  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  std::vector<char> data;
  bool have_data = false;

  while (true) {
    const std::streamoff chunk_at = r.offset();
    std::array<char, 4> idbuf;
    in.read(idbuf.data(), 4);
    if (in.gcount() == 0) break;  // clean EOF between chunks
    if (in.gcount() != 4) fail(path, "truncated chunk id", chunk_at);
    const std::string id(idbuf.data(), 4);
    const uint32_t size = r.u32("chunk size");

    if (id == "fmt ") {
      if (size < 16) fail(path, "fmt chunk too small", chunk_at);
      format = r.u16("format code");
      channels = r.u16("channel count");
      rate = r.u32("sample rate");
      r.u32("byte rate");
      r.u16("block align");
      bits = r.u16("bits per sample");
      r.skip(size - 16 + (size & 1));
      have_fmt = true;
    } else if (id == "data") {
      data.resize(size);
      if (size > 0) r.bytes(data.data(), size, "data chunk");
      r.skip(size & 1);
      have_data = true;
    } else {
      r.skip(static_cast<std::streamoff>(size) + (size & 1));
      if (!in) fail(path, "truncated " + id + " chunk", chunk_at);
    }
    if (have_fmt && have_data) break;
  }

  if (!have_fmt) fail(path, "missing fmt chunk", r.offset());
  if (!have_data) fail(path, "missing data chunk", r.offset());
  if (channels == 0) fail(path, "zero channels in fmt chunk", 0);
  if (rate == 0) fail(path, "zero sample rate in fmt chunk", 0);

  const bool pcm16 = format == kFormatPcm && bits == 16;
  const bool f32 = format == kFormatFloat && bits == 32;
  if (!pcm16 && !f32)
    fail(path,
         "unsupported codec (format " + std::to_string(format) + ", " + std::to_string(bits) +
             " bit); expected PCM16 or float32",
         0);

  const size_t bytes_per_sample = pcm16 ? 2 : 4;
  const size_t frame_bytes = bytes_per_sample * channels;
  const auto frames = static_cast<Eigen::Index>(data.size() / frame_bytes);

  MultiChannelWaveform out = MultiChannelWaveform::zeros(channels, frames, rate);
  const auto* p = reinterpret_cast<const unsigned char*>(data.data());
  for (Eigen::Index t = 0; t < frames; ++t) {
    for (Eigen::Index c = 0; c < channels; ++c) {
      const unsigned char* s = p + (static_cast<size_t>(t) * channels + static_cast<size_t>(c)) *
                                       bytes_per_sample;
      if (pcm16) {
        const auto v = static_cast<int16_t>(s[0] | s[1] << 8);
        out.channels(c, t) = static_cast<double>(v) / 32768.0;
      } else {
        uint32_t u = static_cast<uint32_t>(s[0]) | static_cast<uint32_t>(s[1]) << 8 |
                     static_cast<uint32_t>(s[2]) << 16 | static_cast<uint32_t>(s[3]) << 24;
        float f;
        std::memcpy(&f, &u, 4);
        out.channels(c, t) = static_cast<double>(f);
      }
    }
  }
  return out;
}

Waveform read_wav_mono(const std::string& path) {
  MultiChannelWaveform w = read_wav(path);
  if (w.channel_count() != 1)
    throw IoError(path + ": expected mono, got " + std::to_string(w.channel_count()) +
                  " channels");
  return w.channel(0);
}

void write_wav(const std::string& path, const MultiChannelWaveform& wave, WavFormat format) {
  wave.validate();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path + ": cannot open for writing");

  const auto channels = static_cast<uint16_t>(wave.channel_count());
  const auto rate = static_cast<uint32_t>(std::lround(wave.sample_rate));
  const bool pcm16 = format == WavFormat::kPcm16;
  const uint16_t bits = pcm16 ? 16 : 32;
  const uint16_t block_align = static_cast<uint16_t>(channels * bits / 8);
  const auto data_size =
      static_cast<uint32_t>(wave.length() * static_cast<Eigen::Index>(block_align));
  const uint32_t fact_size = pcm16 ? 0 : 12;  // float WAVs carry a fact chunk

  out.write("RIFF", 4);
  put_u32(out, 4 + 24 + fact_size + 8 + data_size);
  out.write("WAVE", 4);

  out.write("fmt ", 4);
  put_u32(out, 16);
  put_u16(out, pcm16 ? kFormatPcm : kFormatFloat);
  put_u16(out, channels);
  put_u32(out, rate);
  put_u32(out, rate * block_align);
  put_u16(out, block_align);
  put_u16(out, bits);

  if (!pcm16) {
    out.write("fact", 4);
    put_u32(out, 4);
    put_u32(out, static_cast<uint32_t>(wave.length()));
  }

  out.write("data", 4);
  put_u32(out, data_size);
  for (Eigen::Index t = 0; t < wave.length(); ++t) {
    for (Eigen::Index c = 0; c < channels; ++c) {
      const double x = wave.channels(c, t);
      if (pcm16) {
        const double scaled = std::round(x * 32768.0);
        const auto v = static_cast<int16_t>(std::clamp(scaled, -32768.0, 32767.0));
        put_u16(out, static_cast<uint16_t>(v));
      } else {
        const auto f = static_cast<float>(x);
        uint32_t u;
        std::memcpy(&u, &f, 4);
        put_u32(out, u);
      }
    }
  }
  if (!out) throw IoError(path + ": write failed");
}

void write_wav(const std::string& path, const Waveform& wave, WavFormat format) {
  write_wav(path, MultiChannelWaveform::from_mono(wave), format);
}

namespace {
constexpr char kMatrixMagic[4] = {'B', 'G', 'T', 'M'};
}

void write_matrix(const std::string& path, const Eigen::MatrixXd& m) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path + ": cannot open for writing");
  out.write(kMatrixMagic, 4);
  put_u32(out, 1);  // version
  put_u32(out, 0);  // dtype float64
  const auto put_u64 = [&out](uint64_t v) {
    put_u32(out, static_cast<uint32_t>(v & 0xffffffffu));
    put_u32(out, static_cast<uint32_t>(v >> 32));
  };
  put_u64(static_cast<uint64_t>(m.rows()));
  put_u64(static_cast<uint64_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const double v = m(r, c);
      uint64_t u;
      std::memcpy(&u, &v, 8);
      put_u32(out, static_cast<uint32_t>(u & 0xffffffffu));
      put_u32(out, static_cast<uint32_t>(u >> 32));
    }
  }
  if (!out) throw IoError(path + ": write failed");
}

Eigen::MatrixXd read_matrix(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path + ": cannot open for reading");
  LeReader r(in, path);
  std::array<char, 4> magic;
  r.bytes(magic.data(), 4, "magic");
  if (std::memcmp(magic.data(), kMatrixMagic, 4) != 0) fail(path, "bad matrix magic", 0);
  const uint32_t version = r.u32("version");
  if (version != 1) fail(path, "unsupported matrix version " + std::to_string(version), 4);
  const uint32_t dtype = r.u32("dtype");
  if (dtype != 0) fail(path, "unsupported matrix dtype " + std::to_string(dtype), 8);
  const uint64_t rows = r.u32("rows lo") | static_cast<uint64_t>(r.u32("rows hi")) << 32;
  const uint64_t cols = r.u32("cols lo") | static_cast<uint64_t>(r.u32("cols hi")) << 32;

  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index rr = 0; rr < m.rows(); ++rr) {
    for (Eigen::Index cc = 0; cc < m.cols(); ++cc) {
      const uint64_t u =
          r.u32("payload lo") | static_cast<uint64_t>(r.u32("payload hi")) << 32;
      double v;
      std::memcpy(&v, &u, 8);
      m(rr, cc) = v;
    }
  }
  return m;
}

}  // namespace bgtse
