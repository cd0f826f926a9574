#include "sibf/wav_io.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

#include "file_util.hpp"

namespace sibf {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatIeeeFloat = 3;

std::uint16_t get_u16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) |
         (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_u16(std::vector<std::uint8_t>& b, std::uint16_t v) {
  b.push_back(static_cast<std::uint8_t>(v & 0xff));
  b.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  b.push_back(static_cast<std::uint8_t>(v & 0xff));
  b.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
  b.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
  b.push_back(static_cast<std::uint8_t>((v >> 24) & 0xff));
}

void put_tag(std::vector<std::uint8_t>& b, const char tag[5]) {
  b.insert(b.end(), tag, tag + 4);
}

bool tag_is(const std::uint8_t* p, const char tag[5]) {
  return std::memcmp(p, tag, 4) == 0;
}

}  // namespace

MultichannelWave read_wav(const std::string& path) {
  const std::vector<std::uint8_t> bytes = detail::read_file(path, "read_wav");
  if (bytes.size() < 12 || !tag_is(bytes.data(), "RIFF") ||
      !tag_is(bytes.data() + 8, "WAVE")) {
    throw std::runtime_error("read_wav: '" + path + "' is not a RIFF/WAVE file");
  }

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t sample_rate = 0;
  const std::uint8_t* data = nullptr;
  std::size_t data_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint8_t* hdr = bytes.data() + pos;
    const std::uint32_t csize = get_u32(hdr + 4);
    if (pos + 8 + csize > bytes.size()) {
      throw std::runtime_error("read_wav: truncated chunk '" +
                               std::string(hdr, hdr + 4) + "' in '" + path +
                               "'");
    }
    const std::uint8_t* body = hdr + 8;
    if (tag_is(hdr, "fmt ")) {
      if (csize < 16) {
        throw std::runtime_error("read_wav: truncated chunk 'fmt ' in '" +
                                 path + "'");
      }
      format = get_u16(body);
      channels = get_u16(body + 2);
      sample_rate = get_u32(body + 4);
      bits = get_u16(body + 14);
      have_fmt = true;
    } else if (tag_is(hdr, "data")) {
      data = body;
      data_size = csize;
    }
    pos += 8 + csize + (csize & 1);  // chunks are word-aligned
  }

  if (!have_fmt || data == nullptr) {
    throw std::runtime_error("read_wav: missing fmt or data chunk in '" + path +
                             "'");
  }
  const bool pcm16 = format == kFormatPcm && bits == 16;
  const bool float32 = format == kFormatIeeeFloat && bits == 32;
  if (!pcm16 && !float32) {
    throw std::runtime_error(
        "read_wav: unsupported codec in '" + path + "' (format code " +
        std::to_string(format) + ", " + std::to_string(bits) +
        " bits; need 16-bit PCM or 32-bit float)");
  }
  if (channels < 1) {
    throw std::runtime_error("read_wav: zero channels in '" + path + "'");
  }
  const std::size_t bytes_per_sample = pcm16 ? 2 : 4;
  const std::size_t frame_size = bytes_per_sample * channels;
  if (data_size % frame_size != 0) {
    throw std::runtime_error(
        "read_wav: data chunk in '" + path +
        "' is not a whole number of sample frames");
  }
  const std::size_t frames = data_size / frame_size;

  MultichannelWave wave;
  wave.sample_rate = static_cast<int>(sample_rate);
  wave.data.resize(channels, static_cast<Eigen::Index>(frames));
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t c = 0; c < channels; ++c) {
      const std::uint8_t* p = data + (t * channels + c) * bytes_per_sample;
      double v;
      if (pcm16) {
        const auto raw = static_cast<std::int16_t>(get_u16(p));
        v = static_cast<double>(raw) / 32768.0;
      } else {
        const float f = std::bit_cast<float>(get_u32(p));
        if (!std::isfinite(f)) {
          throw std::runtime_error("read_wav: non-finite sample in '" + path +
                                   "'");
        }
        v = static_cast<double>(f);
      }
      wave.data(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(t)) = v;
    }
  }
  return wave;
}

void write_wav(const MultichannelWave& wave, const std::string& path,
               WavBitDepth depth) {
  if (wave.num_channels() < 1 || wave.num_samples() < 1) {
    throw std::invalid_argument("write_wav: empty wave");
  }
  if (wave.sample_rate <= 0) {
    throw std::invalid_argument("write_wav: sample rate must be positive");
  }
  if (!wave.data.allFinite()) {
    throw std::invalid_argument("write_wav: non-finite sample");
  }

  const auto channels = static_cast<std::uint16_t>(wave.num_channels());
  const auto frames = static_cast<std::uint32_t>(wave.num_samples());
  const bool pcm16 = depth == WavBitDepth::Pcm16;
  const std::uint16_t bits = pcm16 ? 16 : 32;
  const std::uint16_t block_align = static_cast<std::uint16_t>(channels * bits / 8);
  const std::uint32_t data_size = frames * block_align;
  const std::uint32_t fmt_size = pcm16 ? 16 : 18;
  // fmt (+ fact for float) + data, each with an 8-byte chunk header.
  std::uint32_t riff_size = 4 + 8 + fmt_size + 8 + data_size;
  if (!pcm16) riff_size += 8 + 4;

  std::vector<std::uint8_t> b;
  b.reserve(12 + riff_size);
  put_tag(b, "RIFF");
  put_u32(b, riff_size);
  put_tag(b, "WAVE");
  put_tag(b, "fmt ");
  put_u32(b, fmt_size);
  put_u16(b, pcm16 ? kFormatPcm : kFormatIeeeFloat);
  put_u16(b, channels);
  put_u32(b, static_cast<std::uint32_t>(wave.sample_rate));
  put_u32(b, static_cast<std::uint32_t>(wave.sample_rate) * block_align);
  put_u16(b, block_align);
  put_u16(b, bits);
  if (!pcm16) {
    put_u16(b, 0);  // cbSize
    put_tag(b, "fact");
    put_u32(b, 4);
    put_u32(b, frames);
  }
  put_tag(b, "data");
  put_u32(b, data_size);

  for (std::uint32_t t = 0; t < frames; ++t) {
    for (std::uint16_t c = 0; c < channels; ++c) {
      const double v = wave.data(c, static_cast<Eigen::Index>(t));
      if (pcm16) {
        const double clamped = std::min(std::max(v, -1.0), 1.0 - 0x1p-15);
        const auto q = static_cast<std::int16_t>(std::lround(clamped * 32768.0));
        put_u16(b, static_cast<std::uint16_t>(q));
      } else {
        put_u32(b, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
      }
    }
  }

  detail::write_file_atomic(path, b);
}

}  // namespace sibf
