#include "sibf/mat_io.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <vector>

#include "file_util.hpp"

namespace sibf {

namespace {
constexpr char kMagic[8] = {'S', 'I', 'B', 'F', 'M', 'A', 'T', '1'};
constexpr std::size_t kHeaderSize = 16;  // magic + F + T
}  // namespace

Eigen::MatrixXd read_matrix(const std::string& path) {
  const std::vector<std::uint8_t> bytes = detail::read_file(path, "read_matrix");
  if (bytes.size() < kHeaderSize ||
      std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error("read_matrix: '" + path +
                             "' is not a SIBFMAT file (bad magic)");
  }
  auto get_u32 = [&bytes](std::size_t off) {
    return static_cast<std::uint32_t>(bytes[off]) |
           (static_cast<std::uint32_t>(bytes[off + 1]) << 8) |
           (static_cast<std::uint32_t>(bytes[off + 2]) << 16) |
           (static_cast<std::uint32_t>(bytes[off + 3]) << 24);
  };
  const std::uint32_t num_freqs = get_u32(8);
  const std::uint32_t num_frames = get_u32(12);
  if (num_freqs == 0 || num_frames == 0) {
    throw std::runtime_error("read_matrix: zero dimension in '" + path + "'");
  }
  const std::size_t expected =
      kHeaderSize + std::size_t(num_freqs) * num_frames * 4;
  if (bytes.size() != expected) {
    throw std::runtime_error(
        "read_matrix: size mismatch in '" + path + "' (header says " +
        std::to_string(num_freqs) + "x" + std::to_string(num_frames) +
        ", expected " + std::to_string(expected) + " bytes, file has " +
        std::to_string(bytes.size()) + ")");
  }

  Eigen::MatrixXd m(num_freqs, num_frames);
  std::size_t off = kHeaderSize;
  for (std::uint32_t f = 0; f < num_freqs; ++f) {
    for (std::uint32_t t = 0; t < num_frames; ++t, off += 4) {
      std::uint32_t raw;
      std::memcpy(&raw, bytes.data() + off, 4);
      if constexpr (std::endian::native == std::endian::big) {
        raw = __builtin_bswap32(raw);
      }
      const float v = std::bit_cast<float>(raw);
      if (!std::isfinite(v)) {
        throw std::runtime_error("read_matrix: non-finite value in '" + path +
                                 "'");
      }
      if (v < 0.0f) {
        throw std::runtime_error("read_matrix: negative value in '" + path +
                                 "'");
      }
      m(f, t) = static_cast<double>(v);
    }
  }
  return m;
}

void write_matrix(const Eigen::MatrixXd& m, const std::string& path) {
  if (m.rows() < 1 || m.cols() < 1) {
    throw std::invalid_argument("write_matrix: empty matrix");
  }
  if (!m.allFinite() || (m.array() < 0.0).any()) {
    throw std::invalid_argument(
        "write_matrix: values must be finite and nonnegative");
  }

  std::vector<std::uint8_t> b;
  b.reserve(kHeaderSize + static_cast<std::size_t>(m.size()) * 4);
  b.insert(b.end(), kMagic, kMagic + sizeof(kMagic));
  auto put_u32 = [&b](std::uint32_t v) {
    b.push_back(static_cast<std::uint8_t>(v & 0xff));
    b.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
    b.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
    b.push_back(static_cast<std::uint8_t>((v >> 24) & 0xff));
  };
  put_u32(static_cast<std::uint32_t>(m.rows()));
  put_u32(static_cast<std::uint32_t>(m.cols()));
  for (Eigen::Index f = 0; f < m.rows(); ++f) {
    for (Eigen::Index t = 0; t < m.cols(); ++t) {
      std::uint32_t raw = std::bit_cast<std::uint32_t>(
          static_cast<float>(m(f, t)));
      if constexpr (std::endian::native == std::endian::big) {
        raw = __builtin_bswap32(raw);
      }
      put_u32(raw);
    }
  }
  detail::write_file_atomic(path, b);
}

}  // namespace sibf
