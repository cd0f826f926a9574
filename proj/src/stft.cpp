#include "sibf/stft.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace sibf {

namespace {

// Iterative radix-2 FFT, decimation in time. Length must be a power of two
// (guaranteed by StftParams::validate). inverse applies the conjugate
// transform without the 1/n factor; callers divide where needed.
void fft_inplace(std::vector<std::complex<double>>& a, bool inverse) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang =
        (inverse ? 2.0 : -2.0) * std::numbers::pi / static_cast<double>(len);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> even = a[i + k];
        const std::complex<double> odd = a[i + k + len / 2] * w;
        a[i + k] = even + odd;
        a[i + k + len / 2] = even - odd;
        w *= wlen;
      }
    }
  }
}

}  // namespace

void StftParams::validate() const {
  if (fft_size < 2 || (fft_size & (fft_size - 1)) != 0) {
    throw std::invalid_argument("stft: fft_size must be a power of two >= 2");
  }
  if (hop < 1 || hop >= fft_size) {
    throw std::invalid_argument("stft: hop must satisfy 1 <= hop < fft_size");
  }
  if (fft_size % hop != 0) {
    throw std::invalid_argument("stft: hop must divide fft_size");
  }
}

Eigen::VectorXd hann_window(int n) {
  Eigen::VectorXd w(n);
  for (int k = 0; k < n; ++k) {
    w(k) = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * k / n);
  }
  return w;
}

Eigen::MatrixXcd stft_channel(const Eigen::Ref<const Eigen::VectorXd>& signal,
                              const StftParams& params) {
  params.validate();
  const Eigen::Index len = signal.size();
  if (len < 1) {
    throw std::invalid_argument("stft: empty signal");
  }
  const int fft_size = params.fft_size;
  const Eigen::Index num_frames = params.num_frames(len);
  const Eigen::Index num_freqs = params.num_freqs();
  const Eigen::Index pad = params.pad();
  const Eigen::VectorXd window = hann_window(fft_size);

  // Symmetric zero-padding: every input sample gets full window coverage.
  Eigen::VectorXd padded =
      Eigen::VectorXd::Zero((num_frames - 1) * params.hop + fft_size);
  padded.segment(pad, len) = signal;

  Eigen::MatrixXcd spec(num_freqs, num_frames);
  std::vector<std::complex<double>> buf(fft_size);
  for (Eigen::Index t = 0; t < num_frames; ++t) {
    const Eigen::Index start = t * params.hop;
    for (int k = 0; k < fft_size; ++k) {
      buf[k] = padded(start + k) * window(k);
    }
    fft_inplace(buf, false);
    for (Eigen::Index f = 0; f < num_freqs; ++f) {
      spec(f, t) = buf[f];
    }
  }
  return spec;
}

ComplexSpectrogram stft(const MultichannelWave& wave, const StftParams& params) {
  if (wave.num_channels() < 1 || wave.num_samples() < 1) {
    throw std::invalid_argument("stft: empty wave");
  }
  ComplexSpectrogram spec;
  spec.channels.reserve(wave.num_channels());
  for (Eigen::Index c = 0; c < wave.num_channels(); ++c) {
    spec.channels.push_back(stft_channel(wave.data.row(c).transpose(), params));
  }
  return spec;
}

Eigen::VectorXd istft_channel(const Eigen::Ref<const Eigen::MatrixXcd>& spec,
                              const StftParams& params, Eigen::Index out_len) {
  params.validate();
  const int fft_size = params.fft_size;
  const Eigen::Index num_freqs = params.num_freqs();
  if (spec.rows() != num_freqs || spec.cols() < 1) {
    throw std::invalid_argument(
        "istft: spectrogram dimensions do not match the transform parameters");
  }
  const Eigen::Index num_frames = spec.cols();
  const Eigen::Index pad = params.pad();
  const Eigen::VectorXd window = hann_window(fft_size);

  const Eigen::Index buf_len = (num_frames - 1) * params.hop + fft_size;
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(buf_len);
  Eigen::VectorXd weight = Eigen::VectorXd::Zero(buf_len);

  std::vector<std::complex<double>> frame(fft_size);
  for (Eigen::Index t = 0; t < num_frames; ++t) {
    for (Eigen::Index f = 0; f < num_freqs; ++f) {
      frame[f] = spec(f, t);
    }
    // One-sided input; rebuild the upper half by conjugate symmetry.
    for (Eigen::Index f = num_freqs; f < fft_size; ++f) {
      frame[f] = std::conj(spec(fft_size - f, t));
    }
    fft_inplace(frame, true);
    const Eigen::Index start = t * params.hop;
    for (int k = 0; k < fft_size; ++k) {
      const double sample = frame[k].real() / fft_size;
      acc(start + k) += sample * window(k);
      weight(start + k) += window(k) * window(k);
    }
  }

  Eigen::VectorXd out = Eigen::VectorXd::Zero(out_len);
  const Eigen::Index copy_len = std::min(out_len, buf_len - pad);
  for (Eigen::Index i = 0; i < copy_len; ++i) {
    const double w = weight(pad + i);
    out(i) = w > 1e-12 ? acc(pad + i) / w : 0.0;
  }
  return out;
}

MultichannelWave istft(const ComplexSpectrogram& spec, const StftParams& params,
                       Eigen::Index out_len, int sample_rate) {
  if (spec.num_channels() < 1) {
    throw std::invalid_argument("istft: empty spectrogram");
  }
  MultichannelWave wave;
  wave.sample_rate = sample_rate;
  wave.data.resize(spec.num_channels(), out_len);
  for (Eigen::Index c = 0; c < spec.num_channels(); ++c) {
    wave.data.row(c) =
        istft_channel(spec.channels[c], params, out_len).transpose();
  }
  return wave;
}

}  // namespace sibf
