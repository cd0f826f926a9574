#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "sibf/wave.hpp"

namespace sibf {

enum class Window { Hann };

/// Short-time Fourier transform parameters. The analysis/synthesis window is
/// a periodic Hann window; reconstruction divides by the accumulated squared
/// window so the roundtrip is exact for any hop that divides fft_size.
struct StftParams {
  int fft_size = 1024;
  int hop = 256;
  Window window = Window::Hann;

  int num_freqs() const { return fft_size / 2 + 1; }
  // Zero-padding added on each side of the signal before framing.
  int pad() const { return fft_size - hop; }
  // Frame count covering all samples of a signal of length `len`.
  Eigen::Index num_frames(Eigen::Index len) const {
    return (len + fft_size - hop + hop - 1) / hop;
  }
  // Throws std::invalid_argument unless fft_size is a power of two,
  // hop < fft_size, and hop divides fft_size.
  void validate() const;
};

/// Per-channel complex time-frequency data. Each channel is an F x T matrix
/// with F = fft_size/2 + 1 one-sided frequency bins.
struct ComplexSpectrogram {
  std::vector<Eigen::MatrixXcd> channels;

  Eigen::Index num_channels() const {
    return static_cast<Eigen::Index>(channels.size());
  }
  Eigen::Index num_freqs() const {
    return channels.empty() ? 0 : channels.front().rows();
  }
  Eigen::Index num_frames() const {
    return channels.empty() ? 0 : channels.front().cols();
  }
};

/// Forward STFT of one mono signal. Returns an F x T complex matrix.
Eigen::MatrixXcd stft_channel(const Eigen::Ref<const Eigen::VectorXd>& signal,
                              const StftParams& params);

/// Forward STFT of every channel of `wave`.
ComplexSpectrogram stft(const MultichannelWave& wave, const StftParams& params);

/// Inverse STFT of one F x T matrix via weighted overlap-add, truncated or
/// zero-extended to `out_len` samples.
Eigen::VectorXd istft_channel(const Eigen::Ref<const Eigen::MatrixXcd>& spec,
                              const StftParams& params, Eigen::Index out_len);

/// Inverse STFT of every channel.
MultichannelWave istft(const ComplexSpectrogram& spec, const StftParams& params,
                       Eigen::Index out_len, int sample_rate);

/// Periodic Hann analysis window of length n: w[k] = 0.5 - 0.5 cos(2 pi k / n).
Eigen::VectorXd hann_window(int n);

}  // namespace sibf
