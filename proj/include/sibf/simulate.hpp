#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "sibf/stft.hpp"
#include "sibf/wave.hpp"

namespace sibf {

/// Anechoic mixing scene: per-source per-channel gains and integer sample
/// delays, plus seeded diffuse noise. Delays are capped at max_delay so the
/// narrowband instantaneous-mixture approximation stays valid.
struct MixingScenario {
  Eigen::MatrixXd gains;   // K sources x N channels
  Eigen::MatrixXi delays;  // K x N, samples >= 0
  double diffuse_noise_level = 0.0;
  std::uint64_t rng_seed = 0;
  int max_delay = 256;  // fft_size / 4 at the default 1024-point transform

  Eigen::Index num_sources() const { return gains.rows(); }
  Eigen::Index num_channels() const { return gains.cols(); }
};

/// Deterministic standard-normal generator: mt19937_64 mapped to [0,1) by
/// taking the top 53 bits, then Box-Muller. Fully specified so seeded runs
/// reproduce bit-exactly across platforms.
class GaussianNoise {
 public:
  explicit GaussianNoise(std::uint64_t seed) : engine_(seed) {}
  double next();

 private:
  double uniform();
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Per-frequency instantaneous mixing x(f,t) = A(f) s(f,t): sources are K
/// single-channel spectrograms, mixing(f) is N x K.
ComplexSpectrogram mix_instantaneous(
    const std::vector<Eigen::MatrixXcd>& sources,
    const std::vector<Eigen::MatrixXcd>& mixing);

/// Time-domain realization of the anechoic scene: channel n is
/// sum_k gains(k,n) * delay(source_k, delays(k,n)) plus seeded white noise
/// scaled by diffuse_noise_level. Sources must be mono waves of equal length
/// and sample rate. The output length covers the longest delayed source.
MultichannelWave simulate_anechoic(const std::vector<MultichannelWave>& sources,
                                   const MixingScenario& scenario);

/// Ideal reference: the entrywise magnitude of the clean target's STFT.
Eigen::MatrixXd oracle_reference(const MultichannelWave& target,
                                 const StftParams& params);

/// Imperfect reference: the magnitude of the STFT of target + level *
/// interference, emulating an enhancer that left some interference in.
Eigen::MatrixXd degrade_reference(const MultichannelWave& target,
                                  const MultichannelWave& interference,
                                  double level, const StftParams& params);

}  // namespace sibf
