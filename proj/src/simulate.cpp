#include "sibf/simulate.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace sibf {

double GaussianNoise::uniform() {
  // Top 53 bits of the mt19937_64 output, mapped to [0, 1).
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double GaussianNoise::next() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = 1.0 - uniform();  // (0, 1], keeps the log finite
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

ComplexSpectrogram mix_instantaneous(
    const std::vector<Eigen::MatrixXcd>& sources,
    const std::vector<Eigen::MatrixXcd>& mixing) {
  if (sources.empty()) {
    throw std::invalid_argument("mix_instantaneous: no sources");
  }
  const Eigen::Index num_freqs = sources.front().rows();
  const Eigen::Index num_frames = sources.front().cols();
  for (const auto& s : sources) {
    if (s.rows() != num_freqs || s.cols() != num_frames) {
      throw std::invalid_argument(
          "mix_instantaneous: sources disagree on dimensions");
    }
  }
  if (static_cast<Eigen::Index>(mixing.size()) != num_freqs) {
    throw std::invalid_argument(
        "mix_instantaneous: one mixing matrix per frequency bin required");
  }
  const Eigen::Index num_src = static_cast<Eigen::Index>(sources.size());
  const Eigen::Index num_ch = mixing.front().rows();
  if (num_src > num_ch) {
    throw std::invalid_argument(
        "mix_instantaneous: more sources than channels");
  }

  ComplexSpectrogram x;
  x.channels.assign(num_ch, Eigen::MatrixXcd::Zero(num_freqs, num_frames));
  Eigen::MatrixXcd stacked(num_src, num_frames);
  for (Eigen::Index f = 0; f < num_freqs; ++f) {
    if (mixing[f].rows() != num_ch || mixing[f].cols() != num_src) {
      throw std::invalid_argument(
          "mix_instantaneous: mixing matrix dimension mismatch at bin " +
          std::to_string(f));
    }
    for (Eigen::Index k = 0; k < num_src; ++k) {
      stacked.row(k) = sources[k].row(f);
    }
    const Eigen::MatrixXcd mixed = mixing[f] * stacked;
    for (Eigen::Index c = 0; c < num_ch; ++c) {
      x.channels[c].row(f) = mixed.row(c);
    }
  }
  return x;
}

MultichannelWave simulate_anechoic(const std::vector<MultichannelWave>& sources,
                                   const MixingScenario& scenario) {
  const Eigen::Index num_src = scenario.num_sources();
  const Eigen::Index num_ch = scenario.num_channels();
  if (num_src < 1 || num_ch < 1) {
    throw std::invalid_argument("simulate_anechoic: empty scenario");
  }
  if (static_cast<Eigen::Index>(sources.size()) != num_src) {
    throw std::invalid_argument(
        "simulate_anechoic: source count does not match scenario");
  }
  if (scenario.delays.rows() != num_src || scenario.delays.cols() != num_ch) {
    throw std::invalid_argument(
        "simulate_anechoic: delay table shape does not match gains");
  }
  if (!scenario.gains.allFinite()) {
    throw std::invalid_argument("simulate_anechoic: non-finite gain");
  }
  if ((scenario.delays.array() < 0).any()) {
    throw std::invalid_argument("simulate_anechoic: negative delay");
  }
  if ((scenario.delays.array() > scenario.max_delay).any()) {
    throw std::invalid_argument(
        "simulate_anechoic: delay exceeds the configured maximum of " +
        std::to_string(scenario.max_delay) + " samples");
  }
  if (!(scenario.diffuse_noise_level >= 0.0)) {
    throw std::invalid_argument("simulate_anechoic: negative noise level");
  }

  const Eigen::Index len = sources.front().num_samples();
  const int rate = sources.front().sample_rate;
  for (const auto& s : sources) {
    if (s.num_channels() != 1) {
      throw std::invalid_argument("simulate_anechoic: sources must be mono");
    }
    if (s.num_samples() != len || s.sample_rate != rate) {
      throw std::invalid_argument(
          "simulate_anechoic: sources must share length and sample rate");
    }
  }

  const Eigen::Index out_len = len + scenario.delays.maxCoeff();
  MultichannelWave out;
  out.sample_rate = rate;
  out.data = Eigen::MatrixXd::Zero(num_ch, out_len);
  for (Eigen::Index k = 0; k < num_src; ++k) {
    for (Eigen::Index n = 0; n < num_ch; ++n) {
      const Eigen::Index d = scenario.delays(k, n);
      out.data.row(n).segment(d, len) +=
          scenario.gains(k, n) * sources[k].data.row(0);
    }
  }
  if (scenario.diffuse_noise_level > 0.0) {
    GaussianNoise noise(scenario.rng_seed);
    for (Eigen::Index n = 0; n < num_ch; ++n) {
      for (Eigen::Index i = 0; i < out_len; ++i) {
        out.data(n, i) += scenario.diffuse_noise_level * noise.next();
      }
    }
  }
  return out;
}

Eigen::MatrixXd oracle_reference(const MultichannelWave& target,
                                 const StftParams& params) {
  if (target.num_channels() != 1 || target.num_samples() < 1) {
    throw std::invalid_argument("oracle_reference: need a nonempty mono wave");
  }
  return stft_channel(target.data.row(0).transpose(), params).cwiseAbs();
}

Eigen::MatrixXd degrade_reference(const MultichannelWave& target,
                                  const MultichannelWave& interference,
                                  double level, const StftParams& params) {
  if (target.num_channels() != 1 || interference.num_channels() != 1) {
    throw std::invalid_argument("degrade_reference: need mono waves");
  }
  if (target.num_samples() != interference.num_samples()) {
    throw std::invalid_argument("degrade_reference: length mismatch");
  }
  if (!(level >= 0.0) || !std::isfinite(level)) {
    throw std::invalid_argument("degrade_reference: level must be >= 0");
  }
  const Eigen::VectorXd contaminated =
      target.data.row(0).transpose() +
      level * interference.data.row(0).transpose();
  return stft_channel(contaminated, params).cwiseAbs();
}

}  // namespace sibf
