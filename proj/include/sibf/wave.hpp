#pragma once

#include <Eigen/Dense>

namespace sibf {

/// Time-domain multichannel audio. Rows are channels, columns are samples.
/// Sample values are real amplitudes with a nominal range of [-1, 1].
struct MultichannelWave {
  int sample_rate = 0;
  Eigen::MatrixXd data;  // channels x samples

  Eigen::Index num_channels() const { return data.rows(); }
  Eigen::Index num_samples() const { return data.cols(); }
};

/// Shifts a mono signal right by `delay` samples, prepending zeros.
/// The result has length x.size() + delay.
inline Eigen::VectorXd delay_samples(const Eigen::Ref<const Eigen::VectorXd>& x,
                                     Eigen::Index delay) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(x.size() + delay);
  out.tail(x.size()) = x;
  return out;
}

/// Truncates or zero-extends a mono signal to exactly `len` samples.
inline Eigen::VectorXd fit_length(const Eigen::Ref<const Eigen::VectorXd>& x,
                                  Eigen::Index len) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(len);
  const Eigen::Index n = std::min(len, x.size());
  out.head(n) = x.head(n);
  return out;
}

}  // namespace sibf
