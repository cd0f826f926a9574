#include "sibf/beamformer.hpp"

#include <cmath>
#include <string>

#include "sibf/hermitian_eig.hpp"

namespace sibf {

namespace {

// N x T matrix of one frequency bin across channels and frames.
Eigen::MatrixXcd bin_frames(const ComplexSpectrogram& spec, Eigen::Index f) {
  const Eigen::Index num_ch = spec.num_channels();
  const Eigen::Index num_frames = spec.num_frames();
  Eigen::MatrixXcd frames(num_ch, num_frames);
  for (Eigen::Index c = 0; c < num_ch; ++c) {
    frames.row(c) = spec.channels[c].row(f);
  }
  return frames;
}

void check_spectrogram(const ComplexSpectrogram& spec, const char* who) {
  if (spec.num_channels() < 1) {
    throw std::invalid_argument(std::string(who) + ": empty spectrogram");
  }
  for (const auto& ch : spec.channels) {
    if (ch.rows() != spec.num_freqs() || ch.cols() != spec.num_frames()) {
      throw std::invalid_argument(std::string(who) +
                                  ": channels disagree on dimensions");
    }
    if (!ch.allFinite()) {
      throw std::invalid_argument(std::string(who) + ": non-finite input");
    }
  }
}

}  // namespace

void validate_model(const SourceModelConfig& model) {
  if (const auto* tv = std::get_if<TvGaussianModel>(&model)) {
    if (!(tv->beta >= 0.0) || !std::isfinite(tv->beta)) {
      throw std::invalid_argument("model: beta must be finite and >= 0");
    }
  } else {
    const auto& bs = std::get<BsLaplacianModel>(model);
    if (!(bs.alpha >= 0.0) || !std::isfinite(bs.alpha)) {
      throw std::invalid_argument("model: alpha must be finite and >= 0");
    }
    if (bs.iterations < 1) {
      throw std::invalid_argument("model: iterations must be >= 1");
    }
    if (!(bs.early_stop_tol >= 0.0)) {
      throw std::invalid_argument("model: early_stop_tol must be >= 0");
    }
  }
}

WhiteningTransform compute_whitening(const ComplexSpectrogram& x,
                                     double eigen_floor) {
  check_spectrogram(x, "compute_whitening");
  const Eigen::Index num_ch = x.num_channels();
  const Eigen::Index num_frames = x.num_frames();
  if (num_frames < num_ch) {
    throw std::invalid_argument(
        "compute_whitening: fewer frames than channels, covariance singular");
  }

  WhiteningTransform whitening;
  whitening.eigen_floor = eigen_floor;
  whitening.matrices.reserve(x.num_freqs());
  const Eigen::VectorXd unit_weights = Eigen::VectorXd::Ones(num_frames);
  for (Eigen::Index f = 0; f < x.num_freqs(); ++f) {
    const Eigen::MatrixXcd frames = bin_frames(x, f);
    const Eigen::MatrixXcd cov = weighted_covariance(frames, unit_weights);
    HermitianEigenSolver<double> eig(cov);
    const double lambda_max = eig.eigenvalues()(0);
    if (!(lambda_max > 0.0)) {
      throw std::runtime_error("compute_whitening: frequency bin " +
                               std::to_string(f) + " has zero power");
    }
    Eigen::VectorXd inv_sqrt(num_ch);
    for (Eigen::Index i = 0; i < num_ch; ++i) {
      const double lambda =
          std::max(eig.eigenvalues()(i), eigen_floor * lambda_max);
      inv_sqrt(i) = 1.0 / std::sqrt(lambda);
    }
    whitening.matrices.push_back(inv_sqrt.asDiagonal() *
                                 eig.eigenvectors().adjoint());
  }
  return whitening;
}

ComplexSpectrogram apply_whitening(const WhiteningTransform& p,
                                   const ComplexSpectrogram& x) {
  check_spectrogram(x, "apply_whitening");
  if (p.num_freqs() != x.num_freqs() || p.num_channels() != x.num_channels()) {
    throw std::invalid_argument("apply_whitening: dimension mismatch");
  }
  const Eigen::Index num_ch = x.num_channels();
  ComplexSpectrogram u;
  u.channels.assign(num_ch,
                    Eigen::MatrixXcd(x.num_freqs(), x.num_frames()));
  for (Eigen::Index f = 0; f < x.num_freqs(); ++f) {
    const Eigen::MatrixXcd transformed = p.matrices[f] * bin_frames(x, f);
    for (Eigen::Index c = 0; c < num_ch; ++c) {
      u.channels[c].row(f) = transformed.row(c);
    }
  }
  return u;
}

namespace {

void check_reference_input(const Eigen::MatrixXd& r, const char* who) {
  if (r.rows() < 1 || r.cols() < 1) {
    throw std::invalid_argument(std::string(who) + ": empty reference");
  }
  if (!r.allFinite() || (r.array() < 0.0).any()) {
    throw std::invalid_argument(std::string(who) +
                                ": reference must be finite and nonnegative");
  }
}

}  // namespace

ReferenceMagnitude normalize_reference(const Eigen::MatrixXd& r,
                                       double floor_delta) {
  check_reference_input(r, "normalize_reference");
  ReferenceMagnitude ref;
  ref.values = r;
  ref.normalized = true;
  ref.floor_delta = floor_delta;
  for (Eigen::Index f = 0; f < r.rows(); ++f) {
    const double rms = std::sqrt(r.row(f).squaredNorm() / r.cols());
    if (rms > 0.0) {
      ref.values.row(f) /= rms;
    }
  }
  ref.values = ref.values.cwiseMax(floor_delta);
  return ref;
}

ReferenceMagnitude floored_reference(const Eigen::MatrixXd& r,
                                     double floor_delta) {
  check_reference_input(r, "floored_reference");
  ReferenceMagnitude ref;
  ref.values = r.cwiseMax(floor_delta);
  ref.normalized = false;
  ref.floor_delta = floor_delta;
  return ref;
}

double tv_objective(const Eigen::Ref<const Eigen::MatrixXcd>& y,
                    const ReferenceMagnitude& r, double beta) {
  if (y.rows() != r.values.rows() || y.cols() != r.values.cols()) {
    throw std::invalid_argument("tv_objective: dimension mismatch");
  }
  if (!y.allFinite() || !std::isfinite(beta)) {
    throw std::invalid_argument("tv_objective: non-finite input");
  }
  return (y.array().abs2() / r.values.array().pow(beta))
      .rowwise()
      .mean()
      .sum();
}

double bs_objective(const Eigen::Ref<const Eigen::MatrixXcd>& y,
                    const ReferenceMagnitude& r, double alpha) {
  if (y.rows() != r.values.rows() || y.cols() != r.values.cols()) {
    throw std::invalid_argument("bs_objective: dimension mismatch");
  }
  if (!y.allFinite() || !std::isfinite(alpha)) {
    throw std::invalid_argument("bs_objective: non-finite input");
  }
  return (alpha * r.values.array().square() + y.array().abs2())
      .sqrt()
      .rowwise()
      .mean()
      .sum();
}

double majorizer_gap(std::complex<double> y, double r, double alpha, double b) {
  if (!(b > 0.0)) {
    throw std::invalid_argument("majorizer_gap: auxiliary value must be > 0");
  }
  const double q = alpha * r * r + std::norm(y);
  return q / (2.0 * b) + b / 2.0 - std::sqrt(q);
}

ExtractionFilter estimate_filter_tv(const ComplexSpectrogram& u,
                                    const ReferenceMagnitude& r, double beta) {
  check_spectrogram(u, "estimate_filter_tv");
  if (r.values.rows() != u.num_freqs() || r.values.cols() != u.num_frames()) {
    throw std::invalid_argument("estimate_filter_tv: dimension mismatch");
  }
  ExtractionFilter filter;
  filter.rows.resize(u.num_freqs(), u.num_channels());
  for (Eigen::Index f = 0; f < u.num_freqs(); ++f) {
    const Eigen::ArrayXd weights = r.values.row(f).transpose().array().pow(beta);
    const Eigen::MatrixXcd cov =
        weighted_covariance(bin_frames(u, f), weights.matrix());
    filter.rows.row(f) = min_eigvec_row(cov);
  }
  return filter;
}

std::pair<ExtractionFilter, BsIterationTrace> estimate_filter_bs(
    const ComplexSpectrogram& u, const ReferenceMagnitude& r, double alpha,
    int iterations, double early_stop_tol) {
  check_spectrogram(u, "estimate_filter_bs");
  if (r.values.rows() != u.num_freqs() || r.values.cols() != u.num_frames()) {
    throw std::invalid_argument("estimate_filter_bs: dimension mismatch");
  }
  if (iterations < 1) {
    throw std::invalid_argument("estimate_filter_bs: iterations must be >= 1");
  }

  const Eigen::Index num_freqs = u.num_freqs();
  ExtractionFilter filter;
  filter.rows.resize(num_freqs, u.num_channels());
  BsIterationTrace trace;

  // The filter is unknown on the first pass, so the reference itself serves
  // as the auxiliary field; afterwards b tightens the majorizer around the
  // current output.
  Eigen::MatrixXd b = r.values;
  for (int it = 0; it < iterations; ++it) {
    if (it > 0) {
      const Eigen::MatrixXcd y = apply_filter(filter, u);
      b = (alpha * r.values.array().square() + y.array().abs2())
              .sqrt()
              .cwiseMax(r.floor_delta)
              .matrix();
    }
    for (Eigen::Index f = 0; f < num_freqs; ++f) {
      const Eigen::MatrixXcd cov = weighted_covariance(
          bin_frames(u, f), b.row(f).transpose());
      filter.rows.row(f) = min_eigvec_row(cov);
    }
    const double objective =
        bs_objective(apply_filter(filter, u), r, alpha);
    trace.objectives.push_back(objective);
    if (early_stop_tol > 0.0 && trace.objectives.size() >= 2) {
      const double prev = trace.objectives[trace.objectives.size() - 2];
      const double change =
          std::abs(prev - objective) / std::max(std::abs(prev), 1e-300);
      if (change < early_stop_tol) break;
    }
  }
  trace.final_b = std::move(b);
  return {std::move(filter), std::move(trace)};
}

Eigen::MatrixXcd apply_filter(const ExtractionFilter& w,
                              const ComplexSpectrogram& u) {
  check_spectrogram(u, "apply_filter");
  if (w.num_freqs() != u.num_freqs() || w.num_channels() != u.num_channels()) {
    throw std::invalid_argument("apply_filter: dimension mismatch");
  }
  Eigen::MatrixXcd y(u.num_freqs(), u.num_frames());
  for (Eigen::Index f = 0; f < u.num_freqs(); ++f) {
    y.row(f) = w.rows.row(f) * bin_frames(u, f);
  }
  return y;
}

Eigen::MatrixXcd rescale(const Eigen::Ref<const Eigen::MatrixXcd>& y1,
                         const Eigen::Ref<const Eigen::MatrixXcd>& x_m) {
  if (y1.rows() != x_m.rows() || y1.cols() != x_m.cols()) {
    throw std::invalid_argument("rescale: dimension mismatch");
  }
  Eigen::MatrixXcd out(y1.rows(), y1.cols());
  const auto num_frames = static_cast<double>(y1.cols());
  for (Eigen::Index f = 0; f < y1.rows(); ++f) {
    const double power = y1.row(f).squaredNorm() / num_frames;
    if (power <= 1e-30) {
      out.row(f).setZero();
      continue;
    }
    const std::complex<double> gain =
        (x_m.row(f).cwiseProduct(y1.row(f).conjugate())).sum() / num_frames /
        power;
    out.row(f) = gain * y1.row(f);
  }
  return out;
}

ExtractionResult extract(const ComplexSpectrogram& x, const Eigen::MatrixXd& r,
                         const SourceModelConfig& model, int ref_mic) {
  auto stage = [](const char* name, auto&& fn) {
    try {
      return fn();
    } catch (const std::exception& e) {
      throw std::runtime_error("extract: " + std::string(name) + ": " +
                               e.what());
    }
  };

  check_spectrogram(x, "extract");
  validate_model(model);
  if (ref_mic < 0 || ref_mic >= x.num_channels()) {
    throw std::invalid_argument("extract: reference mic out of range");
  }
  if (r.rows() != x.num_freqs() || r.cols() != x.num_frames()) {
    throw std::invalid_argument(
        "extract: reference dimensions do not match the observation");
  }

  const WhiteningTransform whitening =
      stage("whitening", [&] { return compute_whitening(x); });
  const ComplexSpectrogram u =
      stage("whitening", [&] { return apply_whitening(whitening, x); });
  const ReferenceMagnitude ref =
      stage("reference normalization", [&] { return normalize_reference(r); });

  ExtractionResult result;
  if (const auto* tv = std::get_if<TvGaussianModel>(&model)) {
    result.filter = stage("filter estimation", [&] {
      return estimate_filter_tv(u, ref, tv->beta);
    });
  } else {
    const auto& bs = std::get<BsLaplacianModel>(model);
    auto [filter, trace] = stage("filter estimation", [&] {
      return estimate_filter_bs(u, ref, bs.alpha, bs.iterations,
                                bs.early_stop_tol);
    });
    result.filter = std::move(filter);
    result.trace = std::move(trace);
  }

  const Eigen::MatrixXcd y =
      stage("filter application", [&] { return apply_filter(result.filter, u); });
  if (const auto* tv = std::get_if<TvGaussianModel>(&model)) {
    result.objective = tv_objective(y, ref, tv->beta);
  } else {
    result.objective = result.trace->objectives.back();
  }
  result.target = stage("rescaling", [&] {
    return rescale(y, x.channels[static_cast<std::size_t>(ref_mic)]);
  });
  return result;
}

}  // namespace sibf
