#pragma once

#include <optional>
#include <stdexcept>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "sibf/stft.hpp"

namespace sibf {

/// Per-frequency decorrelation matrices P(f) built so that the transformed
/// observation satisfies <u u^H>_t = I. Eigenvalues of the observation
/// covariance are floored at eigen_floor times the largest one before
/// inversion, which bounds P on near-silent bins.
struct WhiteningTransform {
  std::vector<Eigen::MatrixXcd> matrices;  // F matrices, each N x N
  double eigen_floor = 1e-9;

  Eigen::Index num_freqs() const {
    return static_cast<Eigen::Index>(matrices.size());
  }
  Eigen::Index num_channels() const {
    return matrices.empty() ? 0 : matrices.front().rows();
  }
};

/// Nonnegative reference magnitudes r(f,t), optionally row-normalized to unit
/// mean square over frames, and always floored at floor_delta so divisions by
/// r and by powers of r stay bounded.
struct ReferenceMagnitude {
  Eigen::MatrixXd values;  // F x T, every entry >= floor_delta
  bool normalized = false;
  double floor_delta = 1e-5;
};

/// Time-frequency-varying-variance Gaussian source model. The reference
/// exponent beta controls how strongly the reference shapes the weighting.
struct TvGaussianModel {
  double beta = 8.0;
};

/// Bivariate spherical Laplacian source model, fit by a fixed number of
/// majorize-minimize iterations. alpha is the reference weight. A nonzero
/// early_stop_tol stops iterating once the relative objective change falls
/// below it.
struct BsLaplacianModel {
  double alpha = 100.0;
  int iterations = 10;
  double early_stop_tol = 0.0;
};

using SourceModelConfig = std::variant<TvGaussianModel, BsLaplacianModel>;

/// Throws std::invalid_argument when a model parameter is out of range.
void validate_model(const SourceModelConfig& model);

/// Per-frequency extraction filters, one unit-norm row vector per bin.
struct ExtractionFilter {
  Eigen::MatrixXcd rows;  // F x N, row f is w1(f)

  Eigen::Index num_freqs() const { return rows.rows(); }
  Eigen::Index num_channels() const { return rows.cols(); }
};

/// Objective values recorded after each BS iteration, plus the auxiliary
/// field used in the final filter update.
struct BsIterationTrace {
  std::vector<double> objectives;
  Eigen::MatrixXd final_b;  // F x T
};

struct ExtractionResult {
  Eigen::MatrixXcd target;  // F x T, rescaled against the reference mic
  ExtractionFilter filter;
  double objective = 0.0;  // model objective at the final filter
  std::optional<BsIterationTrace> trace;  // present for the BS model
};

/// Builds the whitening transform from the per-frequency observation
/// covariance C(f) = <x x^H>_t: with C = E D E^H (descending eigenvalues),
/// P(f) = D^{-1/2} E^H after flooring each eigenvalue at
/// eigen_floor * lambda_max. Requires T >= N; an all-zero bin is an error
/// naming the offending frequency.
WhiteningTransform compute_whitening(const ComplexSpectrogram& x,
                                     double eigen_floor = 1e-9);

/// Applies u(f,t) = P(f) x(f,t) for every bin and frame.
ComplexSpectrogram apply_whitening(const WhiteningTransform& p,
                                   const ComplexSpectrogram& x);

/// Divides each frequency row of `r` by its root mean square over frames
/// (rows with zero RMS are left as they are), then clamps all values to at
/// least `floor_delta`. Rejects negative or non-finite input.
ReferenceMagnitude normalize_reference(const Eigen::MatrixXd& r,
                                       double floor_delta = 1e-5);

/// Clamps `r` to at least `floor_delta` without normalizing.
ReferenceMagnitude floored_reference(const Eigen::MatrixXd& r,
                                     double floor_delta = 1e-5);

/// TV Gaussian objective: sum_f <|y(f,t)|^2 / r(f,t)^beta>_t, the
/// filter-dependent part of the negative log-likelihood.
double tv_objective(const Eigen::Ref<const Eigen::MatrixXcd>& y,
                    const ReferenceMagnitude& r, double beta);

/// BS Laplacian objective: sum_f <sqrt(alpha r(f,t)^2 + |y(f,t)|^2)>_t.
double bs_objective(const Eigen::Ref<const Eigen::MatrixXcd>& y,
                    const ReferenceMagnitude& r, double alpha);

/// Gap of the BS majorizer at auxiliary value b > 0:
///   (alpha r^2 + |y|^2) / (2b) + b/2 - sqrt(alpha r^2 + |y|^2).
/// Nonnegative everywhere, zero exactly at b = sqrt(alpha r^2 + |y|^2).
double majorizer_gap(std::complex<double> y, double r, double alpha, double b);

/// Closed-form TV filter: per frequency, the minimum-eigenvalue eigenvector
/// row of the covariance of whitened frames weighted by 1 / r(f,t)^beta.
ExtractionFilter estimate_filter_tv(const ComplexSpectrogram& u,
                                    const ReferenceMagnitude& r, double beta);

/// Iterative BS filter. The first iteration uses b = r as the auxiliary
/// field; each later iteration recomputes b = sqrt(alpha r^2 + |y|^2) from
/// the current filter output and re-solves the weighted eigenproblem. The
/// trace records the BS objective after every iteration.
std::pair<ExtractionFilter, BsIterationTrace> estimate_filter_bs(
    const ComplexSpectrogram& u, const ReferenceMagnitude& r, double alpha,
    int iterations, double early_stop_tol = 0.0);

/// Applies the per-frequency filter rows: y1(f,t) = w1(f) u(f,t).
Eigen::MatrixXcd apply_filter(const ExtractionFilter& w,
                              const ComplexSpectrogram& u);

/// Projection-back rescaling against an observation channel: per frequency,
/// g(f) = <x_m conj(y1)>_t / <|y1|^2>_t and the output is g(f) y1(f,t).
/// Bins with mean power <= 1e-30 come out as zero.
Eigen::MatrixXcd rescale(const Eigen::Ref<const Eigen::MatrixXcd>& y1,
                         const Eigen::Ref<const Eigen::MatrixXcd>& x_m);

/// Whole pipeline: whiten, normalize the reference, estimate the filter for
/// the chosen source model, apply it, and rescale against channel `ref_mic`.
/// Errors from any stage are rethrown with the stage name prepended.
ExtractionResult extract(const ComplexSpectrogram& x, const Eigen::MatrixXd& r,
                         const SourceModelConfig& model, int ref_mic);

}  // namespace sibf
