#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sibf/beamformer.hpp"
#include "sibf/simulate.hpp"

namespace sibf {

/// Scale-invariant signal-to-distortion ratio in dB. The estimate is first
/// projected onto the target (s = a * target with a = <est,tgt>/||tgt||^2);
/// the ratio is ||s||^2 over ||est - s||^2. Capped at +100 dB once the
/// residual drops below 1e-20 times the projected energy.
double si_sdr(const Eigen::Ref<const Eigen::VectorXd>& estimate,
              const Eigen::Ref<const Eigen::VectorXd>& target);

struct MetricsRow {
  std::string model;      // "tv" or "bs"
  double param = 0;       // beta for tv, alpha for bs
  int iterations = 1;     // 1 for the closed-form tv solve
  double degradation = 0;
  double si_sdr_out = 0;
  double si_sdr_best_input = 0;
  double improvement = 0;  // si_sdr_out - si_sdr_best_input
};

struct MetricsReport {
  std::vector<MetricsRow> rows;

  /// CSV with the fixed header
  /// model,param,iterations,degradation,si_sdr_out,si_sdr_best_input,improvement
  /// and %.6f fixed-point numbers, so identical runs serialize identically.
  std::string to_csv() const;
};

/// Runs the full grid: for every (model config, degradation level) pair,
/// mixes the scene, builds the reference from the target source (level 0 is
/// the oracle reference), extracts, and scores SI-SDR of the inverted output
/// against the target's image at the reference mic and of the best raw input
/// channel. Row order follows the grid order; everything is deterministic
/// given the scenario seed.
MetricsReport run_sweep(const std::vector<MultichannelWave>& sources,
                        const MixingScenario& scenario,
                        const StftParams& params,
                        const std::vector<SourceModelConfig>& grid,
                        const std::vector<double>& degradation_levels,
                        int ref_mic = 0);

}  // namespace sibf
