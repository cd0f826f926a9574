#include "sibf/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <variant>

#include "sibf/stft.hpp"

namespace sibf {

double si_sdr(const Eigen::Ref<const Eigen::VectorXd>& estimate,
              const Eigen::Ref<const Eigen::VectorXd>& target) {
  if (estimate.size() != target.size()) {
    throw std::invalid_argument("si_sdr: length mismatch");
  }
  if (estimate.size() == 0) {
    throw std::invalid_argument("si_sdr: empty input");
  }
  const double target_energy = target.squaredNorm();
  if (!(target_energy > 0.0)) {
    throw std::invalid_argument("si_sdr: target is silent");
  }
  const double scale = estimate.dot(target) / target_energy;
  const Eigen::VectorXd projected = scale * target;
  const double signal = projected.squaredNorm();
  const double error = (estimate - projected).squaredNorm();
  if (!(signal > 0.0)) {
    return -100.0;  // estimate orthogonal to the target
  }
  if (error <= 1e-20 * signal) {
    return 100.0;
  }
  return 10.0 * std::log10(signal / error);
}

std::string MetricsReport::to_csv() const {
  std::string out =
      "model,param,iterations,degradation,si_sdr_out,si_sdr_best_input,"
      "improvement\n";
  char line[256];
  for (const auto& row : rows) {
    std::snprintf(line, sizeof(line), "%s,%.6f,%d,%.6f,%.6f,%.6f,%.6f\n",
                  row.model.c_str(), row.param, row.iterations, row.degradation,
                  row.si_sdr_out, row.si_sdr_best_input, row.improvement);
    out += line;
  }
  return out;
}

namespace {

MultichannelWave sum_of_others(const std::vector<MultichannelWave>& sources,
                               std::size_t skip) {
  MultichannelWave out;
  out.sample_rate = sources.front().sample_rate;
  out.data = Eigen::MatrixXd::Zero(1, sources.front().num_samples());
  for (std::size_t k = 0; k < sources.size(); ++k) {
    if (k != skip) {
      out.data += sources[k].data;
    }
  }
  return out;
}

}  // namespace

MetricsReport run_sweep(const std::vector<MultichannelWave>& sources,
                        const MixingScenario& scenario,
                        const StftParams& params,
                        const std::vector<SourceModelConfig>& grid,
                        const std::vector<double>& degradation_levels,
                        int ref_mic) {
  if (grid.empty()) {
    throw std::invalid_argument("run_sweep: empty model grid");
  }
  if (degradation_levels.empty()) {
    throw std::invalid_argument("run_sweep: no degradation levels");
  }
  if (ref_mic < 0 || ref_mic >= scenario.num_channels()) {
    throw std::invalid_argument("run_sweep: reference mic out of range");
  }

  const MultichannelWave mixture = simulate_anechoic(sources, scenario);
  const ComplexSpectrogram x = stft(mixture, params);
  const Eigen::Index mix_len = mixture.num_samples();

  MultichannelWave target_padded;  // target source at mixture length, undelayed
  target_padded.sample_rate = mixture.sample_rate;
  target_padded.data =
      fit_length(sources[0].data.row(0).transpose(), mix_len).transpose();
  const Eigen::VectorXd target_mono = target_padded.data.row(0).transpose();

  // The scoring target is the target source as heard at the reference mic:
  // same delay, unit gain (SI-SDR ignores the gain anyway).
  const Eigen::VectorXd target_vec = fit_length(
      delay_samples(target_mono, scenario.delays(0, ref_mic)), mix_len);

  double best_input = -1e300;
  for (Eigen::Index n = 0; n < scenario.num_channels(); ++n) {
    const Eigen::VectorXd aligned = fit_length(
        delay_samples(target_mono, scenario.delays(0, n)), mix_len);
    best_input =
        std::max(best_input, si_sdr(mixture.data.row(n).transpose(), aligned));
  }

  MultichannelWave interference;
  interference.sample_rate = mixture.sample_rate;
  interference.data =
      fit_length(sum_of_others(sources, 0).data.row(0).transpose(), mix_len)
          .transpose();

  MetricsReport report;
  for (const auto& model : grid) {
    for (double level : degradation_levels) {
      Eigen::MatrixXd ref =
          degrade_reference(target_padded, interference, level, params);

      ExtractionResult result = extract(x, ref, model, ref_mic);
      const Eigen::VectorXd estimate =
          istft_channel(result.target, params, mix_len);

      MetricsRow row;
      if (const auto* tv = std::get_if<TvGaussianModel>(&model)) {
        row.model = "tv";
        row.param = tv->beta;
        row.iterations = 1;
      } else {
        const auto& bs = std::get<BsLaplacianModel>(model);
        row.model = "bs";
        row.param = bs.alpha;
        row.iterations = bs.iterations;
      }
      row.degradation = level;
      row.si_sdr_out = si_sdr(estimate, target_vec);
      row.si_sdr_best_input = best_input;
      row.improvement = row.si_sdr_out - row.si_sdr_best_input;
      report.rows.push_back(row);
    }
  }
  return report;
}

}  // namespace sibf
