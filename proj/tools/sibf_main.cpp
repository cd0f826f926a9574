// Command-line front end: extract a target from a multichannel recording,
// synthesize test scenes, score estimates, and run parameter sweeps.
//
// Exit codes: 0 success, 1 processing error, 2 argument error.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Dense>

#include "sibf/beamformer.hpp"
#include "sibf/mat_io.hpp"
#include "sibf/metrics.hpp"
#include "sibf/simulate.hpp"
#include "sibf/stft.hpp"
#include "sibf/wav_io.hpp"

namespace {

// Argument-level problems found after CLI11 parsing (bad ranges, malformed
// grids). Reported on stderr and mapped to exit 2, before any file I/O.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string::size_type start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    parts.push_back(text.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return parts;
}

std::string trim(const std::string& text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = text.find_last_not_of(" \t\r\n");
  return text.substr(first, last - first + 1);
}

double parse_number(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    const double value = std::stod(trim(text), &used);
    if (used != trim(text).size() || !std::isfinite(value)) {
      throw std::invalid_argument("");
    }
    return value;
  } catch (const std::exception&) {
    throw UsageError(what + ": not a number: '" + text + "'");
  }
}

std::vector<double> parse_number_list(const std::string& text,
                                      const std::string& what) {
  std::vector<double> values;
  for (const auto& item : split(text, ',')) {
    if (trim(item).empty()) {
      throw UsageError(what + ": empty entry in '" + text + "'");
    }
    values.push_back(parse_number(item, what));
  }
  if (values.empty()) throw UsageError(what + ": empty list");
  return values;
}

// Rows separated by ';', entries by ','. All rows must be the same length.
Eigen::MatrixXd parse_table(const std::string& text, const std::string& what) {
  std::vector<std::vector<double>> rows;
  for (const auto& row_text : split(text, ';')) {
    rows.push_back(parse_number_list(row_text, what));
    if (rows.back().size() != rows.front().size()) {
      throw UsageError(what + ": rows have different lengths");
    }
  }
  Eigen::MatrixXd table(static_cast<Eigen::Index>(rows.size()),
                        static_cast<Eigen::Index>(rows.front().size()));
  for (Eigen::Index i = 0; i < table.rows(); ++i) {
    for (Eigen::Index j = 0; j < table.cols(); ++j) {
      table(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
  }
  return table;
}

Eigen::MatrixXi parse_delay_table(const std::string& text) {
  const Eigen::MatrixXd raw = parse_table(text, "delays");
  Eigen::MatrixXi delays(raw.rows(), raw.cols());
  for (Eigen::Index i = 0; i < raw.rows(); ++i) {
    for (Eigen::Index j = 0; j < raw.cols(); ++j) {
      const double v = raw(i, j);
      if (v < 0 || v != std::floor(v)) {
        throw UsageError("delays: entries must be nonnegative integers");
      }
      delays(i, j) = static_cast<int>(v);
    }
  }
  return delays;
}

sibf::StftParams make_stft_params(int fft_size, int hop) {
  sibf::StftParams params;
  params.fft_size = fft_size;
  params.hop = hop;
  try {
    params.validate();
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  return params;
}

bool ends_with(const std::string& text, const std::string& suffix) {
  return text.size() >= suffix.size() &&
         text.compare(text.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// Same write-then-rename discipline the WAV and matrix writers use, so an
// error never leaves a partial report behind.
void write_text_atomic(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) {
      std::remove(tmp.c_str());
      throw std::runtime_error("cannot write '" + path + "'");
    }
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw std::runtime_error("cannot move report into '" + path + "'");
  }
}

struct ExtractOptions {
  std::string input, reference, output;
  std::string model = "tv";
  double beta = 8.0;
  double alpha = 100.0;
  int iterations = 10;
  int ref_mic = 0;
  int fft_size = 1024;
  int hop = 256;
};

int run_extract(const ExtractOptions& opt) {
  const sibf::StftParams params = make_stft_params(opt.fft_size, opt.hop);
  sibf::SourceModelConfig model;
  if (opt.model == "tv") {
    model = sibf::TvGaussianModel{opt.beta};
  } else if (opt.model == "bs") {
    model = sibf::BsLaplacianModel{opt.alpha, opt.iterations};
  } else {
    throw UsageError("extract: unknown model '" + opt.model +
                     "' (expected tv or bs)");
  }
  try {
    sibf::validate_model(model);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  if (opt.ref_mic < 0) throw UsageError("extract: ref-mic must be >= 0");

  const sibf::MultichannelWave wave = sibf::read_wav(opt.input);
  const sibf::ComplexSpectrogram x = sibf::stft(wave, params);

  Eigen::MatrixXd reference;
  if (ends_with(opt.reference, ".sibfmat")) {
    reference = sibf::read_matrix(opt.reference);
    if (reference.rows() != x.num_freqs() ||
        reference.cols() != x.num_frames()) {
      throw std::runtime_error(
          "extract: reference is " + std::to_string(reference.rows()) + "x" +
          std::to_string(reference.cols()) + " but the input transforms to " +
          std::to_string(x.num_freqs()) + "x" + std::to_string(x.num_frames()));
    }
  } else {
    const sibf::MultichannelWave ref_wave = sibf::read_wav(opt.reference);
    reference =
        sibf::stft_channel(ref_wave.data.row(0).transpose(), params).cwiseAbs();
    if (reference.cols() != x.num_frames()) {
      throw std::runtime_error(
          "extract: reference length does not match the input");
    }
  }

  const sibf::ExtractionResult result =
      sibf::extract(x, reference, model, opt.ref_mic);

  sibf::MultichannelWave out;
  out.sample_rate = wave.sample_rate;
  out.data = sibf::istft_channel(result.target, params, wave.num_samples())
                 .transpose();
  sibf::write_wav(out, opt.output);
  std::printf("objective %.6f\n", result.objective);
  return 0;
}

struct MixOptions {
  std::vector<std::string> sources;
  std::string gains, delays;
  double noise = 0.0;
  std::uint64_t seed = 0;
  std::string output, oracle_ref;
  int fft_size = 1024;
  int hop = 256;
};

int run_mix(const MixOptions& opt) {
  sibf::MixingScenario scenario;
  scenario.gains = parse_table(opt.gains, "gains");
  scenario.delays =
      opt.delays.empty()
          ? Eigen::MatrixXi::Zero(scenario.gains.rows(), scenario.gains.cols())
          : parse_delay_table(opt.delays);
  if (scenario.delays.rows() != scenario.gains.rows() ||
      scenario.delays.cols() != scenario.gains.cols()) {
    throw UsageError("mix: gains and delays must have the same shape");
  }
  if (scenario.gains.rows() != static_cast<Eigen::Index>(opt.sources.size())) {
    throw UsageError("mix: need one gains row per source");
  }
  if (!(opt.noise >= 0.0)) throw UsageError("mix: noise must be >= 0");
  scenario.diffuse_noise_level = opt.noise;
  scenario.rng_seed = opt.seed;
  const sibf::StftParams params = make_stft_params(opt.fft_size, opt.hop);

  std::vector<sibf::MultichannelWave> sources;
  for (const auto& path : opt.sources) {
    sources.push_back(sibf::read_wav(path));
  }
  const sibf::MultichannelWave mixture =
      sibf::simulate_anechoic(sources, scenario);
  sibf::write_wav(mixture, opt.output);

  if (!opt.oracle_ref.empty()) {
    sibf::MultichannelWave target;
    target.sample_rate = mixture.sample_rate;
    target.data = sibf::fit_length(sources[0].data.row(0).transpose(),
                                   mixture.num_samples())
                      .transpose();
    sibf::write_matrix(sibf::oracle_reference(target, params), opt.oracle_ref);
  }
  return 0;
}

struct EvalOptions {
  std::string estimate, target, baseline;
  int channel = 0;
};

int run_eval(const EvalOptions& opt) {
  if (opt.channel < 0) throw UsageError("eval: channel must be >= 0");
  const sibf::MultichannelWave estimate = sibf::read_wav(opt.estimate);
  const sibf::MultichannelWave target = sibf::read_wav(opt.target);
  const double score = sibf::si_sdr(estimate.data.row(0).transpose(),
                                    target.data.row(0).transpose());
  if (opt.baseline.empty()) {
    std::printf("%.6f\n", score);
    return 0;
  }
  const sibf::MultichannelWave baseline = sibf::read_wav(opt.baseline);
  if (opt.channel >= baseline.num_channels()) {
    throw std::runtime_error("eval: baseline has no channel " +
                             std::to_string(opt.channel));
  }
  const double base = sibf::si_sdr(baseline.data.row(opt.channel).transpose(),
                                   target.data.row(0).transpose());
  std::printf("%.6f,%.6f,%.6f\n", score, base, score - base);
  return 0;
}

struct SweepOptions {
  std::string scene, grid, out, levels = "0";
  int ref_mic = 0;
  int fft_size = 1024;
  int hop = 256;
};

std::vector<sibf::SourceModelConfig> parse_grid(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) {
    throw UsageError("grid: expected 'tv:beta=...' or 'bs:alpha=...[;iters=...]'");
  }
  const std::string family = trim(text.substr(0, colon));
  std::vector<double> betas, alphas;
  std::vector<double> iters = {10};
  for (const auto& part : split(text.substr(colon + 1), ';')) {
    const auto eq = part.find('=');
    if (eq == std::string::npos) {
      throw UsageError("grid: expected key=value in '" + part + "'");
    }
    const std::string key = trim(part.substr(0, eq));
    const std::string value = part.substr(eq + 1);
    if (key == "beta" && family == "tv") {
      betas = parse_number_list(value, "grid beta");
    } else if (key == "alpha" && family == "bs") {
      alphas = parse_number_list(value, "grid alpha");
    } else if (key == "iters" && family == "bs") {
      iters = parse_number_list(value, "grid iters");
    } else {
      throw UsageError("grid: unknown key '" + key + "' for model '" + family +
                       "'");
    }
  }

  std::vector<sibf::SourceModelConfig> grid;
  if (family == "tv") {
    for (double beta : betas) {
      if (beta < 0) throw UsageError("grid: beta must be >= 0");
      grid.push_back(sibf::TvGaussianModel{beta});
    }
  } else if (family == "bs") {
    for (double alpha : alphas) {
      if (alpha < 0) throw UsageError("grid: alpha must be >= 0");
      for (double it : iters) {
        if (it < 1 || it != std::floor(it)) {
          throw UsageError("grid: iters must be positive integers");
        }
        grid.push_back(sibf::BsLaplacianModel{alpha, static_cast<int>(it)});
      }
    }
  } else {
    throw UsageError("grid: unknown model family '" + family + "'");
  }
  if (grid.empty()) throw UsageError("grid: no model configurations");
  return grid;
}

struct SceneFile {
  std::vector<std::string> sources;
  std::string gains, delays;
  double noise = 0.0;
  std::uint64_t seed = 0;
};

SceneFile parse_scene_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("scene: cannot open '" + path + "'");
  }
  SceneFile scene;
  bool have_sources = false, have_gains = false;
  std::string line;
  while (std::getline(in, line)) {
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("scene: expected key=value, got '" + stripped +
                               "'");
    }
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key == "sources") {
      for (const auto& item : split(value, ',')) {
        scene.sources.push_back(trim(item));
      }
      have_sources = true;
    } else if (key == "gains") {
      scene.gains = value;
      have_gains = true;
    } else if (key == "delays") {
      scene.delays = value;
    } else if (key == "noise") {
      scene.noise = parse_number(value, "scene noise");
    } else if (key == "seed") {
      scene.seed = static_cast<std::uint64_t>(
          parse_number(value, "scene seed"));
    } else {
      throw std::runtime_error("scene: unknown key '" + key + "'");
    }
  }
  if (!have_sources || !have_gains) {
    throw std::runtime_error("scene: 'sources' and 'gains' are required");
  }
  return scene;
}

int run_sweep_cmd(const SweepOptions& opt) {
  const std::vector<sibf::SourceModelConfig> grid = parse_grid(opt.grid);
  const std::vector<double> levels = parse_number_list(opt.levels, "levels");
  for (double level : levels) {
    if (level < 0) throw UsageError("levels: must be >= 0");
  }
  if (opt.ref_mic < 0) throw UsageError("sweep: ref-mic must be >= 0");
  const sibf::StftParams params = make_stft_params(opt.fft_size, opt.hop);

  const SceneFile scene = parse_scene_file(opt.scene);
  sibf::MixingScenario scenario;
  try {
    scenario.gains = parse_table(scene.gains, "scene gains");
    scenario.delays =
        scene.delays.empty()
            ? Eigen::MatrixXi::Zero(scenario.gains.rows(),
                                    scenario.gains.cols())
            : parse_delay_table(scene.delays);
  } catch (const UsageError& e) {
    // Malformed tables inside the scene file are data errors, not flag errors.
    throw std::runtime_error(e.what());
  }
  if (!(scene.noise >= 0.0)) {
    throw std::runtime_error("scene: noise must be >= 0");
  }
  scenario.diffuse_noise_level = scene.noise;
  scenario.rng_seed = scene.seed;

  std::vector<sibf::MultichannelWave> sources;
  for (const auto& path : scene.sources) {
    sources.push_back(sibf::read_wav(path));
  }

  const sibf::MetricsReport report =
      sibf::run_sweep(sources, scenario, params, grid, levels, opt.ref_mic);
  write_text_atomic(opt.out, report.to_csv());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Similarity-and-independence-aware target extraction"};
  app.require_subcommand(1);

  ExtractOptions ex;
  CLI::App* extract = app.add_subcommand(
      "extract", "Extract the target described by a reference spectrogram");
  extract->add_option("--input,-i", ex.input, "Multichannel WAV recording")
      ->required();
  extract
      ->add_option("--reference,-r", ex.reference,
                   "Reference magnitudes (.sibfmat) or mono WAV")
      ->required();
  extract->add_option("--output,-o", ex.output, "Extracted mono WAV")
      ->required();
  extract->add_option("--model", ex.model, "Source model: tv or bs");
  extract->add_option("--beta", ex.beta, "Reference exponent (tv)");
  extract->add_option("--alpha", ex.alpha, "Reference weight (bs)");
  extract->add_option("--iterations", ex.iterations, "Update count (bs)");
  extract->add_option("--ref-mic", ex.ref_mic, "Rescaling channel");
  extract->add_option("--fft-size", ex.fft_size, "Transform length");
  extract->add_option("--hop", ex.hop, "Frame shift");

  MixOptions mx;
  CLI::App* mix =
      app.add_subcommand("mix", "Synthesize an anechoic multichannel mixture");
  mix->add_option("--sources", mx.sources, "Mono source WAVs")->required();
  mix->add_option("--gains", mx.gains,
                  "Per-source rows of per-channel gains, e.g. '1,1;0.7,0.6'")
      ->required();
  mix->add_option("--delays", mx.delays,
                  "Per-source rows of per-channel sample delays");
  mix->add_option("--noise", mx.noise, "Diffuse noise level");
  mix->add_option("--seed", mx.seed, "Noise seed");
  mix->add_option("--output,-o", mx.output, "Mixture WAV")->required();
  mix->add_option("--oracle-ref", mx.oracle_ref,
                  "Also write the first source's magnitude spectrogram");
  mix->add_option("--fft-size", mx.fft_size, "Transform length (oracle ref)");
  mix->add_option("--hop", mx.hop, "Frame shift (oracle ref)");

  EvalOptions ev;
  CLI::App* eval =
      app.add_subcommand("eval", "Score an estimate with SI-SDR");
  eval->add_option("--estimate", ev.estimate, "Estimated WAV")->required();
  eval->add_option("--target", ev.target, "Clean target WAV")->required();
  eval->add_option("--baseline", ev.baseline, "Unprocessed mixture WAV");
  eval->add_option("--channel", ev.channel, "Baseline channel to score");

  SweepOptions sw;
  CLI::App* sweep =
      app.add_subcommand("sweep", "Run a model parameter sweep over a scene");
  sweep->add_option("--scene", sw.scene, "Scene description file")->required();
  sweep
      ->add_option("--grid", sw.grid,
                   "Model grid, 'tv:beta=...' or 'bs:alpha=...;iters=...'")
      ->required();
  sweep->add_option("--out,--output,-o", sw.out, "Report CSV path")->required();
  sweep->add_option("--levels", sw.levels, "Reference degradation levels");
  sweep->add_option("--ref-mic", sw.ref_mic, "Rescaling channel");
  sweep->add_option("--fft-size", sw.fft_size, "Transform length");
  sweep->add_option("--hop", sw.hop, "Frame shift");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e, std::cout, std::cerr);
    const auto parsed = app.get_subcommands();
    std::cerr << (parsed.empty() ? app.help() : parsed.front()->help());
    return 2;
  }

  try {
    if (extract->parsed()) return run_extract(ex);
    if (mix->parsed()) return run_mix(mx);
    if (eval->parsed()) return run_eval(ev);
    return run_sweep_cmd(sw);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
