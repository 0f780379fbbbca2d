#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "lsm/ensemble.hpp"
#include "lsm/preprocessing.hpp"
#include "lsm/readout.hpp"

namespace lsm {

struct PreprocessConfig {
  BinOptions binning;
  int downscale = 1;
  bool gabor_enabled = false;
  GaborSpec gabor;
  double input_scale = 1.0;
};

enum class InputKind { Standard, ReceptiveField };

struct InputConfig {
  InputKind scheme = InputKind::Standard;
  double weight = 8.0;
  double density = 0.15;
  int window_size = 5;
};

struct SeedConfig {
  Seed topology = 0;
  Seed input = 0;
  /// Repeat r runs with topology + r and input + r.
  int repeats = 3;
};

/// Everything one run consumes. Round-trips losslessly through JSON.
struct ExperimentConfig {
  std::string name = "experiment";
  std::filesystem::path manifest;
  PreprocessConfig preprocess;
  NeuronParams<double> neuron;
  ConnectionLaw law;
  InputConfig input;
  EnsembleSpec ensemble;
  ReadoutConfig<double> readout;
  StateMode state_mode = StateMode::FullWindow;
  SeedConfig seeds;
  std::filesystem::path output_dir = "out";
  int threads = 1;

  /// Checks every value that can be checked without the dataset.
  void validate() const;

  /// InputSpec for frames of the given geometry.
  InputSpec input_spec(int channels, int height, int width) const;
};

nlohmann::json to_json(const ExperimentConfig& config);
/// A relative manifest path resolves against $LSM_DATA_ROOT when set,
/// otherwise against `base_dir`.
ExperimentConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace lsm
