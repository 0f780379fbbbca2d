#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "lsm/config.hpp"

namespace lsm {

struct ManifestEntry {
  std::string split;  // "train" or "test"
  std::filesystem::path path;
};

/// Lines of `<split> <path>`; '#' starts a comment. Relative paths resolve
/// against the manifest's directory.
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& manifest);

/// Binning, optional downscale and optional Gabor bank, as configured.
FrameSequence preprocess(const EventStream& stream, const PreprocessConfig& config);

struct HarnessOptions {
  std::optional<int> threads;
  std::optional<std::filesystem::path> output_dir;
  std::optional<Seed> seed_override;
  bool write_artifacts = true;
};

/// preprocess -> build -> simulate -> extract -> train -> evaluate, once per
/// seed repeat. The returned report is also written to <out>/report.json.
nlohmann::json run_experiment(ExperimentConfig config, const HarnessOptions& options = {});

/// Hash over everything in a report except wall-clock timings, the output
/// directory and the thread count.
std::string report_fingerprint(const nlohmann::json& report);

enum class SweepAxis { Partitions, DList, Window };

SweepAxis parse_sweep_axis(const std::string& name);

/// One value per run. Partitions values are integers, DList values are
/// arrays of offsets, Window values are integers.
std::vector<nlohmann::json> run_sweep(const ExperimentConfig& config, SweepAxis axis,
                                      const std::vector<nlohmann::json>& values, const HarnessOptions& options = {});

/// Tab-separated table of value, mean/std test accuracy and per-repeat accuracies.
std::string sweep_table(SweepAxis axis, const std::vector<nlohmann::json>& values,
                        const std::vector<nlohmann::json>& reports);

}  // namespace lsm
