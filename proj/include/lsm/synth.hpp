#pragma once

#include <filesystem>
#include <vector>

#include "lsm/preprocessing.hpp"

namespace lsm {

/// Labeled event streams whose class identity lives in the temporal order of
/// spatial patterns. With `signal_phase < 0`, class c shows the c-th
/// permutation (lexicographic) of the `phases` prototype patterns, one per
/// phase, so every class has the same pattern multiset and only timing
/// separates them. With `signal_phase = s`, all phases show shared patterns
/// except phase s, which shows a class-specific pattern.
struct SynthParams {
  int classes = 4;
  int phases = 3;
  int width = 8;
  int height = 8;
  int phase_frames = 20;
  std::uint64_t frame_us = 1000;
  double active_fraction = 0.25;
  /// Per active pixel per frame event probability.
  double rate = 0.1;
  /// Per pixel per frame background event probability.
  double noise_rate = 0.1;
  int train_samples = 500;
  int test_samples = 500;
  int signal_phase = -1;
  Seed seed = 7;

  int total_frames() const { return phases * phase_frames; }
  void validate() const;
};

/// Sample `index` of a split; labels cycle 0..classes-1.
EventStream synth_sample(const SynthParams& params, bool test_split, int index);

/// Writes <dir>/{train,test}/NNNNN.evs and <dir>/manifest.txt; returns the manifest path.
std::filesystem::path write_synth_dataset(const SynthParams& params, const std::filesystem::path& dir);

}  // namespace lsm
