#pragma once

#include <iosfwd>
#include <variant>
#include <vector>

#include "lsm/topology.hpp"

namespace lsm {

struct StandardScheme {};

/// Input pixels of an input_width x input_height x channels image connect
/// only to reservoir columns inside a square (x, y) window around the
/// pixel's scaled anchor, across all z.
struct ReceptiveFieldScheme {
  int window_size = 5;
  int input_width = 1;
  int input_height = 1;
  int channels = 1;
};

using InputScheme = std::variant<StandardScheme, ReceptiveFieldScheme>;

struct InputSpec {
  int n_inputs = 0;
  double input_weight = 8.0;
  double density = 0.15;
  InputScheme scheme = StandardScheme{};

  void validate(const GridDims& dims) const;
};

struct InputEdge {
  int input = 0;
  int target = 0;
  double weight = 0;
  friend bool operator==(const InputEdge&, const InputEdge&) = default;
};

struct InputMap {
  int n_inputs = 0;
  int n_targets = 0;
  Seed seed = 0;
  std::vector<InputEdge> edges;

  /// n_targets x n_inputs, column = input neuron.
  SparseWeights<double> weight_matrix() const;
};

/// Reservoir (x, y) column the pixel anchors to. Monotone in each axis.
std::pair<int, int> receptive_anchor(int px, int py, const ReceptiveFieldScheme& rf, const GridDims& dims);

/// Inclusive [lo, hi] window bounds along one axis, clipped to [0, extent).
std::pair<int, int> window_bounds(int anchor, int window_size, int extent);

InputMap build_standard_input(const InputSpec& spec, const GridDims& dims, Seed seed);
InputMap build_receptive_field_input(const InputSpec& spec, const GridDims& dims, Seed seed);

/// Dispatches on spec.scheme.
InputMap build_input_map(const InputSpec& spec, const GridDims& dims, Seed seed);

void write_input_map(std::ostream& os, const InputMap& map);
InputMap read_input_map(std::istream& is);

}  // namespace lsm
