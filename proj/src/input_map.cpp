#include "lsm/input_map.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>

#include "io_util.hpp"

namespace lsm {

namespace {

int fan_out(double density, int pool) { return static_cast<int>(std::lround(density * pool)); }

/// Partial Fisher-Yates: the first k entries of `pool` become a uniform
/// sample without replacement; the first half is wired positive.
void wire(int input, int k, double weight, std::vector<int>& pool, Rng& rng, std::vector<InputEdge>& out) {
  const auto n = static_cast<std::uint64_t>(pool.size());
  for (int s = 0; s < k; ++s) {
    const auto j = static_cast<std::size_t>(s + uniform_index(rng, n - s));
    std::swap(pool[s], pool[j]);
    out.push_back({input, pool[s], s < k / 2 ? weight : -weight});
  }
}

}  // namespace

void InputSpec::validate(const GridDims& dims) const {
  dims.validate();
  if (n_inputs <= 0) throw ConfigError("InputSpec: n_inputs must be positive");
  if (!(density > 0 && density <= 1)) throw ConfigError("InputSpec: density must lie in (0, 1]");
  if (!(input_weight > 0) || !std::isfinite(input_weight))
    throw ConfigError("InputSpec: input_weight must be a positive magnitude");
  if (std::holds_alternative<StandardScheme>(scheme)) {
    const int k = fan_out(density, dims.size());
    if (k < 2 || k % 2 != 0)
      throw ConfigError("InputSpec: round(density * N) = " + std::to_string(k) + " must be even and >= 2");
    return;
  }
  const auto& rf = std::get<ReceptiveFieldScheme>(scheme);
  if (rf.window_size < 1) throw ConfigError("InputSpec: window_size must be >= 1");
  if (rf.window_size > dims.nx || rf.window_size > dims.ny)
    throw ConfigError("InputSpec: receptive window exceeds the reservoir x-y extent");
  if (rf.input_width <= 0 || rf.input_height <= 0 || rf.channels <= 0)
    throw ConfigError("InputSpec: receptive-field input geometry must be positive");
  if (rf.input_width * rf.input_height * rf.channels != n_inputs)
    throw ConfigError("InputSpec: n_inputs must equal input_width * input_height * channels");
}

std::pair<int, int> receptive_anchor(int px, int py, const ReceptiveFieldScheme& rf, const GridDims& dims) {
  const auto ax = static_cast<int>(static_cast<long long>(px) * dims.nx / rf.input_width);
  const auto ay = static_cast<int>(static_cast<long long>(py) * dims.ny / rf.input_height);
  return {ax, ay};
}

std::pair<int, int> window_bounds(int anchor, int window_size, int extent) {
  const int lo = anchor - window_size / 2;
  const int hi = lo + window_size - 1;
  return {std::max(lo, 0), std::min(hi, extent - 1)};
}

InputMap build_standard_input(const InputSpec& spec, const GridDims& dims, Seed seed) {
  if (!std::holds_alternative<StandardScheme>(spec.scheme))
    throw ConfigError("build_standard_input: spec uses a different scheme");
  spec.validate(dims);
  const int n = dims.size();
  const int k = fan_out(spec.density, n);
  if (k > n) throw ConfigError("build_standard_input: fan-out exceeds reservoir size");

  InputMap map{spec.n_inputs, n, seed, {}};
  map.edges.reserve(static_cast<std::size_t>(spec.n_inputs) * k);
  std::vector<int> pool(static_cast<std::size_t>(n));
  std::iota(pool.begin(), pool.end(), 0);
  Rng rng(seed);
  for (int in = 0; in < spec.n_inputs; ++in) wire(in, k, spec.input_weight, pool, rng, map.edges);
  return map;
}

InputMap build_receptive_field_input(const InputSpec& spec, const GridDims& dims, Seed seed) {
  if (!std::holds_alternative<ReceptiveFieldScheme>(spec.scheme))
    throw ConfigError("build_receptive_field_input: spec uses a different scheme");
  spec.validate(dims);
  const auto& rf = std::get<ReceptiveFieldScheme>(spec.scheme);

  InputMap map{spec.n_inputs, dims.size(), seed, {}};
  Rng rng(seed);
  std::map<std::pair<int, int>, std::vector<int>> pools;
  const int plane = rf.input_width * rf.input_height;
  for (int in = 0; in < spec.n_inputs; ++in) {
    // Channel-major flattening; channel does not move the window.
    const int px = (in % plane) % rf.input_width;
    const int py = (in % plane) / rf.input_width;
    const auto anchor = receptive_anchor(px, py, rf, dims);
    auto [it, inserted] = pools.try_emplace(anchor);
    auto& pool = it->second;
    if (inserted) {
      const auto [x0, x1] = window_bounds(anchor.first, rf.window_size, dims.nx);
      const auto [y0, y1] = window_bounds(anchor.second, rf.window_size, dims.ny);
      for (int z = 0; z < dims.nz; ++z)
        for (int y = y0; y <= y1; ++y)
          for (int x = x0; x <= x1; ++x) pool.push_back(index_of({x, y, z}, dims));
    }
    const int pool_size = static_cast<int>(pool.size());
    if (pool_size < 2) throw ConfigError("build_receptive_field_input: receptive window pool has fewer than 2 neurons");
    int k = fan_out(spec.density, pool_size);
    k -= k % 2;
    k = std::clamp(k, 2, pool_size - pool_size % 2);
    wire(in, k, spec.input_weight, pool, rng, map.edges);
  }
  return map;
}

InputMap build_input_map(const InputSpec& spec, const GridDims& dims, Seed seed) {
  if (std::holds_alternative<StandardScheme>(spec.scheme)) return build_standard_input(spec, dims, seed);
  return build_receptive_field_input(spec, dims, seed);
}

SparseWeights<double> InputMap::weight_matrix() const {
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(edges.size());
  for (const auto& e : edges) triplets.emplace_back(e.target, e.input, e.weight);
  SparseWeights<double> w(n_targets, n_inputs);
  w.setFromTriplets(triplets.begin(), triplets.end());
  return w;
}

void write_input_map(std::ostream& os, const InputMap& map) {
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  os << "input\n";
  os << "n_inputs " << map.n_inputs << '\n';
  os << "n_targets " << map.n_targets << '\n';
  os << "seed " << map.seed << '\n';
  os << "edges " << map.edges.size() << '\n';
  for (const auto& e : map.edges) os << e.input << ' ' << e.target << ' ' << e.weight << '\n';
}

InputMap read_input_map(std::istream& is) {
  using io::expect_token;
  InputMap map;
  expect_token(is, "input");
  expect_token(is, "n_inputs");
  is >> map.n_inputs;
  expect_token(is, "n_targets");
  is >> map.n_targets;
  expect_token(is, "seed");
  is >> map.seed;
  expect_token(is, "edges");
  std::size_t count = 0;
  is >> count;
  if (!is) throw ConfigError("read_input_map: truncated header");
  map.edges.resize(count);
  for (auto& e : map.edges) {
    is >> e.input >> e.target >> e.weight;
    if (!is) throw ConfigError("read_input_map: truncated edge list");
    if (e.input < 0 || e.input >= map.n_inputs || e.target < 0 || e.target >= map.n_targets)
      throw ConfigError("read_input_map: edge endpoint out of range");
  }
  return map;
}

}  // namespace lsm
