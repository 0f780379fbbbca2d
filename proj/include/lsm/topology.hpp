#pragma once

#include <array>
#include <iosfwd>
#include <vector>

#include "lsm/neuron.hpp"
#include "lsm/rng.hpp"
#include "lsm/types.hpp"

namespace lsm {

enum class NeuronKind : std::uint8_t { Excitatory = 0, Inhibitory = 1 };

struct GridDims {
  int nx = 1;
  int ny = 1;
  int nz = 1;

  int size() const { return nx * ny * nz; }
  void validate() const;
  friend bool operator==(const GridDims&, const GridDims&) = default;
};

/// Integer grid coordinate of a neuron. Index layout is x-fastest:
/// index = x + nx * (y + ny * z).
struct GridCoord {
  int x = 0;
  int y = 0;
  int z = 0;
  friend bool operator==(const GridCoord&, const GridCoord&) = default;
};

GridCoord coord_of(int index, const GridDims& dims);
int index_of(const GridCoord& c, const GridDims& dims);
double distance(const GridCoord& a, const GridCoord& b);

/// Base connection probabilities indexed [source kind][target kind].
struct ConnectionTable {
  std::array<std::array<double, 2>, 2> c{{{0.2, 0.1}, {0.05, 0.3}}};

  double operator()(NeuronKind src, NeuronKind dst) const {
    return c[static_cast<int>(src)][static_cast<int>(dst)];
  }
  friend bool operator==(const ConnectionTable&, const ConnectionTable&) = default;
};

/// P(i -> j) = C[kind_i][kind_j] * exp(-((D(i,j) - d) / lambda)^2)
struct ConnectionLaw {
  double lambda = 2.0;
  double d = 0.0;
  ConnectionTable table;

  void validate() const;
  friend bool operator==(const ConnectionLaw&, const ConnectionLaw&) = default;
};

struct Edge {
  int src = 0;
  int dst = 0;
  double weight = 0;
  friend bool operator==(const Edge&, const Edge&) = default;
};

struct ReservoirTopology {
  GridDims dims;
  ConnectionLaw law;
  double w_lsm = 1.0;
  Seed seed = 0;
  std::vector<NeuronKind> kinds;
  std::vector<Edge> edges;

  int size() const { return dims.size(); }

  /// Recurrent weight matrix, column = source.
  SparseWeights<double> weight_matrix() const;
};

double connection_probability(const GridCoord& i, const GridCoord& j, const ConnectionLaw& law,
                              NeuronKind src_kind, NeuronKind dst_kind);

/// Seeded half/half E-I assignment (random permutation).
std::vector<NeuronKind> assign_kinds(int n, Rng& rng);

/// Samples the reservoir. Kinds come from the first draws of the seeded
/// stream, then one Bernoulli draw per ordered pair (i, j), i != j, in
/// row-major order (i outer, j inner).
ReservoirTopology build_reservoir(const GridDims& dims, const ConnectionLaw& law,
                                  const NeuronParams<double>& params, Seed seed);

/// As above with caller-supplied neuron kinds (must be exactly half E).
ReservoirTopology build_reservoir(const GridDims& dims, const ConnectionLaw& law,
                                  const NeuronParams<double>& params, Seed seed,
                                  std::vector<NeuronKind> kinds);

void write_topology(std::ostream& os, const ReservoirTopology& topo);
ReservoirTopology read_topology(std::istream& is);

}  // namespace lsm
