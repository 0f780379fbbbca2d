#include "lsm/topology.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>

#include "io_util.hpp"

namespace lsm {

void GridDims::validate() const {
  if (nx <= 0 || ny <= 0 || nz <= 0) throw ConfigError("GridDims: all extents must be positive");
  if (size() % 2 != 0)
    throw ConfigError("GridDims: reservoir size must be even (half excitatory, half inhibitory)");
}

GridCoord coord_of(int index, const GridDims& dims) {
  return {index % dims.nx, (index / dims.nx) % dims.ny, index / (dims.nx * dims.ny)};
}

int index_of(const GridCoord& c, const GridDims& dims) { return c.x + dims.nx * (c.y + dims.ny * c.z); }

double distance(const GridCoord& a, const GridCoord& b) {
  const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

void ConnectionLaw::validate() const {
  if (!(lambda > 0)) throw ConfigError("ConnectionLaw: lambda must be positive");
  if (!(d >= 0)) throw ConfigError("ConnectionLaw: distance offset d must be >= 0");
  for (const auto& row : table.c)
    for (double c : row)
      if (!(c > 0 && c <= 1)) throw ConfigError("ConnectionLaw: base probabilities must lie in (0, 1]");
}

namespace {

double law_value(double dist, const ConnectionLaw& law, NeuronKind src, NeuronKind dst) {
  const double z = (dist - law.d) / law.lambda;
  return law.table(src, dst) * std::exp(-(z * z));
}

}  // namespace

double connection_probability(const GridCoord& i, const GridCoord& j, const ConnectionLaw& law,
                              NeuronKind src_kind, NeuronKind dst_kind) {
  if (i == j) throw ConfigError("connection_probability: self-connections are excluded");
  return law_value(distance(i, j), law, src_kind, dst_kind);
}

std::vector<NeuronKind> assign_kinds(int n, Rng& rng) {
  std::vector<NeuronKind> kinds(static_cast<std::size_t>(n), NeuronKind::Excitatory);
  std::fill(kinds.begin() + n / 2, kinds.end(), NeuronKind::Inhibitory);
  shuffle(kinds.begin(), kinds.end(), rng);
  return kinds;
}

namespace {

ReservoirTopology sample_edges(const GridDims& dims, const ConnectionLaw& law, double w_lsm, Seed seed,
                               std::vector<NeuronKind> kinds, Rng& rng) {
  const int n = dims.size();
  ReservoirTopology topo{dims, law, w_lsm, seed, std::move(kinds), {}};

  // Probabilities depend only on squared grid distance and the kind pair.
  const int max_d2 = (dims.nx - 1) * (dims.nx - 1) + (dims.ny - 1) * (dims.ny - 1) +
                     (dims.nz - 1) * (dims.nz - 1);
  std::vector<std::array<double, 4>> table(static_cast<std::size_t>(max_d2) + 1);
  for (int d2 = 0; d2 <= max_d2; ++d2)
    for (int k = 0; k < 4; ++k)
      table[d2][k] = law_value(std::sqrt(static_cast<double>(d2)), law, static_cast<NeuronKind>(k / 2),
                               static_cast<NeuronKind>(k % 2));

  std::vector<GridCoord> coords(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) coords[i] = coord_of(i, dims);

  for (int i = 0; i < n; ++i) {
    const auto ki = static_cast<int>(topo.kinds[i]);
    const double w = topo.kinds[i] == NeuronKind::Excitatory ? w_lsm : -w_lsm;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      const int dx = coords[i].x - coords[j].x, dy = coords[i].y - coords[j].y,
                dz = coords[i].z - coords[j].z;
      const double p = table[dx * dx + dy * dy + dz * dz][ki * 2 + static_cast<int>(topo.kinds[j])];
      if (uniform01(rng) < p) topo.edges.push_back({i, j, w});
    }
  }
  return topo;
}

}  // namespace

ReservoirTopology build_reservoir(const GridDims& dims, const ConnectionLaw& law,
                                  const NeuronParams<double>& params, Seed seed) {
  dims.validate();
  law.validate();
  Rng rng(seed);
  auto kinds = assign_kinds(dims.size(), rng);
  return sample_edges(dims, law, params.w_lsm, seed, std::move(kinds), rng);
}

ReservoirTopology build_reservoir(const GridDims& dims, const ConnectionLaw& law,
                                  const NeuronParams<double>& params, Seed seed,
                                  std::vector<NeuronKind> kinds) {
  dims.validate();
  law.validate();
  if (static_cast<int>(kinds.size()) != dims.size())
    throw ConfigError("build_reservoir: kind vector length differs from reservoir size");
  const auto n_exc = std::count(kinds.begin(), kinds.end(), NeuronKind::Excitatory);
  if (2 * n_exc != dims.size()) throw ConfigError("build_reservoir: kinds must be exactly half excitatory");
  Rng rng(seed);
  return sample_edges(dims, law, params.w_lsm, seed, std::move(kinds), rng);
}

SparseWeights<double> ReservoirTopology::weight_matrix() const {
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(edges.size());
  for (const auto& e : edges) triplets.emplace_back(e.dst, e.src, e.weight);
  SparseWeights<double> w(size(), size());
  w.setFromTriplets(triplets.begin(), triplets.end());
  return w;
}

void write_topology(std::ostream& os, const ReservoirTopology& topo) {
  const auto& c = topo.law.table.c;
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  os << "lsm-topology 1\n";
  os << "dims " << topo.dims.nx << ' ' << topo.dims.ny << ' ' << topo.dims.nz << '\n';
  os << "seed " << topo.seed << '\n';
  os << "law " << topo.law.lambda << ' ' << topo.law.d << ' ' << c[0][0] << ' ' << c[0][1] << ' '
     << c[1][0] << ' ' << c[1][1] << '\n';
  os << "w_lsm " << topo.w_lsm << '\n';
  os << "kinds ";
  for (auto k : topo.kinds) os << (k == NeuronKind::Excitatory ? 'E' : 'I');
  os << '\n';
  os << "edges " << topo.edges.size() << '\n';
  for (const auto& e : topo.edges) os << e.src << ' ' << e.dst << ' ' << e.weight << '\n';
}

ReservoirTopology read_topology(std::istream& is) {
  using io::expect_token;
  ReservoirTopology topo;
  expect_token(is, "lsm-topology");
  int version = 0;
  is >> version;
  if (version != 1) throw ConfigError("read_topology: unsupported version");
  expect_token(is, "dims");
  is >> topo.dims.nx >> topo.dims.ny >> topo.dims.nz;
  expect_token(is, "seed");
  is >> topo.seed;
  expect_token(is, "law");
  auto& c = topo.law.table.c;
  is >> topo.law.lambda >> topo.law.d >> c[0][0] >> c[0][1] >> c[1][0] >> c[1][1];
  expect_token(is, "w_lsm");
  is >> topo.w_lsm;
  expect_token(is, "kinds");
  std::string kinds;
  is >> kinds;
  if (!is) throw ConfigError("read_topology: truncated header");
  topo.dims.validate();
  if (static_cast<int>(kinds.size()) != topo.dims.size())
    throw ConfigError("read_topology: kinds string length differs from dims");
  for (char k : kinds) {
    if (k != 'E' && k != 'I') throw ConfigError("read_topology: kinds must be E or I");
    topo.kinds.push_back(k == 'E' ? NeuronKind::Excitatory : NeuronKind::Inhibitory);
  }
  expect_token(is, "edges");
  std::size_t count = 0;
  is >> count;
  topo.edges.resize(count);
  for (auto& e : topo.edges) {
    is >> e.src >> e.dst >> e.weight;
    if (!is) throw ConfigError("read_topology: truncated edge list");
    if (e.src < 0 || e.dst < 0 || e.src >= topo.size() || e.dst >= topo.size() || e.src == e.dst)
      throw ConfigError("read_topology: edge endpoint out of range or self-edge");
  }
  return topo;
}

}  // namespace lsm
