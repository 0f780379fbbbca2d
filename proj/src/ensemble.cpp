#include "lsm/ensemble.hpp"

#include <numeric>

namespace lsm {

int EnsembleSpec::member_count() const {
  if (const auto* m = std::get_if<MulreSpec>(&variant)) return static_cast<int>(m->d_list.size());
  return std::get<TepreSpec>(variant).partitions;
}

GridDims EnsembleSpec::member_dims() const {
  const int count = member_count();
  if (count < 1) throw ConfigError("EnsembleSpec: at least one member is required");
  if (total_dims.nz % count != 0)
    throw ConfigError("EnsembleSpec: total nz = " + std::to_string(total_dims.nz) + " is not divisible by " +
                      std::to_string(count) + " members");
  GridDims dims{total_dims.nx, total_dims.ny, total_dims.nz / count};
  dims.validate();
  return dims;
}

void EnsembleSpec::validate(const InputSpec& input) const {
  if (const auto* m = std::get_if<MulreSpec>(&variant)) {
    if (m->d_list.empty()) throw ConfigError("MuLRE: d_list must not be empty");
    for (double d : m->d_list)
      if (!(d >= 0)) throw ConfigError("MuLRE: distance offsets must be >= 0");
    if (!std::holds_alternative<ReceptiveFieldScheme>(input.scheme))
      throw ConfigError("MuLRE requires receptive-field input");
  } else {
    const auto& t = std::get<TepreSpec>(variant);
    if (t.partitions < 1) throw ConfigError("TEPRE: partitions must be >= 1");
    if (!(t.inter_density >= 0 && t.inter_density <= 1)) throw ConfigError("TEPRE: inter_density must lie in [0, 1]");
    if (!(t.inter_weight < 0)) throw ConfigError("TEPRE: inter_weight must be negative");
    if (!std::holds_alternative<StandardScheme>(input.scheme)) throw ConfigError("TEPRE uses standard input only");
  }
  member_dims();
}

GatingSchedule GatingSchedule::equal_split(int steps, int partitions) {
  if (partitions < 1) throw ConfigError("GatingSchedule: partitions must be >= 1");
  if (steps < 0) throw ConfigError("GatingSchedule: negative step count");
  GatingSchedule s;
  // Boundaries at floor(r * T / P): lengths differ by at most one.
  for (int r = 0; r < partitions; ++r) {
    const auto lo = static_cast<int>(static_cast<long long>(r) * steps / partitions);
    const auto hi = static_cast<int>(static_cast<long long>(r + 1) * steps / partitions);
    s.intervals.emplace_back(lo, hi);
  }
  return s;
}

void GatingSchedule::validate(int steps) const {
  if (intervals.empty()) throw ConfigError("GatingSchedule: no intervals");
  int expected = 0;
  for (const auto& [lo, hi] : intervals) {
    if (lo != expected) throw ConfigError("GatingSchedule: intervals leave a gap or overlap");
    if (hi < lo) throw ConfigError("GatingSchedule: interval end precedes start");
    expected = hi;
  }
  if (expected != steps) throw ConfigError("GatingSchedule: intervals do not cover the presentation");
}

namespace {

void check_member(const Member& m) {
  if (m.input.n_targets != m.topology.size())
    throw ConfigError("Ensemble: input map targets differ from reservoir size");
}

SparseWeights<double> combined_weights(const std::vector<Member>& members, const std::vector<int>& offsets,
                                       const std::vector<Edge>& inter, int total) {
  std::vector<Eigen::Triplet<double>> triplets;
  for (std::size_t k = 0; k < members.size(); ++k)
    for (const auto& e : members[k].topology.edges)
      triplets.emplace_back(offsets[k] + e.dst, offsets[k] + e.src, e.weight);
  for (const auto& e : inter) {
    if (e.src < 0 || e.dst < 0 || e.src >= total || e.dst >= total)
      throw ConfigError("Ensemble: inter-partition edge out of range");
    triplets.emplace_back(e.dst, e.src, e.weight);
  }
  SparseWeights<double> w(total, total);
  w.setFromTriplets(triplets.begin(), triplets.end());
  w.makeCompressed();
  return w;
}

}  // namespace

void Ensemble::compile(const PresentationSpec& presentation) {
  params_.validate();
  offsets_.assign(members_.size() + 1, 0);
  for (std::size_t k = 0; k < members_.size(); ++k) {
    check_member(members_[k]);
    offsets_[k + 1] = offsets_[k] + members_[k].topology.size();
    drivers_.emplace_back(members_[k].input, presentation);
  }
  if (gated_) {
    weights_.push_back(combined_weights(members_, offsets_, inter_edges_, offsets_.back()));
  } else {
    for (const auto& m : members_) {
      weights_.push_back(m.topology.weight_matrix());
      weights_.back().makeCompressed();
    }
  }
}

Ensemble Ensemble::single(Member member, const NeuronParams<double>& params, const PresentationSpec& presentation) {
  Ensemble e;
  e.members_.push_back(std::move(member));
  e.params_ = params;
  e.compile(presentation);
  return e;
}

Ensemble Ensemble::mulre(std::vector<Member> members, const MulreSpec& spec, const NeuronParams<double>& params,
                         const PresentationSpec& presentation) {
  if (members.size() != spec.d_list.size())
    throw ConfigError("MuLRE: member count differs from d_list length");
  for (std::size_t k = 0; k < members.size(); ++k)
    if (members[k].topology.law.d != spec.d_list[k])
      throw ConfigError("MuLRE: member " + std::to_string(k) + " was not built with its listed d");
  Ensemble e;
  e.members_ = std::move(members);
  e.params_ = params;
  e.compile(presentation);
  return e;
}

Ensemble Ensemble::tepre(std::vector<Member> members, std::vector<Edge> inter_edges,
                         const NeuronParams<double>& params, const PresentationSpec& presentation) {
  if (members.empty()) throw ConfigError("TEPRE: at least one partition is required");
  for (const auto& e : inter_edges)
    if (!(e.weight < 0)) throw ConfigError("TEPRE: inter-partition edges must be inhibitory");
  Ensemble e;
  e.members_ = std::move(members);
  e.inter_edges_ = std::move(inter_edges);
  e.params_ = params;
  e.gated_ = true;
  e.compile(presentation);
  return e;
}

int Ensemble::total_neurons() const { return offsets_.back(); }

std::vector<SpikeRecord> Ensemble::run(const FrameSequence& frames, const RunOptions& options) const {
  return run(frames, GatingSchedule::equal_split(frames.steps(), static_cast<int>(members_.size())), options);
}

namespace {

void record_step(const SpikeFlags& spikes, Eigen::Index offset, Eigen::Index size, bool in_slab,
                 bool raster, SpikeRecord& rec) {
  std::vector<int>* row = raster ? &rec.raster.emplace_back() : nullptr;
  for (Eigen::Index i = 0; i < size; ++i) {
    if (!spikes[offset + i]) continue;
    rec.counts[i] += 1;
    if (in_slab) (*rec.slab_counts)[i] += 1;
    if (row) row->push_back(static_cast<int>(i));
  }
}

}  // namespace

std::vector<SpikeRecord> Ensemble::run(const FrameSequence& frames, const GatingSchedule& schedule,
                                       const RunOptions& options) const {
  const int steps = frames.steps();
  for (const auto& d : drivers_)
    if (frames.frame_size() != d.n_inputs())
      throw ConfigError("Ensemble::run: frame size " + std::to_string(frames.frame_size()) +
                        " differs from input neuron count " + std::to_string(d.n_inputs()));

  std::vector<SpikeRecord> records(members_.size());
  for (std::size_t k = 0; k < members_.size(); ++k) {
    records[k].steps = steps;
    records[k].counts = Eigen::VectorXd::Zero(members_[k].topology.size());
    if (gated_) records[k].slab_counts = Eigen::VectorXd::Zero(members_[k].topology.size());
  }

  VectorX<double> scratch;
  if (gated_) {
    if (schedule.intervals.size() != members_.size())
      throw ConfigError("TEPRE: schedule has a different partition count than the ensemble");
    schedule.validate(steps);
    PopulationState<double> state(total_neurons());
    Eigen::VectorXd injected(total_neurons());
    for (int t = 0; t < steps; ++t) {
      injected.setZero();
      for (std::size_t k = 0; k < members_.size(); ++k) {
        auto block = injected.segment(offsets_[k], members_[k].topology.size());
        if (schedule.contains(static_cast<int>(k), t)) drivers_[k].accumulate(frames, t, block);
        if (options.observe_drive) options.observe_drive(static_cast<int>(k), t, block);
      }
      lif_step_inplace(state, injected, weights_.front(), params_, scratch);
      for (std::size_t k = 0; k < members_.size(); ++k)
        record_step(state.spikes, offsets_[k], members_[k].topology.size(),
                    schedule.contains(static_cast<int>(k), t), options.record_raster, records[k]);
    }
    return records;
  }

  for (std::size_t k = 0; k < members_.size(); ++k) {
    const int n = members_[k].topology.size();
    PopulationState<double> state(n);
    Eigen::VectorXd injected(n);
    for (int t = 0; t < steps; ++t) {
      injected.setZero();
      drivers_[k].accumulate(frames, t, injected);
      if (options.observe_drive) options.observe_drive(static_cast<int>(k), t, injected);
      lif_step_inplace(state, injected, weights_[k], params_, scratch);
      record_step(state.spikes, 0, n, false, options.record_raster, records[k]);
    }
  }
  return records;
}

SpikeRecord run_lsm(const FrameSequence& frames, const Member& member, const NeuronParams<double>& params,
                    const PresentationSpec& presentation, const RunOptions& options) {
  return Ensemble::single(member, params, presentation).run(frames, options).front();
}

std::vector<SpikeRecord> run_mulre(const FrameSequence& frames, const std::vector<Member>& members,
                                   const MulreSpec& spec, const NeuronParams<double>& params,
                                   const PresentationSpec& presentation, const RunOptions& options) {
  return Ensemble::mulre(members, spec, params, presentation).run(frames, options);
}

std::vector<Edge> build_tepre(const std::vector<ReservoirTopology>& members, double inter_density,
                              double inter_weight, Seed seed) {
  if (!(inter_weight < 0)) throw ConfigError("build_tepre: inter_weight must be negative");
  if (!(inter_density >= 0 && inter_density <= 1)) throw ConfigError("build_tepre: inter_density must lie in [0, 1]");
  std::vector<Edge> edges;
  if (members.size() < 2 || inter_density == 0) return edges;
  Rng rng(seed);
  int offset = 0;
  for (std::size_t r = 0; r + 1 < members.size(); ++r) {
    const int next_offset = offset + members[r].size();
    for (int src = 0; src < members[r].size(); ++src) {
      if (members[r].kinds[src] != NeuronKind::Inhibitory) continue;
      for (int dst = 0; dst < members[r + 1].size(); ++dst)
        if (uniform01(rng) < inter_density) edges.push_back({offset + src, next_offset + dst, inter_weight});
    }
    offset = next_offset;
  }
  return edges;
}

std::vector<SpikeRecord> run_tepre(const FrameSequence& frames, const std::vector<Member>& members,
                                   const std::vector<Edge>& inter_edges, const GatingSchedule& schedule,
                                   const NeuronParams<double>& params, const PresentationSpec& presentation,
                                   const RunOptions& options) {
  return Ensemble::tepre(members, inter_edges, params, presentation).run(frames, schedule, options);
}

std::vector<Member> build_members(const EnsembleSpec& spec, const ConnectionLaw& law, const InputSpec& input,
                                  const NeuronParams<double>& params, Seed topology_seed, Seed input_seed) {
  spec.validate(input);
  const GridDims dims = spec.member_dims();
  std::vector<Member> members;
  for (int k = 0; k < spec.member_count(); ++k) {
    ConnectionLaw member_law = law;
    if (const auto* m = std::get_if<MulreSpec>(&spec.variant)) member_law.d = m->d_list[k];
    auto topo = build_reservoir(dims, member_law, params, mix_seed(topology_seed, k));
    auto map = build_input_map(input, dims, mix_seed(input_seed, k));
    members.push_back({std::move(topo), std::move(map)});
  }
  return members;
}

Ensemble build_ensemble(const EnsembleSpec& spec, const ConnectionLaw& law, const InputSpec& input,
                        const NeuronParams<double>& params, const PresentationSpec& presentation,
                        Seed topology_seed, Seed input_seed) {
  auto members = build_members(spec, law, input, params, topology_seed, input_seed);
  if (const auto* m = std::get_if<MulreSpec>(&spec.variant)) return Ensemble::mulre(std::move(members), *m, params, presentation);
  const auto& t = std::get<TepreSpec>(spec.variant);
  std::vector<ReservoirTopology> topos;
  for (const auto& m : members) topos.push_back(m.topology);
  auto inter = build_tepre(topos, t.inter_density, t.inter_weight, mix_seed(topology_seed, 1000));
  return Ensemble::tepre(std::move(members), std::move(inter), params, presentation);
}

}  // namespace lsm
