#pragma once

#include <functional>
#include <optional>
#include <variant>
#include <vector>

#include "lsm/input_map.hpp"
#include "lsm/neuron.hpp"
#include "lsm/preprocessing.hpp"
#include "lsm/topology.hpp"

namespace lsm {

/// Members differ only in the distance offset d of their connection law.
struct MulreSpec {
  std::vector<double> d_list{0.0, 5.0};
};

/// Input is gated to one partition per time slab; successive partitions are
/// coupled by sparse inhibitory edges (r -> r + 1).
struct TepreSpec {
  int partitions = 3;
  double inter_density = 0.01;
  double inter_weight = -1.0;
};

struct EnsembleSpec {
  std::variant<MulreSpec, TepreSpec> variant = TepreSpec{};
  /// Total neuron budget; members split it evenly along z.
  GridDims total_dims{10, 10, 6};

  int member_count() const;
  GridDims member_dims() const;
  /// Checks the variant against the input scheme it requires.
  void validate(const InputSpec& input) const;
};

/// Half-open [start, end) input interval per partition.
struct GatingSchedule {
  std::vector<std::pair<int, int>> intervals;

  /// Contiguous equal split of [0, steps); lengths differ by at most one.
  static GatingSchedule equal_split(int steps, int partitions);
  /// Throws ConfigError unless the intervals tile [0, steps) in order.
  void validate(int steps) const;
  bool contains(int partition, int t) const {
    return t >= intervals[partition].first && t < intervals[partition].second;
  }
};

struct Member {
  ReservoirTopology topology;
  InputMap input;
};

struct SpikeRecord {
  int steps = 0;
  /// Spikes per neuron over the whole presentation.
  Eigen::VectorXd counts;
  /// Spikes per neuron inside the member's own gating interval (TEPRE only).
  std::optional<Eigen::VectorXd> slab_counts;
  /// Spiking neuron indices per step, when requested.
  std::vector<std::vector<int>> raster;

  double total_spikes() const { return counts.sum(); }
};

struct RunOptions {
  bool record_raster = false;
  /// Called once per step with the injected drive of each member (member
  /// index, step, drive vector) before the neuron update.
  std::function<void(int, int, const Eigen::Ref<const Eigen::VectorXd>&)> observe_drive;
};

/// A built ensemble with its weight matrices compiled; `run` is const and
/// may be called concurrently for different samples.
class Ensemble {
 public:
  static Ensemble single(Member member, const NeuronParams<double>& params, const PresentationSpec& presentation);
  static Ensemble mulre(std::vector<Member> members, const MulreSpec& spec, const NeuronParams<double>& params,
                        const PresentationSpec& presentation);
  static Ensemble tepre(std::vector<Member> members, std::vector<Edge> inter_edges, const NeuronParams<double>& params,
                        const PresentationSpec& presentation);

  /// Uses an equal-split schedule for TEPRE.
  std::vector<SpikeRecord> run(const FrameSequence& frames, const RunOptions& options = {}) const;
  std::vector<SpikeRecord> run(const FrameSequence& frames, const GatingSchedule& schedule,
                               const RunOptions& options = {}) const;

  const std::vector<Member>& members() const { return members_; }
  const std::vector<Edge>& inter_edges() const { return inter_edges_; }
  bool gated() const { return gated_; }
  int total_neurons() const;

 private:
  Ensemble() = default;
  void compile(const PresentationSpec& presentation);

  std::vector<Member> members_;
  std::vector<Edge> inter_edges_;
  NeuronParams<double> params_;
  bool gated_ = false;
  std::vector<int> offsets_;
  std::vector<SparseWeights<double>> weights_;  // per member, or one combined matrix when gated
  std::vector<InputDriver> drivers_;
};

/// Plain (non-ensemble) LSM run.
SpikeRecord run_lsm(const FrameSequence& frames, const Member& member, const NeuronParams<double>& params,
                    const PresentationSpec& presentation = {}, const RunOptions& options = {});

std::vector<SpikeRecord> run_mulre(const FrameSequence& frames, const std::vector<Member>& members,
                                   const MulreSpec& spec, const NeuronParams<double>& params,
                                   const PresentationSpec& presentation = {}, const RunOptions& options = {});

/// Inhibitory edges from the inhibitory neurons of partition r to every
/// neuron of partition r + 1, one Bernoulli(inter_density) draw per pair.
/// Indices are global over the concatenated partitions.
std::vector<Edge> build_tepre(const std::vector<ReservoirTopology>& members, double inter_density,
                              double inter_weight, Seed seed);

std::vector<SpikeRecord> run_tepre(const FrameSequence& frames, const std::vector<Member>& members,
                                   const std::vector<Edge>& inter_edges, const GatingSchedule& schedule,
                                   const NeuronParams<double>& params, const PresentationSpec& presentation = {},
                                   const RunOptions& options = {});

/// Seeded member construction used by the harness: member k gets
/// topology seed mix_seed(topology_seed, k) and input seed mix_seed(input_seed, k).
std::vector<Member> build_members(const EnsembleSpec& spec, const ConnectionLaw& law, const InputSpec& input,
                                  const NeuronParams<double>& params, Seed topology_seed, Seed input_seed);

/// Builds members plus, for TEPRE, inter-partition edges seeded with mix_seed(topology_seed, 1000).
Ensemble build_ensemble(const EnsembleSpec& spec, const ConnectionLaw& law, const InputSpec& input,
                        const NeuronParams<double>& params, const PresentationSpec& presentation,
                        Seed topology_seed, Seed input_seed);

}  // namespace lsm
