#pragma once

#include <cmath>
#include <string>

#include "lsm/types.hpp"

namespace lsm {

/// LIF membrane and exponential-synapse constants. Time constants are in
/// timesteps; `w_lsm` is the magnitude of every recurrent weight.
template <typename Scalar = double>
struct NeuronParams {
  Scalar tau_v = 16;
  Scalar tau_u = 16;
  Scalar theta = 20;
  Scalar dt = 1;
  Scalar w_lsm = 1;

  void validate() const {
    if (!(tau_v > 0) || !(tau_u > 0) || !(theta > 0) || !(dt > 0))
      throw ConfigError("NeuronParams: tau_v, tau_u, theta and dt must be positive");
    if (!(dt < tau_v) || !(dt < tau_u))
      throw ConfigError("NeuronParams: dt must be smaller than tau_v and tau_u");
  }

  Scalar membrane_decay() const { return Scalar(1) - dt / tau_v; }
  Scalar synapse_decay() const { return Scalar(1) - dt / tau_u; }
};

/// Membrane potentials, synaptic traces and this-step spike flags.
template <typename Scalar = double>
struct PopulationState {
  VectorX<Scalar> v;
  VectorX<Scalar> u;
  SpikeFlags spikes;

  PopulationState() = default;
  explicit PopulationState(Eigen::Index n)
      : v(VectorX<Scalar>::Zero(n)), u(VectorX<Scalar>::Zero(n)), spikes(SpikeFlags::Zero(n)) {}

  Eigen::Index size() const { return v.size(); }

  void check_shape() const {
    if (u.size() != v.size() || spikes.size() != v.size())
      throw ConfigError("PopulationState: v, u and spikes must have equal length");
  }
};

/// trace' = trace * (1 - dt/tau_u) + arrivals / tau_u
template <typename Scalar, typename TraceDerived, typename ArrivalDerived>
VectorX<Scalar> synapse_trace_update(const Eigen::MatrixBase<TraceDerived>& trace,
                                     const Eigen::MatrixBase<ArrivalDerived>& arrivals,
                                     const NeuronParams<Scalar>& params) {
  if (trace.size() != arrivals.size())
    throw ConfigError("synapse_trace_update: length mismatch");
  return trace * params.synapse_decay() + arrivals / params.tau_u;
}

/// Accumulates weights of spiking sources onto their targets. Spikes are
/// read from the previous step, which gives every synapse a one-step delay.
/// Self-connections are skipped.
template <typename Scalar>
void accumulate_recurrent(const SparseWeights<Scalar>& weights, const SpikeFlags& spikes,
                          VectorX<Scalar>& arrivals) {
  for (Eigen::Index src = 0; src < weights.outerSize(); ++src) {
    if (!spikes[src]) continue;
    for (typename SparseWeights<Scalar>::InnerIterator it(weights, src); it; ++it) {
      if (it.row() == src) continue;
      arrivals[it.row()] += it.value();
    }
  }
}

namespace detail {

template <typename Scalar>
void check_finite(const PopulationState<Scalar>& s) {
  if (!s.v.allFinite() || !s.u.allFinite())
    throw NumericalFault("lif_step: non-finite membrane or synaptic state");
}

}  // namespace detail

/// In-place forward-Euler step. `injected` is the external drive arriving
/// at each neuron this step; `scratch` avoids a per-step allocation.
template <typename Scalar, typename InjectedDerived>
void lif_step_inplace(PopulationState<Scalar>& state, const Eigen::MatrixBase<InjectedDerived>& injected,
                      const SparseWeights<Scalar>& recurrent, const NeuronParams<Scalar>& params,
                      VectorX<Scalar>& scratch) {
  const Eigen::Index n = state.size();
  if (injected.size() != n || recurrent.rows() != n || recurrent.cols() != n ||
      state.u.size() != n || state.spikes.size() != n)
    throw ConfigError("lif_step: state, injected drive and weights disagree on population size");

  scratch = injected;
  accumulate_recurrent(recurrent, state.spikes, scratch);

  const Scalar u_decay = params.synapse_decay();
  const Scalar v_decay = params.membrane_decay();
  for (Eigen::Index i = 0; i < n; ++i) {
    state.u[i] = state.u[i] * u_decay + scratch[i] / params.tau_u;
    Scalar v = state.v[i] * v_decay + state.u[i] * params.dt;
    const bool fired = v >= params.theta;
    if (fired) v -= params.theta;
    state.v[i] = v;
    state.spikes[i] = fired ? 1 : 0;
  }
  detail::check_finite(state);
}

/// One simulation step of the population; returns the next state.
template <typename Scalar, typename InjectedDerived>
PopulationState<Scalar> lif_step(const PopulationState<Scalar>& state,
                                 const Eigen::MatrixBase<InjectedDerived>& injected,
                                 const SparseWeights<Scalar>& recurrent,
                                 const NeuronParams<Scalar>& params) {
  state.check_shape();
  detail::check_finite(state);
  PopulationState<Scalar> next = state;
  VectorX<Scalar> scratch;
  lif_step_inplace(next, injected, recurrent, params, scratch);
  return next;
}

}  // namespace lsm
