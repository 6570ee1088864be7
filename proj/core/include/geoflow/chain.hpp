#pragma once

// Countable-state Markov chain of the discrete geodesic flow.
//
// States are oriented quotient edges: RayUp(r,i), RayDown(r,i) and, in matrix
// mode, Compact(v). Along a ray the law is parametric in rho = q e^{-2 delta}:
//
//   RayUp(r,i)   -> RayUp(r,i+1)   with rho
//                -> RayDown(r,i)   with 1 - rho
//   RayDown(r,i) -> RayDown(r,i-1) with 1        (i >= 2)
//
// RayDown(r,1) lands on the core and is routed by the compact block. The
// finite block is the compact states plus the level-1 states of every ray;
// everything above level 1 is handled through closed geometric forms.

#include <cstdint>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "geoflow/graph.hpp"
#include "geoflow/numeric.hpp"

namespace geoflow {

using ChainState = Edge;

template <Scalar T>
struct Transition {
  ChainState to;
  T prob;
};

template <Scalar T>
class Chain {
 public:
  /// The Rational instantiation requires a lattice model.
  explicit Chain(QuotientModel model);

  const QuotientModel& model() const { return model_; }
  const T& rho() const { return rho_; }
  std::size_t ray_count() const { return model_.rays.size(); }

  /// Core vertex indices that exist as Compact states.
  const std::vector<std::uint32_t>& compact_states() const { return occupiable_; }
  /// Compact states followed by RayUp(r,1), RayDown(r,1) for each ray.
  std::vector<ChainState> finite_block() const;
  bool in_finite_block(const ChainState& s) const;
  bool contains(const ChainState& s) const;

  /// Outgoing transitions with positive probability. Throws Error(UnknownState).
  std::vector<Transition<T>> successors(const ChainState& s) const;
  /// Incoming transitions with positive probability; `prob` is P(pred -> s).
  std::vector<Transition<T>> predecessors(const ChainState& s) const;
  T transition_prob(const ChainState& s, const ChainState& t) const;

  /// Finite aggregated matrix over (compact states, rays). Row r of the ray
  /// block is the routing of RayDown(r,1); column r is RayUp(r,1).
  const Matrix<T>& reduced() const { return reduced_; }
  std::size_t reduced_index(const ChainState& s) const;

 private:
  QuotientModel model_;
  T rho_;
  std::vector<std::uint32_t> occupiable_;
  std::vector<std::int64_t> compact_slot_;  // core vertex -> index in occupiable_, or -1
  Matrix<T> reduced_;
};

extern template class Chain<double>;
extern template class Chain<Rational>;

Chain<double> build_chain(const QuotientModel& model);
/// Throws Error(NotLattice) unless delta = ln q.
Chain<Rational> build_exact_chain(const QuotientModel& model);

template <Scalar T>
struct TailLaw {
  std::uint32_t ray = 0;
  T level_one_mass;  // pi(RayUp(r,1)) = pi(RayDown(r,1))
  T ratio;           // mass at level i = level_one_mass * ratio^(i-1)
};

template <Scalar T>
struct StationaryDistribution {
  std::vector<std::pair<ChainState, T>> finite_part;
  std::vector<TailLaw<T>> tail_law;
  /// max |pi P - pi| over the finite block and five sampled tail levels.
  T residual;

  T mass(const ChainState& s) const;
  /// Finite part plus the analytic tail sums.
  T total_mass() const;
};

/// Solves pi P = pi on the finite block with geometric tails imposed
/// analytically. Throws Error(NotIrreducible).
template <Scalar T>
StationaryDistribution<T> stationary_distribution(const Chain<T>& chain);

template <Scalar T>
struct ReturnDistribution {
  ChainState from;
  ChainState to;
  /// f[n] = P(first visit to `to` at step n | start at `from`), f[0] = 0.
  std::vector<T> f;
  /// P(first visit after n_max) = sum of f beyond n_max.
  T tail_bound;
  /// E[T 1{T > n_max}], evaluated in closed form; present when `to` is in the finite block.
  std::optional<T> mean_tail;

  T partial_mean() const;
  T partial_sum() const;
};

/// Taboo dynamic programme; no truncation is needed since a path of n steps
/// cannot climb more than n levels.
template <Scalar T>
ReturnDistribution<T> first_passage_distribution(const Chain<T>& chain, const ChainState& from, const ChainState& to,
                                                 int n_max);
template <Scalar T>
ReturnDistribution<T> first_return_distribution(const Chain<T>& chain, const ChainState& s, int n_max) {
  return first_passage_distribution(chain, s, s, n_max);
}

template <Scalar T>
std::map<ChainState, T> n_step_distribution(const Chain<T>& chain, const ChainState& s, int n);
template <Scalar T>
T n_step_prob(const Chain<T>& chain, const ChainState& s, const ChainState& t, int n);

/// Average of p^(n+j)(s,t) over j = 0..period-1; converges to pi(t) for
/// periodic chains where p^(n) itself does not.
template <Scalar T>
T cesaro_average(const Chain<T>& chain, const ChainState& s, const ChainState& t, int n, int period);

/// Expected hitting time of `target` (a finite-block state) from `from`,
/// counting at least one step. Exact closed forms above level 1.
template <Scalar T>
T expected_hitting_time(const Chain<T>& chain, const ChainState& from, const ChainState& target);
template <Scalar T>
T expected_return_time(const Chain<T>& chain, const ChainState& s) {
  return expected_hitting_time(chain, s, s);
}

template <Scalar T>
struct Classification {
  bool irreducible = false;
  int period = 0;
  bool positive_recurrent = false;
  std::vector<std::pair<ChainState, T>> mean_return;
};

template <Scalar T>
Classification<T> classify(const Chain<T>& chain);

}  // namespace geoflow
