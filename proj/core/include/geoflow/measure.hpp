#pragma once

// Explicit measures on the regular tree and on the coding shift: the
// visitation measure of a basepoint, conformal shadow recursions along a cusp
// ray, the excursion-height law, and the Markov cylinder measure lambda.

#include <span>
#include <utility>
#include <vector>

#include "geoflow/chain.hpp"

namespace geoflow {

/// Mass of the set of rays from x through a fixed vertex at distance d:
/// 1 / ((q+1) q^(d-1)). Throws Error(InvalidArgument) for d < 1.
template <Scalar T>
T ball_shadow(int q, int d);

/// Throws Error(DeltaTooSmall) unless delta > (1/2) ln q.
void require_delta(int q, double delta);

/// q e^{-2 delta}.
double ascent_ratio(int q, double delta);

/// P(excursion height > N) = rho^N.
double excursion_height_tail(int q, double delta, int n);
template <Scalar T>
T excursion_height_tail(const T& rho, int n) {
  if (n < 0) throw Error(ErrorCode::InvalidArgument, "N must be >= 0");
  return pow_int(rho, n);
}

/// One step of the conformal recursion alpha_{j+1} = q alpha_j e^{-delta}.
double conformal_alpha_step(double alpha, int q, double delta);

/// Ratio of the shadow N levels further up the ray to the current one: rho^N.
double shadow_ratio(int q, double delta, int n);

/// Shadow masses along a cusp ray. alpha(j) is the mass, seen from the level-j
/// vertex, of the shadow of its descending edge; alpha(1) is fixed so that the
/// level-1 vertex sees total mass 1: q alpha_1 + (q-1) alpha_1 rho/(1-rho) = 1.
struct ShadowLaw {
  int q = 2;
  double delta = 0.0;
  double alpha1 = 0.0;

  static ShadowLaw normalized(int q, double delta);

  double rho() const { return ascent_ratio(q, delta); }
  double alpha(int j) const;
  /// Mass, seen from level j, of the shadow of the ascending edge at level j+N:
  /// (q-1) alpha_j sum_{n>=N} rho^n.
  double up_shadow(int j, int n) const;
  /// Total boundary mass seen from level j.
  double vertex_mass(int j) const;
};

template <Scalar T>
struct CylinderMeasure {
  std::vector<ChainState> path;
  T value;
  bool admissible = false;
};

/// lambda on cylinders of the coding shift for ray and star models, with
/// stabilizer orders taken as 1 and the total mass normalized to 1:
/// lambda([e0..e_{n-1}]) = pi(e0) * prod P(e_j, e_{j+1}).
template <Scalar T>
class CylinderSpace {
 public:
  /// Throws Error(UnsupportedMode) for compact matrix models.
  explicit CylinderSpace(const QuotientModel& model);

  const Chain<T>& chain() const { return chain_; }
  const StationaryDistribution<T>& stationary() const { return stationary_; }

  CylinderMeasure<T> lambda(std::span<const ChainState> path) const;
  /// |sum_pred lambda([e, path]) - lambda(path)| and |sum_succ lambda([path, e]) - lambda(path)|.
  std::pair<T, T> markov_residuals(std::span<const ChainState> path) const;

 private:
  Chain<T> chain_;
  StationaryDistribution<T> stationary_;
};

extern template class CylinderSpace<double>;
extern template class CylinderSpace<Rational>;

CylinderMeasure<double> lambda_cylinder(const QuotientModel& model, std::span<const ChainState> path);
std::pair<double, double> check_markov_property(const QuotientModel& model, std::span<const ChainState> path);

}  // namespace geoflow
