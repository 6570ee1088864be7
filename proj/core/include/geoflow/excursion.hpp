#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "geoflow/chain.hpp"

namespace geoflow {

struct Excursion {
  std::uint32_t ray = 0;
  /// Peak level; for an incomplete excursion, the level reached so far.
  std::int64_t height = 0;
  /// Path index of the RayUp(ray,1) step that opens the excursion.
  std::int64_t start_time = 0;
  /// Compact steps since the previous excursion closed.
  std::int64_t gap_before = 0;
  /// Steps spent in the excursion: 2*height when complete.
  std::int64_t steps = 0;
  bool complete = true;

  bool operator==(const Excursion&) const = default;
};

struct ExcursionTrace {
  std::vector<Excursion> excursions;
  std::int64_t total_time = 0;
  /// Ray steps before the first excursion when a path starts mid-ray.
  std::int64_t lead_in = 0;
  /// Compact steps after the last excursion.
  std::int64_t trailing = 0;

  bool operator==(const ExcursionTrace&) const = default;
};

/// Splits a chain trajectory into excursions. An excursion opens on
/// RayUp(r,1) and closes on RayDown(r,1); a path that ends inside a ray leaves
/// a final excursion flagged incomplete. Throws Error(InadmissiblePath).
ExcursionTrace decompose(std::span<const ChainState> path, const QuotientModel& model);

/// Highest level of the tent profile min(t, 2a - t) over t in [0, s]: min(s, a).
std::int64_t height_under_time_cap(std::int64_t a, std::int64_t s);

/// Expected duration 2a of one excursion: 2 e^{2 delta} / (e^{2 delta} - q) = 2 / (1 - rho).
double expected_excursion_time(int q, double delta);
template <Scalar T>
T expected_excursion_time(const T& rho) {
  return T(2) / (T(1) - rho);
}

/// Mean number of compact steps between consecutive excursions, weighted by
/// the stationary frequency of the ray just left. Zero for pure-ray and point
/// models. Throws Error(SingularCompactBlock) if some core vertex can never
/// exit, Error(NotIrreducible) if the ray-to-ray cycle chain is reducible.
Rational c_gamma_exact(const QuotientModel& model);

struct CGammaReport {
  std::optional<double> exact;
  double estimate = 0.0;
  double stderr_ = 0.0;
  std::int64_t n_cycles = 0;
};

/// Sample mean and standard error of observed compact gaps, alongside the
/// exact value when it is computable.
CGammaReport make_c_gamma_report(const QuotientModel& model, std::span<const std::int64_t> gaps);

/// CSV rows `trial,n,ray,a_n,t_n,gap,complete` (header written by the caller).
void write_trace_rows(std::ostream& out, std::int64_t trial, const ExcursionTrace& trace, const QuotientModel& model);

}  // namespace geoflow
