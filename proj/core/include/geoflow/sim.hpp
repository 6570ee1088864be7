#pragma once

// Monte Carlo sampling of excursion heights and of maximal heights reached by
// the coded geodesic, either by stepping the chain or by drawing excursion
// heights directly.

#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "geoflow/excursion.hpp"
#include "geoflow/rng.hpp"

namespace geoflow {

enum class Sampler { Walk, Direct };

const char* to_string(Sampler s);
Sampler parse_sampler(std::string_view name);

/// Maximal height over the first k excursions.
struct FixedCount {
  std::int64_t k = 0;
};
/// Maximal level over time steps 0..floor(T)-1.
struct FixedTime {
  double T = 0.0;
};
using Horizon = std::variant<FixedCount, FixedTime>;

/// 1 + floor(ln(1-u) / ln rho); P(a > n) = rho^n.
std::int64_t height_from_uniform(double u, double log_rho);
std::int64_t sample_height(RandomStream& stream, double rho);

struct TrajectoryOutcome {
  std::int64_t h = 0;
  /// Filled only when traces are requested.
  std::optional<ExcursionTrace> trace;
};

/// Samples trajectories of one model. Both samplers consume the random stream
/// identically: one uniform per excursion for its height, one per routing
/// decision that has more than one option, and one for the starting ray when
/// there is more than one ray. For equal streams they return equal outcomes.
class TrajectorySampler {
 public:
  explicit TrajectorySampler(const QuotientModel& model);

  const QuotientModel& model() const { return model_; }
  double rho() const { return rho_; }

  TrajectoryOutcome run(RandomStream& stream, const Horizon& horizon, Sampler sampler, bool record_trace) const;
  /// Walk from RayDown(ray,1) through the core to the next RayUp(r',1);
  /// returns the number of compact steps and stores r' in next_ray.
  std::int64_t sample_gap(RandomStream& stream, std::uint32_t ray, std::uint32_t& next_ray) const;
  std::uint32_t sample_start_ray(RandomStream& stream) const;

 private:
  struct Route {
    std::vector<ChainState> to;
    std::vector<double> cumulative;
  };
  static const ChainState& choose(const Route& route, RandomStream& stream);
  const Route& route_from(const ChainState& s) const;

  TrajectoryOutcome walk(RandomStream& stream, const Horizon& horizon, bool record_trace) const;
  TrajectoryOutcome direct(RandomStream& stream, const Horizon& horizon, bool record_trace) const;

  QuotientModel model_;
  double rho_;
  double log_rho_;
  Route start_;
  std::vector<Route> ray_exit_;   // indexed by ray, from RayDown(r,1)
  std::vector<Route> compact_;    // indexed by compact slot
};

TrajectoryOutcome sample_trajectory(const QuotientModel& model, const Horizon& horizon, std::uint64_t seed,
                                    Sampler sampler = Sampler::Direct, bool record_trace = false);

struct RunConfig {
  QuotientModel model;
  Horizon horizon = FixedCount{1};
  std::int64_t trials = 0;
  std::uint64_t master_seed = 0;
  Sampler sampler = Sampler::Direct;
  bool record_traces = false;
  int workers = 1;
  /// Reference level N; with ys, the summary reports P(h <= floor(N + y)).
  std::optional<double> level;
  std::vector<double> ys;
};

struct CdfPoint {
  double y = 0.0;
  std::int64_t threshold = 0;
  double empirical = 0.0;
};

struct MonteCarloResult {
  std::vector<std::int64_t> h;
  std::vector<ExcursionTrace> traces;
  std::vector<CdfPoint> summary;
};

/// Throws Error(InvalidArgument) for trials <= 0, workers <= 0, or an
/// invalid horizon. Output is independent of the worker count.
MonteCarloResult run_monte_carlo(const RunConfig& config);

/// floor(N + y), tolerant of round-off just below an integer.
std::int64_t level_threshold(double n, double y);
std::vector<CdfPoint> empirical_cdf(std::span<const std::int64_t> samples, double level, std::span<const double> ys);

/// Gap statistics over `cycles` consecutive ray-to-ray passages of one walk.
CGammaReport estimate_c_gamma(const QuotientModel& model, std::int64_t cycles, std::uint64_t seed);

}  // namespace geoflow
