#include "geoflow/sim.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "geoflow/measure.hpp"

namespace geoflow {

std::uint64_t splitmix64(std::uint64_t x) {
  std::uint64_t z = x + 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

const char* to_string(Sampler s) { return s == Sampler::Walk ? "walk" : "direct"; }

Sampler parse_sampler(std::string_view name) {
  if (name == "walk") return Sampler::Walk;
  if (name == "direct") return Sampler::Direct;
  throw Error(ErrorCode::InvalidArgument, "unknown sampler '" + std::string(name) + "' (expected walk or direct)");
}

std::int64_t height_from_uniform(double u, double log_rho) {
  return 1 + static_cast<std::int64_t>(std::floor(std::log1p(-u) / log_rho));
}

std::int64_t sample_height(RandomStream& stream, double rho) {
  if (!(rho > 0.0 && rho < 1.0)) throw Error(ErrorCode::InvalidArgument, "rho must lie in (0, 1)");
  return height_from_uniform(stream.uniform(), std::log(rho));
}

namespace {

std::int64_t horizon_steps(const FixedTime& ft) { return static_cast<std::int64_t>(std::floor(ft.T)); }

void check_horizon(const Horizon& horizon) {
  if (const auto* fc = std::get_if<FixedCount>(&horizon)) {
    if (fc->k < 0) throw Error(ErrorCode::InvalidArgument, "k must be >= 0");
  } else {
    const double t = std::get<FixedTime>(horizon).T;
    if (!(t >= 0.0) || !std::isfinite(t)) throw Error(ErrorCode::InvalidArgument, "T must be a finite value >= 0");
  }
}

}  // namespace

TrajectorySampler::TrajectorySampler(const QuotientModel& model) : model_(model) {
  const Chain<double> chain(model_);
  rho_ = chain.rho();
  log_rho_ = std::log(rho_);

  auto make_route = [](const std::vector<Transition<double>>& next) {
    Route route;
    double acc = 0.0;
    for (const auto& t : next) {
      acc += t.prob;
      route.to.push_back(t.to);
      route.cumulative.push_back(acc);
    }
    for (auto& c : route.cumulative) c /= acc;
    return route;
  };

  const auto pi = stationary_distribution(chain);
  std::vector<Transition<double>> starts;
  for (const auto& tail : pi.tail_law) starts.push_back({ChainState::up(tail.ray, 1), tail.level_one_mass});
  start_ = make_route(starts);

  for (std::uint32_t r = 0; r < model_.rays.size(); ++r) ray_exit_.push_back(make_route(chain.successors(ChainState::down(r, 1))));
  const auto n_core = model_.mode == CoreMode::Matrix ? model_.core_vertices().size() : 0;
  compact_.resize(n_core);
  for (auto v : chain.compact_states()) compact_[v] = make_route(chain.successors(ChainState::compact(v)));
}

const ChainState& TrajectorySampler::choose(const Route& route, RandomStream& stream) {
  if (route.to.size() == 1) return route.to.front();
  const double u = stream.uniform();
  for (std::size_t i = 0; i + 1 < route.to.size(); ++i) {
    if (u < route.cumulative[i]) return route.to[i];
  }
  return route.to.back();
}

const TrajectorySampler::Route& TrajectorySampler::route_from(const ChainState& s) const {
  return s.kind == EdgeKind::Compact ? compact_[s.vertex] : ray_exit_[s.ray];
}

std::uint32_t TrajectorySampler::sample_start_ray(RandomStream& stream) const { return choose(start_, stream).ray; }

std::int64_t TrajectorySampler::sample_gap(RandomStream& stream, std::uint32_t ray, std::uint32_t& next_ray) const {
  ChainState cur = ChainState::down(ray, 1);
  std::int64_t gap = 0;
  while (true) {
    const ChainState& nxt = choose(route_from(cur), stream);
    if (nxt.kind == EdgeKind::RayUp) {
      next_ray = nxt.ray;
      return gap;
    }
    ++gap;
    cur = nxt;
  }
}

TrajectoryOutcome TrajectorySampler::run(RandomStream& stream, const Horizon& horizon, Sampler sampler,
                                         bool record_trace) const {
  check_horizon(horizon);
  return sampler == Sampler::Walk ? walk(stream, horizon, record_trace) : direct(stream, horizon, record_trace);
}

TrajectoryOutcome TrajectorySampler::walk(RandomStream& stream, const Horizon& horizon, bool record_trace) const {
  const auto* fc = std::get_if<FixedCount>(&horizon);
  const std::int64_t limit = fc ? -1 : horizon_steps(std::get<FixedTime>(horizon));
  TrajectoryOutcome out;
  std::vector<ChainState> path;
  if (fc && fc->k == 0) {
    if (record_trace) out.trace = ExcursionTrace{};
    return out;
  }

  ChainState s = choose(start_, stream);
  std::int64_t t = 0;
  std::int64_t completed = 0;
  double x = 0.0;  // ascend from level i iff floor(x) >= i
  while (true) {
    if (limit >= 0 && t >= limit) break;
    if (s.kind == EdgeKind::RayUp && s.level == 1) x = std::log1p(-stream.uniform()) / log_rho_;
    if (record_trace) path.push_back(s);
    out.h = std::max<std::int64_t>(out.h, s.terminus_height());
    if (s.kind == EdgeKind::RayDown && s.level == 1) {
      ++completed;
      if (fc && completed == fc->k) break;
    }
    ++t;
    if (limit >= 0 && t >= limit) break;
    switch (s.kind) {
      case EdgeKind::RayUp:
        s = std::floor(x) >= static_cast<double>(s.level) ? ChainState::up(s.ray, s.level + 1)
                                                          : ChainState::down(s.ray, s.level);
        break;
      case EdgeKind::RayDown:
        s = s.level > 1 ? ChainState::down(s.ray, s.level - 1) : choose(ray_exit_[s.ray], stream);
        break;
      case EdgeKind::Compact:
        s = choose(compact_[s.vertex], stream);
        break;
    }
  }
  if (record_trace) out.trace = decompose(path, model_);
  return out;
}

TrajectoryOutcome TrajectorySampler::direct(RandomStream& stream, const Horizon& horizon, bool record_trace) const {
  const auto* fc = std::get_if<FixedCount>(&horizon);
  const std::int64_t limit = fc ? -1 : horizon_steps(std::get<FixedTime>(horizon));
  TrajectoryOutcome out;
  ExcursionTrace trace;
  if (fc && fc->k == 0) {
    if (record_trace) out.trace = trace;
    return out;
  }

  std::uint32_t ray = choose(start_, stream).ray;
  std::int64_t t = 0;
  std::int64_t completed = 0;
  std::int64_t gap = 0;
  bool finished = false;
  while (!finished) {
    if (limit >= 0 && t >= limit) {
      trace.trailing = gap;
      break;
    }
    const std::int64_t a = height_from_uniform(stream.uniform(), log_rho_);
    if (limit >= 0 && t + 2 * a > limit) {
      const std::int64_t s = limit - t;
      const std::int64_t capped = height_under_time_cap(a, s);
      out.h = std::max(out.h, capped);
      if (record_trace) trace.excursions.push_back(Excursion{ray, capped, t, gap, s, false});
      t = limit;
      break;
    }
    out.h = std::max(out.h, a);
    if (record_trace) trace.excursions.push_back(Excursion{ray, a, t, gap, 2 * a, true});
    t += 2 * a;
    gap = 0;
    if (fc && ++completed == fc->k) break;

    ChainState cur = ChainState::down(ray, 1);
    while (true) {
      if (limit >= 0 && t >= limit) {
        trace.trailing = gap;
        finished = true;
        break;
      }
      const ChainState& nxt = choose(route_from(cur), stream);
      if (nxt.kind == EdgeKind::RayUp) {
        ray = nxt.ray;
        break;
      }
      ++gap;
      ++t;
      cur = nxt;
    }
  }
  if (record_trace) {
    trace.total_time = t;
    out.trace = std::move(trace);
  }
  return out;
}

TrajectoryOutcome sample_trajectory(const QuotientModel& model, const Horizon& horizon, std::uint64_t seed,
                                    Sampler sampler, bool record_trace) {
  RandomStream stream(seed);
  return TrajectorySampler(model).run(stream, horizon, sampler, record_trace);
}

std::int64_t level_threshold(double n, double y) {
  return static_cast<std::int64_t>(std::floor(n + y + 1e-9));
}

std::vector<CdfPoint> empirical_cdf(std::span<const std::int64_t> samples, double level, std::span<const double> ys) {
  if (samples.empty()) throw Error(ErrorCode::EmptySamples, "no samples to summarize");
  std::vector<std::int64_t> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<CdfPoint> out;
  for (double y : ys) {
    const std::int64_t m = level_threshold(level, y);
    const auto count = std::upper_bound(sorted.begin(), sorted.end(), m) - sorted.begin();
    out.push_back({y, m, static_cast<double>(count) / static_cast<double>(sorted.size())});
  }
  return out;
}

MonteCarloResult run_monte_carlo(const RunConfig& config) {
  if (config.trials <= 0) throw Error(ErrorCode::InvalidArgument, "trials must be >= 1");
  if (config.workers <= 0) throw Error(ErrorCode::InvalidArgument, "workers must be >= 1");
  check_horizon(config.horizon);
  const TrajectorySampler sampler(config.model);

  MonteCarloResult result;
  const auto n = static_cast<std::size_t>(config.trials);
  result.h.resize(n);
  if (config.record_traces) result.traces.resize(n);

  auto work = [&](std::size_t first, std::size_t stride) {
    for (std::size_t i = first; i < n; i += stride) {
      RandomStream stream(trial_seed(config.master_seed, i));
      auto outcome = sampler.run(stream, config.horizon, config.sampler, config.record_traces);
      result.h[i] = outcome.h;
      if (config.record_traces) result.traces[i] = std::move(*outcome.trace);
    }
  };
  const auto workers = static_cast<std::size_t>(std::min<std::int64_t>(config.workers, config.trials));
  if (workers == 1) {
    work(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w, workers);
  }

  if (config.level && !config.ys.empty()) result.summary = empirical_cdf(result.h, *config.level, config.ys);
  return result;
}

CGammaReport estimate_c_gamma(const QuotientModel& model, std::int64_t cycles, std::uint64_t seed) {
  if (cycles <= 0) throw Error(ErrorCode::InvalidArgument, "cycles must be >= 1");
  const TrajectorySampler sampler(model);
  RandomStream stream(trial_seed(seed, 0));
  std::uint32_t ray = sampler.sample_start_ray(stream);
  std::vector<std::int64_t> gaps;
  gaps.reserve(static_cast<std::size_t>(cycles));
  for (std::int64_t i = 0; i < cycles; ++i) gaps.push_back(sampler.sample_gap(stream, ray, ray));
  return make_c_gamma_report(model, gaps);
}

}  // namespace geoflow
