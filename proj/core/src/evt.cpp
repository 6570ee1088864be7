#include "geoflow/evt.hpp"

#include <algorithm>
#include <map>

#include "geoflow/excursion.hpp"
#include "geoflow/measure.hpp"
#include "geoflow/sim.hpp"

namespace geoflow {

LimitParams LimitParams::from_model(const QuotientModel& model) {
  return LimitParams{model.q, model.delta, to_double(c_gamma_exact(model))};
}

double galambos_cdf(int q, double delta, double n, std::int64_t k) {
  require_delta(q, delta);
  if (n < 0 || k < 0) throw Error(ErrorCode::InvalidArgument, "N and k must be >= 0");
  const double tail = std::pow(ascent_ratio(q, delta), n);
  if (tail >= 1.0) return k == 0 ? 1.0 : 0.0;
  return std::exp(static_cast<double>(k) * std::log1p(-tail));
}

template <Scalar T>
T max_height_exact(const Chain<T>& chain, std::int64_t k, int n) {
  const QuotientModel& model = chain.model();
  if (model.mode == CoreMode::Matrix) {
    throw Error(ErrorCode::UnsupportedMode, "exact maximal-height law needs a ray or star model");
  }
  if (k < 0 || n < 0) throw Error(ErrorCode::InvalidArgument, "N and k must be >= 0");
  if (k == 0) return T(1);
  if (n == 0) return T(0);

  const auto pi = stationary_distribution(chain);
  T weight_sum(0);
  for (const auto& tail : pi.tail_law) weight_sum += tail.level_one_mass;

  // Layer j holds the mass with j excursions completed and no level above n
  // visited. Mass only moves from layer j to j or j+1, so each layer is run to
  // exhaustion before the next one starts.
  using Layer = std::map<ChainState, T>;
  Layer layer;
  for (const auto& tail : pi.tail_law) layer[ChainState::up(tail.ray, 1)] += tail.level_one_mass / weight_sum;

  T done(0);
  for (std::int64_t j = 0; j < k; ++j) {
    Layer following;
    while (!layer.empty()) {
      Layer step;
      for (const auto& [s, m] : layer) {
        for (const auto& tr : chain.successors(s)) {
          if (tr.to.kind == EdgeKind::RayUp && tr.to.level > static_cast<std::uint32_t>(n)) continue;
          const T w = m * tr.prob;
          if (tr.to.kind == EdgeKind::RayDown && tr.to.level == 1) {
            if (j + 1 == k) {
              done += w;
            } else {
              following[tr.to] += w;
            }
          } else {
            step[tr.to] += w;
          }
        }
      }
      layer = std::move(step);
    }
    layer = std::move(following);
  }
  return done;
}

template double max_height_exact<double>(const Chain<double>&, std::int64_t, int);
template Rational max_height_exact<Rational>(const Chain<Rational>&, std::int64_t, int);

double max_height_exact(const QuotientModel& model, std::int64_t k, int n) {
  return max_height_exact(Chain<double>(model), k, n);
}

Rational max_height_exact_rational(const QuotientModel& model, std::int64_t k, int n) {
  return max_height_exact(Chain<Rational>(model), k, n);
}

double limit_cdf(int q, double delta, double y) {
  require_delta(q, delta);
  return std::exp(-std::pow(ascent_ratio(q, delta), y));
}

namespace {

double cycle_length(const LimitParams& p, double sign) {
  require_delta(p.q, p.delta);
  const double len = 2.0 / (1.0 - p.rho()) + sign * p.c_gamma;
  if (!(len > 0.0)) throw Error(ErrorCode::InvalidArgument, "mean cycle length must be positive");
  return len;
}

}  // namespace

double t_of_n(const LimitParams& params, double n) { return cycle_length(params, 1.0) * std::pow(params.rho(), -n); }

double n_of_t(const LimitParams& params, double t) {
  if (!(t > 0.0)) throw Error(ErrorCode::InvalidArgument, "T must be > 0");
  return std::log(t / cycle_length(params, 1.0)) / -std::log(params.rho());
}

double n_of_t_subtractive(const LimitParams& params, double t) {
  if (!(t > 0.0)) throw Error(ErrorCode::InvalidArgument, "T must be > 0");
  return std::log(t / cycle_length(params, -1.0)) / -std::log(params.rho());
}

double lattice_ray_level(int q, double t) {
  if (q < 2) throw Error(ErrorCode::InvalidArgument, "q must be >= 2");
  if (!(t > 0.0)) throw Error(ErrorCode::InvalidArgument, "T must be > 0");
  return std::log(t * (q - 1) / (2.0 * q)) / std::log(static_cast<double>(q));
}

EvtReport empirical_cdf_compare(std::span<const std::int64_t> samples, const LimitParams& params, double level,
                                std::span<const double> ys) {
  if (samples.empty()) throw Error(ErrorCode::EmptySamples, "no samples to compare");
  EvtReport report;
  report.params = params;
  report.level = level;
  report.n_samples = static_cast<std::int64_t>(samples.size());
  for (const auto& point : empirical_cdf(samples, level, ys)) {
    EvtRow row;
    row.y = point.y;
    row.threshold = point.threshold;
    row.empirical = point.empirical;
    row.theoretical = limit_cdf(params.q, params.delta, point.y);
    row.abs_err = std::abs(row.empirical - row.theoretical);
    report.ks_distance = std::max(report.ks_distance, row.abs_err);
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace geoflow
