#include "geoflow/excursion.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "geoflow/measure.hpp"

namespace geoflow {

namespace {

// Admissibility of consecutive symbols; core routing supports are cached.
class SuccessorCheck {
 public:
  explicit SuccessorCheck(const QuotientModel& model) : model_(model) {}

  bool allowed(const ChainState& from, const ChainState& to) {
    if (!is_valid_edge(model_, from) || !is_valid_edge(model_, to)) return false;
    const bool core_move = from.kind == EdgeKind::Compact || (from.kind == EdgeKind::RayDown && from.level == 1);
    if (!core_move) {
      const auto next = admissible_successors(model_, from);
      return std::find(next.begin(), next.end(), to) != next.end();
    }
    auto it = cache_.find(from);
    if (it == cache_.end()) {
      const auto next = admissible_successors(model_, from);
      it = cache_.emplace(from, std::set<ChainState>(next.begin(), next.end())).first;
    }
    return it->second.count(to) > 0;
  }

 private:
  const QuotientModel& model_;
  std::map<ChainState, std::set<ChainState>> cache_;
};

}  // namespace

ExcursionTrace decompose(std::span<const ChainState> path, const QuotientModel& model) {
  ExcursionTrace trace;
  trace.total_time = static_cast<std::int64_t>(path.size());
  SuccessorCheck check(model);
  for (std::size_t t = 0; t < path.size(); ++t) {
    if (!is_valid_edge(model, path[t])) {
      throw Error(ErrorCode::InadmissiblePath, "path step " + std::to_string(t) + " is not a quotient edge");
    }
    if (t > 0 && !check.allowed(path[t - 1], path[t])) {
      throw Error(ErrorCode::InadmissiblePath, "path step " + std::to_string(t) + " (" + edge_name(model, path[t]) +
                                                   ") cannot follow " + edge_name(model, path[t - 1]));
    }
  }

  std::optional<Excursion> open;
  std::int64_t compact_run = 0;
  bool seen_excursion = false;
  for (std::size_t i = 0; i < path.size(); ++i) {
    const ChainState& s = path[i];
    const auto t = static_cast<std::int64_t>(i);
    if (open) {
      ++open->steps;
      open->height = std::max<std::int64_t>(open->height, s.terminus_height());
      if (s.kind == EdgeKind::RayDown && s.level == 1) {
        trace.excursions.push_back(*open);
        open.reset();
      }
      continue;
    }
    if (s.kind == EdgeKind::RayUp && s.level == 1) {
      open = Excursion{s.ray, 1, t, compact_run, 1, true};
      compact_run = 0;
      seen_excursion = true;
    } else if (s.kind == EdgeKind::Compact) {
      ++compact_run;
    } else if (!seen_excursion && compact_run == 0) {
      ++trace.lead_in;
    } else {
      throw Error(ErrorCode::InadmissiblePath, "ray step outside an excursion at path index " + std::to_string(i));
    }
  }
  if (open) {
    open->complete = false;
    trace.excursions.push_back(*open);
  }
  trace.trailing = compact_run;
  return trace;
}

std::int64_t height_under_time_cap(std::int64_t a, std::int64_t s) {
  if (a < 1) throw Error(ErrorCode::InvalidArgument, "excursion height must be >= 1");
  if (s < 0) throw Error(ErrorCode::InvalidArgument, "elapsed time must be >= 0");
  return std::min(s, a);
}

double expected_excursion_time(int q, double delta) {
  require_delta(q, delta);
  return expected_excursion_time(ascent_ratio(q, delta));
}

Rational c_gamma_exact(const QuotientModel& model) {
  if (model.mode != CoreMode::Matrix) return Rational(0);
  const CompactRouting routing = resolve_compact(model);
  const std::size_t n = routing.vertices.size();
  const std::size_t k = model.rays.size();

  // Every vertex must reach an exit, otherwise I - Q is singular.
  std::vector<bool> exits(n, false);
  for (std::size_t v = 0; v < n; ++v) {
    for (std::size_t r = 0; r < k; ++r) exits[v] = exits[v] || routing.exit(v, r) > 0;
  }
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t v = 0; v < n; ++v) {
      if (exits[v]) continue;
      for (std::size_t w = 0; w < n; ++w) {
        if (routing.internal(v, w) > 0 && exits[w]) {
          exits[v] = true;
          changed = true;
          break;
        }
      }
    }
  }
  for (std::size_t v = 0; v < n; ++v) {
    if (!exits[v]) {
      throw Error(ErrorCode::SingularCompactBlock,
                  "compact vertex '" + routing.vertices[v] + "' cannot leave the compact block");
    }
  }

  Matrix<Rational> i_minus_q(n, n);
  for (std::size_t v = 0; v < n; ++v) {
    for (std::size_t w = 0; w < n; ++w) i_minus_q(v, w) = (v == w ? Rational(1) : Rational(0)) - routing.internal(v, w);
  }
  // Expected internal steps before exiting, from each vertex: (I-Q)^{-1} Q 1.
  std::vector<Rational> q_one(n);
  for (std::size_t v = 0; v < n; ++v) {
    for (std::size_t w = 0; w < n; ++w) q_one[v] += routing.internal(v, w);
  }
  const auto steps = solve_linear(i_minus_q, q_one);

  // Embedded ray-to-ray chain P(r -> r') = entry_r (I-Q)^{-1} X e_{r'}.
  std::vector<std::vector<Rational>> absorb(k);
  for (std::size_t r2 = 0; r2 < k; ++r2) {
    std::vector<Rational> col(n);
    for (std::size_t v = 0; v < n; ++v) col[v] = routing.exit(v, r2);
    absorb[r2] = solve_linear(i_minus_q, col);
  }
  Matrix<Rational> cycle(k, k);
  std::vector<Rational> sojourn(k);
  for (std::size_t r = 0; r < k; ++r) {
    for (std::size_t v = 0; v < n; ++v) {
      const Rational& w = routing.entry(r, v);
      if (w == 0) continue;
      sojourn[r] += w * steps[v];
      for (std::size_t r2 = 0; r2 < k; ++r2) cycle(r, r2) += w * absorb[r2][v];
    }
  }

  Matrix<Rational> a(k, k);
  std::vector<Rational> b(k);
  for (std::size_t i = 0; i + 1 < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) a(i, j) = cycle(j, i);
    a(i, i) -= 1;
  }
  for (std::size_t j = 0; j < k; ++j) a(k - 1, j) = 1;
  b[k - 1] = 1;
  std::vector<Rational> nu;
  try {
    nu = solve_linear(std::move(a), std::move(b));
  } catch (const Error&) {
    throw Error(ErrorCode::NotIrreducible, "ray-to-ray cycle chain has no unique stationary law");
  }
  Rational c(0);
  for (std::size_t r = 0; r < k; ++r) c += nu[r] * sojourn[r];
  return c;
}

CGammaReport make_c_gamma_report(const QuotientModel& model, std::span<const std::int64_t> gaps) {
  CGammaReport report;
  try {
    report.exact = to_double(c_gamma_exact(model));
  } catch (const Error&) {
    report.exact.reset();
  }
  report.n_cycles = static_cast<std::int64_t>(gaps.size());
  if (gaps.empty()) return report;
  double mean = 0.0;
  for (auto g : gaps) mean += static_cast<double>(g);
  mean /= static_cast<double>(gaps.size());
  double ss = 0.0;
  for (auto g : gaps) ss += (static_cast<double>(g) - mean) * (static_cast<double>(g) - mean);
  report.estimate = mean;
  report.stderr_ = gaps.size() > 1 ? std::sqrt(ss / static_cast<double>(gaps.size() - 1) / static_cast<double>(gaps.size())) : 0.0;
  return report;
}

void write_trace_rows(std::ostream& out, std::int64_t trial, const ExcursionTrace& trace, const QuotientModel& model) {
  std::int64_t n = 0;
  for (const auto& e : trace.excursions) {
    out << trial << ',' << ++n << ',' << model.rays.at(e.ray).id << ',' << e.height << ',' << e.start_time << ','
        << e.gap_before << ',' << (e.complete ? 1 : 0) << '\n';
  }
}

}  // namespace geoflow
