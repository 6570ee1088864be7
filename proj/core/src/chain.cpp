#include "geoflow/chain.hpp"

#include <algorithm>
#include <numeric>
#include <queue>

namespace geoflow {

namespace {

template <Scalar T>
T model_rho(const QuotientModel& model) {
  if constexpr (is_exact_v<T>) {
    return model.exact_rho();
  } else {
    return model.rho();
  }
}

template <Scalar T>
Matrix<T> convert(const Matrix<Rational>& m) {
  Matrix<T> out(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) out(r, c) = from_rational<T>(m(r, c));
  }
  return out;
}

// Strong connectivity of the support of a square matrix.
template <Scalar T>
bool strongly_connected(const Matrix<T>& m) {
  const std::size_t n = m.rows();
  if (n == 0) return false;
  const auto reach = [&](bool transpose) {
    std::vector<bool> seen(n, false);
    std::vector<std::size_t> stack{0};
    seen[0] = true;
    std::size_t count = 1;
    while (!stack.empty()) {
      const auto v = stack.back();
      stack.pop_back();
      for (std::size_t w = 0; w < n; ++w) {
        const T& p = transpose ? m(w, v) : m(v, w);
        if (p > 0 && !seen[w]) {
          seen[w] = true;
          ++count;
          stack.push_back(w);
        }
      }
    }
    return count == n;
  };
  return reach(false) && reach(true);
}

}  // namespace

template <Scalar T>
Chain<T>::Chain(QuotientModel model) : model_(std::move(model)), rho_(model_rho<T>(model_)) {
  const CompactRouting routing = resolve_compact(model_);
  occupiable_ = routing.occupiable;
  compact_slot_.assign(routing.vertices.size(), -1);
  for (std::size_t i = 0; i < occupiable_.size(); ++i) compact_slot_[occupiable_[i]] = static_cast<std::int64_t>(i);

  const Matrix<T> internal = convert<T>(routing.internal);
  const Matrix<T> exit = convert<T>(routing.exit);
  const Matrix<T> entry = convert<T>(routing.entry);
  const std::size_t n = routing.vertices.size();
  const std::size_t m = occupiable_.size();
  const std::size_t k = model_.rays.size();

  reduced_ = Matrix<T>(m + k, m + k);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) reduced_(i, j) = internal(occupiable_[i], occupiable_[j]);
    for (std::size_t r = 0; r < k; ++r) reduced_(i, m + r) = exit(occupiable_[i], r);
  }
  // RayDown(r,1) lands on a core vertex drawn from the entry law, then takes
  // one step: an internal move (to a Compact state) or an exit (to RayUp).
  for (std::size_t r = 0; r < k; ++r) {
    for (std::size_t v = 0; v < n; ++v) {
      const T& w = entry(r, v);
      if (w == 0) continue;
      for (std::size_t j = 0; j < m; ++j) reduced_(m + r, j) += w * internal(v, occupiable_[j]);
      for (std::size_t r2 = 0; r2 < k; ++r2) reduced_(m + r, m + r2) += w * exit(v, r2);
    }
  }
}

template <Scalar T>
std::vector<ChainState> Chain<T>::finite_block() const {
  std::vector<ChainState> out;
  for (auto v : occupiable_) out.push_back(ChainState::compact(v));
  for (std::uint32_t r = 0; r < ray_count(); ++r) {
    out.push_back(ChainState::up(r, 1));
    out.push_back(ChainState::down(r, 1));
  }
  return out;
}

template <Scalar T>
bool Chain<T>::contains(const ChainState& s) const {
  if (s.kind == EdgeKind::Compact) return s.vertex < compact_slot_.size() && compact_slot_[s.vertex] >= 0;
  return s.ray < ray_count() && s.level >= 1;
}

template <Scalar T>
bool Chain<T>::in_finite_block(const ChainState& s) const {
  return contains(s) && (s.kind == EdgeKind::Compact || s.level == 1);
}

template <Scalar T>
std::size_t Chain<T>::reduced_index(const ChainState& s) const {
  if (!contains(s)) throw Error(ErrorCode::UnknownState, "state is not part of the chain");
  if (s.kind == EdgeKind::Compact) return static_cast<std::size_t>(compact_slot_[s.vertex]);
  return occupiable_.size() + s.ray;
}

template <Scalar T>
std::vector<Transition<T>> Chain<T>::successors(const ChainState& s) const {
  if (!contains(s)) throw Error(ErrorCode::UnknownState, "state is not part of the chain");
  std::vector<Transition<T>> out;
  if (s.kind == EdgeKind::RayUp) {
    out.push_back({ChainState::up(s.ray, s.level + 1), rho_});
    out.push_back({ChainState::down(s.ray, s.level), T(1) - rho_});
    return out;
  }
  if (s.kind == EdgeKind::RayDown && s.level >= 2) {
    out.push_back({ChainState::down(s.ray, s.level - 1), T(1)});
    return out;
  }
  const std::size_t row = reduced_index(s);
  const std::size_t m = occupiable_.size();
  for (std::size_t j = 0; j < m; ++j) {
    if (reduced_(row, j) > 0) out.push_back({ChainState::compact(occupiable_[j]), reduced_(row, j)});
  }
  for (std::size_t r = 0; r < ray_count(); ++r) {
    if (reduced_(row, m + r) > 0) out.push_back({ChainState::up(static_cast<std::uint32_t>(r), 1), reduced_(row, m + r)});
  }
  return out;
}

template <Scalar T>
std::vector<Transition<T>> Chain<T>::predecessors(const ChainState& s) const {
  if (!contains(s)) throw Error(ErrorCode::UnknownState, "state is not part of the chain");
  std::vector<Transition<T>> out;
  if (s.kind == EdgeKind::RayUp && s.level >= 2) {
    out.push_back({ChainState::up(s.ray, s.level - 1), rho_});
    return out;
  }
  if (s.kind == EdgeKind::RayDown) {
    out.push_back({ChainState::up(s.ray, s.level), T(1) - rho_});
    out.push_back({ChainState::down(s.ray, s.level + 1), T(1)});
    return out;
  }
  const std::size_t col = reduced_index(s);
  const std::size_t m = occupiable_.size();
  for (std::size_t i = 0; i < m; ++i) {
    if (reduced_(i, col) > 0) out.push_back({ChainState::compact(occupiable_[i]), reduced_(i, col)});
  }
  for (std::size_t r = 0; r < ray_count(); ++r) {
    if (reduced_(m + r, col) > 0) out.push_back({ChainState::down(static_cast<std::uint32_t>(r), 1), reduced_(m + r, col)});
  }
  return out;
}

template <Scalar T>
T Chain<T>::transition_prob(const ChainState& s, const ChainState& t) const {
  if (!contains(t)) throw Error(ErrorCode::UnknownState, "state is not part of the chain");
  for (const auto& tr : successors(s)) {
    if (tr.to == t) return tr.prob;
  }
  return T(0);
}

template class Chain<double>;
template class Chain<Rational>;

Chain<double> build_chain(const QuotientModel& model) { return Chain<double>(model); }
Chain<Rational> build_exact_chain(const QuotientModel& model) { return Chain<Rational>(model); }

// ---------------------------------------------------------------------------
// Stationary distribution

template <Scalar T>
T StationaryDistribution<T>::mass(const ChainState& s) const {
  if (s.kind != EdgeKind::Compact) {
    for (const auto& tail : tail_law) {
      if (tail.ray == s.ray && s.level >= 1) return tail.level_one_mass * pow_int(tail.ratio, s.level - 1);
    }
    return T(0);
  }
  for (const auto& [state, p] : finite_part) {
    if (state == s) return p;
  }
  return T(0);
}

template <Scalar T>
T StationaryDistribution<T>::total_mass() const {
  T total(0);
  for (const auto& [state, p] : finite_part) {
    if (state.kind == EdgeKind::Compact) total += p;
  }
  // Up and down states of a ray carry equal mass: 2 a / (1 - rho) per ray.
  for (const auto& tail : tail_law) total += T(2) * tail.level_one_mass / (T(1) - tail.ratio);
  return total;
}

template <Scalar T>
StationaryDistribution<T> stationary_distribution(const Chain<T>& chain) {
  const Matrix<T>& m = chain.reduced();
  const std::size_t n = m.rows();
  const std::size_t n_compact = chain.compact_states().size();
  if (!strongly_connected(m)) {
    throw Error(ErrorCode::NotIrreducible, "chain is not irreducible: the compact block and rays do not communicate");
  }
  const T& rho = chain.rho();

  // Balance x = x M on the aggregated block, one equation replaced by the
  // normalization (a ray's level-1 mass a stands for 2a/(1-rho) in total).
  Matrix<T> a(n, n);
  std::vector<T> b(n, T(0));
  for (std::size_t i = 0; i + 1 < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) a(i, j) = m(j, i);
    a(i, i) -= T(1);
  }
  for (std::size_t j = 0; j < n; ++j) a(n - 1, j) = j < n_compact ? T(1) : T(2) / (T(1) - rho);
  b[n - 1] = T(1);
  const std::vector<T> x = solve_linear(std::move(a), std::move(b));

  StationaryDistribution<T> out;
  for (std::size_t i = 0; i < n_compact; ++i) {
    out.finite_part.emplace_back(ChainState::compact(chain.compact_states()[i]), x[i]);
  }
  for (std::uint32_t r = 0; r < chain.ray_count(); ++r) {
    const T& level_one = x[n_compact + r];
    out.finite_part.emplace_back(ChainState::up(r, 1), level_one);
    out.finite_part.emplace_back(ChainState::down(r, 1), level_one);
    out.tail_law.push_back(TailLaw<T>{r, level_one, rho});
  }

  // Residual of pi P = pi on the finite block and at sampled tail levels.
  std::vector<ChainState> checks = chain.finite_block();
  for (std::uint32_t r = 0; r < chain.ray_count(); ++r) {
    for (std::uint32_t level : {2u, 3u, 5u, 8u, 13u}) {
      checks.push_back(ChainState::up(r, level));
      checks.push_back(ChainState::down(r, level));
    }
  }
  T residual(0);
  for (const auto& t : checks) {
    T inflow(0);
    for (const auto& pred : chain.predecessors(t)) inflow += out.mass(pred.to) * pred.prob;
    const T diff = abs_value<T>(inflow - out.mass(t));
    if (diff > residual) residual = diff;
  }
  out.residual = residual;
  return out;
}

// ---------------------------------------------------------------------------
// Hitting times

namespace {

// Macro step out of a finite-block state: successor in the finite block,
// probability, and expected duration. RayUp(r,1) runs its whole excursion to
// RayDown(r,1): 1 + 2 E[extra levels] = 1 + 2 rho / (1 - rho) steps.
template <Scalar T>
struct MacroStep {
  ChainState to;
  T prob;
  T duration;
};

template <Scalar T>
std::vector<MacroStep<T>> macro_steps(const Chain<T>& chain, const ChainState& s) {
  std::vector<MacroStep<T>> out;
  if (s.kind == EdgeKind::RayUp) {
    const T& rho = chain.rho();
    out.push_back({ChainState::down(s.ray, 1), T(1), T(1) + T(2) * rho / (T(1) - rho)});
    return out;
  }
  for (const auto& tr : chain.successors(s)) out.push_back({tr.to, tr.prob, T(1)});
  return out;
}

// Expected hitting times of `target` from every finite-block state other than
// the target itself.
template <Scalar T>
std::map<ChainState, T> finite_hitting_times(const Chain<T>& chain, const ChainState& target) {
  if (!chain.in_finite_block(target)) {
    throw Error(ErrorCode::InvalidArgument, "hitting times are available for finite-block targets only");
  }
  std::vector<ChainState> states;
  for (const auto& s : chain.finite_block()) {
    if (s != target) states.push_back(s);
  }
  std::map<ChainState, std::size_t> slot;
  for (std::size_t i = 0; i < states.size(); ++i) slot[states[i]] = i;

  std::map<ChainState, T> out;
  if (states.empty()) return out;
  Matrix<T> a(states.size(), states.size());
  std::vector<T> b(states.size(), T(0));
  for (std::size_t i = 0; i < states.size(); ++i) {
    a(i, i) += T(1);
    for (const auto& step : macro_steps(chain, states[i])) {
      b[i] += step.prob * step.duration;
      if (step.to != target) a(i, slot.at(step.to)) -= step.prob;
    }
  }
  const auto g = solve_linear(std::move(a), std::move(b));
  for (std::size_t i = 0; i < states.size(); ++i) out[states[i]] = g[i];
  return out;
}

template <Scalar T>
T hitting_time_from(const Chain<T>& chain, const std::map<ChainState, T>& finite, const ChainState& target,
                    const ChainState& from) {
  const auto lookup = [&](const ChainState& s) { return s == target ? T(0) : finite.at(s); };
  if (from.kind == EdgeKind::Compact || from.level == 1) return lookup(from);
  const T base = lookup(ChainState::down(from.ray, 1));
  if (from.kind == EdgeKind::RayDown) return T(static_cast<long long>(from.level) - 1) + base;
  const T& rho = chain.rho();
  return T(static_cast<long long>(from.level)) + T(2) * rho / (T(1) - rho) + base;
}

}  // namespace

template <Scalar T>
T expected_hitting_time(const Chain<T>& chain, const ChainState& from, const ChainState& target) {
  if (!chain.contains(from)) throw Error(ErrorCode::UnknownState, "state is not part of the chain");
  const auto finite = finite_hitting_times(chain, target);
  if (from != target) return hitting_time_from(chain, finite, target, from);
  T total(0);
  for (const auto& step : macro_steps(chain, from)) {
    total += step.prob * (step.duration + (step.to == target ? T(0) : finite.at(step.to)));
  }
  return total;
}

// ---------------------------------------------------------------------------
// First passage and n-step laws

template <Scalar T>
T ReturnDistribution<T>::partial_mean() const {
  T total(0);
  for (std::size_t n = 1; n < f.size(); ++n) total += T(static_cast<long long>(n)) * f[n];
  return total;
}

template <Scalar T>
T ReturnDistribution<T>::partial_sum() const {
  T total(0);
  for (const auto& v : f) total += v;
  return total;
}

namespace {

template <Scalar T>
std::map<ChainState, T> step_forward(const Chain<T>& chain, const std::map<ChainState, T>& current) {
  std::map<ChainState, T> next;
  for (const auto& [state, mass] : current) {
    if (mass == 0) continue;
    for (const auto& tr : chain.successors(state)) next[tr.to] += mass * tr.prob;
  }
  return next;
}

}  // namespace

template <Scalar T>
ReturnDistribution<T> first_passage_distribution(const Chain<T>& chain, const ChainState& from, const ChainState& to,
                                                 int n_max) {
  if (n_max < 1) throw Error(ErrorCode::InvalidArgument, "n_max must be >= 1");
  if (!chain.contains(from) || !chain.contains(to)) throw Error(ErrorCode::UnknownState, "state is not part of the chain");
  ReturnDistribution<T> out;
  out.from = from;
  out.to = to;
  out.f.assign(static_cast<std::size_t>(n_max) + 1, T(0));

  std::map<ChainState, T> current{{from, T(1)}};
  for (int n = 1; n <= n_max; ++n) {
    current = step_forward(chain, current);
    if (auto it = current.find(to); it != current.end()) {
      out.f[static_cast<std::size_t>(n)] = it->second;
      current.erase(it);
    }
  }
  T remaining(0);
  for (const auto& [state, mass] : current) remaining += mass;
  out.tail_bound = remaining;

  if (chain.in_finite_block(to)) {
    const auto finite = finite_hitting_times(chain, to);
    T tail(0);
    for (const auto& [state, mass] : current) {
      tail += mass * (T(static_cast<long long>(n_max)) + hitting_time_from(chain, finite, to, state));
    }
    out.mean_tail = tail;
  }
  return out;
}

template <Scalar T>
std::map<ChainState, T> n_step_distribution(const Chain<T>& chain, const ChainState& s, int n) {
  if (n < 0) throw Error(ErrorCode::InvalidArgument, "n must be >= 0");
  if (!chain.contains(s)) throw Error(ErrorCode::UnknownState, "state is not part of the chain");
  std::map<ChainState, T> current{{s, T(1)}};
  for (int i = 0; i < n; ++i) current = step_forward(chain, current);
  return current;
}

template <Scalar T>
T n_step_prob(const Chain<T>& chain, const ChainState& s, const ChainState& t, int n) {
  if (!chain.contains(t)) throw Error(ErrorCode::UnknownState, "state is not part of the chain");
  const auto dist = n_step_distribution(chain, s, n);
  const auto it = dist.find(t);
  return it == dist.end() ? T(0) : it->second;
}

template <Scalar T>
T cesaro_average(const Chain<T>& chain, const ChainState& s, const ChainState& t, int n, int period) {
  if (period < 1) throw Error(ErrorCode::InvalidArgument, "period must be >= 1");
  auto current = n_step_distribution(chain, s, n);
  T total(0);
  for (int j = 0; j < period; ++j) {
    if (auto it = current.find(t); it != current.end()) total += it->second;
    current = step_forward(chain, current);
  }
  return total / T(period);
}

// ---------------------------------------------------------------------------
// Classification

template <Scalar T>
Classification<T> classify(const Chain<T>& chain) {
  Classification<T> out;
  out.irreducible = strongly_connected(chain.reduced());

  // Period from BFS depths on the chain cut at level 2. Excursions of height
  // 1 and 2 already generate every ray cycle length modulo the gcd.
  std::vector<ChainState> states = chain.finite_block();
  for (std::uint32_t r = 0; r < chain.ray_count(); ++r) {
    states.push_back(ChainState::up(r, 2));
    states.push_back(ChainState::down(r, 2));
  }
  std::map<ChainState, int> depth;
  std::queue<ChainState> queue;
  depth[states.front()] = 0;
  queue.push(states.front());
  int g = 0;
  while (!queue.empty()) {
    const ChainState s = queue.front();
    queue.pop();
    for (const auto& tr : chain.successors(s)) {
      if (tr.to.kind != EdgeKind::Compact && tr.to.level > 2) continue;
      const auto it = depth.find(tr.to);
      if (it == depth.end()) {
        depth[tr.to] = depth[s] + 1;
        queue.push(tr.to);
      } else {
        g = std::gcd(g, std::abs(depth[s] + 1 - it->second));
      }
    }
  }
  out.period = g;

  if (out.irreducible) {
    // rho < 1 is enforced by validation, so every mean return time is finite.
    out.positive_recurrent = chain.rho() < T(1);
    for (const auto& s : chain.finite_block()) out.mean_return.emplace_back(s, expected_return_time(chain, s));
  }
  return out;
}

#define GEOFLOW_INSTANTIATE(T)                                                                                    \
  template struct StationaryDistribution<T>;                                                                     \
  template struct ReturnDistribution<T>;                                                                         \
  template StationaryDistribution<T> stationary_distribution(const Chain<T>&);                                   \
  template ReturnDistribution<T> first_passage_distribution(const Chain<T>&, const ChainState&, const ChainState&, \
                                                            int);                                                \
  template std::map<ChainState, T> n_step_distribution(const Chain<T>&, const ChainState&, int);                 \
  template T n_step_prob(const Chain<T>&, const ChainState&, const ChainState&, int);                            \
  template T cesaro_average(const Chain<T>&, const ChainState&, const ChainState&, int, int);                    \
  template T expected_hitting_time(const Chain<T>&, const ChainState&, const ChainState&);                       \
  template Classification<T> classify(const Chain<T>&);

GEOFLOW_INSTANTIATE(double)
GEOFLOW_INSTANTIATE(Rational)

#undef GEOFLOW_INSTANTIATE

}  // namespace geoflow
