#include "geoflow/measure.hpp"

#include <cmath>

namespace geoflow {

template <Scalar T>
T ball_shadow(int q, int d) {
  if (d < 1) throw Error(ErrorCode::InvalidArgument, "ball_shadow: distance must be >= 1");
  if (q < 2) throw Error(ErrorCode::InvalidArgument, "ball_shadow: q must be >= 2");
  return T(1) / (T(q + 1) * pow_int(T(q), d - 1));
}

template double ball_shadow<double>(int, int);
template Rational ball_shadow<Rational>(int, int);

void require_delta(int q, double delta) {
  if (!(delta > half_log_threshold(q))) {
    throw Error(ErrorCode::DeltaTooSmall, "delta = " + format_double(delta) + " must exceed (1/2) ln q = " +
                                              format_double(half_log_threshold(q)));
  }
}

double ascent_ratio(int q, double delta) { return q * std::exp(-2.0 * delta); }

double excursion_height_tail(int q, double delta, int n) {
  require_delta(q, delta);
  return excursion_height_tail(ascent_ratio(q, delta), n);
}

double conformal_alpha_step(double alpha, int q, double delta) { return q * alpha * std::exp(-delta); }

double shadow_ratio(int q, double delta, int n) {
  require_delta(q, delta);
  if (n < 0) throw Error(ErrorCode::InvalidArgument, "N must be >= 0");
  return std::pow(ascent_ratio(q, delta), n);
}

ShadowLaw ShadowLaw::normalized(int q, double delta) {
  require_delta(q, delta);
  const double rho = ascent_ratio(q, delta);
  return ShadowLaw{q, delta, (1.0 - rho) / (q - rho)};
}

double ShadowLaw::alpha(int j) const {
  if (j < 1) throw Error(ErrorCode::InvalidArgument, "alpha index must be >= 1");
  double a = alpha1;
  for (int i = 1; i < j; ++i) a = conformal_alpha_step(a, q, delta);
  return a;
}

double ShadowLaw::up_shadow(int j, int n) const {
  const double r = rho();
  return (q - 1) * alpha(j) * std::pow(r, n) / (1.0 - r);
}

double ShadowLaw::vertex_mass(int j) const { return q * alpha(j) + up_shadow(j, 1); }

template <Scalar T>
CylinderSpace<T>::CylinderSpace(const QuotientModel& model)
    : chain_([&] {
        if (model.mode == CoreMode::Matrix) {
          throw Error(ErrorCode::UnsupportedMode, "cylinder measures need a ray or star model, not compact matrix");
        }
        return Chain<T>(model);
      }()),
      stationary_(stationary_distribution(chain_)) {}

template <Scalar T>
CylinderMeasure<T> CylinderSpace<T>::lambda(std::span<const ChainState> path) const {
  CylinderMeasure<T> out;
  out.path.assign(path.begin(), path.end());
  if (path.empty()) {
    out.value = T(1);
    out.admissible = true;
    return out;
  }
  for (const auto& s : path) {
    if (!chain_.contains(s)) throw Error(ErrorCode::UnknownEdge, "cylinder uses an edge outside the quotient graph");
  }
  T value = stationary_.mass(path.front());
  for (std::size_t j = 0; j + 1 < path.size() && value != 0; ++j) value *= chain_.transition_prob(path[j], path[j + 1]);
  out.admissible = value != 0;
  out.value = value;
  return out;
}

template <Scalar T>
std::pair<T, T> CylinderSpace<T>::markov_residuals(std::span<const ChainState> path) const {
  if (path.empty()) throw Error(ErrorCode::InvalidArgument, "cylinder must be nonempty");
  const T base = lambda(path).value;
  std::vector<ChainState> extended;
  extended.reserve(path.size() + 1);

  T left(0);
  for (const auto& pred : chain_.predecessors(path.front())) {
    extended.assign(1, pred.to);
    extended.insert(extended.end(), path.begin(), path.end());
    left += lambda(extended).value;
  }
  T right(0);
  for (const auto& succ : chain_.successors(path.back())) {
    extended.assign(path.begin(), path.end());
    extended.push_back(succ.to);
    right += lambda(extended).value;
  }
  return {abs_value<T>(left - base), abs_value<T>(right - base)};
}

template class CylinderSpace<double>;
template class CylinderSpace<Rational>;

CylinderMeasure<double> lambda_cylinder(const QuotientModel& model, std::span<const ChainState> path) {
  return CylinderSpace<double>(model).lambda(path);
}

std::pair<double, double> check_markov_property(const QuotientModel& model, std::span<const ChainState> path) {
  return CylinderSpace<double>(model).markov_residuals(path);
}

}  // namespace geoflow
