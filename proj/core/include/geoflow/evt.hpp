#pragma once

// Extreme-value laws for the maximal excursion height: the exact law after k
// excursions, its time-indexed counterpart, and the Gumbel-type limit.

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "geoflow/chain.hpp"

namespace geoflow {

struct LimitParams {
  int q = 2;
  double delta = 0.0;
  /// Mean compact gap per excursion.
  double c_gamma = 0.0;

  double rho() const { return q * std::exp(-2.0 * delta); }
  static LimitParams from_model(const QuotientModel& model);
};

/// P(max of k excursion heights <= N) = (1 - rho^N)^k.
double galambos_cdf(int q, double delta, double n, std::int64_t k);
template <Scalar T>
T galambos_cdf(const T& rho, int n, std::int64_t k) {
  if (n < 0 || k < 0) throw Error(ErrorCode::InvalidArgument, "N and k must be >= 0");
  return pow_int(T(1) - pow_int(rho, n), k);
}

/// The same probability computed by propagating the chain, started on the
/// stationary ray mix, with every level above N removed. Ray and star models
/// only; throws Error(UnsupportedMode) in matrix mode.
template <Scalar T>
T max_height_exact(const Chain<T>& chain, std::int64_t k, int n);
double max_height_exact(const QuotientModel& model, std::int64_t k, int n);
/// Lattice models only.
Rational max_height_exact_rational(const QuotientModel& model, std::int64_t k, int n);

/// exp(-rho^y).
double limit_cdf(int q, double delta, double y);

/// Expected time to complete rho^{-N} excursions: (2/(1-rho) + C_Gamma) rho^{-N}.
double t_of_n(const LimitParams& params, double n);
/// Inverse of t_of_n: log_{1/rho}(T / (2/(1-rho) + C_Gamma)).
double n_of_t(const LimitParams& params, double t);
/// The variant log_{1/rho}(T / (2/(1-rho) - C_Gamma)); kept for comparison.
double n_of_t_subtractive(const LimitParams& params, double t);
/// log_q(T (q-1) / (2q)): n_of_t for the pure lattice ray.
double lattice_ray_level(int q, double t);

struct EvtRow {
  double y = 0.0;
  std::int64_t threshold = 0;
  double empirical = 0.0;
  double theoretical = 0.0;
  double abs_err = 0.0;
  /// Exact finite-k probability when the caller supplies one, else NaN.
  double exact = std::nan("");
};

struct EvtReport {
  std::vector<EvtRow> rows;
  double ks_distance = 0.0;
  LimitParams params;
  double level = 0.0;
  std::int64_t n_samples = 0;
};

/// Compares P(h <= floor(N + y)) over the samples with exp(-rho^y).
/// Throws Error(EmptySamples).
EvtReport empirical_cdf_compare(std::span<const std::int64_t> samples, const LimitParams& params, double level,
                                std::span<const double> ys);

}  // namespace geoflow
