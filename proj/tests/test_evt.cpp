#include <gtest/gtest.h>

#include <cmath>

#include "geoflow/evt.hpp"
#include "geoflow/sim.hpp"
#include "test_support.hpp"

namespace geoflow {
namespace {

const double ln2 = std::log(2.0);

// P(max(a_1..a_k) <= N) by enumerating all height tuples up to 60 with
// geometric weights; tuples with a coordinate above 60 are accounted for by
// the analytic tail rho^60 (they are never <= N).
double brute_force_galambos(double rho, int n, int k) {
  std::vector<double> p(61);
  for (int a = 1; a <= 60; ++a) p[a] = (1 - rho) * std::pow(rho, a - 1);
  double total = 0.0;
  std::vector<int> a(k, 1);
  while (true) {
    double w = 1.0;
    bool ok = true;
    for (int x : a) {
      w *= p[x];
      ok = ok && x <= n;
    }
    if (ok) total += w;
    int i = 0;
    while (i < k && ++a[i] > 60) a[i++] = 1;
    if (i == k) break;
  }
  return total;
}

TEST(Galambos, Values) {
  EXPECT_NEAR(galambos_cdf(2, ln2, 3, 2), 49.0 / 64.0, 1e-15);
  EXPECT_NEAR(galambos_cdf(2, ln2, 3, 1), 7.0 / 8.0, 1e-15);
  EXPECT_EQ(galambos_cdf(3, 1.2, 5, 0), 1.0);
  EXPECT_EQ(galambos_cdf(Rational(1, 2), 3, 2), Rational(49, 64));
  EXPECT_THROW(galambos_cdf(2, 0.2, 3, 2), Error);
}

TEST(Galambos, BruteForceOracle) {
  for (double rho : {0.5, 1.0 / 3.0, 0.27}) {
    for (int n = 0; n <= 5; ++n) {
      for (int k : {1, 2, 3}) {
        const double delta = 0.5 * std::log(2.0 / rho);
        EXPECT_NEAR(galambos_cdf(2, delta, n, k), brute_force_galambos(rho, n, k), 1e-12);
      }
    }
  }
}

TEST(MaxHeightExact, Examples) {
  const auto ray = make_pure_ray(2);
  EXPECT_EQ(max_height_exact_rational(ray, 2, 3), Rational(49, 64));
  EXPECT_EQ(max_height_exact_rational(ray, 5, 1), Rational(1, 32));
  EXPECT_EQ(max_height_exact_rational(ray, 1, 0), Rational(0));
  EXPECT_EQ(max_height_exact_rational(ray, 0, 4), Rational(1));
  try {
    max_height_exact(test::load("two_state.model"), 2, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnsupportedMode);
  }
}

TEST(MaxHeightExact, EqualsGalambos) {
  for (int q : {2, 3}) {
    for (const auto& m : {make_pure_ray(q), make_star(q, 3)}) {
      const Chain<Rational> exact(m);
      for (int n = 0; n <= 12; ++n) {
        for (int k = 0; k <= 10; ++k) EXPECT_EQ(max_height_exact(exact, k, n), galambos_cdf(exact.rho(), n, k));
      }
    }
    const double delta = 1.25 * std::log(q);
    const Chain<double> chain(make_pure_ray(q, delta));
    for (int n = 0; n <= 12; ++n) {
      for (int k = 0; k <= 10; ++k) EXPECT_NEAR(max_height_exact(chain, k, n), galambos_cdf(q, delta, n, k), 1e-12);
    }
  }
}

TEST(LimitCdf, Values) {
  EXPECT_NEAR(limit_cdf(2, ln2, 0), 0.3678794412, 1e-10);
  EXPECT_NEAR(limit_cdf(2, ln2, 1), 0.6065306597, 1e-10);
  EXPECT_NEAR(limit_cdf(2, std::log(3.0), 1), 0.8007374029, 1e-10);
  EXPECT_THROW(limit_cdf(2, 0.1, 0), Error);
}

TEST(LimitCdf, Monotone) {
  double prev = 0.0;
  for (double y = -10; y <= 20; y += 0.25) {
    const double v = limit_cdf(3, 0.9, y);
    EXPECT_GE(v, prev);
    prev = v;
  }
  EXPECT_LT(limit_cdf(2, ln2, -10), 1e-300);
  EXPECT_GT(limit_cdf(2, ln2, 50), 1 - 1e-14);
  for (int n = 0; n < 12; ++n) EXPECT_LE(galambos_cdf(2, 0.8, n, 7), galambos_cdf(2, 0.8, n + 1, 7));
}

TEST(LimitCdf, GalambosConvergence) {
  // Lattice mode: k = q^N is an integer and the second-order bound applies.
  for (int q : {2, 3}) {
    const double delta = std::log(q);
    const double rho = 1.0 / q;
    for (int n = 1; n <= 14; ++n) {
      const auto k = static_cast<std::int64_t>(std::llround(std::pow(q, n)));
      for (int y = 0; y <= 3; ++y) {
        const double diff = std::abs(galambos_cdf(q, delta, n + y, k) - limit_cdf(q, delta, y));
        EXPECT_LE(diff, k * std::pow(rho, 2.0 * (n + y)) + 1e-15) << "q=" << q << " N=" << n << " y=" << y;
      }
    }
  }
}

TEST(Calibration, Values) {
  const LimitParams p{2, ln2, 0.0};
  EXPECT_NEAR(n_of_t(p, 1024), 8.0, 1e-12);
  EXPECT_NEAR(lattice_ray_level(2, 1024), 8.0, 1e-12);
  EXPECT_NEAR(t_of_n(LimitParams{2, ln2, 2.0}, 8), 1536.0, 1e-9);
  EXPECT_THROW(n_of_t(p, 0.0), Error);
}

TEST(Calibration, RoundTrip) {
  for (const LimitParams& p : {LimitParams{2, ln2, 0.0}, LimitParams{3, 1.2, 1.0}, LimitParams{2, 0.9, 5.5}}) {
    for (double t : {10.0, 1e3, 1e6}) EXPECT_NEAR(t_of_n(p, n_of_t(p, t)) / t, 1.0, 1e-9);
  }
  for (int q : {2, 3, 5}) {
    const LimitParams p{q, std::log(q), 0.0};
    for (double t : {1e2, 1e4, 1e6}) EXPECT_NEAR(n_of_t(p, t), lattice_ray_level(q, t), 1e-12);
  }
  // The subtractive variant differs exactly when C > 0.
  const LimitParams c1{2, ln2, 1.0};
  EXPECT_NEAR(n_of_t_subtractive(c1, 3 * 256), 8.0, 1e-12);
  EXPECT_NEAR(n_of_t(c1, 5 * 256), 8.0, 1e-12);
}

TEST(EmpiricalCompare, FloorsThresholds) {
  const std::vector<std::int64_t> h{1, 2, 2, 3, 5};
  const std::vector<double> ys{-0.5, 0.0, 0.99, 2.0};
  const auto report = empirical_cdf_compare(h, LimitParams{2, ln2, 0.0}, 2.0, ys);
  ASSERT_EQ(report.rows.size(), 4u);
  EXPECT_EQ(report.rows[0].threshold, 1);
  EXPECT_DOUBLE_EQ(report.rows[0].empirical, 0.2);
  EXPECT_DOUBLE_EQ(report.rows[1].empirical, 0.6);
  EXPECT_DOUBLE_EQ(report.rows[2].empirical, 0.6);
  EXPECT_DOUBLE_EQ(report.rows[3].empirical, 0.8);
  double ks = 0.0;
  for (const auto& row : report.rows) {
    EXPECT_DOUBLE_EQ(row.abs_err, std::abs(row.empirical - row.theoretical));
    ks = std::max(ks, row.abs_err);
  }
  EXPECT_EQ(report.ks_distance, ks);
  for (std::size_t i = 0; i + 1 < report.rows.size(); ++i) {
    EXPECT_LE(report.rows[i].theoretical, report.rows[i + 1].theoretical);
  }
  EXPECT_EQ(report.n_samples, 5);
  const std::vector<std::int64_t> none;
  EXPECT_THROW(empirical_cdf_compare(none, LimitParams{2, ln2, 0.0}, 2.0, ys), Error);
}

TEST(EmpiricalCompare, SyntheticQuantiles) {
  // Samples placed at the quantiles of the discrete law P(h <= m) = exp(-rho^(m-N)).
  const double rho = 0.5;
  const double level = 10.0;
  const int n = 20000;
  std::vector<std::int64_t> samples;
  for (int i = 0; i < n; ++i) {
    const double u = (i + 0.5) / n;
    std::int64_t m = 0;
    while (std::exp(-std::pow(rho, m - level)) < u) ++m;
    samples.push_back(m);
  }
  const std::vector<double> ys{-3, -2, -1, 0, 1, 2, 3, 4};
  const auto report = empirical_cdf_compare(samples, LimitParams{2, ln2, 0.0}, level, ys);
  EXPECT_LT(report.ks_distance, 2.0 / std::sqrt(n));
}

TEST(EmpiricalCompare, WrongDeltaSeparates) {
  RunConfig cfg;
  cfg.model = make_pure_ray(2);
  cfg.horizon = FixedCount{1024};
  cfg.trials = 100000;
  cfg.master_seed = 31;
  const auto res = run_monte_carlo(cfg);
  const std::vector<double> ys{-1, 0, 1, 2};
  const auto right = empirical_cdf_compare(res.h, LimitParams{2, ln2, 0.0}, 10.0, ys);
  const auto wrong = empirical_cdf_compare(res.h, LimitParams{2, 1.3 * ln2, 0.0}, 10.0, ys);
  EXPECT_LT(right.ks_distance, 0.01);
  EXPECT_GT(wrong.ks_distance, 0.05);
}

}  // namespace
}  // namespace geoflow
