#include <gtest/gtest.h>

#include <cmath>

#include "geoflow/excursion.hpp"
#include "geoflow/sim.hpp"
#include "test_support.hpp"

namespace geoflow {
namespace {

Edge U(std::uint32_t i, std::uint32_t r = 0) { return Edge::up(r, i); }
Edge D(std::uint32_t i, std::uint32_t r = 0) { return Edge::down(r, i); }

TEST(Decompose, HandTrace) {
  const std::vector<Edge> path{U(1), U(2), D(2), D(1), U(1), D(1)};
  const auto trace = decompose(path, make_pure_ray(2));
  ASSERT_EQ(trace.excursions.size(), 2u);
  EXPECT_EQ(trace.excursions[0], (Excursion{0, 2, 0, 0, 4, true}));
  EXPECT_EQ(trace.excursions[1], (Excursion{0, 1, 4, 0, 2, true}));
  EXPECT_EQ(trace.total_time, 6);
}

TEST(Decompose, CompactOnly) {
  const auto m = test::load("cycles.model");
  const std::vector<Edge> path{Edge::compact(1), Edge::compact(2), Edge::compact(0), Edge::compact(3)};
  const auto trace = decompose(path, m);
  EXPECT_TRUE(trace.excursions.empty());
  EXPECT_EQ(trace.trailing, 4);
}

TEST(Decompose, StarIncompleteFinalExcursion) {
  const auto m = test::load("star_q2.model");
  const std::vector<Edge> path{U(1, 0), D(1, 0), U(1, 1), U(2, 1), U(3, 1), D(3, 1)};
  const auto trace = decompose(path, m);
  ASSERT_EQ(trace.excursions.size(), 2u);
  EXPECT_TRUE(trace.excursions[0].complete);
  EXPECT_FALSE(trace.excursions[1].complete);
  EXPECT_EQ(trace.excursions[1].height, 3);
  EXPECT_EQ(trace.excursions[1].ray, 1u);
}

TEST(Decompose, GapsAndLeadIn) {
  const auto m = test::load("two_state.model");
  // Starts mid-descent, lands at A, steps to B, then two excursions.
  const std::vector<Edge> path{D(2), D(1), Edge::compact(1), U(1), D(1), Edge::compact(1), U(1), U(2), D(2), D(1)};
  const auto trace = decompose(path, m);
  EXPECT_EQ(trace.lead_in, 2);
  ASSERT_EQ(trace.excursions.size(), 2u);
  EXPECT_EQ(trace.excursions[0].gap_before, 1);
  EXPECT_EQ(trace.excursions[1].gap_before, 1);
  EXPECT_EQ(trace.excursions[1].height, 2);
}

TEST(Decompose, RejectsInadmissible) {
  const auto m = make_pure_ray(2);
  const std::vector<Edge> bad{U(1), U(2), D(2), U(2)};
  try {
    decompose(bad, m);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InadmissiblePath);
  }
  const std::vector<Edge> unknown{U(1, 4)};
  EXPECT_THROW(decompose(unknown, m), Error);
}

TEST(Decompose, ReconstructionAndPeakProperty) {
  std::mt19937_64 gen(11);
  for (const char* name : {"ray_q2.model", "star_q2.model", "two_state.model", "cycles.model", "ray_q2_delta1.model"}) {
    const auto m = test::load(name);
    const Chain<double> chain(m);
    for (int trial = 0; trial < 200; ++trial) {
      // Random admissible walk started at a random finite-block state.
      const auto block = chain.finite_block();
      std::vector<Edge> path{block[gen() % block.size()]};
      const auto len = 1 + gen() % 60;
      while (path.size() < len) {
        const auto next = chain.successors(path.back());
        path.push_back(next[gen() % next.size()].to);
      }
      const auto trace = decompose(path, m);
      std::int64_t total = trace.lead_in + trace.trailing;
      std::int64_t last_start = -1;
      for (const auto& e : trace.excursions) {
        total += e.gap_before + e.steps;
        EXPECT_GT(e.start_time, last_start);
        last_start = e.start_time;
        if (e.complete) EXPECT_EQ(e.steps, 2 * e.height);
        // Peak check against the level sequence.
        std::int64_t peak = 0;
        for (std::int64_t t = e.start_time; t < e.start_time + e.steps; ++t) {
          peak = std::max<std::int64_t>(peak, path[t].terminus_height());
        }
        EXPECT_EQ(peak, e.height);
      }
      EXPECT_EQ(total, trace.total_time) << name;
    }
  }
}

TEST(TimeCap, Values) {
  EXPECT_EQ(height_under_time_cap(5, 3), 3);
  EXPECT_EQ(height_under_time_cap(5, 8), 5);
  EXPECT_EQ(height_under_time_cap(1, 0), 0);
  for (std::int64_t a = 1; a <= 6; ++a) {
    for (std::int64_t s = 0; s <= 14; ++s) {
      std::int64_t tent = 0;
      for (std::int64_t t = 0; t <= s; ++t) tent = std::max(tent, std::min(t, 2 * a - t));
      EXPECT_EQ(height_under_time_cap(a, s), tent);
    }
  }
}

TEST(CGamma, ExactValues) {
  EXPECT_EQ(c_gamma_exact(make_pure_ray(2)), Rational(0));
  EXPECT_EQ(c_gamma_exact(test::load("ray_q2.model")), Rational(0));
  EXPECT_EQ(c_gamma_exact(test::load("star_q2.model")), Rational(0));
  EXPECT_EQ(c_gamma_exact(make_star(3, 4)), Rational(0));
  EXPECT_EQ(c_gamma_exact(test::load("two_state.model")), Rational(1));
}

TEST(CGamma, CyclesFixtureByRenewal) {
  // From A: the 3-cycle costs 3 internal steps (prob 1/2), the 2-cycle 2 steps
  // (prob 1/4), both returning to A; exit costs nothing. g = (3+g)/2 + (2+g)/4.
  EXPECT_EQ(c_gamma_exact(test::load("cycles.model")), Rational(8));
}

TEST(CGamma, SingularBlock) {
  // B is a trap: it never exits.
  auto m = parse_model(
      "q 2\ncompact matrix\nstate A\nstate B\nray R1 attach A\n"
      "trans A B 1/2\nexit A R1 1/2\ntrans B B 1\nentry R1 A 1\n");
  try {
    c_gamma_exact(m);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SingularCompactBlock);
  }
  const std::vector<std::int64_t> gaps{1, 2};
  EXPECT_FALSE(make_c_gamma_report(m, gaps).exact.has_value());
}

TEST(CGamma, MonteCarloWithinThreeSigma) {
  for (const char* name : {"two_state.model", "cycles.model"}) {
    const auto m = test::load(name);
    const auto report = estimate_c_gamma(m, 100000, 5);
    ASSERT_TRUE(report.exact.has_value());
    EXPECT_EQ(report.n_cycles, 100000);
    EXPECT_LE(std::abs(report.estimate - *report.exact), 3.0 * report.stderr_ + 1e-12) << name;
  }
}

TEST(ExpectedExcursionTime, SeriesOracle) {
  for (int q : {2, 3}) {
    // sum_{k<=60} 2k (q-1)/q^k + remainder sum_{k>60} 2k (1-rho) rho^(k-1).
    const double rho = 1.0 / q;
    double s = 0.0;
    for (int k = 1; k <= 60; ++k) s += 2.0 * k * (q - 1) / std::pow(q, k);
    const double tail = 2.0 * std::pow(rho, 60) * (60.0 + 1.0 / (1.0 - rho));
    EXPECT_NEAR(expected_excursion_time(q, std::log(q)), s + tail, 1e-12);
  }
  EXPECT_NEAR(expected_excursion_time(2, std::log(2.0)), 4.0, 1e-14);
  EXPECT_NEAR(expected_excursion_time(3, std::log(3.0)), 3.0, 1e-14);
  EXPECT_NEAR(expected_excursion_time(2, 30.0), 2.0, 1e-12);
  EXPECT_EQ(expected_excursion_time(Rational(1, 2)), Rational(4));
  EXPECT_THROW(expected_excursion_time(2, 0.2), Error);
}

}  // namespace
}  // namespace geoflow
