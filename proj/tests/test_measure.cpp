#include <gtest/gtest.h>

#include <cmath>

#include "geoflow/evt.hpp"
#include "geoflow/measure.hpp"
#include "test_support.hpp"

namespace geoflow {
namespace {

const Edge u1 = Edge::up(0, 1);
const Edge u2 = Edge::up(0, 2);
const Edge d1 = Edge::down(0, 1);
const Edge d2 = Edge::down(0, 2);

// Probability that an excursion started at u1 climbs above level n, by
// propagating mass through the chain until it either reaches up-level n+1 or
// returns to d1.
template <Scalar T>
T height_tail_by_propagation(const Chain<T>& chain, int n) {
  std::map<ChainState, T> mass{{u1, T(1)}};
  T above(0);
  while (!mass.empty()) {
    std::map<ChainState, T> next;
    for (const auto& [s, m] : mass) {
      for (const auto& t : chain.successors(s)) {
        if (t.to.kind == EdgeKind::RayUp && static_cast<int>(t.to.level) > n) {
          above += m * t.prob;
        } else if (!(t.to == d1)) {
          next[t.to] += m * t.prob;
        }
      }
    }
    mass = std::move(next);
  }
  return n == 0 ? T(1) : above;
}

TEST(BallShadow, Values) {
  EXPECT_EQ(ball_shadow<Rational>(2, 1), Rational(1, 3));
  EXPECT_EQ(ball_shadow<Rational>(2, 2), Rational(1, 6));
  EXPECT_EQ(ball_shadow<Rational>(3, 3), Rational(1, 36));
  EXPECT_THROW(ball_shadow<Rational>(2, 0), Error);
}

TEST(BallShadow, NormalizationAndAdditivity) {
  for (int q : {2, 3, 5}) {
    for (int d = 1; d <= 10; ++d) {
      // (q+1) q^(d-1) vertices at distance d carry equal mass summing to 1.
      Rational total(0);
      const Rational each = ball_shadow<Rational>(q, d);
      for (int v = 0; v < (q + 1) * static_cast<int>(std::pow(q, d - 1)); ++v) total += each;
      EXPECT_EQ(total, Rational(1));
      EXPECT_EQ(ball_shadow<Rational>(q, d), Rational(q) * ball_shadow<Rational>(q, d + 1));
    }
  }
}

TEST(HeightTail, Values) {
  EXPECT_NEAR(excursion_height_tail(2, std::log(2.0), 3), 0.125, 1e-15);
  EXPECT_NEAR(excursion_height_tail(2, std::log(3.0), 1), 2.0 / 9.0, 1e-15);
  EXPECT_EQ(excursion_height_tail(3, 1.0, 0), 1.0);
  EXPECT_THROW(excursion_height_tail(2, 0.3, 1), Error);
}

TEST(HeightTail, EqualsChainPropagation) {
  for (int q : {2, 3}) {
    const auto exact = build_exact_chain(make_pure_ray(q));
    for (int n = 0; n <= 12; ++n) {
      EXPECT_EQ(height_tail_by_propagation(exact, n), excursion_height_tail(exact.rho(), n));
      EXPECT_EQ(excursion_height_tail(exact.rho(), n), Rational(1) / pow_int(Rational(q), n));
      // 1 - P(max of one excursion <= n) from the evt DP.
      EXPECT_EQ(Rational(1) - max_height_exact(exact, 1, n), excursion_height_tail(exact.rho(), n));
    }
    for (double delta : {1.25 * std::log(q), 1.7}) {
      const auto chain = build_chain(make_pure_ray(q, delta));
      for (int n = 0; n <= 12; ++n) {
        EXPECT_NEAR(height_tail_by_propagation(chain, n), excursion_height_tail(q, delta, n), 1e-12);
      }
    }
  }
}

TEST(Conformal, AlphaStep) {
  EXPECT_NEAR(conformal_alpha_step(1.0, 2, std::log(2.0)), 1.0, 1e-15);
  EXPECT_NEAR(conformal_alpha_step(1.0, 2, std::log(3.0)), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(conformal_alpha_step(0.5, 3, std::log(3.0)), 0.5, 1e-15);
}

TEST(Conformal, IteratedRecursion) {
  for (double delta : {0.6, 1.0, 1.3}) {
    const auto law = ShadowLaw::normalized(3, delta);
    for (int j = 1; j <= 4; ++j) {
      for (int n = 0; n <= 6; ++n) {
        EXPECT_NEAR(law.alpha(j + n) / law.alpha(j), std::pow(3.0 * std::exp(-delta), n), 1e-12);
      }
    }
  }
}

TEST(ShadowRatio, Values) {
  EXPECT_NEAR(shadow_ratio(2, std::log(2.0), 1), 0.5, 1e-15);
  EXPECT_EQ(shadow_ratio(2, std::log(2.0), 0), 1.0);
  EXPECT_NEAR(shadow_ratio(3, 1.0, 2), std::pow(3.0 * std::exp(-2.0), 2), 1e-15);
  EXPECT_NEAR(shadow_ratio(3, 1.0, 2), 0.1648407, 1e-7);
}

TEST(ShadowRatio, SeriesOracle) {
  for (int q : {2, 3}) {
    for (double delta : {std::log(q), 0.9, 1.4}) {
      const double rho = q * std::exp(-2.0 * delta);
      // (q-1) sum_{n>=N} rho^n: 400 explicit terms plus the geometric remainder.
      auto series = [&](int from) {
        double s = 0.0;
        for (int m = from; m < from + 400; ++m) s += std::pow(rho, m);
        return (q - 1) * (s + std::pow(rho, from + 400) / (1.0 - rho));
      };
      for (int n = 0; n <= 10; ++n) EXPECT_NEAR(shadow_ratio(q, delta, n), series(n) / series(0), 1e-12);
    }
  }
}

TEST(ShadowLaw, NormalizedAtLevelOne) {
  for (double delta : {std::log(2.0), 0.9, 1.5}) {
    const auto law = ShadowLaw::normalized(2, delta);
    EXPECT_NEAR(law.vertex_mass(1), 1.0, 1e-14);
    // The mass ahead of level j splits in the ratio rho : 1 - rho between climbing on and turning.
    EXPECT_NEAR(law.up_shadow(1, 2) / law.up_shadow(1, 1), law.rho(), 1e-14);
  }
  EXPECT_NEAR(ShadowLaw::normalized(2, std::log(2.0)).alpha1, 1.0 / 3.0, 1e-15);
}

TEST(Lambda, PureRayValues) {
  const auto m = make_pure_ray(2);
  const CylinderSpace<Rational> space(m);
  const std::vector<Edge> a{u1};
  const std::vector<Edge> b{u1, u2};
  const std::vector<Edge> c{d2, u2};
  EXPECT_EQ(space.lambda(a).value, Rational(1, 4));
  EXPECT_EQ(space.lambda(b).value, Rational(1, 8));
  EXPECT_EQ(space.lambda(c).value, Rational(0));
  EXPECT_FALSE(space.lambda(c).admissible);
  EXPECT_NEAR(lambda_cylinder(m, b).value, 0.125, 1e-15);
  EXPECT_THROW(CylinderSpace<double>(test::load("two_state.model")), Error);
}

TEST(Lambda, MarkovExamples) {
  const CylinderSpace<Rational> space(make_pure_ray(2));
  const std::vector<Edge> a{u1};
  const std::vector<Edge> b{u1, u2};
  const std::vector<Edge> bad{d2, u2};
  EXPECT_EQ(space.markov_residuals(a), std::make_pair(Rational(0), Rational(0)));
  EXPECT_EQ(space.markov_residuals(b), std::make_pair(Rational(0), Rational(0)));
  EXPECT_EQ(space.markov_residuals(bad), std::make_pair(Rational(0), Rational(0)));
}

// Random admissible cylinders of length <= 8 starting anywhere up to level 5.
std::vector<std::vector<Edge>> random_cylinders(const Chain<Rational>& chain, std::mt19937_64& gen, int count) {
  std::vector<std::vector<Edge>> out;
  for (int c = 0; c < count; ++c) {
    const auto r = static_cast<std::uint32_t>(gen() % chain.ray_count());
    const auto level = static_cast<std::uint32_t>(1 + gen() % 5);
    std::vector<Edge> path{gen() % 2 ? Edge::up(r, level) : Edge::down(r, level)};
    const auto len = 1 + gen() % 8;
    while (path.size() < len) {
      const auto next = chain.successors(path.back());
      path.push_back(next[gen() % next.size()].to);
    }
    out.push_back(std::move(path));
  }
  return out;
}

TEST(Lambda, MarkovPropertyOnRandomCylinders) {
  std::mt19937_64 gen(99);
  for (const char* name : {"ray_q2.model", "ray_q3.model", "star_q2.model"}) {
    const CylinderSpace<Rational> space(test::load(name));
    for (const auto& path : random_cylinders(space.chain(), gen, 1000)) {
      const auto [left, right] = space.markov_residuals(path);
      EXPECT_EQ(left, Rational(0)) << name;
      EXPECT_EQ(right, Rational(0)) << name;
      // Shift compatibility.
      Rational expected = space.lambda(std::span(path).first(1)).value;
      for (std::size_t j = 0; j + 1 < path.size(); ++j) expected *= space.chain().transition_prob(path[j], path[j + 1]);
      EXPECT_EQ(space.lambda(path).value, expected);
      EXPECT_TRUE(space.lambda(path).admissible);
    }
  }
}

TEST(Lambda, TransitionIsCylinderRatio) {
  const CylinderSpace<Rational> space(make_pure_ray(3));
  for (std::uint32_t i = 1; i <= 6; ++i) {
    for (const Edge e : {Edge::up(0, i), Edge::down(0, i)}) {
      for (const auto& t : space.chain().successors(e)) {
        const std::vector<Edge> one{e};
        const std::vector<Edge> two{e, t.to};
        EXPECT_EQ(space.lambda(two).value / space.lambda(one).value, t.prob);
      }
    }
  }
}

}  // namespace
}  // namespace geoflow
