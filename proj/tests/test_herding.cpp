#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <iterator>
#include <set>

#include "krabc/discrepancy.hpp"
#include "krabc/herding.hpp"
#include "support/generators.hpp"
#include "support/herding_bench.hpp"

using namespace krabc;
using krabc::testing::for_cases;
using krabc::testing::Gen;

namespace {

PointList scalars(std::initializer_list<double> v) {
  PointList p;
  for (double x : v) p.push_back(Vector::Constant(1, x));
  return p;
}

Vector at(double x) { return Vector::Constant(1, x); }

SearchConfig particles_only(std::vector<Interval> box) {
  SearchConfig s;
  s.box = std::move(box);
  s.pool_size = 0;
  s.refine_steps = 0;
  s.refine_pool = 0;
  return s;
}

WeightedParticleSet random_embedding(Gen& g, Eigen::Index d) {
  const auto n = static_cast<std::size_t>(g.integer(2, 25));
  PointList p = g.points(n, d, 2.0);
  Vector w = g.vector(static_cast<Eigen::Index>(n));
  return WeightedParticleSet(std::move(p), w, KernelConfig(g.log_uniform(-0.5, 0.5)));
}

SearchConfig random_search(Gen& g, Eigen::Index d) {
  SearchConfig s;
  for (Eigen::Index k = 0; k < d; ++k) s.box.push_back({-6.0, 6.0});
  s.pool_size = g.integer(1, 40);
  s.refine_steps = g.integer(0, 4);
  s.refine_pool = g.integer(1, 8);
  return s;
}

}  // namespace

TEST(HerdingObjective, RepulsionOnly) {
  HerdingState st(WeightedParticleSet(scalars({0.0}), Vector::Zero(1), KernelConfig(1.0)));
  st.accept(at(0.0));
  EXPECT_DOUBLE_EQ(st.objective(at(0.0)), -0.5);
  EXPECT_NEAR(st.objective(at(5.0)), -std::exp(-12.5) / 2.0, 1e-18);
}

TEST(HerdingObjective, EmbeddingOnlyAtFirstRound) {
  const HerdingState st(WeightedParticleSet(scalars({0.0, 1.0}), Eigen::Vector2d(0.5, 0.5), KernelConfig(1.0)));
  EXPECT_NEAR(st.objective(at(0.5)), std::exp(-1.0 / 8.0), 1e-15);
  EXPECT_NEAR(st.objective(at(0.0)), (1.0 + std::exp(-0.5)) / 2.0, 1e-15);
}

TEST(HerdingObjective, DimensionMismatchThrows) {
  const HerdingState st(WeightedParticleSet(scalars({0.0}), Vector::Ones(1), KernelConfig(1.0)));
  EXPECT_THROW(st.objective(Vector::Zero(2)), ContractViolation);
}

TEST(Herd, ReturnsRequestedCount) {
  const auto emb = krabc::testing::mixture_embedding(1, 50);
  const auto r = herd(emb, 17, krabc::testing::mixture_search(), 3);
  EXPECT_EQ(r.points.size(), 17u);
  EXPECT_EQ(r.rounds.size(), 17u);
}

TEST(Herd, Contract) {
  const WeightedParticleSet emb(scalars({0.0}), Vector::Ones(1), KernelConfig(1.0));
  EXPECT_THROW(herd(emb, 0, particles_only({{-1, 1}}), 0), ContractViolation);
  EXPECT_THROW(herd(emb, 1, particles_only({{-1, 1}, {-1, 1}}), 0), ContractViolation);
  EXPECT_THROW(herd(emb, 1, particles_only({{1, -1}}), 0), ContractViolation);
  EXPECT_THROW(herd(emb, 1, particles_only({{2, 3}}), 0), ContractViolation);
}

TEST(Herd, WellSeparatedParticlesArePermuted) {
  for (int n = 1; n <= 5; ++n) {
    PointList p;
    for (int i = 0; i < n; ++i) p.push_back(at(10.0 * i));
    const WeightedParticleSet emb(p, Vector::Constant(n, 1.0 / n), KernelConfig(1.0));
    const auto out = herd(emb, n, particles_only({{-1.0, 10.0 * n}}), 5).points;
    std::set<double> seen;
    for (const auto& x : out) seen.insert(x(0));
    ASSERT_EQ(static_cast<int>(seen.size()), n);
    for (int i = 0; i < n; ++i) EXPECT_EQ(seen.count(10.0 * i), 1u);
  }
}

TEST(Herd, FirstPointIsEmbeddingArgmaxAndClosestDirac) {
  // On the pool, argmax mu(theta) equals argmin |mu - k(., theta)|^2 since
  // |mu - k(., theta)|^2 = |mu|^2 - 2 mu(theta) + 1.
  const auto emb = krabc::testing::mixture_embedding(7, 40);
  const auto out = herd(emb, 1, particles_only({{-5.0, 5.0}}), 0);
  std::size_t arg_max = 0, arg_min = 0;
  double best_mu = -1e300, best_dist = 1e300;
  for (std::size_t i = 0; i < emb.size(); ++i) {
    const double mu = emb(emb.particles[i]);
    const double dist = mmd_to_embedding(emb, std::span<const Vector>(&emb.particles[i], 1));
    if (mu > best_mu) best_mu = mu, arg_max = i;
    if (dist < best_dist) best_dist = dist, arg_min = i;
  }
  EXPECT_EQ(arg_max, arg_min);
  EXPECT_EQ(out.points[0], emb.particles[arg_max]);
}

TEST(Herd, DiracEmbeddingHerdsItsAtom) {
  const WeightedParticleSet emb(scalars({1.5}), Vector::Ones(1), KernelConfig(0.3));
  SearchConfig s;
  s.box = {{-4.0, 4.0}};
  EXPECT_EQ(herd(emb, 1, s, 11).points[0](0), 1.5);
}

TEST(Herd, MmdShrinksOnDoublingGridAndBeatsResampling) {
  const auto emb = krabc::testing::mixture_embedding(21);
  const auto path = krabc::testing::herding_mmd_path(emb, 100, 4);
  const std::size_t grid[] = {1, 2, 4, 8, 16, 32, 64, 100};
  for (std::size_t i = 1; i < std::size(grid); ++i)
    EXPECT_LE(path[grid[i] - 1], path[grid[i - 1] - 1] + 1e-12) << "m = " << grid[i];
  std::vector<double> iid;
  for (std::uint64_t s = 0; s < 30; ++s) iid.push_back(krabc::testing::resampled_mmd(emb, 100, s));
  std::nth_element(iid.begin(), iid.begin() + 15, iid.end());
  EXPECT_LT(path.back(), iid[15]);
}

TEST(Herd, HerdedMmdMatchesSampleMmd) {
  Gen g(8);
  const PointList src = g.points(25, 2);
  const KernelConfig k(0.9);
  const WeightedParticleSet emb(src, Vector::Constant(25, 1.0 / 25), k);
  SearchConfig s;
  s.box = {{-4, 4}, {-4, 4}};
  const auto pts = herd(emb, 12, s, 2).points;
  EXPECT_NEAR(mmd_to_embedding(emb, pts), mmd_quadratic(to_dataset(src), to_dataset(pts), k).value, 1e-10);
}

// Properties -----------------------------------------------------------------

TEST(HerdingProperties, GreedyDominance) {
  for_cases(301, 40, [](Gen& g, int) {
    const auto d = g.integer(1, 3);
    const auto emb = random_embedding(g, d);
    const auto r = herd(emb, g.integer(1, 10), random_search(g, d), g.integer(0, 1000));
    for (const auto& round : r.rounds) {
      EXPECT_GE(round.accepted_objective, round.best_evaluated - 1e-12);
      EXPECT_GT(round.evaluated, 0u);
    }
  });
}

TEST(HerdingProperties, DeterministicGivenSeed) {
  for_cases(302, 20, [](Gen& g, int) {
    const auto d = g.integer(1, 3);
    const auto emb = random_embedding(g, d);
    const auto s = random_search(g, d);
    const auto seed = static_cast<std::uint64_t>(g.integer(0, 1 << 20));
    const auto a = herd(emb, 6, s, seed).points, b = herd(emb, 6, s, seed).points;
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], b[i]);
  });
}

TEST(HerdingProperties, PointsStayInBox) {
  for_cases(303, 40, [](Gen& g, int) {
    const auto d = g.integer(1, 3);
    const auto emb = random_embedding(g, d);
    auto s = random_search(g, d);
    for (auto& iv : s.box) iv = {g.uniform(-3, 0), g.uniform(0.1, 3)};
    for (const auto& p : herd(emb, 8, s, 9).points)
      for (Eigen::Index k = 0; k < d; ++k) {
        EXPECT_GE(p(k), s.box[k].lo);
        EXPECT_LE(p(k), s.box[k].hi);
      }
  });
}
