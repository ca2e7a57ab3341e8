#include <gtest/gtest.h>

#include <chrono>
#include <cmath>

#include "probekit/layout3d.hpp"
#include "probekit/synth.hpp"
#include "test_support.hpp"

using namespace probekit;

namespace {

// Direct O(n^2) summation of the softened charge force.
std::vector<Vec3> pairwise_forces(const std::vector<Vec3>& pts, double strength, double softening) {
  std::vector<Vec3> out(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = 0; j < pts.size(); ++j) {
      if (i == j) continue;
      const double dx = pts[j].x - pts[i].x;
      const double dy = pts[j].y - pts[i].y;
      const double dz = pts[j].z - pts[i].z;
      const double l2 = dx * dx + dy * dy + dz * dz + softening * softening;
      out[i].x += dx * strength / l2;
      out[i].y += dy * strength / l2;
      out[i].z += dz * strength / l2;
    }
  }
  return out;
}

LayoutParams quiet() {
  LayoutParams p;
  p.many_body_strength = 0.0;
  p.center_strength = 0.0;
  return p;
}

}  // namespace

TEST(Layout, ParamsValidate) {
  LayoutParams p;
  EXPECT_NO_THROW(p.validate());
  p.theta = 1.5;
  EXPECT_ERROR_CODE(p.validate(), ErrorCode::InvalidParameter);
  p = LayoutParams{};
  p.alpha_decay = 1.0;
  EXPECT_ERROR_CODE(p.validate(), ErrorCode::InvalidParameter);
  p = LayoutParams{};
  p.alpha_min = 0.0;
  EXPECT_ERROR_CODE(p.validate(), ErrorCode::InvalidParameter);
}

TEST(Layout, SeedingIsDeterministic) {
  SplitMix64 rng(1);
  const Graph g = testing_support::random_graph(rng, 40, 0.1);
  const auto a = seed_positions(g, 99);
  const auto b = seed_positions(g, 99);
  EXPECT_EQ(a, b);
  EXPECT_NE(a.positions, seed_positions(g, 100).positions);
}

TEST(Layout, SeedingEmptyGraph) {
  const auto s = seed_positions(Graph{}, 1);
  EXPECT_TRUE(s.ids.empty());
  EXPECT_TRUE(s.positions.empty());
}

TEST(Layout, Seeding95NodesInsideSphere) {
  const Graph g = generate_graph(SyntheticSpec{});
  LayoutParams p;
  p.seed = 3;
  const auto s = seed_positions(g, p);
  ASSERT_EQ(s.positions.size(), 95u);
  const double radius = p.initial_radius * std::cbrt(95.0);
  for (const auto& x : s.positions) EXPECT_LE(norm(x), radius);
  for (const auto& v : s.velocities) EXPECT_EQ(v, Vec3{});
  EXPECT_EQ(s.alpha, p.alpha_start);
}

TEST(Layout, SpringAtRestLengthDoesNotMove) {
  Graph g;
  g.add_node("a", {0, 0, 0});
  g.add_node("b", {1, 0, 0});
  g.add_link("a", "b");
  const LayoutParams p = quiet();
  auto state = state_from_graph(g, p);
  const auto before = state.positions;
  tick(state, g, p);
  EXPECT_EQ(state.positions, before);
}

TEST(Layout, RepulsionSeparatesTwoNodes) {
  Graph g;
  g.add_node("a", {0, 0, 0});
  g.add_node("b", {0.5, 0.1, 0});
  LayoutParams p;
  p.center_strength = 0.0;
  auto state = state_from_graph(g, p);
  const double before = distance(state.positions[0], state.positions[1]);
  // the oracle force on a points away from b
  const auto f = pairwise_forces(state.positions, p.many_body_strength, p.softening);
  EXPECT_LT(dot(f[0], state.positions[1] - state.positions[0]), 0.0);
  tick(state, g, p);
  EXPECT_GT(distance(state.positions[0], state.positions[1]), before);
}

TEST(Layout, ThetaZeroMatchesPairwise) {
  SplitMix64 rng(17);
  for (std::size_t n : {2u, 10u, 50u, 100u}) {
    std::vector<Vec3> pts;
    for (std::size_t i = 0; i < n; ++i) pts.push_back(3.0 * rng.in_unit_ball());
    const auto exact = pairwise_forces(pts, -30.0 / 900.0, 1e-3);
    const auto bh = many_body_forces(pts, -30.0 / 900.0, 0.0, 1e-3);
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_NEAR(bh[i].x, exact[i].x, 1e-9);
      EXPECT_NEAR(bh[i].y, exact[i].y, 1e-9);
      EXPECT_NEAR(bh[i].z, exact[i].z, 1e-9);
    }
  }
}

TEST(Layout, BarnesHutApproximatesPairwise) {
  SplitMix64 rng(23);
  std::vector<Vec3> pts;
  for (int i = 0; i < 300; ++i) pts.push_back(5.0 * rng.in_unit_ball());
  const auto exact = pairwise_forces(pts, -1.0, 1e-3);
  const auto bh = many_body_forces(pts, -1.0, 0.9, 1e-3);
  double err = 0.0;
  double mag = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    err += norm(bh[i] - exact[i]);
    mag += norm(exact[i]);
  }
  EXPECT_LT(err / mag, 0.05);
}

TEST(Layout, RunIsDeterministic) {
  const Graph base = generate_graph(SyntheticSpec{});
  Graph a = base;
  Graph b = base;
  LayoutParams p;
  p.seed = 42;
  const auto sa = run_layout(a, p);
  const auto sb = run_layout(b, p);
  EXPECT_EQ(sa, sb);
  EXPECT_EQ(a, b);
}

TEST(Layout, PathGraphLinkLengths) {
  Graph g;
  g.add_node("A", {0, 0, 0});
  g.add_node("B", {0, 0, 0});
  g.add_node("C", {0, 0, 0});
  g.add_link("A", "B");
  g.add_link("B", "C");
  LayoutParams p;
  p.seed = 1;
  run_layout(g, p);
  const double ab = distance(g.node("A").position, g.node("B").position);
  const double bc = distance(g.node("B").position, g.node("C").position);
  EXPECT_NEAR(ab, p.link_distance, 0.25 * p.link_distance);
  EXPECT_NEAR(bc, p.link_distance, 0.25 * p.link_distance);
}

TEST(Layout, SingletonStaysFinite) {
  Graph g;
  g.add_node("alone", {0, 0, 0});
  g.add_node("x", {1, 0, 0});
  g.add_node("y", {2, 0, 0});
  g.add_link("x", "y");
  run_layout(g, LayoutParams{});
  for (const auto& [id, n] : g.nodes()) EXPECT_TRUE(is_finite(n.position)) << id;
}

TEST(Layout, CoincidentNodesStayFinite) {
  Graph g;
  for (int i = 0; i < 20; ++i) g.add_node("c" + std::to_string(i), {1, 1, 1});
  for (int i = 1; i < 20; ++i) g.add_link("c0", "c" + std::to_string(i));
  LayoutParams p;
  auto state = state_from_graph(g, p);
  for (int t = 0; t < 300; ++t) {
    tick(state, g, p);
    for (const auto& x : state.positions) ASSERT_TRUE(is_finite(x)) << "tick " << t;
    for (const auto& v : state.velocities) ASSERT_LE(norm(v), p.max_speed * p.link_distance + 1e-12);
  }
  EXPECT_GT(distance(state.positions[0], state.positions[1]), 0.1);
}

TEST(Layout, RandomGraphsStayFiniteEveryTick) {
  SplitMix64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const Graph g = testing_support::random_graph(rng, 1 + rng.below(40), rng.uniform(0.0, 0.5));
    LayoutParams p;
    p.seed = trial;
    auto state = seed_positions(g, p);
    while (state.iterations < p.max_iterations && !(state.alpha < p.alpha_min)) {
      tick(state, g, p);
      for (const auto& x : state.positions) ASSERT_TRUE(is_finite(x));
    }
  }
}

TEST(Layout, TranslationEquivarianceWithoutCentering) {
  const Graph g = generate_graph(SyntheticSpec{30, 60, 2, 5});
  LayoutParams p;
  p.center_strength = 0.0;
  p.seed = 12;
  LayoutState s1 = seed_positions(g, p);
  LayoutState s2 = s1;
  const Vec3 shift{3.25, -1.5, 0.75};
  for (auto& x : s2.positions) x += shift;
  Graph g1 = g;
  Graph g2 = g;
  run_layout(g1, p, s1);
  run_layout(g2, p, s2);
  double worst = 0.0;
  for (const auto& [id, n] : g1.nodes()) worst = std::max(worst, norm(g2.node(id).position - n.position - shift));
  EXPECT_LE(worst, 1e-6);
}

TEST(Layout, TickRejectsMismatchedState) {
  Graph g;
  g.add_node("a", {0, 0, 0});
  auto state = seed_positions(g, 1);
  g.add_node("b", {1, 0, 0});
  EXPECT_ERROR_CODE(tick(state, g, LayoutParams{}), ErrorCode::InconsistentState);
}

TEST(Layout, SyntheticGraphUnderOneSecond) {
  Graph g = generate_graph(SyntheticSpec{});
  LayoutParams p;
  p.seed = 7;
  const auto t0 = std::chrono::steady_clock::now();
  const auto state = run_layout(g, p);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_EQ(state.iterations, 300);
  EXPECT_LT(seconds, 1.0);
}
