#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <vector>

#include "probekit/error.hpp"
#include "probekit/graph.hpp"
#include "probekit/math.hpp"
#include "probekit/rng.hpp"

namespace probekit {

/// Force-simulation parameters. Defaults follow the usual d3-force family
/// values rescaled to a unit link distance.
struct LayoutParams {
  std::uint64_t seed{0};
  double link_distance{1.0};
  /// Multiplied by 1 / min(degree(source), degree(target)) per link.
  double link_strength{1.0};
  /// Negative repels. The d3 default charge of -30 at link distance 30,
  /// rescaled to link distance 1 (charge scales with length squared).
  double many_body_strength{-30.0 / 900.0};
  double theta{0.9};
  double softening{1e-3};
  double alpha_start{1.0};
  double alpha_min{0.001};
  double alpha_decay{1.0 - std::pow(0.001, 1.0 / 300.0)};
  /// Fraction of velocity kept each tick.
  double velocity_decay{0.6};
  double center_strength{1.0};
  /// Per-tick speed cap, in link distances.
  double max_speed{10.0};
  /// Seeding sphere radius is initial_radius * cbrt(n).
  double initial_radius{1.0};
  int max_iterations{300};

  void validate() const {
    auto bad = [](const char* what) { throw Error(ErrorCode::InvalidParameter, std::string("layout: ") + what); };
    if (!(theta > 0.0 && theta <= 1.0) && theta != 0.0) bad("theta must be in (0, 1] (0 forces exact summation)");
    if (!(alpha_decay > 0.0 && alpha_decay < 1.0)) bad("alpha_decay must be in (0, 1)");
    if (!(alpha_min > 0.0)) bad("alpha_min must be > 0");
    if (!(link_distance > 0.0)) bad("link_distance must be > 0");
    if (!(velocity_decay >= 0.0 && velocity_decay <= 1.0)) bad("velocity_decay must be in [0, 1]");
    if (!(softening > 0.0)) bad("softening must be > 0");
    if (!(max_speed > 0.0)) bad("max_speed must be > 0");
    if (!(initial_radius > 0.0)) bad("initial_radius must be > 0");
    if (max_iterations < 0) bad("max_iterations must be >= 0");
    for (double v : {link_strength, many_body_strength, alpha_start, center_strength}) {
      if (!std::isfinite(v)) bad("non-finite parameter");
    }
  }
};

struct LayoutState {
  std::vector<NodeId> ids;
  std::vector<Vec3> positions;
  std::vector<Vec3> velocities;
  double alpha{1.0};
  int iterations{0};
  std::uint64_t rng_state{0};

  friend bool operator==(const LayoutState&, const LayoutState&) = default;
};

namespace layout_detail {

constexpr std::uint64_t kJiggleSalt = 0xA5A5F00DCAFEBEEFULL;
constexpr double kJiggle = 1e-6;

inline std::vector<NodeId> node_ids(const Graph& graph) {
  std::vector<NodeId> ids;
  ids.reserve(graph.node_count());
  for (const auto& [id, node] : graph.nodes()) ids.push_back(id);
  return ids;
}

// Octree over equal charges. Leaves hold one point, or several that cannot
// be separated (coincident up to the depth limit).
class Octree {
 public:
  struct Cell {
    Vec3 lo;
    double width{0.0};
    Vec3 centroid;
    std::uint32_t count{0};
    std::uint32_t begin{0};
    std::uint32_t end{0};
    std::int32_t children[8];
    bool leaf{true};
  };

  explicit Octree(const std::vector<Vec3>& pts) : pts_(pts), order_(pts.size()) {
    std::iota(order_.begin(), order_.end(), 0u);
    if (pts.empty()) return;
    Vec3 lo = pts.front();
    Vec3 hi = lo;
    for (const auto& p : pts) {
      lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
      hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
    }
    double width = std::max({hi.x - lo.x, hi.y - lo.y, hi.z - lo.z});
    if (!(width > 0.0)) width = 1.0;
    cells_.reserve(2 * pts.size());
    build(lo, width, 0, static_cast<std::uint32_t>(pts.size()), 0);
  }

  const std::vector<Cell>& cells() const { return cells_; }
  const std::vector<std::uint32_t>& order() const { return order_; }

 private:
  static constexpr int kMaxDepth = 52;

  std::int32_t build(const Vec3& lo, double width, std::uint32_t begin, std::uint32_t end, int depth) {
    const auto index = static_cast<std::int32_t>(cells_.size());
    cells_.push_back({});
    Cell cell;
    cell.lo = lo;
    cell.width = width;
    cell.begin = begin;
    cell.end = end;
    cell.count = end - begin;
    std::fill(std::begin(cell.children), std::end(cell.children), -1);
    Vec3 sum;
    for (auto i = begin; i < end; ++i) sum += pts_[order_[i]];
    cell.centroid = sum / static_cast<double>(cell.count);

    if (cell.count > 1 && depth < kMaxDepth && !all_coincident(begin, end)) {
      cell.leaf = false;
      const double half = width / 2.0;
      const Vec3 mid = lo + Vec3{half, half, half};
      std::array<std::vector<std::uint32_t>, 8> buckets;
      for (auto i = begin; i < end; ++i) buckets[octant(pts_[order_[i]], mid)].push_back(order_[i]);
      std::uint32_t cursor = begin;
      std::array<std::uint32_t, 9> bounds{};
      for (int o = 0; o < 8; ++o) {
        bounds[o] = cursor;
        for (auto idx : buckets[o]) order_[cursor++] = idx;
      }
      bounds[8] = cursor;
      for (int o = 0; o < 8; ++o) {
        if (bounds[o] == bounds[o + 1]) continue;
        const Vec3 child_lo{(o & 1) ? mid.x : lo.x, (o & 2) ? mid.y : lo.y, (o & 4) ? mid.z : lo.z};
        cell.children[o] = build(child_lo, half, bounds[o], bounds[o + 1], depth + 1);
      }
    }
    cells_[index] = cell;
    return index;
  }

  static int octant(const Vec3& p, const Vec3& mid) {
    return (p.x >= mid.x ? 1 : 0) | (p.y >= mid.y ? 2 : 0) | (p.z >= mid.z ? 4 : 0);
  }

  bool all_coincident(std::uint32_t begin, std::uint32_t end) const {
    for (auto i = begin + 1; i < end; ++i) {
      if (!(pts_[order_[i]] == pts_[order_[begin]])) return false;
    }
    return true;
  }

  const std::vector<Vec3>& pts_;
  std::vector<std::uint32_t> order_;
  std::vector<Cell> cells_;
};

inline bool inside_cell(const Octree::Cell& c, const Vec3& p) {
  return p.x >= c.lo.x && p.x <= c.lo.x + c.width && p.y >= c.lo.y && p.y <= c.lo.y + c.width &&
         p.z >= c.lo.z && p.z <= c.lo.z + c.width;
}

}  // namespace layout_detail

/// Many-body force on every point (before alpha scaling). Pair law:
///   f_i += (x_j - x_i) * strength / (|x_j - x_i|^2 + softening^2)
/// A cell is summarized by its centroid when width / distance < theta and it
/// does not contain the point itself; theta = 0 gives exact summation.
inline std::vector<Vec3> many_body_forces(const std::vector<Vec3>& positions, double strength, double theta,
                                          double softening) {
  using layout_detail::Octree;
  std::vector<Vec3> forces(positions.size());
  if (positions.size() < 2 || strength == 0.0) return forces;
  const Octree tree(positions);
  const auto& cells = tree.cells();
  const auto& order = tree.order();
  const double eps2 = softening * softening;
  const double theta2 = theta * theta;
  std::vector<std::int32_t> stack;
  stack.reserve(64);
  for (std::size_t i = 0; i < positions.size(); ++i) {
    const Vec3& xi = positions[i];
    Vec3 f;
    stack.clear();
    stack.push_back(0);
    while (!stack.empty()) {
      const auto& cell = cells[static_cast<std::size_t>(stack.back())];
      stack.pop_back();
      if (cell.leaf) {
        for (auto k = cell.begin; k < cell.end; ++k) {
          const auto j = order[k];
          if (j == i) continue;
          const Vec3 d = positions[j] - xi;
          f += d * (strength / (dot(d, d) + eps2));
        }
        continue;
      }
      const Vec3 d = cell.centroid - xi;
      const double dist2 = dot(d, d);
      if (theta > 0.0 && cell.width * cell.width < theta2 * dist2 && !layout_detail::inside_cell(cell, xi)) {
        f += d * (strength * cell.count / (dist2 + eps2));
        continue;
      }
      for (int o = 7; o >= 0; --o) {
        if (cell.children[o] >= 0) stack.push_back(cell.children[o]);
      }
    }
    forces[i] = f;
  }
  return forces;
}

/// Deterministic initial state: positions uniform in a ball of radius
/// initial_radius * cbrt(n), zero velocities, alpha = alpha_start.
inline LayoutState seed_positions(const Graph& graph, const LayoutParams& params) {
  LayoutState state;
  state.ids = layout_detail::node_ids(graph);
  SplitMix64 rng(params.seed);
  const double radius = params.initial_radius * std::cbrt(static_cast<double>(state.ids.size()));
  state.positions.reserve(state.ids.size());
  for (std::size_t i = 0; i < state.ids.size(); ++i) state.positions.push_back(radius * rng.in_unit_ball());
  state.velocities.assign(state.ids.size(), Vec3{});
  state.alpha = params.alpha_start;
  state.rng_state = params.seed ^ layout_detail::kJiggleSalt;
  return state;
}

inline LayoutState seed_positions(const Graph& graph, std::uint64_t seed) {
  LayoutParams params;
  params.seed = seed;
  return seed_positions(graph, params);
}

inline double seeding_radius(std::size_t node_count, const LayoutParams& params) {
  return params.initial_radius * std::cbrt(static_cast<double>(node_count));
}

/// State that starts from the graph's current positions (incremental
/// re-layout after edits).
inline LayoutState state_from_graph(const Graph& graph, const LayoutParams& params) {
  LayoutState state;
  state.ids = layout_detail::node_ids(graph);
  for (const auto& [id, node] : graph.nodes()) state.positions.push_back(node.position);
  state.velocities.assign(state.ids.size(), Vec3{});
  state.alpha = params.alpha_start;
  state.rng_state = params.seed ^ layout_detail::kJiggleSalt;
  return state;
}

namespace layout_detail {

// Moves every node whose position equals an earlier node's (in sorted
// order) by a tiny seeded offset, so no pair is exactly coincident.
inline void separate_coincident(LayoutState& state) {
  const auto n = state.positions.size();
  if (n < 2) return;
  const auto original = state.positions;
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) {
    const Vec3& pa = original[a];
    const Vec3& pb = original[b];
    if (pa.x != pb.x) return pa.x < pb.x;
    if (pa.y != pb.y) return pa.y < pb.y;
    if (pa.z != pb.z) return pa.z < pb.z;
    return a < b;
  });
  SplitMix64 rng(state.rng_state);
  bool jiggled = false;
  for (std::size_t k = 1; k < n; ++k) {
    if (original[order[k]] == original[order[k - 1]]) {
      state.positions[order[k]] += Vec3{rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)} * kJiggle;
      jiggled = true;
    }
  }
  if (jiggled) state.rng_state = rng.state();
}

}  // namespace layout_detail

/// One simulation step: link springs, many-body repulsion, centering, then
/// velocity decay and integration; finally alpha decays toward 0.
inline void tick(LayoutState& state, const Graph& graph, const LayoutParams& params) {
  const std::size_t n = state.ids.size();
  if (n != graph.node_count() || state.positions.size() != n || state.velocities.size() != n)
    throw Error(ErrorCode::InconsistentState, "layout state does not match graph node set");
  std::map<NodeId, std::uint32_t> index;
  {
    std::uint32_t i = 0;
    auto it = graph.nodes().begin();
    for (; i < n; ++i, ++it) {
      if (!(it->first == state.ids[i])) throw Error(ErrorCode::InconsistentState, "layout state ids differ from graph");
      index.emplace_hint(index.end(), state.ids[i], i);
    }
  }

  layout_detail::separate_coincident(state);

  const double alpha = state.alpha;

  // Links, sequentially in canonical order, against predicted positions.
  for (const auto& link : graph.links()) {
    const auto s = index.at(link.a);
    const auto t = index.at(link.b);
    const Vec3 d = (state.positions[t] + state.velocities[t]) - (state.positions[s] + state.velocities[s]);
    const double l = norm(d);
    if (!(l > 0.0)) continue;
    const double deg_s = static_cast<double>(graph.degree(link.a));
    const double deg_t = static_cast<double>(graph.degree(link.b));
    const double strength = params.link_strength / std::min(deg_s, deg_t);
    const double bias = deg_s / (deg_s + deg_t);
    const Vec3 pull = d * ((l - params.link_distance) / l * alpha * strength);
    state.velocities[t] -= pull * bias;
    state.velocities[s] += pull * (1.0 - bias);
  }

  if (params.many_body_strength != 0.0) {
    const auto forces = many_body_forces(state.positions, params.many_body_strength, params.theta, params.softening);
    for (std::size_t i = 0; i < n; ++i) state.velocities[i] += forces[i] * alpha;
  }

  if (params.center_strength != 0.0 && n > 0) {
    Vec3 mean;
    for (const auto& p : state.positions) mean += p;
    mean = mean / static_cast<double>(n);
    const Vec3 shift = mean * params.center_strength;
    for (auto& p : state.positions) p -= shift;
  }

  const double cap = params.max_speed * params.link_distance;
  for (std::size_t i = 0; i < n; ++i) {
    Vec3& v = state.velocities[i];
    v *= params.velocity_decay;
    const double speed = norm(v);
    if (speed > cap) v *= cap / speed;
    state.positions[i] += v;
  }

  state.alpha += (0.0 - state.alpha) * params.alpha_decay;
  ++state.iterations;
}

/// Ticks until alpha < alpha_min or max_iterations, then writes positions
/// back into the graph.
inline LayoutState run_layout(Graph& graph, const LayoutParams& params, LayoutState state) {
  params.validate();
  while (state.iterations < params.max_iterations && !(state.alpha < params.alpha_min)) tick(state, graph, params);
  std::size_t i = 0;
  graph.transform_positions([&](const Node&) { return state.positions[i++]; });
  return state;
}

inline LayoutState run_layout(Graph& graph, const LayoutParams& params) {
  params.validate();
  return run_layout(graph, params, seed_positions(graph, params));
}

}  // namespace probekit
