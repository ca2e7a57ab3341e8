#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "probekit/error.hpp"
#include "probekit/graph.hpp"
#include "probekit/spatial_index.hpp"
#include "probekit/viewpoint.hpp"

namespace probekit {

struct ProbeId {
  std::uint32_t value{0};

  friend auto operator<=>(const ProbeId&, const ProbeId&) = default;
  friend bool operator==(const ProbeId&, const ProbeId&) = default;
};

using Color = std::array<std::uint8_t, 3>;

/// Fixed palette, cycled by probe creation order.
inline constexpr std::array<Color, 8> kProbePalette{{
    {31, 119, 180},
    {255, 127, 14},
    {44, 160, 44},
    {214, 39, 40},
    {148, 103, 189},
    {140, 86, 75},
    {227, 119, 194},
    {23, 190, 207},
}};

inline Color palette_color(std::size_t ordinal) { return kProbePalette[ordinal % kProbePalette.size()]; }

struct ProbeParams {
  /// Radius of the sphere the focus view is scaled into.
  double display_radius{0.3};
  /// Distance in front of the viewpoint where focus views are anchored.
  double anchor_distance{0.6};
  /// Render hint for member nodes in the global graph.
  double highlight_scale{1.5};

  void validate() const {
    if (!(display_radius > 0.0) || !(anchor_distance >= 0.0) || !(highlight_scale > 0.0))
      throw Error(ErrorCode::InvalidParameter, "probe params must be positive");
  }

  friend bool operator==(const ProbeParams&, const ProbeParams&) = default;
};

/// Scaled, user-anchored display of a probe's induced subgraph.
///
/// The view sits at `anchor + user_offset` in the camera frame, so it follows
/// the viewpoint. A member captured at global position p is drawn at
///   world_center + world_rotation * (scale * (p - source_center))
/// where world_rotation = viewpoint orientation * rotation.
struct ContentView {
  ProbeId probe;
  Vec3 anchor;
  Vec3 user_offset;
  Quat rotation;
  double scale{1.0};
  double display_radius{0.3};
  Vec3 world_center;
  Quat world_rotation;
  Vec3 source_center;
  Subgraph subgraph;
  std::map<NodeId, Vec3> captured;
  /// Parent links with exactly one endpoint in the view; drawn as stubs.
  std::set<Link> boundary;

  Vec3 display_position(const Vec3& global) const {
    return world_center + world_rotation.rotate((global - source_center) * scale);
  }

  Vec3 display_position(const NodeId& id) const {
    auto it = captured.find(id);
    if (it == captured.end()) throw Error(ErrorCode::UnknownId, "node '" + id.value + "' is not in this view");
    return display_position(it->second);
  }

  /// Inverse of display_position.
  Vec3 to_global(const Vec3& display) const {
    return source_center + world_rotation.conjugate().rotate(display - world_center) / scale;
  }

  bool shows_link(const Link& l) const { return subgraph.contains(l) || boundary.count(l) != 0; }

  void follow(const Viewpoint& vp) {
    world_center = vp.to_world(anchor + user_offset);
    world_rotation = vp.orientation * rotation;
  }

  friend bool operator==(const ContentView&, const ContentView&) = default;
};

struct Probe {
  ProbeId id;
  Ball ball;
  Color color{};
  bool active{false};
  bool placed{false};
  std::set<NodeId> members;
  std::optional<ContentView> content;
  /// Placement ray and parameter while the probe is held.
  Ray ray;
  double ray_t{0.0};

  friend bool operator==(const Probe&, const Probe&) = default;
};

/// Ids of nodes whose position lies inside the probe's ball.
inline std::vector<NodeId> probe_hits(const Probe& probe, const Graph& graph, const SpatialIndex& index) {
  return index.nodes_in_ball(graph, probe.ball);
}

inline Probe begin_probe(ProbeId id, const Color& color, const Ray& ray, double t, double radius) {
  Probe probe;
  probe.id = id;
  probe.color = color;
  probe.ray = ray;
  probe.ray_t = t;
  probe.ball = Ball::make(point_on_ray(ray, t), radius);
  return probe;
}

inline Probe adjust_probe(Probe probe, double t, double radius, const std::optional<Ray>& ray = std::nullopt) {
  if (ray) probe.ray = *ray;
  probe.ball = Ball::make(point_on_ray(probe.ray, t), radius);
  probe.ray_t = t;
  return probe;
}

/// Vibration flag: an unplaced probe is held and touches at least one node.
inline bool haptic_active(const Probe* held, const Graph& graph, const SpatialIndex& index) {
  if (held == nullptr || held->placed) return false;
  if (!index.is_current(graph)) throw Error(ErrorCode::StaleIndex, "spatial index is stale");
  return index.any_in_ball(held->ball);
}

namespace probe_detail {

inline ContentView build_content(const Probe& probe, const Graph& graph, const std::set<NodeId>& members,
                                 const Viewpoint& vp, const ProbeParams& params,
                                 const std::optional<ContentView>& previous) {
  ContentView view;
  view.probe = probe.id;
  view.anchor = {0.0, 0.0, -params.anchor_distance};
  if (previous) {
    view.user_offset = previous->user_offset;
    view.rotation = previous->rotation;
  }
  view.display_radius = params.display_radius;
  view.scale = params.display_radius / probe.ball.radius;
  view.source_center = probe.ball.center;
  view.subgraph = induced_subgraph(graph, members);
  for (const auto& id : members) view.captured.emplace(id, graph.node(id).position);
  view.boundary = boundary_links(graph, members);
  view.follow(vp);
  return view;
}

}  // namespace probe_detail

/// Fixes the probe, captures the nodes inside its ball and builds the focus
/// view in front of the viewpoint.
inline Probe place_probe(Probe probe, const Graph& graph, const SpatialIndex& index, const Viewpoint& vp,
                         const ProbeParams& params) {
  if (probe.placed) throw Error(ErrorCode::InvalidParameter, "probe is already placed");
  const auto hits = probe_hits(probe, graph, index);
  probe.members = std::set<NodeId>(hits.begin(), hits.end());
  probe.placed = true;
  probe.content = probe_detail::build_content(probe, graph, probe.members, vp, params, std::nullopt);
  return probe;
}

inline Probe reposition_probe(Probe probe, const Ball& ball, const Graph& graph, const SpatialIndex& index,
                              const Viewpoint& vp, const ProbeParams& params) {
  if (!probe.placed) throw Error(ErrorCode::NotPlaced, "probe is not placed");
  probe.ball = Ball::make(ball.center, ball.radius);
  const auto hits = probe_hits(probe, graph, index);
  probe.members = std::set<NodeId>(hits.begin(), hits.end());
  probe.content = probe_detail::build_content(probe, graph, probe.members, vp, params, probe.content);
  return probe;
}

/// Recomputes membership from current positions.
inline Probe refresh_content(Probe probe, const Graph& graph, const SpatialIndex& index, const Viewpoint& vp,
                             const ProbeParams& params) {
  if (!probe.placed) throw Error(ErrorCode::NotPlaced, "probe is not placed");
  const auto hits = probe_hits(probe, graph, index);
  probe.members = std::set<NodeId>(hits.begin(), hits.end());
  probe.content = probe_detail::build_content(probe, graph, probe.members, vp, params, probe.content);
  return probe;
}

/// After a graph edit: drop members that no longer exist and re-derive the
/// link sets. Membership is not re-evaluated and captured positions stay.
inline Probe relink_content(Probe probe, const Graph& graph) {
  if (!probe.placed || !probe.content) return probe;
  std::erase_if(probe.members, [&](const NodeId& id) { return !graph.has_node(id); });
  auto& view = *probe.content;
  std::erase_if(view.captured, [&](const auto& kv) { return !probe.members.count(kv.first); });
  view.subgraph = induced_subgraph(graph, probe.members);
  view.boundary = boundary_links(graph, probe.members);
  return probe;
}

/// Adds a node created inside this probe's view to its membership.
inline Probe adopt_node(Probe probe, const Graph& graph, const NodeId& id) {
  if (!probe.placed || !probe.content) throw Error(ErrorCode::NotPlaced, "probe is not placed");
  probe.members.insert(id);
  probe.content->captured[id] = graph.node(id).position;
  return relink_content(std::move(probe), graph);
}

inline Probe set_probe_active(Probe probe, bool active) {
  if (!probe.placed) throw Error(ErrorCode::NotPlaced, "only placed probes can be (de)activated");
  probe.active = active;
  return probe;
}

enum class Objective { Max, Min };

inline Objective parse_objective(std::string_view s) {
  if (s == "max") return Objective::Max;
  if (s == "min") return Objective::Min;
  throw Error(ErrorCode::InvalidParameter, "objective must be 'max' or 'min'");
}

constexpr std::string_view to_string(Objective o) { return o == Objective::Max ? "max" : "min"; }

/// Node with the extremal numeric value of `attribute`; ties go to the
/// smallest id.
inline NodeId extremal_node(const Graph& graph, const std::string& attribute, Objective objective) {
  std::optional<NodeId> best;
  double best_value = 0.0;
  for (const auto& [id, node] : graph.nodes()) {  // id order, so first hit wins ties
    auto it = node.attributes.find(attribute);
    if (it == node.attributes.end()) continue;
    const auto v = numeric(it->second);
    if (!v) continue;
    const bool better = objective == Objective::Max ? *v > best_value : *v < best_value;
    if (!best || better) {
      best = id;
      best_value = *v;
    }
  }
  if (!best) throw Error(ErrorCode::UnknownAttribute, "no node has a numeric '" + attribute + "'");
  return *best;
}

inline Probe auto_place_probe(ProbeId id, const Color& color, const Graph& graph, const SpatialIndex& index,
                              const std::string& attribute, Objective objective, double radius, const Viewpoint& vp,
                              const ProbeParams& params) {
  const NodeId target = extremal_node(graph, attribute, objective);
  Probe probe;
  probe.id = id;
  probe.color = color;
  probe.ball = Ball::make(graph.node(target).position, radius);
  probe.ray = Ray::make(vp.position, probe.ball.center == vp.position ? vp.view_direction()
                                                                         : probe.ball.center - vp.position);
  probe.ray_t = distance(probe.ball.center, vp.position);
  return place_probe(std::move(probe), graph, index, vp, params);
}

struct Highlight {
  std::vector<ProbeId> probes;
  Color color{};
  double scale{1.0};

  friend bool operator==(const Highlight&, const Highlight&) = default;
};

struct GlobalHighlights {
  std::map<NodeId, Highlight> nodes;
  std::map<Link, Highlight> links;
};

/// Render hints for global nodes and links captured by placed probes. An
/// element shared by several probes takes the color of the lowest probe id.
inline GlobalHighlights global_highlights(const std::map<ProbeId, Probe>& probes, const ProbeParams& params) {
  GlobalHighlights out;
  auto mark = [&](auto& table, const auto& key, const Probe& probe) {
    auto [it, fresh] = table.try_emplace(key);
    if (fresh) {
      it->second.color = probe.color;
      it->second.scale = params.highlight_scale;
    }
    it->second.probes.push_back(probe.id);
  };
  for (const auto& [pid, probe] : probes) {
    if (!probe.placed || !probe.content) continue;
    for (const auto& id : probe.members) mark(out.nodes, id, probe);
    for (const auto& l : probe.content->subgraph.links) mark(out.links, l, probe);
  }
  return out;
}

}  // namespace probekit
