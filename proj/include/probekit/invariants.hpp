#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "probekit/session.hpp"

namespace probekit {

inline constexpr double kFidelityTolerance = 1e-9;

/// Checks the session-wide consistency rules and returns one message per
/// violation. Everything is recomputed by brute force; the spatial index is
/// not consulted.
inline std::vector<std::string> check_invariants(const SessionState& s) {
  std::vector<std::string> out;
  auto fail = [&](std::string msg) { out.push_back(std::move(msg)); };

  try {
    s.graph.check_integrity();
  } catch (const Error& e) {
    fail(std::string("graph: ") + e.what());
  }
  for (const auto& id : s.retired) {
    if (s.graph.has_node(id)) fail("retired id '" + id.value + "' is live");
  }
  try {
    s.viewpoint.validate();
  } catch (const Error& e) {
    fail(std::string("viewpoint: ") + e.what());
  }

  if (s.held) {
    auto it = s.probes.find(*s.held);
    if (it == s.probes.end()) {
      fail("held probe does not exist");
    } else if (it->second.placed) {
      fail("held probe is already placed");
    }
  }

  for (const auto& [id, p] : s.probes) {
    const std::string name = "probe " + std::to_string(id.value);
    if (p.id != id) fail(name + ": id mismatch");
    if (id.value == 0 || id.value >= s.next_probe) fail(name + ": id outside the allocated range");
    if (p.color != palette_color(id.value - 1)) fail(name + ": color changed");
    if (p.active && !p.placed) fail(name + ": active but not placed");
    if (!p.placed && s.held != id) fail(name + ": unplaced and not in hand");
    if (p.placed != p.content.has_value()) fail(name + ": content present iff placed violated");
    if (!(p.ball.radius > 0.0) || !is_finite(p.ball.center)) fail(name + ": invalid ball");
    for (const auto& m : p.members) {
      if (!s.graph.has_node(m)) fail(name + ": member '" + m.value + "' does not exist");
    }
    if (!p.content) continue;
    const ContentView& v = *p.content;
    if (v.probe != id) fail(name + ": content belongs to another probe");
    if (v.subgraph.nodes != p.members) fail(name + ": content nodes differ from members");
    std::set<NodeId> captured_ids;
    for (const auto& [n, pos] : v.captured) captured_ids.insert(n);
    if (captured_ids != p.members) fail(name + ": captured positions differ from members");

    std::set<Link> induced;
    std::set<Link> boundary;
    for (const auto& l : s.graph.links()) {
      const bool a = p.members.count(l.a) != 0;
      const bool b = p.members.count(l.b) != 0;
      if (a && b) induced.insert(l);
      if (a != b) boundary.insert(l);
    }
    if (v.subgraph.links != induced) fail(name + ": content links are not the induced links");
    if (v.boundary != boundary) fail(name + ": boundary links are stale");

    if (std::abs(v.rotation.norm() - 1.0) > kFidelityTolerance) fail(name + ": content rotation is not unit");
    if (distance(v.world_center, s.viewpoint.to_world(v.anchor + v.user_offset)) > kFidelityTolerance)
      fail(name + ": content does not follow the viewpoint");
    if (!(v.scale > 0.0)) fail(name + ": nonpositive content scale");

    // Pairwise distances in the view are the captured ones times the scale.
    std::vector<std::pair<Vec3, Vec3>> pts;
    for (const auto& [n, pos] : v.captured) {
      pts.emplace_back(pos, v.display_position(pos));
      if (pts.size() == 64) break;
    }
    for (std::size_t i = 0; i < pts.size(); ++i) {
      for (std::size_t j = i + 1; j < pts.size(); ++j) {
        const double want = v.scale * distance(pts[i].first, pts[j].first);
        const double got = distance(pts[i].second, pts[j].second);
        if (std::abs(got - want) > kFidelityTolerance * std::max(1.0, want)) {
          fail(name + ": content distorts member geometry");
          i = pts.size();
          break;
        }
      }
    }
  }

  if (s.selection.size() > 2) fail("more than two pending selections");
  for (const auto& r : s.selection) {
    if (!resolves(s, r)) fail("selection '" + r.node.value + "' does not resolve");
  }

  bool touching = false;
  if (s.held) {
    auto it = s.probes.find(*s.held);
    if (it != s.probes.end() && !it->second.placed) {
      for (const auto& [id, n] : s.graph.nodes()) {
        if (distance(n.position, it->second.ball.center) <= it->second.ball.radius) {
          touching = true;
          break;
        }
      }
    }
  }
  if (s.haptic != touching) fail("haptic flag disagrees with the held probe");
  return out;
}

}  // namespace probekit
