#pragma once

#include <cmath>
#include <map>
#include <vector>

#include "probekit/error.hpp"
#include "probekit/graph.hpp"
#include "probekit/probe.hpp"
#include "probekit/viewpoint.hpp"

namespace probekit {

/// One frame of controller input. The scaled direction of an active probe
/// is u * kappa * dt * v, so kappa is the speed in world units per second
/// at full deflection.
struct DeformInput {
  double u{0.0};
  double dt{0.016};
  double kappa{1.0};

  void validate() const {
    if (!(u >= -1.0 && u <= 1.0)) throw Error(ErrorCode::InvalidParameter, "u must lie in [-1, 1]");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw Error(ErrorCode::InvalidParameter, "dt must be > 0");
    if (!(kappa > 0.0) || !std::isfinite(kappa)) throw Error(ErrorCode::InvalidParameter, "kappa must be > 0");
  }
};

struct FieldEntry {
  ProbeId probe;
  Ball ball;
  /// Unit vector from the content center to the probe center.
  Vec3 direction;
  Vec3 scaled;
};

struct DeformField {
  std::vector<FieldEntry> entries;
};

/// Minimum separation between a focus view and its probe for a direction to
/// be defined.
inline constexpr double kMinDirectionLength = 1e-9;

inline DeformField build_field(const std::map<ProbeId, Probe>& probes, const Viewpoint& vp, const DeformInput& input) {
  input.validate();
  DeformField field;
  for (const auto& [id, probe] : probes) {
    if (!probe.active) continue;
    if (!probe.content) throw Error(ErrorCode::NotPlaced, "active probe without content");
    ContentView view = *probe.content;
    view.follow(vp);
    const Vec3 d = probe.ball.center - view.world_center;
    const double len = norm(d);
    if (!(len > kMinDirectionLength))
      throw Error(ErrorCode::DegenerateDirection, "probe " + std::to_string(id.value) + " coincides with its content");
    const Vec3 v = d / len;
    field.entries.push_back({id, probe.ball, v, v * (input.u * input.kappa * input.dt)});
  }
  if (field.entries.empty()) throw Error(ErrorCode::NoActiveProbes, "no active probes");
  return field;
}

/// Displacement of a point under the field. Inside one or more active
/// balls the point moves by the plain mean of their scaled directions;
/// outside all of them by the inverse-distance weighted mean over all.
inline Vec3 displacement(const Vec3& p, const DeformField& field) {
  Vec3 inside_sum;
  std::size_t inside = 0;
  Vec3 weighted_sum;
  double weight_total = 0.0;
  for (const auto& e : field.entries) {
    const double d = distance(p, e.ball.center);
    if (d <= e.ball.radius) {
      inside_sum += e.scaled;
      ++inside;
    } else if (inside == 0) {
      const double w = 1.0 / d;  // d > radius > 0 here
      weighted_sum += e.scaled * w;
      weight_total += w;
    }
  }
  if (inside > 0) return inside_sum / static_cast<double>(inside);
  return weighted_sum / weight_total;
}

inline Vec3 displace_node(const Vec3& p, const DeformField& field) { return p + displacement(p, field); }

/// Moves every node and every active probe center by the field built from
/// the pre-step configuration. Each point only reads its own position and
/// the frozen field, so update order does not matter.
inline void deform_step(Graph& graph, std::map<ProbeId, Probe>& probes, const Viewpoint& vp, const DeformInput& input) {
  const DeformField field = build_field(probes, vp, input);
  graph.transform_positions([&](const Node& n) { return displace_node(n.position, field); });
  for (const auto& e : field.entries) {
    Probe& probe = probes.at(e.probe);
    probe.ball.center = displace_node(e.ball.center, field);
  }
}

/// Moves the viewpoint to `standoff` behind the probe center along the
/// current view direction; orientation is kept.
inline Viewpoint teleport_to_probe(Viewpoint vp, const Probe& probe, double standoff) {
  if (!probe.placed) throw Error(ErrorCode::NotPlaced, "cannot teleport to an unplaced probe");
  if (!(standoff >= 0.0) || !std::isfinite(standoff))
    throw Error(ErrorCode::NegativeParameter, "standoff must be >= 0");
  vp.position = probe.ball.center - standoff * vp.view_direction();
  return vp;
}

}  // namespace probekit
