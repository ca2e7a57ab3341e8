#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "probekit/error.hpp"
#include "probekit/probe.hpp"
#include "probekit/viewpoint.hpp"

namespace probekit {

struct CueParams {
  /// Cones show only when the angle between view direction and probe
  /// direction is strictly greater than this.
  double alpha_threshold_deg{30.0};
  /// Cone placement direction: view direction turned this far toward the
  /// probe (never past it).
  double rotation_deg{20.0};
  double apex_distance{0.5};
  /// opacity = max(floor, 1 / (1 + distance / opacity_ref))
  double opacity_ref{10.0};
  double opacity_floor{0.1};

  void validate() const {
    if (!(alpha_threshold_deg >= 0.0 && alpha_threshold_deg <= 180.0) || !(rotation_deg >= 0.0) ||
        !(apex_distance > 0.0) || !(opacity_ref > 0.0) || !(opacity_floor > 0.0 && opacity_floor <= 1.0))
      throw Error(ErrorCode::InvalidParameter, "invalid cue params");
  }

  friend bool operator==(const CueParams&, const CueParams&) = default;
};

struct ConeCue {
  ProbeId probe;
  bool visible{false};
  double alpha{0.0};
  Vec3 apex;
  Vec3 axis;
  double opacity{1.0};
  Color color{};
};

/// Truncated cone from the focus view to the probe.
struct TunnelCue {
  ProbeId probe;
  bool visible{false};
  Vec3 start;
  Vec3 end;
  double start_radius{0.0};
  double end_radius{0.0};
  Color color{};
};

struct CueSet {
  std::vector<ConeCue> cones;
  std::vector<TunnelCue> tunnels;
};

inline double cone_opacity(double distance_to_probe, const CueParams& params) {
  return std::max(params.opacity_floor, 1.0 / (1.0 + distance_to_probe / params.opacity_ref));
}

inline ConeCue compute_cone(const Viewpoint& vp, const Probe& probe, const CueParams& params) {
  if (!probe.placed) throw Error(ErrorCode::NotPlaced, "cones are computed for placed probes");
  const Vec3 w = probe.ball.center - vp.position;
  const double dist = norm(w);
  if (!(dist > 0.0)) throw Error(ErrorCode::DegenerateView, "viewpoint is at the probe center");
  const Vec3 v = normalized(vp.view_direction());
  const Vec3 w_hat = w / dist;

  ConeCue cone;
  cone.probe = probe.id;
  cone.color = probe.color;
  cone.alpha = angle_between(v, w);
  cone.opacity = cone_opacity(dist, params);
  cone.visible = cone.alpha > degrees_to_radians(params.alpha_threshold_deg);

  // Unit vector in the v-w plane orthogonal to v, pointing toward w. When w
  // is (anti)parallel to v the plane is undefined; use the camera's up.
  Vec3 toward = w_hat - dot(w_hat, v) * v;
  if (norm(toward) < 1e-12) toward = vp.up() - dot(vp.up(), v) * v;
  toward = normalized(toward);

  const double turn = std::min(degrees_to_radians(params.rotation_deg), cone.alpha);
  const Vec3 placement = std::cos(turn) * v + std::sin(turn) * toward;
  cone.apex = vp.position + params.apex_distance * placement;
  const Vec3 to_probe = probe.ball.center - cone.apex;
  cone.axis = norm(to_probe) > 0.0 ? normalized(to_probe) : w_hat;
  return cone;
}

inline TunnelCue compute_tunnel(const Probe& probe, const ContentView& view) {
  if (!probe.placed) throw Error(ErrorCode::NotPlaced, "tunnels are computed for placed probes");
  const Vec3 d = probe.ball.center - view.world_center;
  const double len = norm(d);
  if (!(len > 0.0)) throw Error(ErrorCode::DegenerateDirection, "probe center coincides with its content center");
  const Vec3 e = d / len;
  TunnelCue tunnel;
  tunnel.probe = probe.id;
  tunnel.visible = probe.active;
  tunnel.color = probe.color;
  tunnel.start = view.world_center + view.display_radius * e;
  tunnel.end = probe.ball.center - probe.ball.radius * e;
  tunnel.start_radius = view.display_radius;
  tunnel.end_radius = probe.ball.radius;
  return tunnel;
}

/// One cone and one tunnel per placed probe, in probe id order. Degenerate
/// geometry yields a hidden cone or a zero-length tunnel instead of an error.
inline CueSet cue_set(const Viewpoint& vp, const std::map<ProbeId, Probe>& probes, const CueParams& params) {
  CueSet out;
  for (const auto& [id, probe] : probes) {
    if (!probe.placed || !probe.content) continue;
    try {
      out.cones.push_back(compute_cone(vp, probe, params));
    } catch (const Error&) {
      ConeCue hidden;
      hidden.probe = id;
      hidden.color = probe.color;
      hidden.apex = vp.position;
      hidden.opacity = 1.0;
      out.cones.push_back(hidden);
    }
    ContentView view = *probe.content;
    view.follow(vp);
    try {
      out.tunnels.push_back(compute_tunnel(probe, view));
    } catch (const Error&) {
      TunnelCue hidden;
      hidden.probe = id;
      hidden.color = probe.color;
      hidden.visible = probe.active;  // zero-length, but visibility still tracks activation
      hidden.start = hidden.end = probe.ball.center;
      out.tunnels.push_back(hidden);
    }
  }
  return out;
}

}  // namespace probekit
