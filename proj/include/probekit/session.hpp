#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "probekit/commands.hpp"
#include "probekit/cues.hpp"
#include "probekit/deform.hpp"
#include "probekit/delta.hpp"
#include "probekit/error.hpp"
#include "probekit/graph_io.hpp"
#include "probekit/layout3d.hpp"
#include "probekit/probe.hpp"
#include "probekit/rng.hpp"
#include "probekit/session_state.hpp"
#include "probekit/spatial_index.hpp"
#include "probekit/synth.hpp"

namespace probekit {

/// Result of one command. On success `changes` holds the delta against the
/// previous snapshot (when requested); on failure the state is untouched.
struct ApplyOutcome {
  bool ok{false};
  std::uint64_t seq{0};
  ErrorCode code{ErrorCode::InvalidParameter};
  std::string message;
  Json changes = Json::array();
};

/// Whether a pick still points at something: the node exists and, for a
/// focus-view pick, the probe is placed and still holds the node.
inline bool resolves(const SessionState& s, const NodeRef& ref) {
  if (!s.graph.has_node(ref.node)) return false;
  if (!ref.source) return true;
  auto it = s.probes.find(*ref.source);
  return it != s.probes.end() && it->second.placed && it->second.members.count(ref.node) != 0;
}

/// Center and radius of the axis-aligned bounding box's circumscribed
/// sphere (radius is the farthest node from the box center).
inline std::pair<Vec3, double> bounding_sphere(const Graph& graph) {
  if (graph.empty()) return {Vec3{}, 0.0};
  Vec3 lo = graph.nodes().begin()->second.position;
  Vec3 hi = lo;
  for (const auto& [id, n] : graph.nodes()) {
    lo = {std::min(lo.x, n.position.x), std::min(lo.y, n.position.y), std::min(lo.z, n.position.z)};
    hi = {std::max(hi.x, n.position.x), std::max(hi.y, n.position.y), std::max(hi.z, n.position.z)};
  }
  const Vec3 center = (lo + hi) * 0.5;
  double radius = 0.0;
  for (const auto& [id, n] : graph.nodes()) radius = std::max(radius, distance(center, n.position));
  return {center, radius};
}

/// Egocentric puts the camera at the graph's center; exocentric backs it
/// off along the view direction until the bounding sphere fills a 90 degree
/// field of view. Orientation is kept.
inline Viewpoint view_preset(const Viewpoint& vp, const Graph& graph, ViewMode mode) {
  Viewpoint out = vp;
  out.mode = mode;
  const auto [center, radius] = bounding_sphere(graph);
  if (mode == ViewMode::Egocentric) {
    out.position = center;
  } else {
    const double r = radius > 0.0 ? radius : 1.0;
    out.position = center - vp.view_direction() * (r / std::sin(kPi / 4.0));
  }
  return out;
}

namespace session_detail {

inline Probe& find_probe(SessionState& s, ProbeId id) {
  auto it = s.probes.find(id);
  if (it == s.probes.end()) throw Error(ErrorCode::UnknownProbe, "no probe " + std::to_string(id.value));
  return it->second;
}

inline Probe& placed_probe(SessionState& s, ProbeId id) {
  Probe& p = find_probe(s, id);
  if (!p.placed || !p.content) throw Error(ErrorCode::NotPlaced, "probe " + std::to_string(id.value) + " is not placed");
  return p;
}

inline Probe& held_probe(SessionState& s) {
  if (!s.held) throw Error(ErrorCode::UnknownProbe, "no probe is in hand");
  return find_probe(s, *s.held);
}

inline void require_ref(SessionState& s, const NodeRef& ref) {
  if (ref.source) {
    const Probe& p = placed_probe(s, *ref.source);
    if (!p.members.count(ref.node))
      throw Error(ErrorCode::SelectionError,
                  "node '" + ref.node.value + "' is not in probe " + std::to_string(ref.source->value));
  }
  if (!s.graph.has_node(ref.node)) throw Error(ErrorCode::UnknownId, "no node '" + ref.node.value + "'");
}

inline ProbeId allocate_probe(SessionState& s) {
  const ProbeId id{s.next_probe};
  ++s.next_probe;
  return id;
}

inline Color color_for(ProbeId id) { return palette_color(id.value - 1); }

inline void fill_missing_positions(Graph& graph, const std::vector<NodeId>& missing) {
  if (missing.empty()) return;
  LayoutParams params;
  const double radius = seeding_radius(graph.node_count(), params);
  SplitMix64 rng(params.seed);
  for (const auto& id : missing) graph.set_position(id, radius * rng.in_unit_ball());
}

struct Step {
  SessionState& s;
  SpatialIndex& index;

  const SpatialIndex& fresh_index() {
    index.refresh(s.graph);
    return index;
  }

  void operator()(const cmd::LoadGraph& c) {
    GraphDocument doc;
    if (c.graph) {
      doc = parse_graph(*c.graph, c.strict);
    } else {
      doc.graph = generate_graph(*c.synthetic);
    }
    fill_missing_positions(doc.graph, doc.missing_positions);
    s.graph = std::move(doc.graph);
    s.probes.clear();
    s.held.reset();
    s.selection.clear();
    s.retired.clear();
  }

  void operator()(const cmd::RunLayout& c) {
    if (c.incremental) {
      run_layout(s.graph, c.params, state_from_graph(s.graph, c.params));
    } else {
      run_layout(s.graph, c.params);
    }
  }

  void operator()(const cmd::SetViewpoint& c) {
    Viewpoint vp = s.viewpoint;
    vp.position = c.position;
    vp.orientation = c.orientation;
    vp.validate();
    s.viewpoint = vp;
  }

  void operator()(const cmd::SetViewMode& c) { s.viewpoint = view_preset(s.viewpoint, s.graph, c.mode); }

  void operator()(const cmd::BeginProbe& c) {
    if (s.held) throw Error(ErrorCode::ProbeInHand, "probe " + std::to_string(s.held->value) + " is already in hand");
    const ProbeId id = allocate_probe(s);
    s.probes.emplace(id, begin_probe(id, color_for(id), c.ray, c.t, c.radius));
    s.held = id;
  }

  void operator()(const cmd::AdjustProbe& c) {
    Probe& p = held_probe(s);
    p = adjust_probe(p, c.t, c.radius, c.ray);
  }

  void operator()(const cmd::PlaceProbe&) {
    Probe& p = held_probe(s);
    p = place_probe(p, s.graph, fresh_index(), s.viewpoint, s.config.probe);
    s.held.reset();
  }

  void operator()(const cmd::RepositionProbe& c) {
    Probe& p = placed_probe(s, c.probe);
    p = reposition_probe(p, Ball::make(c.center, c.radius), s.graph, fresh_index(), s.viewpoint, s.config.probe);
  }

  void operator()(const cmd::RemoveProbe& c) {
    find_probe(s, c.probe);
    s.probes.erase(c.probe);
    if (s.held == c.probe) s.held.reset();
  }

  void operator()(const cmd::SetProbeActive& c) {
    Probe& p = find_probe(s, c.probe);
    p = set_probe_active(p, c.active);
  }

  void operator()(const cmd::MoveContentView& c) {
    if (!is_finite(c.offset)) throw Error(ErrorCode::NonFiniteCoordinate, "offset is not finite");
    placed_probe(s, c.probe).content->user_offset = c.offset;
  }

  void operator()(const cmd::RotateContentView& c) {
    if (!is_finite(c.rotation) || !(c.rotation.norm() > 0.0))
      throw Error(ErrorCode::InvalidParameter, "rotation must be a nonzero finite quaternion");
    placed_probe(s, c.probe).content->rotation = c.rotation.normalized();
  }

  void operator()(const cmd::SelectNode& c) {
    require_ref(s, c.ref);
    s.selection.push_back(c.ref);
    if (s.selection.size() > 2) s.selection.erase(s.selection.begin());
  }

  void operator()(const cmd::CreateLink&) {
    if (s.selection.size() != 2) throw Error(ErrorCode::SelectionError, "CreateLink needs two selected nodes");
    if (s.selection[0].node == s.selection[1].node)
      throw Error(ErrorCode::SelectionError, "CreateLink needs two distinct nodes");
    s.graph.add_link(s.selection[0].node, s.selection[1].node);
    s.selection.clear();
  }

  void operator()(const cmd::CreateNode& c) {
    if (s.retired.count(c.id)) throw Error(ErrorCode::DuplicateId, "node id '" + c.id.value + "' was retired");
    if (!is_finite(c.position)) throw Error(ErrorCode::NonFiniteCoordinate, "position is not finite");
    if (c.source) {
      Probe& p = placed_probe(s, *c.source);
      s.graph.add_node(c.id, p.content->to_global(c.position), c.attrs);
      p = adopt_node(p, s.graph, c.id);
    } else {
      s.graph.add_node(c.id, c.position, c.attrs);
    }
  }

  void operator()(const cmd::RemoveNode& c) {
    require_ref(s, c.ref);
    s.graph.remove_node(c.ref.node);
    s.retired.insert(c.ref.node);
  }

  void operator()(const cmd::RemoveLink& c) {
    if (c.source) {
      const Probe& p = placed_probe(s, *c.source);
      if (!p.content->shows_link(Link::between(c.a, c.b)))
        throw Error(ErrorCode::UnknownLink, "probe " + std::to_string(c.source->value) + " does not show link '" +
                                                c.a.value + "'-'" + c.b.value + "'");
    }
    s.graph.remove_link(c.a, c.b);
  }

  void operator()(const cmd::Deform& c) {
    deform_step(s.graph, s.probes, s.viewpoint, DeformInput{c.u, c.dt, c.kappa.value_or(s.config.kappa)});
  }

  void operator()(const cmd::TeleportToProbe& c) {
    s.viewpoint = teleport_to_probe(s.viewpoint, find_probe(s, c.probe), c.standoff);
  }

  void operator()(const cmd::RefreshContent& c) {
    if (c.probe) {
      Probe& p = find_probe(s, *c.probe);
      p = refresh_content(p, s.graph, fresh_index(), s.viewpoint, s.config.probe);
      return;
    }
    for (auto& [id, p] : s.probes) {
      if (p.placed) p = refresh_content(p, s.graph, fresh_index(), s.viewpoint, s.config.probe);
    }
  }

  void operator()(const cmd::AutoPlaceProbe& c) {
    if (s.graph.empty()) throw Error(ErrorCode::UnknownAttribute, "graph is empty");
    const ProbeId id{s.next_probe};
    Probe p = auto_place_probe(id, color_for(id), s.graph, fresh_index(), c.attribute, c.objective, c.radius,
                               s.viewpoint, s.config.probe);
    allocate_probe(s);
    s.probes.emplace(id, std::move(p));
  }
};

/// Bookkeeping after any successful command: focus views relinked after
/// graph edits, stale picks dropped, views following the camera, haptic
/// flag recomputed.
inline void settle(SessionState& s, SpatialIndex& index, std::uint64_t graph_revision_before) {
  if (s.graph.revision() != graph_revision_before) {
    for (auto& [id, p] : s.probes) p = relink_content(std::move(p), s.graph);
  }
  std::erase_if(s.selection, [&](const NodeRef& r) { return !resolves(s, r); });
  for (auto& [id, p] : s.probes) {
    if (p.content) p.content->follow(s.viewpoint);
  }
  index.refresh(s.graph);
  const Probe* held = s.held ? &s.probes.at(*s.held) : nullptr;
  s.haptic = haptic_active(held, s.graph, index);
}

}  // namespace session_detail

/// Applies one command to `state` in place. The command's seq must be
/// applied_seq + 1. Throws Error and leaves the state untouched on failure,
/// so a rejected seq can be retried. `index` is a cache keyed on the graph's
/// revision and may be rebuilt.
inline void apply_command(SessionState& state, const Command& c, SpatialIndex& index) {
  if (c.seq != state.applied_seq + 1)
    throw Error(ErrorCode::OutOfOrder,
                "expected seq " + std::to_string(state.applied_seq + 1) + ", got " + std::to_string(c.seq));
  SessionState next = state;
  const auto revision_before = next.graph.revision();
  try {
    std::visit(session_detail::Step{next, index}, c.payload);
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(ErrorCode::InvalidParameter, e.what());
  }
  session_detail::settle(next, index, revision_before);
  next.applied_seq = c.seq;
  state = std::move(next);
}

/// A session: state plus the spatial index cache and the last snapshot
/// document, used to compute deltas.
class Session {
 public:
  Session() : Session(SessionState{}) {}
  explicit Session(SessionState state) : state_(std::move(state)) {}

  const SessionState& state() const { return state_; }
  std::uint64_t next_seq() const { return state_.applied_seq + 1; }

  /// The current snapshot document (cached).
  const Json& document() const {
    if (!doc_) doc_ = snapshot(state_);
    return *doc_;
  }

  std::string hash() const { return hex64(fnv1a64(canonical_dump(document()))); }

  /// seq 0 means "next in line". Deltas are only computed when asked for.
  ApplyOutcome apply(Command c, bool with_changes = true) {
    if (c.seq == 0) c.seq = next_seq();
    ApplyOutcome out;
    out.seq = c.seq;
    std::optional<Json> before;
    if (with_changes) before = document();
    try {
      apply_command(state_, c, index_);
    } catch (const Error& e) {
      out.code = e.code();
      out.message = e.detail();
      return out;
    }
    doc_.reset();
    out.ok = true;
    if (with_changes) out.changes = diff_snapshots(*before, document());
    return out;
  }

 private:
  SessionState state_;
  SpatialIndex index_;
  mutable std::optional<Json> doc_;
};

struct ReplayResult {
  SessionState state;
  /// Commands that were rejected, with their error.
  std::vector<ApplyOutcome> rejected;
};

/// Runs a command log from `initial`. Rejected commands leave no trace in
/// the state, exactly as they did live.
inline ReplayResult replay(const std::vector<Command>& log, SessionState initial = {}) {
  Session session(std::move(initial));
  ReplayResult out;
  for (const auto& c : log) {
    auto r = session.apply(c, false);
    if (!r.ok) out.rejected.push_back(std::move(r));
  }
  out.state = session.state();
  return out;
}

}  // namespace probekit
