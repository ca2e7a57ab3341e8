#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "probekit/canonical_json.hpp"
#include "probekit/commands.hpp"
#include "probekit/cues.hpp"
#include "probekit/error.hpp"
#include "probekit/graph.hpp"
#include "probekit/graph_io.hpp"
#include "probekit/json_util.hpp"
#include "probekit/probe.hpp"
#include "probekit/viewpoint.hpp"

namespace probekit {

struct SessionConfig {
  CueParams cues;
  ProbeParams probe;
  /// Deformation speed used when a DeformInput command carries no kappa.
  double kappa{1.0};

  void validate() const {
    cues.validate();
    probe.validate();
    if (!(kappa > 0.0) || !std::isfinite(kappa)) throw Error(ErrorCode::InvalidParameter, "kappa must be > 0");
  }

  friend bool operator==(const SessionConfig&, const SessionConfig&) = default;
};

struct SessionState {
  Graph graph;
  std::map<ProbeId, Probe> probes;
  /// The probe being placed, if any. At most one probe is in hand.
  std::optional<ProbeId> held;
  Viewpoint viewpoint;
  /// Pending picks for CreateLink, oldest first; holds at most two.
  std::vector<NodeRef> selection;
  bool haptic{false};
  SessionConfig config;
  /// Ids of removed nodes; never reused within a session.
  std::set<NodeId> retired;
  std::uint32_t next_probe{1};
  std::uint64_t applied_seq{0};

  friend bool operator==(const SessionState&, const SessionState&) = default;
};

inline constexpr int kSnapshotVersion = 1;

// ---------------------------------------------------------------------------
// Config JSON

inline Json config_to_json(const SessionConfig& c) {
  return {{"cues",
           {{"alpha_threshold_deg", c.cues.alpha_threshold_deg},
            {"rotation_deg", c.cues.rotation_deg},
            {"apex_distance", c.cues.apex_distance},
            {"opacity_ref", c.cues.opacity_ref},
            {"opacity_floor", c.cues.opacity_floor}}},
          {"probe",
           {{"display_radius", c.probe.display_radius},
            {"anchor_distance", c.probe.anchor_distance},
            {"highlight_scale", c.probe.highlight_scale}}},
          {"kappa", c.kappa}};
}

/// Missing keys keep their defaults, so a config file may set only a few.
inline SessionConfig config_from_json(const Json& j) {
  using json_util::number_or;
  SessionConfig c;
  try {
    if (!j.is_object()) throw FormatError("config must be an object");
    if (auto it = j.find("cues"); it != j.end()) {
      c.cues.alpha_threshold_deg = number_or(*it, "alpha_threshold_deg", c.cues.alpha_threshold_deg);
      c.cues.rotation_deg = number_or(*it, "rotation_deg", c.cues.rotation_deg);
      c.cues.apex_distance = number_or(*it, "apex_distance", c.cues.apex_distance);
      c.cues.opacity_ref = number_or(*it, "opacity_ref", c.cues.opacity_ref);
      c.cues.opacity_floor = number_or(*it, "opacity_floor", c.cues.opacity_floor);
    }
    if (auto it = j.find("probe"); it != j.end()) {
      c.probe.display_radius = number_or(*it, "display_radius", c.probe.display_radius);
      c.probe.anchor_distance = number_or(*it, "anchor_distance", c.probe.anchor_distance);
      c.probe.highlight_scale = number_or(*it, "highlight_scale", c.probe.highlight_scale);
    }
    c.kappa = number_or(j, "kappa", c.kappa);
  } catch (const FormatError& e) {
    throw Error(ErrorCode::InvalidParameter, std::string("config: ") + e.what());
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::InvalidParameter, std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------
// Snapshot

namespace snapshot_detail {

using json_util::to_json;

inline std::string probe_key(ProbeId id) { return std::to_string(id.value); }

inline Json color_json(const Color& c) { return Json::array({c[0], c[1], c[2]}); }

inline Json link_json(const Link& l) { return Json::array({l.a.value, l.b.value}); }

inline Json links_json(const std::set<Link>& links) {
  Json out = Json::array();
  for (const auto& l : links) out.push_back(link_json(l));
  return out;
}

inline Json ids_json(const std::set<NodeId>& ids) {
  Json out = Json::array();
  for (const auto& id : ids) out.push_back(id.value);
  return out;
}

inline Json content_json(const ContentView& v) {
  Json captured = Json::object();
  Json display = Json::object();
  for (const auto& [id, p] : v.captured) {
    captured[id.value] = to_json(p);
    display[id.value] = to_json(v.display_position(p));
  }
  return {{"anchor", to_json(v.anchor)},
          {"user_offset", to_json(v.user_offset)},
          {"rotation", to_json(v.rotation)},
          {"scale", v.scale},
          {"display_radius", v.display_radius},
          {"world_center", to_json(v.world_center)},
          {"world_rotation", to_json(v.world_rotation)},
          {"source_center", to_json(v.source_center)},
          {"nodes", ids_json(v.subgraph.nodes)},
          {"links", links_json(v.subgraph.links)},
          {"boundary", links_json(v.boundary)},
          {"captured", std::move(captured)},
          {"display", std::move(display)}};
}

inline Json probe_json(const Probe& p) {
  return {{"id", p.id.value},
          {"center", to_json(p.ball.center)},
          {"radius", p.ball.radius},
          {"color", color_json(p.color)},
          {"active", p.active},
          {"placed", p.placed},
          {"members", ids_json(p.members)},
          {"ray", {{"origin", to_json(p.ray.origin)}, {"direction", to_json(p.ray.direction)}}},
          {"ray_t", p.ray_t},
          {"content", p.content ? content_json(*p.content) : Json(nullptr)}};
}

inline Json node_ref_json(const NodeRef& r) {
  return {{"node", r.node.value}, {"source", command_json::source_to_json(r.source)}};
}

inline Json highlight_json(const Highlight& h) {
  Json probes = Json::array();
  for (const auto& p : h.probes) probes.push_back(p.value);
  return {{"probes", std::move(probes)}, {"color", color_json(h.color)}, {"scale", h.scale}};
}

inline Json derived_json(const SessionState& s) {
  const CueSet cues = cue_set(s.viewpoint, s.probes, s.config.cues);
  Json cones = Json::array();
  for (const auto& c : cues.cones) {
    cones.push_back({{"probe", c.probe.value},
                     {"visible", c.visible},
                     {"alpha", c.alpha},
                     {"apex", to_json(c.apex)},
                     {"axis", to_json(c.axis)},
                     {"opacity", c.opacity},
                     {"color", color_json(c.color)}});
  }
  Json tunnels = Json::array();
  for (const auto& t : cues.tunnels) {
    tunnels.push_back({{"probe", t.probe.value},
                       {"visible", t.visible},
                       {"start", to_json(t.start)},
                       {"end", to_json(t.end)},
                       {"start_radius", t.start_radius},
                       {"end_radius", t.end_radius},
                       {"color", color_json(t.color)}});
  }
  const GlobalHighlights hl = global_highlights(s.probes, s.config.probe);
  Json hl_nodes = Json::object();
  for (const auto& [id, h] : hl.nodes) hl_nodes[id.value] = highlight_json(h);
  Json hl_links = Json::array();
  for (const auto& [l, h] : hl.links) {
    Json entry = highlight_json(h);
    entry["link"] = link_json(l);
    hl_links.push_back(std::move(entry));
  }
  return {{"cones", std::move(cones)},
          {"tunnels", std::move(tunnels)},
          {"highlights", {{"nodes", std::move(hl_nodes)}, {"links", std::move(hl_links)}}}};
}

}  // namespace snapshot_detail

/// Full session document. "derived" carries render data (cues, display
/// positions, highlights) for thin clients; restore ignores it.
inline Json snapshot(const SessionState& s) {
  using namespace snapshot_detail;
  Json nodes = Json::object();
  for (const auto& [id, n] : s.graph.nodes()) {
    nodes[id.value] = {{"pos", to_json(n.position)}, {"attrs", attributes_to_json(n.attributes)}};
  }
  Json probes = Json::object();
  for (const auto& [id, p] : s.probes) probes[probe_key(id)] = probe_json(p);
  Json selection = Json::array();
  for (const auto& r : s.selection) selection.push_back(node_ref_json(r));
  return {{"format", "probekit-session"},
          {"version", kSnapshotVersion},
          {"applied_seq", s.applied_seq},
          {"graph", {{"nodes", std::move(nodes)}, {"links", links_json(s.graph.links())}}},
          {"retired", ids_json(s.retired)},
          {"probes", std::move(probes)},
          {"held", s.held ? Json(s.held->value) : Json(nullptr)},
          {"next_probe", s.next_probe},
          {"viewpoint",
           {{"position", to_json(s.viewpoint.position)},
            {"orientation", to_json(s.viewpoint.orientation)},
            {"mode", std::string(to_string(s.viewpoint.mode))}}},
          {"selection", std::move(selection)},
          {"haptic", s.haptic},
          {"config", config_to_json(s.config)},
          {"derived", derived_json(s)}};
}

inline std::string snapshot_text(const SessionState& s) { return canonical_dump(snapshot(s)); }

/// Hex FNV-1a 64 of the canonical snapshot text.
inline std::string state_hash(const SessionState& s) { return hex64(fnv1a64(snapshot_text(s))); }

namespace snapshot_detail {

using namespace json_util;

inline Color color_from(const Json& j) {
  if (!j.is_array() || j.size() != 3) throw FormatError("color must be [r,g,b]");
  Color c{};
  for (std::size_t i = 0; i < 3; ++i) {
    const auto v = j[i].get<std::int64_t>();
    if (v < 0 || v > 255) throw FormatError("color channel out of range");
    c[i] = static_cast<std::uint8_t>(v);
  }
  return c;
}

inline std::set<NodeId> ids_from(const Json& j) {
  if (!j.is_array()) throw FormatError("expected an id array");
  std::set<NodeId> out;
  for (const auto& v : j) out.insert(NodeId(v.get<std::string>()));
  return out;
}

inline std::set<Link> links_from(const Json& j) {
  if (!j.is_array()) throw FormatError("expected a link array");
  std::set<Link> out;
  for (const auto& l : j) {
    if (!l.is_array() || l.size() != 2) throw FormatError("links must be [a,b] pairs");
    out.insert(Link::between(l[0].get<std::string>(), l[1].get<std::string>()));
  }
  return out;
}

inline ContentView content_from(const Json& j, ProbeId probe) {
  ContentView v;
  v.probe = probe;
  v.anchor = vec3_field(j, "anchor");
  v.user_offset = vec3_field(j, "user_offset");
  v.rotation = quat(field(j, "rotation"), "rotation");
  v.scale = number_field(j, "scale");
  v.display_radius = number_field(j, "display_radius");
  v.world_center = vec3_field(j, "world_center");
  v.world_rotation = quat(field(j, "world_rotation"), "world_rotation");
  v.source_center = vec3_field(j, "source_center");
  v.subgraph.induced = true;
  v.subgraph.nodes = ids_from(field(j, "nodes"));
  v.subgraph.links = links_from(field(j, "links"));
  v.boundary = links_from(field(j, "boundary"));
  const Json& captured = field(j, "captured");
  if (!captured.is_object()) throw FormatError("captured must be an object");
  for (const auto& [id, pos] : captured.items()) v.captured.emplace(NodeId(id), vec3(pos, "captured"));
  return v;
}

inline Probe probe_from(const Json& j) {
  Probe p;
  p.id = ProbeId{static_cast<std::uint32_t>(unsigned_field(j, "id"))};
  p.ball = Ball::make(vec3_field(j, "center"), number_field(j, "radius"));
  p.color = color_from(field(j, "color"));
  p.active = bool_field(j, "active");
  p.placed = bool_field(j, "placed");
  p.members = ids_from(field(j, "members"));
  const Json& ray = field(j, "ray");
  p.ray.origin = vec3_field(ray, "origin");
  p.ray.direction = vec3_field(ray, "direction");
  p.ray_t = number_field(j, "ray_t");
  const Json& content = field(j, "content");
  if (!content.is_null()) p.content = content_from(content, p.id);
  return p;
}

}  // namespace snapshot_detail

/// Rebuilds a session state from a snapshot document. Anything that does
/// not parse or does not hang together raises MalformedSnapshot.
inline SessionState restore(const Json& doc) {
  using namespace snapshot_detail;
  SessionState s;
  try {
    if (!doc.is_object()) throw FormatError("snapshot must be an object");
    if (doc.value("format", std::string()) != "probekit-session") throw FormatError("not a session snapshot");
    if (unsigned_field(doc, "version") != kSnapshotVersion) throw FormatError("unsupported snapshot version");
    s.applied_seq = unsigned_field(doc, "applied_seq");

    const Json& graph = field(doc, "graph");
    const Json& nodes = field(graph, "nodes");
    if (!nodes.is_object()) throw FormatError("graph.nodes must be an object");
    for (const auto& [id, n] : nodes.items()) {
      Attributes attrs;
      const Json& a = field(n, "attrs");
      if (!a.is_object()) throw FormatError("attrs must be an object");
      for (const auto& [key, value] : a.items()) attrs.emplace(key, detail::read_attr(key, value));
      s.graph.add_node(NodeId(id), vec3_field(n, "pos"), std::move(attrs));
    }
    for (const auto& l : links_from(field(graph, "links"))) s.graph.add_link(l.a, l.b);
    s.retired = ids_from(field(doc, "retired"));

    const Json& probes = field(doc, "probes");
    if (!probes.is_object()) throw FormatError("probes must be an object");
    for (const auto& [key, pj] : probes.items()) {
      Probe p = probe_from(pj);
      if (std::to_string(p.id.value) != key) throw FormatError("probe key does not match its id");
      if (p.content) p.content->subgraph.parent_revision = s.graph.revision();
      s.probes.emplace(p.id, std::move(p));
    }
    const Json& held = field(doc, "held");
    if (!held.is_null()) s.held = ProbeId{held.get<std::uint32_t>()};
    s.next_probe = static_cast<std::uint32_t>(unsigned_field(doc, "next_probe"));

    const Json& vp = field(doc, "viewpoint");
    s.viewpoint.position = vec3_field(vp, "position");
    s.viewpoint.orientation = quat(field(vp, "orientation"), "orientation");
    s.viewpoint.mode = parse_view_mode(string_field(vp, "mode"));
    s.viewpoint.validate();

    const Json& selection = field(doc, "selection");
    if (!selection.is_array()) throw FormatError("selection must be an array");
    for (const auto& r : selection) {
      s.selection.push_back(
          NodeRef{NodeId(string_field(r, "node")), command_json::source_from_json(r)});
    }
    s.haptic = bool_field(doc, "haptic");
    s.config = config_from_json(field(doc, "config"));
  } catch (const FormatError& e) {
    throw Error(ErrorCode::MalformedSnapshot, e.what());
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::MalformedSnapshot, e.what());
  } catch (const Error& e) {
    throw Error(ErrorCode::MalformedSnapshot, e.what());
  }
  if (s.held && !s.probes.count(*s.held)) throw Error(ErrorCode::MalformedSnapshot, "held probe does not exist");
  for (const auto& [id, p] : s.probes) {
    for (const auto& m : p.members) {
      if (!s.graph.has_node(m)) throw Error(ErrorCode::MalformedSnapshot, "probe member '" + m.value + "' is missing");
    }
  }
  return s;
}

inline SessionState restore_text(const std::string& text) {
  Json doc = Json::parse(text, nullptr, false);
  if (doc.is_discarded()) throw Error(ErrorCode::MalformedSnapshot, "snapshot is not valid JSON");
  return restore(doc);
}

}  // namespace probekit
