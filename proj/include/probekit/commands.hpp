#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "probekit/deform.hpp"
#include "probekit/error.hpp"
#include "probekit/graph.hpp"
#include "probekit/graph_io.hpp"
#include "probekit/json_util.hpp"
#include "probekit/layout3d.hpp"
#include "probekit/probe.hpp"
#include "probekit/synth.hpp"
#include "probekit/viewpoint.hpp"

namespace probekit {

/// A node picked in some view: the global graph (no source) or a probe's
/// focus view.
struct NodeRef {
  NodeId node;
  std::optional<ProbeId> source;

  friend bool operator==(const NodeRef&, const NodeRef&) = default;
};

namespace cmd {

/// Exactly one of `graph` (an inline graph document) or `synthetic`.
struct LoadGraph {
  std::optional<Json> graph;
  std::optional<SyntheticSpec> synthetic;
  bool strict{false};
  friend bool operator==(const LoadGraph&, const LoadGraph&) = default;
};
struct RunLayout {
  LayoutParams params;
  /// Start from current positions instead of reseeding.
  bool incremental{false};
};
struct SetViewpoint {
  Vec3 position;
  Quat orientation;
  friend bool operator==(const SetViewpoint&, const SetViewpoint&) = default;
};
struct SetViewMode {
  ViewMode mode{ViewMode::Egocentric};
  friend bool operator==(const SetViewMode&, const SetViewMode&) = default;
};
struct BeginProbe {
  Ray ray;
  double t{0.0};
  double radius{1.0};
  friend bool operator==(const BeginProbe&, const BeginProbe&) = default;
};
struct AdjustProbe {
  double t{0.0};
  double radius{1.0};
  std::optional<Ray> ray;
  friend bool operator==(const AdjustProbe&, const AdjustProbe&) = default;
};
struct PlaceProbe {
  friend bool operator==(const PlaceProbe&, const PlaceProbe&) = default;
};
struct RepositionProbe {
  ProbeId probe;
  Vec3 center;
  double radius{1.0};
  friend bool operator==(const RepositionProbe&, const RepositionProbe&) = default;
};
struct RemoveProbe {
  ProbeId probe;
  friend bool operator==(const RemoveProbe&, const RemoveProbe&) = default;
};
struct SetProbeActive {
  ProbeId probe;
  bool active{true};
  friend bool operator==(const SetProbeActive&, const SetProbeActive&) = default;
};
struct MoveContentView {
  ProbeId probe;
  Vec3 offset;
  friend bool operator==(const MoveContentView&, const MoveContentView&) = default;
};
struct RotateContentView {
  ProbeId probe;
  Quat rotation;
  friend bool operator==(const RotateContentView&, const RotateContentView&) = default;
};
struct SelectNode {
  NodeRef ref;
  friend bool operator==(const SelectNode&, const SelectNode&) = default;
};
struct CreateLink {
  friend bool operator==(const CreateLink&, const CreateLink&) = default;
};
/// With a source probe, `position` is in that focus view's display space.
struct CreateNode {
  NodeId id;
  Vec3 position;
  Attributes attrs;
  std::optional<ProbeId> source;
  friend bool operator==(const CreateNode&, const CreateNode&) = default;
};
struct RemoveNode {
  NodeRef ref;
  friend bool operator==(const RemoveNode&, const RemoveNode&) = default;
};
struct RemoveLink {
  NodeId a;
  NodeId b;
  std::optional<ProbeId> source;
  friend bool operator==(const RemoveLink&, const RemoveLink&) = default;
};
/// kappa falls back to the session's configured speed when absent.
struct Deform {
  double u{0.0};
  double dt{0.016};
  std::optional<double> kappa;
  friend bool operator==(const Deform&, const Deform&) = default;
};
struct TeleportToProbe {
  ProbeId probe;
  double standoff{0.0};
  friend bool operator==(const TeleportToProbe&, const TeleportToProbe&) = default;
};
/// Without a probe, refreshes every placed probe.
struct RefreshContent {
  std::optional<ProbeId> probe;
  friend bool operator==(const RefreshContent&, const RefreshContent&) = default;
};
struct AutoPlaceProbe {
  std::string attribute;
  Objective objective{Objective::Max};
  double radius{1.0};
  friend bool operator==(const AutoPlaceProbe&, const AutoPlaceProbe&) = default;
};

inline bool operator==(const RunLayout& x, const RunLayout& y) {
  const auto& p = x.params;
  const auto& q = y.params;
  return x.incremental == y.incremental && p.seed == q.seed && p.link_distance == q.link_distance &&
         p.link_strength == q.link_strength && p.many_body_strength == q.many_body_strength && p.theta == q.theta &&
         p.softening == q.softening && p.alpha_start == q.alpha_start && p.alpha_min == q.alpha_min &&
         p.alpha_decay == q.alpha_decay && p.velocity_decay == q.velocity_decay &&
         p.center_strength == q.center_strength && p.max_speed == q.max_speed &&
         p.initial_radius == q.initial_radius && p.max_iterations == q.max_iterations;
}

}  // namespace cmd

/// Alternative order matches CommandKind.
using CommandPayload =
    std::variant<cmd::LoadGraph, cmd::RunLayout, cmd::SetViewpoint, cmd::SetViewMode, cmd::BeginProbe,
                 cmd::AdjustProbe, cmd::PlaceProbe, cmd::RepositionProbe, cmd::RemoveProbe, cmd::SetProbeActive,
                 cmd::MoveContentView, cmd::RotateContentView, cmd::SelectNode, cmd::CreateLink, cmd::CreateNode,
                 cmd::RemoveNode, cmd::RemoveLink, cmd::Deform, cmd::TeleportToProbe, cmd::RefreshContent,
                 cmd::AutoPlaceProbe>;

enum class CommandKind {
  LoadGraph,
  RunLayout,
  SetViewpoint,
  SetViewMode,
  BeginProbe,
  AdjustProbe,
  PlaceProbe,
  RepositionProbe,
  RemoveProbe,
  SetProbeActive,
  MoveContentView,
  RotateContentView,
  SelectNode,
  CreateLink,
  CreateNode,
  RemoveNode,
  RemoveLink,
  DeformInput,
  TeleportToProbe,
  RefreshContent,
  AutoPlaceProbe,
};

inline constexpr std::array<std::string_view, 21> kCommandKindNames{
    "LoadGraph",        "RunLayout",       "SetViewpoint",   "SetViewMode",       "BeginProbe",
    "AdjustProbe",      "PlaceProbe",      "RepositionProbe", "RemoveProbe",      "SetProbeActive",
    "MoveContentView",  "RotateContentView", "SelectNode",   "CreateLink",        "CreateNode",
    "RemoveNode",       "RemoveLink",      "DeformInput",    "TeleportToProbe",   "RefreshContent",
    "AutoPlaceProbe",
};

static_assert(std::variant_size_v<CommandPayload> == kCommandKindNames.size());

constexpr std::string_view to_string(CommandKind k) { return kCommandKindNames[static_cast<std::size_t>(k)]; }

struct Command {
  std::uint64_t seq{0};
  CommandPayload payload;

  CommandKind kind() const { return static_cast<CommandKind>(payload.index()); }

  friend bool operator==(const Command&, const Command&) = default;
};

// ---------------------------------------------------------------------------
// JSON

namespace command_json {

using namespace json_util;

inline Json ray_to_json(const Ray& r) { return {{"origin", to_json(r.origin)}, {"direction", to_json(r.direction)}}; }

inline Ray ray_from_json(const Json& j) { return Ray::make(vec3_field(j, "origin"), vec3_field(j, "direction")); }

inline ProbeId probe_field(const Json& obj, const char* key) {
  const auto v = unsigned_field(obj, key);
  if (v > 0xFFFFFFFFULL) throw FormatError("probe id out of range");
  return ProbeId{static_cast<std::uint32_t>(v)};
}

inline Json source_to_json(const std::optional<ProbeId>& s) {
  return s ? Json(s->value) : Json("global");
}

inline std::optional<ProbeId> source_from_json(const Json& obj) {
  auto it = obj.find("source");
  if (it == obj.end() || (it->is_string() && it->get<std::string>() == "global")) return std::nullopt;
  if (it->is_number_unsigned() || (it->is_number_integer() && it->get<std::int64_t>() >= 0))
    return ProbeId{it->get<std::uint32_t>()};
  throw FormatError("source must be \"global\" or a probe id");
}

inline NodeId node_field(const Json& obj, const char* key) { return detail::read_node_token(field(obj, key), key); }

inline Json layout_params_to_json(const LayoutParams& p) {
  return {{"seed", p.seed},
          {"link_distance", p.link_distance},
          {"link_strength", p.link_strength},
          {"many_body_strength", p.many_body_strength},
          {"theta", p.theta},
          {"softening", p.softening},
          {"alpha_start", p.alpha_start},
          {"alpha_min", p.alpha_min},
          {"alpha_decay", p.alpha_decay},
          {"velocity_decay", p.velocity_decay},
          {"center_strength", p.center_strength},
          {"max_speed", p.max_speed},
          {"initial_radius", p.initial_radius},
          {"iterations", p.max_iterations}};
}

/// Every key is optional; missing keys keep the defaults.
inline LayoutParams layout_params_from_json(const Json& j) {
  LayoutParams p;
  if (!j.is_object()) throw FormatError("layout params must be an object");
  if (j.contains("seed")) p.seed = unsigned_field(j, "seed");
  p.link_distance = number_or(j, "link_distance", p.link_distance);
  p.link_strength = number_or(j, "link_strength", p.link_strength);
  p.many_body_strength = number_or(j, "many_body_strength", p.many_body_strength);
  p.theta = number_or(j, "theta", p.theta);
  p.softening = number_or(j, "softening", p.softening);
  p.alpha_start = number_or(j, "alpha_start", p.alpha_start);
  p.alpha_min = number_or(j, "alpha_min", p.alpha_min);
  p.alpha_decay = number_or(j, "alpha_decay", p.alpha_decay);
  p.velocity_decay = number_or(j, "velocity_decay", p.velocity_decay);
  p.center_strength = number_or(j, "center_strength", p.center_strength);
  p.max_speed = number_or(j, "max_speed", p.max_speed);
  p.initial_radius = number_or(j, "initial_radius", p.initial_radius);
  if (j.contains("iterations")) p.max_iterations = static_cast<int>(unsigned_field(j, "iterations"));
  return p;
}

inline Json synthetic_to_json(const SyntheticSpec& s) {
  return {{"nodes", s.nodes}, {"links", s.links}, {"attrs", s.attrs}, {"seed", s.seed}};
}

inline SyntheticSpec synthetic_from_json(const Json& j) {
  SyntheticSpec s;
  if (j.contains("nodes")) s.nodes = unsigned_field(j, "nodes");
  if (j.contains("links")) s.links = unsigned_field(j, "links");
  if (j.contains("attrs")) s.attrs = unsigned_field(j, "attrs");
  if (j.contains("seed")) s.seed = unsigned_field(j, "seed");
  return s;
}

struct PayloadWriter {
  Json operator()(const cmd::LoadGraph& c) const {
    Json j = Json::object();
    if (c.graph) j["graph"] = *c.graph;
    if (c.synthetic) j["synthetic"] = synthetic_to_json(*c.synthetic);
    if (c.strict) j["strict"] = true;
    return j;
  }
  Json operator()(const cmd::RunLayout& c) const {
    Json j = layout_params_to_json(c.params);
    j["incremental"] = c.incremental;
    return j;
  }
  Json operator()(const cmd::SetViewpoint& c) const {
    return {{"position", to_json(c.position)}, {"orientation", to_json(c.orientation)}};
  }
  Json operator()(const cmd::SetViewMode& c) const { return {{"mode", std::string(to_string(c.mode))}}; }
  Json operator()(const cmd::BeginProbe& c) const {
    return {{"ray", ray_to_json(c.ray)}, {"t", c.t}, {"radius", c.radius}};
  }
  Json operator()(const cmd::AdjustProbe& c) const {
    Json j = {{"t", c.t}, {"radius", c.radius}};
    if (c.ray) j["ray"] = ray_to_json(*c.ray);
    return j;
  }
  Json operator()(const cmd::PlaceProbe&) const { return Json::object(); }
  Json operator()(const cmd::RepositionProbe& c) const {
    return {{"probe", c.probe.value}, {"center", to_json(c.center)}, {"radius", c.radius}};
  }
  Json operator()(const cmd::RemoveProbe& c) const { return {{"probe", c.probe.value}}; }
  Json operator()(const cmd::SetProbeActive& c) const { return {{"probe", c.probe.value}, {"active", c.active}}; }
  Json operator()(const cmd::MoveContentView& c) const {
    return {{"probe", c.probe.value}, {"offset", to_json(c.offset)}};
  }
  Json operator()(const cmd::RotateContentView& c) const {
    return {{"probe", c.probe.value}, {"rotation", to_json(c.rotation)}};
  }
  Json operator()(const cmd::SelectNode& c) const {
    return {{"node", c.ref.node.value}, {"source", source_to_json(c.ref.source)}};
  }
  Json operator()(const cmd::CreateLink&) const { return Json::object(); }
  Json operator()(const cmd::CreateNode& c) const {
    return {{"id", c.id.value},
            {"position", to_json(c.position)},
            {"attrs", attributes_to_json(c.attrs)},
            {"source", source_to_json(c.source)}};
  }
  Json operator()(const cmd::RemoveNode& c) const {
    return {{"node", c.ref.node.value}, {"source", source_to_json(c.ref.source)}};
  }
  Json operator()(const cmd::RemoveLink& c) const {
    return {{"a", c.a.value}, {"b", c.b.value}, {"source", source_to_json(c.source)}};
  }
  Json operator()(const cmd::Deform& c) const {
    Json j = {{"u", c.u}, {"dt", c.dt}};
    if (c.kappa) j["kappa"] = *c.kappa;
    return j;
  }
  Json operator()(const cmd::TeleportToProbe& c) const {
    return {{"probe", c.probe.value}, {"standoff", c.standoff}};
  }
  Json operator()(const cmd::RefreshContent& c) const {
    return c.probe ? Json{{"probe", c.probe->value}} : Json::object();
  }
  Json operator()(const cmd::AutoPlaceProbe& c) const {
    return {{"attribute", c.attribute}, {"objective", std::string(to_string(c.objective))}, {"radius", c.radius}};
  }
};

inline CommandPayload read_payload(CommandKind kind, const Json& p) {
  if (!p.is_object()) throw FormatError("payload must be an object");
  switch (kind) {
    case CommandKind::LoadGraph: {
      cmd::LoadGraph c;
      if (auto it = p.find("graph"); it != p.end()) c.graph = *it;
      if (auto it = p.find("synthetic"); it != p.end()) c.synthetic = synthetic_from_json(*it);
      if (c.graph.has_value() == c.synthetic.has_value())
        throw FormatError("LoadGraph needs exactly one of 'graph' or 'synthetic'");
      if (p.contains("strict")) c.strict = bool_field(p, "strict");
      return c;
    }
    case CommandKind::RunLayout: {
      cmd::RunLayout c;
      c.params = layout_params_from_json(p);
      if (p.contains("incremental")) c.incremental = bool_field(p, "incremental");
      return c;
    }
    case CommandKind::SetViewpoint:
      return cmd::SetViewpoint{vec3_field(p, "position"), quat(field(p, "orientation"), "orientation")};
    case CommandKind::SetViewMode:
      return cmd::SetViewMode{parse_view_mode(string_field(p, "mode"))};
    case CommandKind::BeginProbe:
      return cmd::BeginProbe{ray_from_json(field(p, "ray")), number_field(p, "t"), number_field(p, "radius")};
    case CommandKind::AdjustProbe: {
      cmd::AdjustProbe c{number_field(p, "t"), number_field(p, "radius"), std::nullopt};
      if (auto it = p.find("ray"); it != p.end()) c.ray = ray_from_json(*it);
      return c;
    }
    case CommandKind::PlaceProbe:
      return cmd::PlaceProbe{};
    case CommandKind::RepositionProbe:
      return cmd::RepositionProbe{probe_field(p, "probe"), vec3_field(p, "center"), number_field(p, "radius")};
    case CommandKind::RemoveProbe:
      return cmd::RemoveProbe{probe_field(p, "probe")};
    case CommandKind::SetProbeActive:
      return cmd::SetProbeActive{probe_field(p, "probe"), bool_field(p, "active")};
    case CommandKind::MoveContentView:
      return cmd::MoveContentView{probe_field(p, "probe"), vec3_field(p, "offset")};
    case CommandKind::RotateContentView:
      return cmd::RotateContentView{probe_field(p, "probe"), quat(field(p, "rotation"), "rotation")};
    case CommandKind::SelectNode:
      return cmd::SelectNode{NodeRef{node_field(p, "node"), source_from_json(p)}};
    case CommandKind::CreateLink:
      return cmd::CreateLink{};
    case CommandKind::CreateNode: {
      cmd::CreateNode c{node_field(p, "id"), vec3_field(p, "position"), {}, source_from_json(p)};
      if (auto it = p.find("attrs"); it != p.end()) {
        if (!it->is_object()) throw FormatError("attrs must be an object");
        for (const auto& [key, value] : it->items()) {
          if (key.empty()) throw FormatError("attribute keys must be nonempty");
          c.attrs.emplace(key, detail::read_attr(key, value));
        }
      }
      return c;
    }
    case CommandKind::RemoveNode:
      return cmd::RemoveNode{NodeRef{node_field(p, "node"), source_from_json(p)}};
    case CommandKind::RemoveLink:
      return cmd::RemoveLink{node_field(p, "a"), node_field(p, "b"), source_from_json(p)};
    case CommandKind::DeformInput: {
      cmd::Deform c{number_field(p, "u"), number_field(p, "dt"), std::nullopt};
      if (p.contains("kappa")) c.kappa = number_field(p, "kappa");
      return c;
    }
    case CommandKind::TeleportToProbe:
      return cmd::TeleportToProbe{probe_field(p, "probe"), number_or(p, "standoff", 0.0)};
    case CommandKind::RefreshContent: {
      cmd::RefreshContent c;
      if (p.contains("probe")) c.probe = probe_field(p, "probe");
      return c;
    }
    case CommandKind::AutoPlaceProbe:
      return cmd::AutoPlaceProbe{string_field(p, "attribute"), parse_objective(p.value("objective", "max")),
                                 number_field(p, "radius")};
  }
  throw FormatError("unhandled command kind");
}

}  // namespace command_json

inline std::optional<CommandKind> parse_command_kind(std::string_view name) {
  for (std::size_t i = 0; i < kCommandKindNames.size(); ++i) {
    if (kCommandKindNames[i] == name) return static_cast<CommandKind>(i);
  }
  return std::nullopt;
}

inline Json command_to_json(const Command& c) {
  return {{"seq", c.seq},
          {"kind", std::string(to_string(c.kind()))},
          {"payload", std::visit(command_json::PayloadWriter{}, c.payload)}};
}

/// Parses {"seq": n, "kind": "...", "payload": {...}}. A missing seq reads
/// as 0, which the service replaces with the next free number.
inline Command parse_command(const Json& j) {
  try {
    if (!j.is_object()) throw FormatError("command must be an object");
    Command c;
    if (j.contains("seq")) c.seq = json_util::unsigned_field(j, "seq");
    const std::string kind_name = json_util::string_field(j, "kind");
    const auto kind = parse_command_kind(kind_name);
    if (!kind) throw FormatError("unknown command kind '" + kind_name + "'");
    static const Json empty = Json::object();
    auto it = j.find("payload");
    c.payload = command_json::read_payload(*kind, it == j.end() ? empty : *it);
    return c;
  } catch (const FormatError& e) {
    throw Error(ErrorCode::MalformedCommand, e.what());
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::MalformedCommand, e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::MalformedCommand) throw;
    throw Error(ErrorCode::MalformedCommand, e.what());
  }
}

/// One command per line; blank lines are skipped.
inline std::vector<Command> parse_command_log(std::istream& in) {
  std::vector<Command> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json j = Json::parse(line, nullptr, false);
    if (j.is_discarded())
      throw Error(ErrorCode::MalformedCommand, "line " + std::to_string(line_no) + " is not valid JSON");
    out.push_back(parse_command(j));
  }
  return out;
}

inline std::vector<Command> load_command_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MalformedCommand, "cannot open '" + path + "'");
  return parse_command_log(in);
}

inline std::string command_log_line(const Command& c) { return canonical_dump(command_to_json(c)); }

}  // namespace probekit
