#pragma once

#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "probekit/graph.hpp"
#include "probekit/json_util.hpp"

namespace probekit {

struct GraphDocument {
  Graph graph;
  /// Nodes whose file entry had no "pos"; they sit at the origin until a
  /// layout or seeding pass fills them in.
  std::vector<NodeId> missing_positions;
};

namespace detail {

inline NodeId read_node_token(const Json& j, const char* what) {
  if (j.is_string()) {
    auto s = j.get<std::string>();
    if (s.empty()) throw FormatError(std::string(what) + " must not be empty");
    return NodeId(std::move(s));
  }
  if (j.is_number_integer() || j.is_number_unsigned()) return NodeId(j.dump());
  throw FormatError(std::string(what) + " must be a string or integer");
}

inline void reject_unknown(const Json& obj, std::initializer_list<const char*> allowed, const char* where) {
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || key == a;
    if (!known) throw FormatError(std::string("unknown field '") + key + "' in " + where);
  }
}

inline AttrValue read_attr(const std::string& key, const Json& j) {
  if (j.is_number()) {
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw FormatError("attribute '" + key + "' is not finite");
    return v;
  }
  if (j.is_string()) return j.get<std::string>();
  throw FormatError("attribute '" + key + "' must be a number or string");
}

}  // namespace detail

/// Reads the graph interchange format:
///   {"directed": false,
///    "nodes": [{"id": "n1", "pos": [x,y,z], "attrs": {...}}],
///    "links": [{"source": "n1", "target": "n2"}]}
/// Format problems raise BadGraphFile; structural problems keep their graph
/// error code (DuplicateId, SelfLoop, ...).
inline GraphDocument parse_graph(const Json& doc, bool strict = false) {
  GraphDocument out;
  try {
    if (!doc.is_object()) throw FormatError("graph document must be an object");
    if (strict) detail::reject_unknown(doc, {"directed", "nodes", "links"}, "graph");
    if (auto it = doc.find("directed"); it != doc.end()) {
      if (!it->is_boolean()) throw FormatError("directed must be a boolean");
      if (it->get<bool>()) throw FormatError("directed graphs are not supported");
    }
    const Json& nodes = json_util::field(doc, "nodes");
    if (!nodes.is_array()) throw FormatError("nodes must be an array");
    for (const auto& n : nodes) {
      if (!n.is_object()) throw FormatError("node entries must be objects");
      if (strict) detail::reject_unknown(n, {"id", "pos", "attrs"}, "node");
      NodeId id = detail::read_node_token(json_util::field(n, "id"), "node id");
      Vec3 pos;
      if (auto p = n.find("pos"); p != n.end()) {
        pos = json_util::vec3(*p, "pos");
      } else {
        out.missing_positions.push_back(id);
      }
      Attributes attrs;
      if (auto a = n.find("attrs"); a != n.end()) {
        if (!a->is_object()) throw FormatError("attrs must be an object");
        for (const auto& [key, value] : a->items()) {
          if (key.empty()) throw FormatError("attribute keys must be nonempty");
          attrs.emplace(key, detail::read_attr(key, value));
        }
      }
      out.graph.add_node(id, pos, std::move(attrs));
    }
    if (auto l = doc.find("links"); l != doc.end()) {
      if (!l->is_array()) throw FormatError("links must be an array");
      for (const auto& link : *l) {
        if (!link.is_object()) throw FormatError("link entries must be objects");
        if (strict) detail::reject_unknown(link, {"source", "target"}, "link");
        out.graph.add_link(detail::read_node_token(json_util::field(link, "source"), "source"),
                           detail::read_node_token(json_util::field(link, "target"), "target"));
      }
    }
  } catch (const FormatError& e) {
    throw Error(ErrorCode::BadGraphFile, e.what());
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::BadGraphFile, e.what());
  }
  return out;
}

inline Json attributes_to_json(const Attributes& attrs) {
  Json out = Json::object();
  for (const auto& [key, value] : attrs) {
    std::visit([&](const auto& v) { out[key] = v; }, value);
  }
  return out;
}

inline Json graph_to_json(const Graph& graph) {
  Json nodes = Json::array();
  for (const auto& [id, node] : graph.nodes()) {
    nodes.push_back({{"id", id.value}, {"pos", json_util::to_json(node.position)},
                     {"attrs", attributes_to_json(node.attributes)}});
  }
  Json links = Json::array();
  for (const auto& l : graph.links()) links.push_back({{"source", l.a.value}, {"target", l.b.value}});
  return {{"directed", false}, {"nodes", std::move(nodes)}, {"links", std::move(links)}};
}

inline GraphDocument load_graph_file(const std::string& path, bool strict = false) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::BadGraphFile, "cannot open '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  Json doc = Json::parse(buffer.str(), nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded()) throw Error(ErrorCode::BadGraphFile, "'" + path + "' is not valid JSON");
  return parse_graph(doc, strict);
}

inline void save_graph_file(const Graph& graph, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::InvalidParameter, "cannot write '" + path + "'");
  out << canonical_dump(graph_to_json(graph)) << '\n';
}

}  // namespace probekit
