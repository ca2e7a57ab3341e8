#pragma once

#include <atomic>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "probekit/error.hpp"
#include "probekit/math.hpp"

namespace probekit {

/// Stable node identifier. Integer tokens from input files are stored in
/// their decimal spelling.
struct NodeId {
  std::string value;

  NodeId() = default;
  NodeId(std::string v) : value(std::move(v)) {}  // NOLINT(google-explicit-constructor)
  NodeId(const char* v) : value(v) {}             // NOLINT(google-explicit-constructor)

  friend auto operator<=>(const NodeId&, const NodeId&) = default;
  friend bool operator==(const NodeId&, const NodeId&) = default;
  friend std::ostream& operator<<(std::ostream& os, const NodeId& id) { return os << id.value; }
};

using AttrValue = std::variant<double, std::string>;
using Attributes = std::map<std::string, AttrValue>;

inline std::optional<double> numeric(const AttrValue& v) {
  if (const auto* d = std::get_if<double>(&v)) return *d;
  return std::nullopt;
}

struct Node {
  NodeId id;
  Vec3 position;
  Attributes attributes;

  friend bool operator==(const Node&, const Node&) = default;
};

/// Undirected link, always stored with a < b.
struct Link {
  NodeId a;
  NodeId b;

  static Link between(NodeId x, NodeId y) {
    if (y < x) std::swap(x, y);
    return {std::move(x), std::move(y)};
  }

  bool touches(const NodeId& id) const { return a == id || b == id; }

  friend auto operator<=>(const Link&, const Link&) = default;
  friend bool operator==(const Link&, const Link&) = default;
};

struct Subgraph {
  std::uint64_t parent_revision{0};
  std::set<NodeId> nodes;
  std::set<Link> links;
  bool induced{false};

  bool contains(const Link& l) const { return links.count(l) != 0; }

  // parent_revision is a process-local stamp, not content
  friend bool operator==(const Subgraph& x, const Subgraph& y) {
    return x.nodes == y.nodes && x.links == y.links && x.induced == y.induced;
  }
};

namespace detail {
inline std::uint64_t next_revision() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1, std::memory_order_relaxed);
}
}  // namespace detail

/// Mutable undirected attributed graph with 3D node positions.
///
/// Nodes and links live in ordered containers so every traversal is in id
/// order; everything downstream (layout, replay hashes) depends on that.
/// Each mutation stamps a process-unique revision, which spatial indexes use
/// to detect staleness.
class Graph {
 public:
  Graph() = default;

  void add_node(const NodeId& id, const Vec3& position, Attributes attributes = {}) {
    if (nodes_.count(id)) throw Error(ErrorCode::DuplicateId, "node '" + id.value + "' already exists");
    if (!is_finite(position))
      throw Error(ErrorCode::NonFiniteCoordinate, "node '" + id.value + "' has a non-finite position");
    for (const auto& [key, value] : attributes) {
      if (key.empty()) throw Error(ErrorCode::InvalidParameter, "empty attribute key on node '" + id.value + "'");
    }
    nodes_.emplace(id, Node{id, position, std::move(attributes)});
    adjacency_.emplace(id, std::set<NodeId>{});
    touch();
  }

  void remove_node(const NodeId& id) {
    auto it = adjacency_.find(id);
    if (it == adjacency_.end()) throw Error(ErrorCode::UnknownId, "no node '" + id.value + "'");
    for (const auto& other : it->second) {
      adjacency_[other].erase(id);
      links_.erase(Link::between(id, other));
    }
    adjacency_.erase(it);
    nodes_.erase(id);
    touch();
  }

  void add_link(const NodeId& a, const NodeId& b) {
    require_node(a);
    require_node(b);
    if (a == b) throw Error(ErrorCode::SelfLoop, "link '" + a.value + "'-'" + b.value + "' is a self-loop");
    if (!links_.insert(Link::between(a, b)).second)
      throw Error(ErrorCode::DuplicateLink, "link '" + a.value + "'-'" + b.value + "' already exists");
    adjacency_[a].insert(b);
    adjacency_[b].insert(a);
    touch();
  }

  void remove_link(const NodeId& a, const NodeId& b) {
    if (links_.erase(Link::between(a, b)) == 0)
      throw Error(ErrorCode::UnknownLink, "no link '" + a.value + "'-'" + b.value + "'");
    adjacency_[a].erase(b);
    adjacency_[b].erase(a);
    touch();
  }

  void set_position(const NodeId& id, const Vec3& position) {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) throw Error(ErrorCode::UnknownId, "no node '" + id.value + "'");
    if (!is_finite(position))
      throw Error(ErrorCode::NonFiniteCoordinate, "node '" + id.value + "' has a non-finite position");
    it->second.position = position;
    touch();
  }

  /// Applies fn(const Node&) -> Vec3 to every node in id order and stores
  /// the result as the new position.
  template <typename Fn>
  void transform_positions(Fn&& fn) {
    for (auto& [id, node] : nodes_) node.position = fn(std::as_const(node));
    touch();
  }

  bool has_node(const NodeId& id) const { return nodes_.count(id) != 0; }
  bool has_link(const NodeId& a, const NodeId& b) const { return links_.count(Link::between(a, b)) != 0; }

  const Node& node(const NodeId& id) const {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) throw Error(ErrorCode::UnknownId, "no node '" + id.value + "'");
    return it->second;
  }

  const std::set<NodeId>& neighbors(const NodeId& id) const {
    auto it = adjacency_.find(id);
    if (it == adjacency_.end()) throw Error(ErrorCode::UnknownId, "no node '" + id.value + "'");
    return it->second;
  }

  std::size_t degree(const NodeId& id) const { return neighbors(id).size(); }

  const std::map<NodeId, Node>& nodes() const { return nodes_; }
  const std::set<Link>& links() const { return links_; }
  std::size_t node_count() const { return nodes_.size(); }
  std::size_t link_count() const { return links_.size(); }
  bool empty() const { return nodes_.empty(); }
  bool directed() const { return false; }

  std::uint64_t revision() const { return revision_; }

  /// Throws InconsistentState if any link endpoint does not resolve or the
  /// adjacency mirror disagrees with the link set.
  void check_integrity() const {
    std::size_t half_edges = 0;
    for (const auto& l : links_) {
      if (!(l.a < l.b)) throw Error(ErrorCode::InconsistentState, "non-canonical link");
      if (!nodes_.count(l.a) || !nodes_.count(l.b))
        throw Error(ErrorCode::InconsistentState, "dangling link '" + l.a.value + "'-'" + l.b.value + "'");
    }
    for (const auto& [id, adj] : adjacency_) {
      if (!nodes_.count(id)) throw Error(ErrorCode::InconsistentState, "adjacency for missing node");
      for (const auto& other : adj) {
        if (!links_.count(Link::between(id, other)))
          throw Error(ErrorCode::InconsistentState, "adjacency entry without link");
      }
      half_edges += adj.size();
    }
    if (half_edges != 2 * links_.size() || adjacency_.size() != nodes_.size())
      throw Error(ErrorCode::InconsistentState, "adjacency size mismatch");
  }

  friend bool operator==(const Graph& lhs, const Graph& rhs) {
    return lhs.nodes_ == rhs.nodes_ && lhs.links_ == rhs.links_;
  }

 private:
  void require_node(const NodeId& id) const {
    if (!nodes_.count(id)) throw Error(ErrorCode::UnknownId, "no node '" + id.value + "'");
  }

  void touch() { revision_ = detail::next_revision(); }

  std::map<NodeId, Node> nodes_;
  std::map<NodeId, std::set<NodeId>> adjacency_;
  std::set<Link> links_;
  std::uint64_t revision_{detail::next_revision()};
};

/// The subgraph on `node_ids` holding every parent link with both endpoints
/// in the set.
template <typename Range>
Subgraph induced_subgraph(const Graph& graph, const Range& node_ids) {
  Subgraph sub;
  sub.parent_revision = graph.revision();
  sub.induced = true;
  for (const auto& id : node_ids) {
    if (!graph.has_node(id)) throw Error(ErrorCode::UnknownId, "no node '" + NodeId(id).value + "'");
    sub.nodes.insert(id);
  }
  for (const auto& id : sub.nodes) {
    for (const auto& other : graph.neighbors(id)) {
      if (id < other && sub.nodes.count(other)) sub.links.insert(Link{id, other});
    }
  }
  return sub;
}

inline Subgraph induced_subgraph(const Graph& graph, std::initializer_list<NodeId> node_ids) {
  return induced_subgraph(graph, std::vector<NodeId>(node_ids));
}

/// Links with exactly one endpoint in `members`; a focus view shows these as
/// stubs leaving the view.
inline std::set<Link> boundary_links(const Graph& graph, const std::set<NodeId>& members) {
  std::set<Link> out;
  for (const auto& id : members) {
    if (!graph.has_node(id)) continue;
    for (const auto& other : graph.neighbors(id)) {
      if (!members.count(other)) out.insert(Link::between(id, other));
    }
  }
  return out;
}

}  // namespace probekit
