#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "probekit/canonical_json.hpp"
#include "probekit/error.hpp"

namespace probekit {

/// Change records between two snapshot documents.
///
///   {"op":"set",    "path":[...], "value":v}
///   {"op":"unset",  "path":[...]}
///   {"op":"upsert", "path":[...], "key":k, "value":v}   keyed collections
///   {"op":"remove", "path":[...], "key":k}
///   {"op":"link_add" | "link_remove", "path":["graph","links"], "link":[a,b]}
///
/// Keyed collections are graph.nodes, probes and derived.highlights.nodes;
/// graph.links is treated as a sorted set. Everything else is replaced
/// whole when it differs.
namespace delta_detail {

using Path = std::vector<std::string>;

inline bool is_keyed(const Path& p) {
  return p == Path{"graph", "nodes"} || p == Path{"probes"} || p == Path{"derived", "highlights", "nodes"};
}

inline bool is_descended(const Path& p) {
  return p.empty() || p == Path{"graph"} || p == Path{"derived"} || p == Path{"derived", "highlights"};
}

inline Json path_json(const Path& p) {
  Json out = Json::array();
  for (const auto& s : p) out.push_back(s);
  return out;
}

inline bool link_less(const Json& x, const Json& y) {
  const auto& xa = x[0].get_ref<const std::string&>();
  const auto& ya = y[0].get_ref<const std::string&>();
  if (xa != ya) return xa < ya;
  return x[1].get_ref<const std::string&>() < y[1].get_ref<const std::string&>();
}

inline void diff(const Json& before, const Json& after, Path& path, Json& out) {
  if (is_keyed(path) && before.is_object() && after.is_object()) {
    for (const auto& [key, value] : before.items()) {
      if (!after.contains(key)) out.push_back({{"op", "remove"}, {"path", path_json(path)}, {"key", key}});
    }
    for (const auto& [key, value] : after.items()) {
      auto it = before.find(key);
      if (it == before.end() || *it != value)
        out.push_back({{"op", "upsert"}, {"path", path_json(path)}, {"key", key}, {"value", value}});
    }
    return;
  }
  if (path == Path{"graph", "links"} && before.is_array() && after.is_array()) {
    // both are sorted; walk them together
    std::size_t i = 0;
    std::size_t j = 0;
    while (i < before.size() || j < after.size()) {
      if (j == after.size() || (i < before.size() && link_less(before[i], after[j]))) {
        out.push_back({{"op", "link_remove"}, {"path", path_json(path)}, {"link", before[i++]}});
      } else if (i == before.size() || link_less(after[j], before[i])) {
        out.push_back({{"op", "link_add"}, {"path", path_json(path)}, {"link", after[j++]}});
      } else {
        ++i;
        ++j;
      }
    }
    return;
  }
  if (is_descended(path) && before.is_object() && after.is_object()) {
    for (const auto& [key, value] : before.items()) {
      if (!after.contains(key)) {
        path.push_back(key);
        out.push_back({{"op", "unset"}, {"path", path_json(path)}});
        path.pop_back();
      }
    }
    for (const auto& [key, value] : after.items()) {
      path.push_back(key);
      auto it = before.find(key);
      if (it == before.end()) {
        out.push_back({{"op", "set"}, {"path", path_json(path)}, {"value", value}});
      } else if (*it != value) {
        diff(*it, value, path, out);
      }
      path.pop_back();
    }
    return;
  }
  if (before != after) out.push_back({{"op", "set"}, {"path", path_json(path)}, {"value", after}});
}

inline Json& resolve(Json& doc, const Json& path, std::size_t drop_last) {
  if (!path.is_array() || path.size() < drop_last) throw Error(ErrorCode::MalformedCommand, "bad change path");
  Json* node = &doc;
  for (std::size_t i = 0; i + drop_last < path.size(); ++i) {
    const auto& key = path[i].get_ref<const std::string&>();
    if (!node->is_object() || !node->contains(key))
      throw Error(ErrorCode::MalformedCommand, "change path '" + key + "' does not resolve");
    node = &(*node)[key];
  }
  return *node;
}

}  // namespace delta_detail

/// Changes turning `before` into `after`. Empty when they are equal.
inline Json diff_snapshots(const Json& before, const Json& after) {
  Json out = Json::array();
  delta_detail::Path path;
  delta_detail::diff(before, after, path, out);
  return out;
}

/// Applies change records produced by diff_snapshots.
inline void apply_changes(Json& doc, const Json& changes) {
  using namespace delta_detail;
  if (!changes.is_array()) throw Error(ErrorCode::MalformedCommand, "changes must be an array");
  for (const auto& c : changes) {
    const std::string op = c.at("op").get<std::string>();
    const Json& path = c.at("path");
    if (op == "set") {
      if (path.empty()) {
        doc = c.at("value");
        continue;
      }
      resolve(doc, path, 1)[path.back().get<std::string>()] = c.at("value");
    } else if (op == "unset") {
      resolve(doc, path, 1).erase(path.back().get<std::string>());
    } else if (op == "upsert") {
      resolve(doc, path, 0)[c.at("key").get<std::string>()] = c.at("value");
    } else if (op == "remove") {
      resolve(doc, path, 0).erase(c.at("key").get<std::string>());
    } else if (op == "link_add" || op == "link_remove") {
      Json& links = resolve(doc, path, 0);
      if (!links.is_array()) throw Error(ErrorCode::MalformedCommand, "link change on a non-array");
      const Json& link = c.at("link");
      auto it = std::lower_bound(links.begin(), links.end(), link, link_less);
      const bool present = it != links.end() && *it == link;
      if (op == "link_add" && !present) links.insert(it, link);
      if (op == "link_remove" && present) links.erase(it);
    } else {
      throw Error(ErrorCode::MalformedCommand, "unknown change op '" + op + "'");
    }
  }
}

}  // namespace probekit
