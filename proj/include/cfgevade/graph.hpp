#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "cfgevade/error.hpp"

namespace cfgevade {

enum class Label { Benign = 0, Malicious = 1 };

inline std::string_view to_string(Label l) {
  return l == Label::Malicious ? "malicious" : "benign";
}

inline Label parse_label(std::string_view s) {
  if (s == "benign") return Label::Benign;
  if (s == "malicious") return Label::Malicious;
  throw SchemaViolation("unknown label '" + std::string(s) + "'");
}

using NodeId = std::uint64_t;

struct CfgNode {
  NodeId id = 0;
  std::string name;

  friend bool operator==(const CfgNode&, const CfgNode&) = default;
};

using CfgEdge = std::pair<NodeId, NodeId>;

// A control-flow graph whose vertices are named functions and whose edges are
// call relations. Equality is structural: graphs that differ only in node or
// edge ordering compare equal.
struct ControlFlowGraph {
  std::string name;
  std::optional<Label> label;
  NodeId entry = 0;
  std::vector<CfgNode> nodes;
  std::vector<CfgEdge> edges;

  void canonicalize() {
    std::sort(nodes.begin(), nodes.end(),
              [](const CfgNode& a, const CfgNode& b) { return a.id < b.id; });
    std::sort(edges.begin(), edges.end());
  }

  friend bool operator==(ControlFlowGraph a, ControlFlowGraph b) {
    a.canonicalize();
    b.canonicalize();
    return a.name == b.name && a.label == b.label && a.entry == b.entry &&
           a.nodes == b.nodes && a.edges == b.edges;
  }
};

// Ordered list of function names as emitted by the linearizer.
struct FunctionSequence {
  std::string name;
  std::optional<Label> label;
  std::vector<std::string> calls;

  friend bool operator==(const FunctionSequence&, const FunctionSequence&) = default;
};

inline bool is_valid_function_name(std::string_view s) {
  return !s.empty() && s.find_first_of(" \t\n\r\v\f") == std::string_view::npos;
}

// Throws SchemaViolation if any structural invariant is broken.
inline void validate(const ControlFlowGraph& g) {
  std::unordered_map<NodeId, std::size_t> index;
  for (const auto& n : g.nodes) {
    if (!index.emplace(n.id, index.size()).second) {
      throw SchemaViolation("duplicate node id " + std::to_string(n.id));
    }
    if (!is_valid_function_name(n.name)) {
      throw SchemaViolation("node " + std::to_string(n.id) +
                            " has an empty name or a name containing whitespace");
    }
  }
  if (!index.contains(g.entry)) {
    throw SchemaViolation("entry " + std::to_string(g.entry) + " is not a node");
  }
  for (const auto& [src, dst] : g.edges) {
    if (!index.contains(src) || !index.contains(dst)) {
      throw SchemaViolation("dangling edge [" + std::to_string(src) + "," +
                            std::to_string(dst) + "]");
    }
  }
}

namespace detail {

inline const nlohmann::json& require(const nlohmann::json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) throw SchemaViolation(std::string("missing key '") + key + "'");
  return *it;
}

inline NodeId require_id(const nlohmann::json& v, const char* what) {
  if (!v.is_number_unsigned()) {
    throw SchemaViolation(std::string(what) + " must be a non-negative integer");
  }
  return v.get<NodeId>();
}

inline std::string require_string(const nlohmann::json& v, const char* what) {
  if (!v.is_string()) throw SchemaViolation(std::string(what) + " must be a string");
  return v.get<std::string>();
}

}  // namespace detail

// Parses one graph from its JSON text. Unknown keys are ignored.
inline ControlFlowGraph parse_cfg_json(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw MalformedJson(e.what());
  }
  if (!doc.is_object()) throw SchemaViolation("top-level value must be an object");

  ControlFlowGraph g;
  g.name = detail::require_string(detail::require(doc, "name"), "name");
  if (auto it = doc.find("label"); it != doc.end() && !it->is_null()) {
    g.label = parse_label(detail::require_string(*it, "label"));
  }
  g.entry = detail::require_id(detail::require(doc, "entry"), "entry");

  const auto& nodes = detail::require(doc, "nodes");
  if (!nodes.is_array()) throw SchemaViolation("nodes must be an array");
  for (const auto& n : nodes) {
    if (!n.is_object()) throw SchemaViolation("node must be an object");
    g.nodes.push_back({detail::require_id(detail::require(n, "id"), "node id"),
                       detail::require_string(detail::require(n, "name"), "node name")});
  }

  const auto& edges = detail::require(doc, "edges");
  if (!edges.is_array()) throw SchemaViolation("edges must be an array");
  for (const auto& e : edges) {
    if (!e.is_array() || e.size() != 2) throw SchemaViolation("edge must be a [src, dst] pair");
    g.edges.emplace_back(detail::require_id(e[0], "edge endpoint"),
                         detail::require_id(e[1], "edge endpoint"));
  }

  validate(g);
  return g;
}

// Canonical text: keys in fixed order, nodes by id, edges lexicographic, no
// insignificant whitespace. Equal graphs serialize byte-identically.
inline std::string serialize_cfg(ControlFlowGraph g) {
  g.canonicalize();
  nlohmann::ordered_json doc;
  doc["name"] = g.name;
  if (g.label) doc["label"] = to_string(*g.label);
  doc["entry"] = g.entry;
  doc["nodes"] = nlohmann::ordered_json::array();
  for (const auto& n : g.nodes) {
    nlohmann::ordered_json node;
    node["id"] = n.id;
    node["name"] = n.name;
    doc["nodes"].push_back(std::move(node));
  }
  doc["edges"] = nlohmann::ordered_json::array();
  for (const auto& [src, dst] : g.edges) doc["edges"].push_back({src, dst});
  return doc.dump();
}

// Iterative depth-first traversal from the entry node. Successors are visited
// in ascending (name, id) order; each node is emitted once, on first visit.
inline FunctionSequence dfs_linearize(const ControlFlowGraph& g, std::size_t max_calls) {
  FunctionSequence out{g.name, g.label, {}};
  if (max_calls == 0) return out;

  std::unordered_map<NodeId, std::size_t> index;
  for (std::size_t i = 0; i < g.nodes.size(); ++i) index.emplace(g.nodes[i].id, i);

  std::vector<std::vector<std::size_t>> succ(g.nodes.size());
  for (const auto& [src, dst] : g.edges) succ[index.at(src)].push_back(index.at(dst));
  for (auto& s : succ) {
    std::sort(s.begin(), s.end(), [&](std::size_t a, std::size_t b) {
      const auto& na = g.nodes[a];
      const auto& nb = g.nodes[b];
      return std::tie(na.name, na.id) < std::tie(nb.name, nb.id);
    });
    s.erase(std::unique(s.begin(), s.end()), s.end());
  }

  std::vector<bool> visited(g.nodes.size(), false);
  std::vector<std::size_t> stack{index.at(g.entry)};
  while (!stack.empty() && out.calls.size() < max_calls) {
    const std::size_t v = stack.back();
    stack.pop_back();
    if (visited[v]) continue;
    visited[v] = true;
    out.calls.push_back(g.nodes[v].name);
    for (auto it = succ[v].rbegin(); it != succ[v].rend(); ++it) {
      if (!visited[*it]) stack.push_back(*it);
    }
  }
  return out;
}

}  // namespace cfgevade
