#pragma once

#include <algorithm>
#include <deque>
#include <string>
#include <utility>
#include <vector>

#include "savman/core.hpp"

namespace savman {

struct TopologySpec {
  enum class Kind { Edges, Line, Star, Grid };

  Kind kind = Kind::Edges;
  int nodes = 0;  // Edges
  std::vector<std::pair<NodeId, NodeId>> edges;  // Edges
  int n = 0;      // Line, Star
  int width = 0;  // Grid
  int height = 0;

  static TopologySpec line(int n) { return {Kind::Line, 0, {}, n, 0, 0}; }
  static TopologySpec star(int n) { return {Kind::Star, 0, {}, n, 0, 0}; }
  static TopologySpec grid(int w, int h) { return {Kind::Grid, 0, {}, 0, w, h}; }
  static TopologySpec explicit_edges(int nodes, std::vector<std::pair<NodeId, NodeId>> edges) {
    return {Kind::Edges, nodes, std::move(edges), 0, 0, 0};
  }

  bool operator==(const TopologySpec&) const = default;
};

// Undirected graph over nodes 0..n-1 stored as a symmetric adjacency matrix.
// Backbone flags live here too since every rule that looks at neighbours
// needs to tell relays from backbones.
class Topology {
 public:
  Topology() = default;
  explicit Topology(std::size_t n) : adj_(n, std::vector<std::uint8_t>(n, 0)), backbone_(n, false) {}

  std::size_t size() const { return adj_.size(); }
  bool contains(NodeId a) const { return a >= 0 && static_cast<std::size_t>(a) < size(); }

  bool adjacent(NodeId a, NodeId b) const { return contains(a) && contains(b) && adj_[a][b] != 0; }

  void add_edge(NodeId a, NodeId b) {
    check_pair(a, b);
    adj_[a][b] = adj_[b][a] = 1;
  }
  void remove_edge(NodeId a, NodeId b) {
    check_pair(a, b);
    adj_[a][b] = adj_[b][a] = 0;
  }

  std::vector<NodeId> neighbors(NodeId a) const {
    std::vector<NodeId> out;
    for (std::size_t b = 0; b < size(); ++b) {
      if (adj_[a][b]) out.push_back(static_cast<NodeId>(b));
    }
    return out;
  }

  std::vector<std::pair<NodeId, NodeId>> edges() const {
    std::vector<std::pair<NodeId, NodeId>> out;
    for (std::size_t a = 0; a < size(); ++a)
      for (std::size_t b = a + 1; b < size(); ++b)
        if (adj_[a][b]) out.emplace_back(static_cast<NodeId>(a), static_cast<NodeId>(b));
    return out;
  }

  bool is_backbone(NodeId a) const { return contains(a) && backbone_[a]; }
  void set_backbone(NodeId a, bool value = true) {
    if (!contains(a)) throw Error(Errc::MalformedSpec, "backbone id " + std::to_string(a) + " out of range");
    backbone_[a] = value;
  }

  /// Hop counts to `target` by BFS; -1 where unreachable.
  std::vector<int> distances_to(NodeId target) const {
    std::vector<int> dist(size(), -1);
    if (!contains(target)) return dist;
    std::deque<NodeId> queue{target};
    dist[target] = 0;
    while (!queue.empty()) {
      const NodeId u = queue.front();
      queue.pop_front();
      for (std::size_t v = 0; v < size(); ++v) {
        if (adj_[u][v] && dist[v] < 0) {
          dist[v] = dist[u] + 1;
          queue.push_back(static_cast<NodeId>(v));
        }
      }
    }
    return dist;
  }

  /// Longest shortest path over connected pairs.
  int diameter() const {
    int d = 0;
    for (std::size_t a = 0; a < size(); ++a) {
      for (int x : distances_to(static_cast<NodeId>(a))) d = std::max(d, x);
    }
    return d;
  }

  bool connected() const {
    if (size() == 0) return true;
    const auto dist = distances_to(0);
    return std::all_of(dist.begin(), dist.end(), [](int x) { return x >= 0; });
  }

  bool operator==(const Topology&) const = default;

 private:
  void check_pair(NodeId a, NodeId b) const {
    if (!contains(a) || !contains(b)) {
      throw Error(Errc::MalformedSpec, "edge (" + std::to_string(a) + "," + std::to_string(b) + ") out of range");
    }
    if (a == b) throw Error(Errc::MalformedSpec, "self-edge on node " + std::to_string(a));
  }

  std::vector<std::vector<std::uint8_t>> adj_;
  std::vector<bool> backbone_;
};

inline Topology build_topology(const TopologySpec& spec) {
  switch (spec.kind) {
    case TopologySpec::Kind::Line: {
      if (spec.n < 1) throw Error(Errc::MalformedSpec, "line needs n >= 1");
      Topology t(spec.n);
      for (int i = 0; i + 1 < spec.n; ++i) t.add_edge(i, i + 1);
      return t;
    }
    case TopologySpec::Kind::Star: {
      if (spec.n < 1) throw Error(Errc::MalformedSpec, "star needs n >= 1");
      Topology t(spec.n);
      for (int i = 1; i < spec.n; ++i) t.add_edge(0, i);
      return t;
    }
    case TopologySpec::Kind::Grid: {
      if (spec.width < 1 || spec.height < 1) throw Error(Errc::MalformedSpec, "grid needs width, height >= 1");
      Topology t(static_cast<std::size_t>(spec.width) * spec.height);
      for (int y = 0; y < spec.height; ++y) {
        for (int x = 0; x < spec.width; ++x) {
          const NodeId id = y * spec.width + x;
          if (x + 1 < spec.width) t.add_edge(id, id + 1);
          if (y + 1 < spec.height) t.add_edge(id, id + spec.width);
        }
      }
      return t;
    }
    case TopologySpec::Kind::Edges: {
      if (spec.nodes < 1) throw Error(Errc::MalformedSpec, "edge list needs nodes >= 1");
      Topology t(spec.nodes);
      for (const auto& [a, b] : spec.edges) t.add_edge(a, b);
      return t;
    }
  }
  throw Error(Errc::MalformedSpec, "unknown topology kind");
}

}  // namespace savman
