#include <gtest/gtest.h>

#include "savman/topology.hpp"

using namespace savman;

using Edges = std::vector<std::pair<NodeId, NodeId>>;

TEST(BuildTopology, Line) {
  const auto t = build_topology(TopologySpec::line(3));
  EXPECT_EQ(t.size(), 3u);
  EXPECT_EQ(t.edges(), (Edges{{0, 1}, {1, 2}}));
}

TEST(BuildTopology, ExplicitEdgesAreDeduplicatedAndSymmetric) {
  const auto t = build_topology(TopologySpec::explicit_edges(2, {{0, 1}, {1, 0}}));
  EXPECT_EQ(t.edges(), (Edges{{0, 1}}));
  EXPECT_TRUE(t.adjacent(0, 1));
  EXPECT_TRUE(t.adjacent(1, 0));
}

TEST(BuildTopology, Grid) {
  const auto t = build_topology(TopologySpec::grid(2, 2));
  EXPECT_EQ(t.size(), 4u);
  EXPECT_EQ(t.edges().size(), 4u);
  EXPECT_FALSE(t.adjacent(0, 3));
  const auto g = build_topology(TopologySpec::grid(4, 3));
  EXPECT_EQ(g.edges().size(), 17u);
  EXPECT_EQ(g.diameter(), 5);
}

TEST(BuildTopology, Star) {
  const auto t = build_topology(TopologySpec::star(5));
  EXPECT_EQ(t.neighbors(0), (std::vector<NodeId>{1, 2, 3, 4}));
  EXPECT_EQ(t.neighbors(3), (std::vector<NodeId>{0}));
}

TEST(BuildTopology, MalformedSpecs) {
  EXPECT_THROW(build_topology(TopologySpec::line(0)), Error);
  EXPECT_THROW(build_topology(TopologySpec::grid(0, 3)), Error);
  EXPECT_THROW(build_topology(TopologySpec::explicit_edges(2, {{0, 2}})), Error);
  try {
    build_topology(TopologySpec::explicit_edges(2, {{1, 1}}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::MalformedSpec);
  }
}

TEST(Topology, DistancesAndChanges) {
  auto t = build_topology(TopologySpec::line(4));
  EXPECT_EQ(t.distances_to(3), (std::vector<int>{3, 2, 1, 0}));
  t.remove_edge(1, 2);
  EXPECT_EQ(t.distances_to(3), (std::vector<int>{-1, -1, 1, 0}));
  EXPECT_FALSE(t.connected());
  t.add_edge(0, 3);
  EXPECT_TRUE(t.connected());
  EXPECT_EQ(t.distances_to(3)[1], 2);
}

TEST(Topology, BackboneFlags) {
  auto t = build_topology(TopologySpec::line(3));
  t.set_backbone(0);
  EXPECT_TRUE(t.is_backbone(0));
  EXPECT_FALSE(t.is_backbone(1));
  EXPECT_FALSE(t.is_backbone(7));
}
