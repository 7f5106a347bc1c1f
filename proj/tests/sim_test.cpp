#include <gtest/gtest.h>

#include <random>

#include "savman/sim.hpp"
#include "scenario_gen.hpp"

using namespace savman;

namespace {

// backbone 0 - relay 1 - backbone 2, one packet 0 -> 2 with budget 10, fine 5.
Scenario single_relay(StrategyKind kind) {
  Scenario s;
  s.topology = TopologySpec::line(3);
  s.backbones = {0, 2};
  s.default_strategy.kind = kind;
  Injection inj;
  inj.source = 0;
  inj.destination = 2;
  inj.budget = 10;
  inj.fine = 5;
  s.injections = {inj};
  return s;
}

}  // namespace

TEST(Run, CooperativeRelayDelivers) {
  const auto s = single_relay(StrategyKind::CooperativeCheapest);
  const auto t = run(s);
  EXPECT_EQ(t.final_balances.at(1), 5);
  EXPECT_EQ(t.final_balances.at(0), -5);
  EXPECT_EQ(t.final_balances.at(2), 0);
  const auto m = metrics(t);
  EXPECT_DOUBLE_EQ(m.delivery_ratio, 1.0);
  EXPECT_EQ(m.delivered, 1u);
  ASSERT_EQ(t.all<ev::Delivered>().size(), 1u);
  EXPECT_EQ(t.all<ev::Delivered>()[0]->holder, 1);
}

TEST(Run, BlackHoleRelayIsFined) {
  const auto t = run(single_relay(StrategyKind::BlackHole));
  EXPECT_EQ(t.final_balances.at(1), -5);
  EXPECT_EQ(t.final_balances.at(0), 5);
  const auto m = metrics(t);
  EXPECT_DOUBLE_EQ(m.delivery_ratio, 0.0);
  ASSERT_EQ(t.all<ev::Failed>().size(), 1u);
  EXPECT_EQ(t.all<ev::Failed>()[0]->reason, FailureReason::Dropped);
  EXPECT_EQ(m.nodes.at(1).drops, 1);
}

TEST(Run, CertainLossFailsAtBackbone) {
  auto s = single_relay(StrategyKind::CooperativeCheapest);
  s.edge_loss = {{0, 1, 1.0}};
  const auto t = run(s);
  EXPECT_TRUE(t.all<ev::BidPlaced>().empty());
  ASSERT_EQ(t.all<ev::Failed>().size(), 1u);
  EXPECT_EQ(t.all<ev::Failed>()[0]->reason, FailureReason::NoWinner);
  EXPECT_EQ(t.all<ev::Failed>()[0]->holder, 0);
  EXPECT_TRUE(t.all<ev::Ledger>().empty());
  EXPECT_DOUBLE_EQ(metrics(t).delivery_ratio, 0.0);
}

TEST(Run, TtlExhaustedOnLongLine) {
  Scenario s = single_relay(StrategyKind::CooperativeCheapest);
  s.topology = TopologySpec::line(5);
  s.backbones = {0, 4};
  s.injections[0].destination = 4;
  s.injections[0].ttl = 3;
  EXPECT_DOUBLE_EQ(metrics(run(s)).delivery_ratio, 1.0);
  // Relays refuse packets they cannot finish, so the backbone gets no bids.
  s.injections[0].ttl = 2;
  const auto t = run(s);
  ASSERT_EQ(t.all<ev::Failed>().size(), 1u);
  EXPECT_EQ(t.all<ev::Failed>()[0]->reason, FailureReason::NoWinner);
}

TEST(Run, TopologyChangeReroutes) {
  Scenario s;
  s.topology = TopologySpec::explicit_edges(4, {{0, 1}, {1, 3}, {0, 2}});
  s.backbones = {0, 3};
  s.changes = {{0, false, 1, 3}, {0, true, 2, 3}};
  s.injections = {Injection{1, 0, 3, 10, 2, 4, 1, 1}};
  const auto t = run(s);
  EXPECT_EQ(t.all<ev::TopologyChanged>().size(), 2u);
  ASSERT_EQ(t.all<ev::Delivered>().size(), 1u);
  EXPECT_EQ(t.all<ev::Delivered>()[0]->holder, 2);
}

TEST(Run, ProfileCheckpoints) {
  auto s = single_relay(StrategyKind::CooperativeCheapest);
  s.injections[0].count = 5;
  s.injections[0].interval = 2;
  s.round_length = 3;
  const auto t = run(s);
  std::vector<SimTime> times;
  for (const auto& p : t.profiles) times.push_back(p.time);
  // one relay; checkpoints at 3, 6, 9 and the final one
  EXPECT_EQ(times, (std::vector<SimTime>{3, 6, 9, 9}));
}

TEST(Run, InvalidScenario) {
  auto s = single_relay(StrategyKind::CooperativeCheapest);
  s.injections[0].budget = 0;
  EXPECT_THROW(run(s), Error);
  s = single_relay(StrategyKind::CooperativeCheapest);
  s.injections[0].source = 1;
  try {
    run(s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::InvalidScenario);
  }
  s = single_relay(StrategyKind::CooperativeCheapest);
  s.default_loss = 1.5;
  EXPECT_THROW(run(s), Error);
  s = single_relay(StrategyKind::CooperativeCheapest);
  s.strategies[0] = StrategySpec{};
  EXPECT_THROW(run(s), Error);
}

TEST(Metrics, Examples) {
  Trace t;
  EXPECT_TRUE(metrics(t).vacuous);
  EXPECT_DOUBLE_EQ(metrics(t).delivery_ratio, 1.0);
  for (PacketId p = 0; p < 4; ++p) t.events.push_back({static_cast<std::uint64_t>(p), 0, ev::Inject{p, 0, 1, 1, 0, 1}});
  for (PacketId p = 0; p < 3; ++p) t.events.push_back({static_cast<std::uint64_t>(4 + p), 1, ev::Delivered{p, 2}});
  t.events.push_back({7, 1, ev::Failed{3, 2, FailureReason::Dropped}});
  const auto m = metrics(t);
  EXPECT_FALSE(m.vacuous);
  EXPECT_DOUBLE_EQ(m.delivery_ratio, 0.75);
  EXPECT_EQ(m.nodes.at(2).drops, 1);
}

TEST(Metrics, MedianWindows) {
  Trace t;
  const Credits amounts[] = {5, 1, 3, 4, 2, 9, 7};
  for (std::size_t i = 0; i < 7; ++i) t.events.push_back({i, 0, ev::WinnerSelected{static_cast<AuctionId>(i), 0, 1, amounts[i]}});
  t.events.push_back({7, 0, ev::WinnerSelected{7, 0, kNoNode, 0}});
  EXPECT_EQ(metrics(t, 3).median_winning_bid, (std::vector<double>{3, 4}));
  EXPECT_EQ(metrics(t, 2).median_winning_bid, (std::vector<double>{3, 3.5, 5.5}));
}

TEST(Run, Deterministic) {
  std::mt19937_64 rng(21);
  for (int i = 0; i < 30; ++i) {
    const auto s = savman::testing::random_scenario(rng);
    EXPECT_EQ(run(s), run(s));
  }
}

TEST(Run, SeedChangesLossDraws) {
  auto s = single_relay(StrategyKind::CooperativeCheapest);
  s.injections[0].count = 50;
  s.default_loss = 0.5;
  s.seed = 1;
  const auto a = run(s);
  s.seed = 2;
  EXPECT_NE(a, run(s));
}

TEST(Run, RandomScenariosSatisfyInvariants) {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 200; ++i) {
    const auto s = savman::testing::random_scenario(rng);
    const auto t = run(s);
    const auto problems = savman::testing::check_trace(s, t);
    EXPECT_TRUE(problems.empty()) << "scenario " << i << ": " << problems.front();
  }
}

// With decay off, a relay's profile holds exactly what the visibility rule
// lets it see.
TEST(Run, ProfilesMatchVisibleEvents) {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 60; ++i) {
    auto s = savman::testing::random_scenario(rng);
    s.profile.decay = 1.0;
    s.round_length = 0;
    const auto t = run(s);
    std::map<NodeId, double> exposure, participation, attempts;
    std::map<AuctionId, NodeId> auctioneer;
    for (const auto* a : t.all<ev::AdvertOpen>()) {
      auctioneer[a->auction] = a->auctioneer;
      exposure[a->auctioneer] += static_cast<double>(a->recipients.size());
    }
    for (const auto* b : t.all<ev::BidPlaced>()) participation[auctioneer.at(b->auction)] += 1;
    for (const auto* c : t.all<ev::CustodyTransfer>()) attempts[c->from] += 1;
    for (const auto& snap : t.profiles) {
      double e = 0, p = 0, n = 0;
      for (const auto& [key, stats] : snap.store.bidding_table()) {
        e += stats.exposure;
        p += stats.participation;
      }
      for (const auto& [key, stats] : snap.store.reliability_table()) n += stats.attempts;
      EXPECT_EQ(e, exposure[snap.node]) << "node " << snap.node;
      EXPECT_EQ(p, participation[snap.node]) << "node " << snap.node;
      EXPECT_EQ(n, attempts[snap.node]) << "node " << snap.node;
    }
  }
}
