#include <gtest/gtest.h>

#include "savman/gain.hpp"

using namespace savman;

TEST(HopGain, Examples) {
  EXPECT_DOUBLE_EQ(hop_gain(10, 4, 5, HopEstimate{1, 6, 0.8}), 3.0);
  EXPECT_DOUBLE_EQ(hop_gain(10, 4, 5, HopEstimate{1, 6, 1.0}), 4.0);
  EXPECT_DOUBLE_EQ(hop_gain(10, 5, 5, HopEstimate{1, 6, 0.0}), 0.0);
}

TEST(HopGain, ScaledByForwardingProbability) {
  EXPECT_DOUBLE_EQ(hop_gain(10, 4, 5, HopEstimate{1, 6, 0.8, 0.5}), 1.5);
}

TEST(HopGain, FineOrderViolation) {
  try {
    hop_gain(10, 6, 5, HopEstimate{1, 6, 0.8});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::FineOrderViolation);
  }
}

TEST(HopGain, NonDecreasingInSuccessProbability) {
  for (Credits fd = 0; fd <= 5; ++fd) {
    double last = -1e9;
    for (int k = 0; k <= 20; ++k) {
      const double g = hop_gain(10, fd, 5, HopEstimate{1, 7, k / 20.0});
      EXPECT_GE(g, last);
      last = g;
    }
  }
}

TEST(EndGain, Examples) {
  EXPECT_DOUBLE_EQ(end_gain(10, 5, GainMode::Paper), 5);
  EXPECT_DOUBLE_EQ(end_gain(10, 5, GainMode::Consistent), -5);
  EXPECT_DOUBLE_EQ(end_gain(10, 0, GainMode::Consistent), 0);
}

TEST(ConditionalGain, Examples) {
  const auto none = conditional_gain(GainParams{10, 5, 3}, 5, {}, 1.0, GainMode::Paper);
  EXPECT_DOUBLE_EQ(none.g_bid, 5);
  EXPECT_FALSE(none.best_hop);

  // hop gains 3.0 and 1.2
  const std::vector<HopEstimate> two{{1, 6, 0.8}, {2, 8.25, 0.8}};
  const GainParams p{10, 4, 9};
  EXPECT_NEAR(hop_gain(10, 4, 5, two[1]), 1.2, 1e-12);
  const auto c = conditional_gain(p, 5, two, 0.0, GainMode::Paper);
  EXPECT_DOUBLE_EQ(c.g_bid, 3.0);
  EXPECT_EQ(c.best_hop, 1);

  const std::vector<HopEstimate> one{{1, 6, 0.8}};
  const auto half = conditional_gain(p, 5, one, 0.5, GainMode::Consistent);
  EXPECT_DOUBLE_EQ(half.g_bid, 3.0 - 2.5);
}

TEST(ConditionalGain, TiesKeepFirstHop) {
  const std::vector<HopEstimate> same{{4, 6, 0.8}, {2, 6, 0.8}};
  EXPECT_EQ(conditional_gain(GainParams{10, 5, 8}, 5, same, 0.0, GainMode::Paper).best_hop, 4);
}

TEST(TotalGain, Examples) {
  EXPECT_DOUBLE_EQ(total_gain(0.5, 10), 5);
  EXPECT_DOUBLE_EQ(total_gain(0.0, 123), 0);
  EXPECT_DOUBLE_EQ(total_gain(1.0, -3), -3);
}

namespace {

// Auctioneer 0 advertises budget 10, fine 5. We are node 1. Competitor 3
// (distance 2) has always bid 6. Next hop 2 (distance 1) bid 4 and 6 on two
// adverts and delivered 3 of 4 packets. Budget scale 30: all budgets <= 10 are
// in the low band.
DecisionContext scripted_context(GainMode mode) {
  DecisionContext ctx;
  ctx.self = 1;
  ctx.advert.auction_id = 1;
  ctx.advert.auctioneer = 0;
  ctx.advert.budget = 10;
  ctx.advert.fine = 5;
  ctx.destination = 9;
  ctx.mode = mode;
  ctx.competitors = {{3, 2}};
  ctx.next_hops = {{2, 1}};
  ctx.store = ProfileStore(ProfileConfig{30, 1.0});
  const ContextBucket two_low{DistanceBand::Two, BudgetBand::Low};
  const ContextBucket one_low{DistanceBand::One, BudgetBand::Low};
  auto& rival = ctx.store.bidding_mut(3, two_low);
  rival.exposure = rival.participation = rival.bid_count = 4;
  rival.bid_sum = 24;
  rival.histogram = {{6, 4}};
  auto& next = ctx.store.bidding_mut(2, one_low);
  next.exposure = next.participation = next.bid_count = 2;
  next.bid_sum = 10;
  next.histogram = {{4, 1}, {6, 1}};
  auto& rel = ctx.store.reliability_mut(2, one_low);
  rel.successes = 3;
  rel.attempts = 4;
  return ctx;
}

}  // namespace

// Values composed by hand from the profile formulas:
//   p_succ(2) = (3+1)/(4+2) = 2/3, participation(2) = (2+1)/(2+2) = 3/4,
//   expected bid(2) = 5, p_end = 1/4, P_bid = 1 below 6, 1/2 at 6, 0 above.
TEST(Objective, MatchesHandComposition) {
  const auto obj = make_objective(scripted_context(GainMode::Consistent));
  // (4, 5, 8): hop = 3/4 * ((4 - 5) * 2/3) = -1/2; end = 1/4 * -5
  EXPECT_NEAR(obj(4, 5, 8), -0.5 - 1.25, 1e-12);
  // (8, 3, 4): bid above the rival's 6 never wins
  EXPECT_DOUBLE_EQ(obj(8, 3, 4), 0.0);
  // (6, 5, 10): hop = 3/4 * (1 * 2/3) = 1/2; tie with the rival halves it
  EXPECT_NEAR(obj(6, 5, 10), 0.5 * (0.5 - 1.25), 1e-12);
  // (5, 3, 4): hop = 3/4 * ((5 - 4) * 2/3 + (3 - 5) * 1/3) = 0
  EXPECT_NEAR(obj(5, 3, 4), -1.25, 1e-12);

  const auto paper = make_objective(scripted_context(GainMode::Paper));
  EXPECT_NEAR(paper(6, 5, 10), 0.5 * (0.5 + 0.25 * (6 - 5)), 1e-12);
}

TEST(Objective, EqualsStepwiseComposition) {
  const auto ctx = scripted_context(GainMode::Consistent);
  const auto obj = make_objective(ctx);
  for (Credits b = 1; b <= 10; ++b) {
    for (Credits f = 0; f <= 5; ++f) {
      for (Credits u = 1; u <= 10; ++u) {
        const GainParams p{b, f, u};
        const auto hops = hop_estimates(ctx, p);
        const double p_end = forwarding_end_probability(ctx, p);
        const auto cond = conditional_gain(p, ctx.advert.fine, hops, p_end, ctx.mode);
        EXPECT_EQ(obj(b, f, u), total_gain(bid_win_probability(ctx, b), cond.g_bid));
        const auto br = obj.breakdown(p);
        EXPECT_EQ(br.g_tot, br.p_bid * br.g_bid);
        EXPECT_DOUBLE_EQ(br.g_bid, br.forward_term + br.end_term);
        for (const auto& [n, fail] : br.fail_component_per_hop) EXPECT_LE(fail, 0.0);
      }
    }
  }
}

TEST(Objective, DestinationAdjacentIsBidTimesWinProbability) {
  auto ctx = scripted_context(GainMode::Consistent);
  ctx.destination_adjacent = true;
  const auto obj = make_objective(ctx);
  EXPECT_DOUBLE_EQ(obj(4, 0, 1), 4.0);
  EXPECT_DOUBLE_EQ(obj(6, 0, 1), 3.0);
  EXPECT_EQ(obj.breakdown({4, 0, 1}).p_end, 0.0);
}

TEST(Objective, NoHistoryIsTotalAndDeterministic) {
  DecisionContext ctx;
  ctx.advert.budget = 7;
  ctx.advert.fine = 2;
  ctx.next_hops = {{2, 1}, {3, 2}};
  ctx.competitors = {{4, 1}};
  const auto obj = make_objective(ctx);
  for (Credits b = 1; b <= 7; ++b) {
    const double v = obj(b, 1, 3);
    EXPECT_TRUE(std::isfinite(v));
    EXPECT_EQ(v, obj(b, 1, 3));
  }
  // No competitor data: P_bid = 1/(k+1).
  EXPECT_DOUBLE_EQ(obj.breakdown({3, 1, 3}).p_bid, 0.5);
}

TEST(Objective, NoNextHopsMeansEndTermOnly) {
  DecisionContext ctx;
  ctx.advert.budget = 7;
  ctx.advert.fine = 2;
  ctx.mode = GainMode::Consistent;
  const auto br = make_objective(ctx).breakdown({5, 2, 3});
  EXPECT_EQ(br.p_end, 1.0);
  EXPECT_EQ(br.forward_term, 0.0);
  EXPECT_FALSE(br.best_hop);
  EXPECT_DOUBLE_EQ(br.g_tot, -2.0);
}
