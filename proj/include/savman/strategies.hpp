#pragma once

// Node behaviours: the gain-maximizing SAVMAN strategy and the baseline /
// adversarial behaviours seen in the challenge.

#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "savman/core.hpp"
#include "savman/engine.hpp"
#include "savman/fibsearch.hpp"
#include "savman/gain.hpp"
#include "savman/profiles.hpp"
#include "savman/rng.hpp"
#include "savman/topology.hpp"

namespace savman {

// What a node can see when the simulator asks it for a decision.
struct NodeView {
  NodeId self;
  SimTime now;
  GainMode mode;
  const Topology& topology;
  const std::vector<int>& distance;  // hop counts to the packet's destination
  const ProfileStore& store;
  const KeyedRng& rng;

  int distance_of(NodeId n) const {
    return n >= 0 && static_cast<std::size_t>(n) < distance.size() ? distance[n] : -1;
  }
};

// A bid plus the terms the bidder will use if it wins and re-auctions.
struct BidPlan {
  Credits amount = 1;
  AuctionTerms resale;

  bool operator==(const BidPlan&) const = default;
};

struct CustodyDecision {
  bool drop = false;
  AuctionTerms terms;

  static CustodyDecision drop_packet() { return {true, {}}; }
  static CustodyDecision auction(AuctionTerms t) { return {false, t}; }
};

class Strategy {
 public:
  virtual ~Strategy() = default;

  virtual std::string_view name() const = 0;

  /// Called when an advert reaches this node. `recipients` lists every relay
  /// the advert was addressed to (this node included).
  virtual std::optional<BidPlan> on_advert(const NodeView& view, const Advert& advert, const Packet& packet,
                                           std::span<const NodeId> recipients) = 0;

  /// Called when this node's own auction closes.
  virtual std::optional<NodeId> choose_winner(const NodeView& view, const Advert& advert, const Packet& packet,
                                              std::span<const Bid> bids) {
    (void)view;
    (void)advert;
    (void)packet;
    const auto best = default_select_winner(bids);
    return best ? std::optional<NodeId>(best->bidder) : std::nullopt;
  }

  /// Called after this node wins custody of a packet it cannot deliver directly.
  virtual CustodyDecision on_custody(const NodeView& view, const Packet& packet, const Advert& won,
                                     const BidPlan& plan) {
    (void)view;
    (void)packet;
    (void)won;
    return CustodyDecision::auction(plan.resale);
  }

  /// Outcome of an auction this node bid on.
  virtual void on_auction_result(const NodeView& view, const Advert& advert, std::optional<NodeId> winner,
                                 Credits winning_bid) {
    (void)view;
    (void)advert;
    (void)winner;
    (void)winning_bid;
  }
};

enum class StrategyKind { Savman, CooperativeCheapest, Undercutter, Budget1Selfish, BlackHole, Punisher, Random };

inline constexpr std::array<std::pair<StrategyKind, std::string_view>, 7> kStrategyNames{{
    {StrategyKind::Savman, "savman"},
    {StrategyKind::CooperativeCheapest, "cooperative_cheapest"},
    {StrategyKind::Undercutter, "undercutter"},
    {StrategyKind::Budget1Selfish, "budget1_selfish"},
    {StrategyKind::BlackHole, "black_hole"},
    {StrategyKind::Punisher, "punisher"},
    {StrategyKind::Random, "random"},
}};

inline std::string_view to_string(StrategyKind kind) {
  for (const auto& [k, name] : kStrategyNames)
    if (k == kind) return name;
  return "?";
}

inline std::optional<StrategyKind> parse_strategy_kind(std::string_view name) {
  for (const auto& [k, n] : kStrategyNames)
    if (n == name) return k;
  return std::nullopt;
}

struct StrategySpec {
  StrategyKind kind = StrategyKind::CooperativeCheapest;
  Credits bid_divisor = 2;      // cooperative family: bid = budget / divisor
  Credits undercut_step = 1;    // undercutter
  Credits threshold = 2;        // punisher
  double bid_probability = 0.5;  // random

  bool operator==(const StrategySpec&) const = default;
};

// One record per advert SAVMAN evaluates.
struct SavmanDecision {
  NodeId node = kNoNode;
  AuctionId auction = 0;
  std::shared_ptr<const DecisionContext> context;
  SearchResult<Point3> search;
  bool bid = false;
};

using SavmanDecisionSink = std::function<void(const SavmanDecision&)>;

namespace detail {

inline std::set<NodeId> chain_nodes(const Packet& packet) {
  std::set<NodeId> nodes{packet.source};
  for (const auto& hop : packet.custody_chain) {
    nodes.insert(hop.auctioneer);
    nodes.insert(hop.winner);
  }
  return nodes;
}

// Winning would move the packet strictly closer to its destination, with
// enough ttl left to finish along a shortest path.
inline bool makes_progress(const NodeView& view, const Advert& advert, const Packet& packet) {
  const int mine = view.distance_of(view.self);
  const int theirs = view.distance_of(advert.auctioneer);
  if (mine < 1) return false;
  if (theirs >= 0 && mine >= theirs) return false;
  return mine <= packet.ttl;
}

inline Credits cooperative_bid(Credits budget, Credits divisor) {
  return std::clamp<Credits>(budget / std::max<Credits>(divisor, 1), 1, budget);
}

}  // namespace detail

/// Builds the frozen decision context for `advert` as seen by `view.self`.
inline DecisionContext make_decision_context(const NodeView& view, const Advert& advert, const Packet& packet,
                                             std::span<const NodeId> recipients) {
  DecisionContext ctx;
  ctx.self = view.self;
  ctx.advert = advert;
  ctx.destination = packet.destination;
  ctx.destination_adjacent = view.topology.adjacent(view.self, packet.destination);
  ctx.mode = view.mode;
  ctx.store = view.store;
  for (NodeId r : recipients) {
    if (r != view.self) ctx.competitors.push_back({r, view.distance_of(r)});
  }
  // ttl left once we hold the packet; a next hop at distance d needs d - 1
  // more transfers after ours.
  const int ttl_after_us = packet.ttl - 1;
  if (!ctx.destination_adjacent && ttl_after_us >= 1) {
    const auto excluded = detail::chain_nodes(packet);
    for (NodeId n : view.topology.neighbors(view.self)) {
      if (view.topology.is_backbone(n) || excluded.count(n) || n == view.self) continue;
      const int d = view.distance_of(n);
      if (d >= 1 && d <= ttl_after_us) ctx.next_hops.push_back({n, d});
    }
  }
  return ctx;
}

class SavmanStrategy : public Strategy {
 public:
  explicit SavmanStrategy(SavmanDecisionSink sink = {}) : sink_(std::move(sink)) {}

  std::string_view name() const override { return "savman"; }

  std::optional<BidPlan> on_advert(const NodeView& view, const Advert& advert, const Packet& packet,
                                   std::span<const NodeId> recipients) override {
    auto ctx = std::make_shared<const DecisionContext>(make_decision_context(view, advert, packet, recipients));
    const Objective objective(ctx);
    const auto result = search_3d(objective, ctx->search_box());
    const bool bid = result.value > 0;
    if (sink_) sink_(SavmanDecision{view.self, advert.auction_id, ctx, result, bid});
    if (!bid) return std::nullopt;
    return BidPlan{result.arg[Box3::kBid], AuctionTerms{result.arg[Box3::kBudget], result.arg[Box3::kFine]}};
  }

  std::optional<NodeId> choose_winner(const NodeView& view, const Advert& advert, const Packet& packet,
                                      std::span<const Bid> bids) override {
    if (bids.empty() || packet.custody_chain.empty()) return std::nullopt;
    const auto& acquired = packet.custody_chain.back();
    return pick_bidder(view, advert, acquired.bid, acquired.fine, bids);
  }

  /// Highest expected hop gain using the realized bid amounts; none when
  /// holding the packet is expected to pay more.
  static std::optional<NodeId> pick_bidder(const NodeView& view, const Advert& advert, Credits bid_up,
                                           Credits fine_up, std::span<const Bid> bids) {
    std::optional<NodeId> best;
    double best_gain = 0;
    for (const auto& b : bids) {
      const AuctionContext ctx{advert.budget, advert.fine, view.distance_of(b.bidder)};
      const HopEstimate hop{b.bidder, static_cast<double>(b.amount), success_probability(view.store, b.bidder, ctx)};
      const double g = hop_gain(bid_up, advert.fine, fine_up, hop);
      if (!best || g > best_gain || (g == best_gain && b.bidder < *best)) {
        best = b.bidder;
        best_gain = g;
      }
    }
    if (best && best_gain < end_gain(bid_up, fine_up, view.mode)) return std::nullopt;
    return best;
  }

 private:
  SavmanDecisionSink sink_;
};

// Bids budget / divisor when it would move the packet closer to the
// destination, re-auctions with the same fine and budget = own bid, picks the
// cheapest bid.
class CooperativeCheapest : public Strategy {
 public:
  explicit CooperativeCheapest(Credits divisor = 2) : divisor_(divisor) {}

  std::string_view name() const override { return "cooperative_cheapest"; }

  std::optional<BidPlan> on_advert(const NodeView& view, const Advert& advert, const Packet& packet,
                                   std::span<const NodeId>) override {
    if (!detail::makes_progress(view, advert, packet)) return std::nullopt;
    const Credits bid = detail::cooperative_bid(advert.budget, divisor_);
    return BidPlan{bid, AuctionTerms{bid, advert.fine}};
  }

 protected:
  Credits divisor_;
};

class Budget1Selfish : public CooperativeCheapest {
 public:
  using CooperativeCheapest::CooperativeCheapest;

  std::string_view name() const override { return "budget1_selfish"; }

  std::optional<BidPlan> on_advert(const NodeView& view, const Advert& advert, const Packet& packet,
                                   std::span<const NodeId> recipients) override {
    auto plan = CooperativeCheapest::on_advert(view, advert, packet, recipients);
    if (plan) plan->resale.budget = 1;
    return plan;
  }
};

// Bids one step under the lowest winning bid it has seen so far.
class Undercutter : public CooperativeCheapest {
 public:
  explicit Undercutter(Credits step = 1, Credits divisor = 2) : CooperativeCheapest(divisor), step_(step) {}

  std::string_view name() const override { return "undercutter"; }

  std::optional<BidPlan> on_advert(const NodeView& view, const Advert& advert, const Packet& packet,
                                   std::span<const NodeId>) override {
    if (!detail::makes_progress(view, advert, packet)) return std::nullopt;
    const Credits bid = lowest_seen_ ? std::clamp<Credits>(*lowest_seen_ - step_, 1, advert.budget)
                                     : detail::cooperative_bid(advert.budget, divisor_);
    return BidPlan{bid, AuctionTerms{bid, advert.fine}};
  }

  void on_auction_result(const NodeView&, const Advert&, std::optional<NodeId> winner, Credits winning_bid) override {
    if (winner && (!lowest_seen_ || winning_bid < *lowest_seen_)) lowest_seen_ = winning_bid;
  }

  std::optional<Credits> lowest_seen() const { return lowest_seen_; }

 private:
  Credits step_;
  std::optional<Credits> lowest_seen_;
};

class BlackHole : public Strategy {
 public:
  std::string_view name() const override { return "black_hole"; }

  std::optional<BidPlan> on_advert(const NodeView&, const Advert& advert, const Packet&,
                                   std::span<const NodeId>) override {
    return BidPlan{1, AuctionTerms{1, advert.fine}};
  }

  CustodyDecision on_custody(const NodeView&, const Packet&, const Advert&, const BidPlan&) override {
    return CustodyDecision::drop_packet();
  }
};

// Acquires and drops anything auctioned with budget <= threshold; otherwise
// cooperative.
class Punisher : public CooperativeCheapest {
 public:
  explicit Punisher(Credits threshold = 2, Credits divisor = 2) : CooperativeCheapest(divisor), threshold_(threshold) {}

  std::string_view name() const override { return "punisher"; }

  std::optional<BidPlan> on_advert(const NodeView& view, const Advert& advert, const Packet& packet,
                                   std::span<const NodeId> recipients) override {
    if (advert.budget <= threshold_) return BidPlan{1, AuctionTerms{1, advert.fine}};
    return CooperativeCheapest::on_advert(view, advert, packet, recipients);
  }

  CustodyDecision on_custody(const NodeView& view, const Packet& packet, const Advert& won,
                             const BidPlan& plan) override {
    if (won.budget <= threshold_) return CustodyDecision::drop_packet();
    return CooperativeCheapest::on_custody(view, packet, won, plan);
  }

 private:
  Credits threshold_;
};

// Bids uniformly in [1, budget] with probability p and picks a random bidder.
class RandomStrategy : public Strategy {
 public:
  explicit RandomStrategy(double bid_probability = 0.5) : p_(bid_probability) {}

  std::string_view name() const override { return "random"; }

  std::optional<BidPlan> on_advert(const NodeView& view, const Advert& advert, const Packet& packet,
                                   std::span<const NodeId>) override {
    const auto depth = static_cast<std::uint64_t>(packet.custody_chain.size());
    const auto pid = static_cast<std::uint64_t>(packet.id);
    const auto self = static_cast<std::uint64_t>(view.self);
    if (view.rng.uniform({KeyedRng::kStrategy, pid, depth, self, 0}) >= p_) return std::nullopt;
    const Credits bid = view.rng.between(1, advert.budget, {KeyedRng::kStrategy, pid, depth, self, 1});
    return BidPlan{bid, AuctionTerms{bid, advert.fine}};
  }

  std::optional<NodeId> choose_winner(const NodeView& view, const Advert&, const Packet& packet,
                                      std::span<const Bid> bids) override {
    if (bids.empty()) return std::nullopt;
    const auto depth = static_cast<std::uint64_t>(packet.custody_chain.size());
    const auto i = view.rng.between(0, static_cast<std::int64_t>(bids.size()) - 1,
                                    {KeyedRng::kStrategy, static_cast<std::uint64_t>(packet.id), depth,
                                     static_cast<std::uint64_t>(view.self), 2});
    return bids[static_cast<std::size_t>(i)].bidder;
  }

 private:
  double p_;
};

/// Instantiates a strategy. `sink` only matters for SAVMAN.
inline std::unique_ptr<Strategy> make_strategy(const StrategySpec& spec, SavmanDecisionSink sink = {}) {
  switch (spec.kind) {
    case StrategyKind::Savman: return std::make_unique<SavmanStrategy>(std::move(sink));
    case StrategyKind::CooperativeCheapest: return std::make_unique<CooperativeCheapest>(spec.bid_divisor);
    case StrategyKind::Undercutter: return std::make_unique<Undercutter>(spec.undercut_step, spec.bid_divisor);
    case StrategyKind::Budget1Selfish: return std::make_unique<Budget1Selfish>(spec.bid_divisor);
    case StrategyKind::BlackHole: return std::make_unique<BlackHole>();
    case StrategyKind::Punisher: return std::make_unique<Punisher>(spec.threshold, spec.bid_divisor);
    case StrategyKind::Random: return std::make_unique<RandomStrategy>(spec.bid_probability);
  }
  throw Error(Errc::UnknownKind, "strategy kind " + std::to_string(static_cast<int>(spec.kind)));
}

inline std::unique_ptr<Strategy> baseline_behavior(std::string_view kind, const StrategySpec& params = {}) {
  const auto k = parse_strategy_kind(kind);
  if (!k || *k == StrategyKind::Savman) throw Error(Errc::UnknownKind, "baseline kind '" + std::string(kind) + "'");
  StrategySpec spec = params;
  spec.kind = *k;
  return make_strategy(spec);
}

}  // namespace savman
