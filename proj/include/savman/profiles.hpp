#pragma once

// Per-peer behaviour profiles learned from observed auction traffic.
//
//   bidding      per (peer, bucket): exposure, participation, bid histogram
//   auction      per peer as auctioneer: how it picked winners
//   reliability  per (peer, bucket): successes / custody transfers
//
// A bucket is (peer's hop distance to the destination in {1, 2, >=3}) x
// (auction budget tercile). Estimates back off bucket -> peer-global -> prior
// and use add-one smoothing. Counters are doubles so that the optional
// exponential decay can scale them; with decay = 1 they hold exact integers
// and `observe` commutes.

#include <algorithm>
#include <cmath>
#include <compare>
#include <map>
#include <span>
#include <type_traits>
#include <vector>

#include "savman/core.hpp"

namespace savman {

enum class DistanceBand : std::uint8_t { One = 0, Two = 1, ThreeOrMore = 2 };
enum class BudgetBand : std::uint8_t { Low = 0, Mid = 1, High = 2 };

struct ContextBucket {
  DistanceBand distance = DistanceBand::One;
  BudgetBand budget = BudgetBand::Low;

  auto operator<=>(const ContextBucket&) const = default;
};

// What an observer knows about the auction an event belongs to. `hop_distance`
// is the observed peer's distance to the packet's destination (< 0 when
// unreachable).
struct AuctionContext {
  Credits budget = 1;
  Credits fine = 0;
  int hop_distance = 1;

  bool operator==(const AuctionContext&) const = default;
};

struct ProfileConfig {
  // Budgets are split into terciles of [1, budget_scale].
  Credits budget_scale = 30;
  // Multiplies a peer's counters in the touched profile before each update.
  double decay = 1.0;

  ContextBucket bucket(const AuctionContext& ctx) const {
    ContextBucket b;
    if (ctx.hop_distance == 1) {
      b.distance = DistanceBand::One;
    } else if (ctx.hop_distance == 2) {
      b.distance = DistanceBand::Two;
    } else {
      b.distance = DistanceBand::ThreeOrMore;
    }
    const Credits scale = std::max<Credits>(budget_scale, 1);
    if (ctx.budget * 3 <= scale) {
      b.budget = BudgetBand::Low;
    } else if (ctx.budget * 3 <= 2 * scale) {
      b.budget = BudgetBand::Mid;
    } else {
      b.budget = BudgetBand::High;
    }
    return b;
  }

  bool operator==(const ProfileConfig&) const = default;
};

enum class ObservationKind { AdvertSeen, BidSeen, WinnerSeen, DeliveryConfirmed, FailureObserved };
enum class AuctionClass { Cheapest = 0, CheapestFeasible = 1, Other = 2 };

// `actor` is the peer the observation is about:
//   AdvertSeen        actor was offered one of our adverts and no bid arrived
//   BidSeen           actor bid `amount` on one of our auctions (also an exposure)
//   WinnerSeen        actor (an auctioneer) picked a winner, classified as `auction_class`
//   DeliveryConfirmed actor took custody from us and the packet was delivered
//   FailureObserved   actor took custody from us and the packet failed
struct ObservedEvent {
  ObservationKind kind = ObservationKind::AdvertSeen;
  NodeId actor = kNoNode;
  AuctionContext context;
  Credits amount = 0;
  AuctionClass auction_class = AuctionClass::Cheapest;
  SimTime time = 0;
};

struct BiddingStats {
  double exposure = 0;
  double participation = 0;
  double bid_sum = 0;
  double bid_count = 0;
  std::map<Credits, double> histogram;

  void scale(double k) {
    exposure *= k;
    participation *= k;
    bid_sum *= k;
    bid_count *= k;
    for (auto& [amount, weight] : histogram) weight *= k;
  }
  void add(const BiddingStats& o) {
    exposure += o.exposure;
    participation += o.participation;
    bid_sum += o.bid_sum;
    bid_count += o.bid_count;
    for (const auto& [amount, weight] : o.histogram) histogram[amount] += weight;
  }
  bool operator==(const BiddingStats&) const = default;
};

struct AuctionStats {
  double cheapest = 0;
  double cheapest_feasible = 0;
  double other = 0;

  double total() const { return cheapest + cheapest_feasible + other; }
  bool operator==(const AuctionStats&) const = default;
};

struct ReliabilityStats {
  double successes = 0;
  double attempts = 0;

  bool operator==(const ReliabilityStats&) const = default;
};

class ProfileStore {
 public:
  using Key = std::pair<NodeId, ContextBucket>;

  ProfileStore() = default;
  explicit ProfileStore(ProfileConfig config) : config_(config) {}

  const ProfileConfig& config() const { return config_; }
  ContextBucket bucket(const AuctionContext& ctx) const { return config_.bucket(ctx); }

  void observe(const ObservedEvent& e) {
    const Key key{e.actor, bucket(e.context)};
    switch (e.kind) {
      case ObservationKind::AdvertSeen: {
        decay_peer(bidding_, e.actor);
        bidding_[key].exposure += 1;
        break;
      }
      case ObservationKind::BidSeen: {
        decay_peer(bidding_, e.actor);
        auto& s = bidding_[key];
        s.exposure += 1;
        s.participation += 1;
        s.bid_sum += static_cast<double>(e.amount);
        s.bid_count += 1;
        s.histogram[e.amount] += 1;
        break;
      }
      case ObservationKind::WinnerSeen: {
        auto& s = auction_[e.actor];
        if (config_.decay != 1.0) {
          s.cheapest *= config_.decay;
          s.cheapest_feasible *= config_.decay;
          s.other *= config_.decay;
        }
        switch (e.auction_class) {
          case AuctionClass::Cheapest: s.cheapest += 1; break;
          case AuctionClass::CheapestFeasible: s.cheapest_feasible += 1; break;
          case AuctionClass::Other: s.other += 1; break;
        }
        break;
      }
      case ObservationKind::DeliveryConfirmed:
      case ObservationKind::FailureObserved: {
        decay_peer(reliability_, e.actor);
        auto& s = reliability_[key];
        s.attempts += 1;
        if (e.kind == ObservationKind::DeliveryConfirmed) s.successes += 1;
        break;
      }
    }
  }

  // Zero stats when nothing was seen.
  const BiddingStats& bidding(NodeId peer, const ContextBucket& b) const { return lookup(bidding_, {peer, b}); }
  const ReliabilityStats& reliability(NodeId peer, const ContextBucket& b) const {
    return lookup(reliability_, {peer, b});
  }
  AuctionStats auction(NodeId peer) const {
    auto it = auction_.find(peer);
    return it == auction_.end() ? AuctionStats{} : it->second;
  }

  BiddingStats bidding_global(NodeId peer) const {
    BiddingStats total;
    for (auto it = bidding_.lower_bound({peer, ContextBucket{}}); it != bidding_.end() && it->first.first == peer; ++it)
      total.add(it->second);
    return total;
  }
  ReliabilityStats reliability_global(NodeId peer) const {
    ReliabilityStats total;
    for (auto it = reliability_.lower_bound({peer, ContextBucket{}});
         it != reliability_.end() && it->first.first == peer; ++it) {
      total.successes += it->second.successes;
      total.attempts += it->second.attempts;
    }
    return total;
  }

  const std::map<Key, BiddingStats>& bidding_table() const { return bidding_; }
  const std::map<NodeId, AuctionStats>& auction_table() const { return auction_; }
  const std::map<Key, ReliabilityStats>& reliability_table() const { return reliability_; }

  // Direct seeding (scenario priors, deserialization).
  BiddingStats& bidding_mut(NodeId peer, const ContextBucket& b) { return bidding_[{peer, b}]; }
  AuctionStats& auction_mut(NodeId peer) { return auction_[peer]; }
  ReliabilityStats& reliability_mut(NodeId peer, const ContextBucket& b) { return reliability_[{peer, b}]; }

  bool operator==(const ProfileStore&) const = default;

 private:
  template <class Map>
  static const typename Map::mapped_type& lookup(const Map& m, const Key& k) {
    static const typename Map::mapped_type empty{};
    auto it = m.find(k);
    return it == m.end() ? empty : it->second;
  }

  template <class Map>
  void decay_peer(Map& m, NodeId peer) {
    if (config_.decay == 1.0) return;
    for (auto it = m.lower_bound({peer, ContextBucket{}}); it != m.end() && it->first.first == peer; ++it) {
      if constexpr (std::is_same_v<typename Map::mapped_type, BiddingStats>) {
        it->second.scale(config_.decay);
      } else {
        it->second.successes *= config_.decay;
        it->second.attempts *= config_.decay;
      }
    }
  }

  ProfileConfig config_;
  std::map<Key, BiddingStats> bidding_;
  std::map<NodeId, AuctionStats> auction_;
  std::map<Key, ReliabilityStats> reliability_;
};

// From a bidder's point of view: the winning bid undercut or matched ours ->
// cheapest; a pricier winner closer to the destination -> cheapest-feasible;
// anything else -> other.
inline AuctionClass classify_winner(Credits our_bid, Credits winning_bid, int our_distance, int winner_distance) {
  if (winning_bid <= our_bid) return AuctionClass::Cheapest;
  if (winner_distance >= 0 && (our_distance < 0 || winner_distance < our_distance)) {
    return AuctionClass::CheapestFeasible;
  }
  return AuctionClass::Other;
}

/// Mean observed bid in the bucket, then the peer's global mean, then
/// ceil(budget / 2).
inline double expected_bid(const ProfileStore& store, NodeId peer, const AuctionContext& ctx) {
  const auto& local = store.bidding(peer, store.bucket(ctx));
  if (local.bid_count > 0) return local.bid_sum / local.bid_count;
  const auto global = store.bidding_global(peer);
  if (global.bid_count > 0) return global.bid_sum / global.bid_count;
  return static_cast<double>((ctx.budget + 1) / 2);
}

/// Add-one smoothed rate at which `peer` bids at all when offered an advert in
/// this bucket. No backoff: an untried budget band stays at the 0.5 prior.
inline double participation_rate(const ProfileStore& store, NodeId peer, const AuctionContext& ctx) {
  const auto& s = store.bidding(peer, store.bucket(ctx));
  return (s.participation + 1) / (s.exposure + 2);
}

struct PeerContext {
  NodeId peer = kNoNode;
  AuctionContext context;
};

/// Probability that none of `neighbors` bids, treating them as independent.
inline double end_probability(const ProfileStore& store, std::span<const PeerContext> neighbors) {
  double p = 1.0;
  for (const auto& n : neighbors) p *= 1.0 - participation_rate(store, n.peer, n.context);
  return p;
}

inline double success_probability(const ProfileStore& store, NodeId peer, const AuctionContext& ctx) {
  const auto& s = store.reliability(peer, store.bucket(ctx));
  if (s.attempts > 0) return (s.successes + 1) / (s.attempts + 2);
  const auto global = store.reliability_global(peer);
  return (global.successes + 1) / (global.attempts + 2);
}

/// Majority winner-selection class of an auctioneer; cheapest without data.
inline AuctionClass auction_policy(const ProfileStore& store, NodeId auctioneer) {
  const auto s = store.auction(auctioneer);
  if (s.other > s.cheapest && s.other > s.cheapest_feasible) return AuctionClass::Other;
  if (s.cheapest_feasible > s.cheapest) return AuctionClass::CheapestFeasible;
  return AuctionClass::Cheapest;
}

namespace detail {

struct CompetitorModel {
  double presence = 0;                   // probability the competitor bids
  std::map<Credits, double> bid_weights;  // unnormalized bid distribution
  double total_weight = 0;
};

inline CompetitorModel competitor_model(const ProfileStore& store, const PeerContext& c, Credits budget) {
  CompetitorModel m;
  const auto global = store.bidding_global(c.peer);
  if (global.exposure <= 0) {
    // Never offered anything: coin-flip participation, uniform bid.
    m.presence = 0.5;
    for (Credits b = 1; b <= budget; ++b) m.bid_weights[b] = 1;
    m.total_weight = static_cast<double>(std::max<Credits>(budget, 1));
    return m;
  }
  const auto& local = store.bidding(c.peer, store.bucket(c.context));
  const auto& rate_source = local.exposure > 0 ? local : global;
  m.presence = rate_source.exposure > 0 ? rate_source.participation / rate_source.exposure : 0.0;
  if (global.bid_count <= 0) {
    m.presence = 0;
    return m;
  }
  // Bucket histogram plus the global histogram as a unit-weight prior.
  for (const auto& [amount, w] : local.histogram) m.bid_weights[amount] += w;
  for (const auto& [amount, w] : global.histogram) m.bid_weights[amount] += w / global.bid_count;
  for (const auto& [amount, w] : m.bid_weights) m.total_weight += w;
  return m;
}

}  // namespace detail

/// Probability that `our_bid` wins `auctioneer`'s auction against
/// `competitors`. Competitor bids follow their empirical histograms; ties are
/// split evenly. With no bid data on any competitor, 1 / (k + 1).
inline double win_probability(const ProfileStore& store, NodeId auctioneer, Credits our_bid,
                              std::span<const PeerContext> competitors, Credits budget) {
  if (competitors.empty()) return 1.0;
  const bool any_data = std::any_of(competitors.begin(), competitors.end(), [&](const PeerContext& c) {
    return store.bidding_global(c.peer).bid_count > 0;
  });
  if (!any_data) return 1.0 / static_cast<double>(competitors.size() + 1);

  const AuctionClass policy = auction_policy(store, auctioneer);
  // dp[t]: probability that no competitor beat us and t of them share the
  // decisive position (tied bid, or merely present under a random policy).
  std::vector<double> dp{1.0};
  for (const auto& c : competitors) {
    const auto m = detail::competitor_model(store, c, budget);
    double p_tie = 0;
    double p_lose = 0;
    if (m.presence > 0 && m.total_weight > 0) {
      if (policy == AuctionClass::Other) {
        p_tie = m.presence;
      } else {
        double below = 0, equal = 0;
        for (const auto& [amount, w] : m.bid_weights) {
          if (amount < our_bid) {
            below += w;
          } else if (amount == our_bid) {
            equal += w;
          }
        }
        p_lose = m.presence * below / m.total_weight;
        p_tie = m.presence * equal / m.total_weight;
      }
    }
    const double p_pass = std::max(0.0, 1.0 - p_lose - p_tie);
    std::vector<double> next(dp.size() + 1, 0.0);
    for (std::size_t t = 0; t < dp.size(); ++t) {
      next[t] += dp[t] * p_pass;
      next[t + 1] += dp[t] * p_tie;
    }
    dp = std::move(next);
  }
  double p = 0;
  for (std::size_t t = 0; t < dp.size(); ++t) p += dp[t] / static_cast<double>(t + 1);
  return std::clamp(p, 0.0, 1.0);
}

}  // namespace savman
