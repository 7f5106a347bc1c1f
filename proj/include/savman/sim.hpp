#pragma once

// Deterministic discrete-event simulation of the forwarding auction game.
//
// Logical time only. An auction opens when a node takes custody of a packet
// (or a backbone injects one); the advert goes to every relay neighbour not
// already on the packet's custody chain; each advert and each bid is lost
// independently with the edge's loss probability; the auction closes one
// bidding window later and custody moves to the winner. A relay adjacent to
// the destination delivers immediately. Every random draw is keyed by
// (packet, custody depth, endpoints) on the scenario seed.

#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <vector>

#include "savman/core.hpp"
#include "savman/engine.hpp"
#include "savman/gain.hpp"
#include "savman/profiles.hpp"
#include "savman/rng.hpp"
#include "savman/strategies.hpp"
#include "savman/topology.hpp"
#include "savman/trace.hpp"

namespace savman {

struct Injection {
  SimTime time = 0;
  NodeId source = kNoNode;
  NodeId destination = kNoNode;
  Credits budget = 10;
  Credits fine = 0;
  int ttl = 8;
  int count = 1;         // packets injected
  SimTime interval = 1;  // spacing between them

  bool operator==(const Injection&) const = default;
};

struct EdgeLoss {
  NodeId a = kNoNode;
  NodeId b = kNoNode;
  double probability = 0;

  bool operator==(const EdgeLoss&) const = default;
};

struct TopologyChange {
  SimTime time = 0;
  bool add = false;
  NodeId a = kNoNode;
  NodeId b = kNoNode;

  bool operator==(const TopologyChange&) const = default;
};

// Pre-loaded observations for one node's profile store.
struct ProfilePrior {
  enum class Kind { Bidding, Reliability, Auction };

  NodeId owner = kNoNode;
  NodeId peer = kNoNode;
  Kind kind = Kind::Reliability;
  AuctionContext context;
  double exposure = 0;
  std::map<Credits, double> bids;  // amount -> count
  double successes = 0;
  double attempts = 0;
  AuctionStats auction;

  bool operator==(const ProfilePrior&) const = default;
};

struct Scenario {
  TopologySpec topology;
  std::vector<NodeId> backbones;
  StrategySpec default_strategy;
  std::map<NodeId, StrategySpec> strategies;
  std::vector<Injection> injections;
  double default_loss = 0;
  std::vector<EdgeLoss> edge_loss;
  std::vector<TopologyChange> changes;
  SimTime bidding_window = 1;
  GainMode gend = GainMode::Paper;
  std::uint64_t seed = 1;
  // Profile snapshots are taken every round_length time units (0: final only).
  SimTime round_length = 0;
  int metrics_window = 10;
  // budget_scale 0 means "largest injected budget".
  ProfileConfig profile{0, 1.0};
  std::vector<ProfilePrior> priors;

  bool operator==(const Scenario&) const = default;
};

inline Credits effective_budget_scale(const Scenario& s) {
  if (s.profile.budget_scale > 0) return s.profile.budget_scale;
  Credits m = 1;
  for (const auto& inj : s.injections) m = std::max(m, inj.budget);
  return m;
}

/// Throws Error(InvalidScenario) describing the first problem found.
inline Topology validate_scenario(const Scenario& s) {
  auto fail = [](const std::string& what) { throw Error(Errc::InvalidScenario, what); };
  Topology topo;
  try {
    topo = build_topology(s.topology);
  } catch (const Error& e) {
    fail(std::string("topology: ") + e.what());
  }
  const auto id = [](NodeId n) { return std::to_string(n); };
  for (NodeId b : s.backbones) {
    if (!topo.contains(b)) fail("backbone " + id(b) + " is not a node");
    topo.set_backbone(b);
  }
  for (const auto& [node, spec] : s.strategies) {
    if (!topo.contains(node)) fail("strategy assigned to unknown node " + id(node));
    if (topo.is_backbone(node)) fail("strategy assigned to backbone " + id(node));
  }
  for (std::size_t i = 0; i < s.injections.size(); ++i) {
    const auto& inj = s.injections[i];
    const std::string where = "injections[" + std::to_string(i) + "]: ";
    if (!topo.is_backbone(inj.source)) fail(where + "source " + id(inj.source) + " is not a backbone");
    if (!topo.is_backbone(inj.destination)) fail(where + "destination " + id(inj.destination) + " is not a backbone");
    if (inj.source == inj.destination) fail(where + "source equals destination");
    if (inj.budget < 1) fail(where + "budget must be >= 1");
    if (inj.fine < 0) fail(where + "fine must be >= 0");
    if (inj.ttl < 1) fail(where + "ttl must be >= 1");
    if (inj.count < 1) fail(where + "count must be >= 1");
    if (!(inj.interval >= 0) || !(inj.time >= 0)) fail(where + "time and interval must be >= 0");
  }
  if (!(s.default_loss >= 0 && s.default_loss <= 1)) fail("loss.default must be in [0,1]");
  for (const auto& l : s.edge_loss) {
    if (!topo.contains(l.a) || !topo.contains(l.b) || l.a == l.b) fail("loss edge (" + id(l.a) + "," + id(l.b) + ") invalid");
    if (!(l.probability >= 0 && l.probability <= 1)) fail("loss probability must be in [0,1]");
  }
  for (const auto& c : s.changes) {
    if (!topo.contains(c.a) || !topo.contains(c.b) || c.a == c.b) fail("change (" + id(c.a) + "," + id(c.b) + ") invalid");
    if (!(c.time >= 0)) fail("change time must be >= 0");
  }
  if (!(s.bidding_window > 0)) fail("bidding_window must be > 0");
  if (!(s.round_length >= 0)) fail("round_length must be >= 0");
  if (s.metrics_window < 1) fail("metrics_window must be >= 1");
  if (!(s.profile.decay > 0 && s.profile.decay <= 1)) fail("profile.decay must be in (0,1]");
  if (s.profile.budget_scale < 0) fail("profile.budget_scale must be >= 0");
  for (const auto& p : s.priors) {
    if (!topo.contains(p.owner) || topo.is_backbone(p.owner)) fail("prior owner " + id(p.owner) + " is not a relay");
    if (!topo.contains(p.peer)) fail("prior peer " + id(p.peer) + " is not a node");
    if (p.successes < 0 || p.attempts < p.successes) fail("prior needs 0 <= successes <= attempts");
  }
  return topo;
}

struct RunObserver {
  SavmanDecisionSink on_savman_decision;
};

class Simulator {
 public:
  explicit Simulator(const Scenario& scenario, RunObserver observer = {})
      : scenario_(scenario), topo_(validate_scenario(scenario)), rng_(scenario.seed), observer_(std::move(observer)) {
    ProfileConfig cfg = scenario.profile;
    cfg.budget_scale = effective_budget_scale(scenario);
    nodes_.resize(topo_.size());
    for (std::size_t i = 0; i < topo_.size(); ++i) {
      const auto id = static_cast<NodeId>(i);
      auto& node = nodes_[i];
      node.store = ProfileStore(cfg);
      if (topo_.is_backbone(id)) continue;
      auto it = scenario.strategies.find(id);
      node.strategy = make_strategy(it != scenario.strategies.end() ? it->second : scenario.default_strategy,
                                    observer_.on_savman_decision);
    }
    for (const auto& p : scenario.priors) apply_prior(nodes_[p.owner].store, p);
    for (const auto& l : scenario.edge_loss) loss_[edge_key(l.a, l.b)] = l.probability;
  }

  Trace run() {
    for (std::size_t i = 0; i < topo_.size(); ++i) trace_.final_balances[static_cast<NodeId>(i)] = 0;
    for (std::size_t i = 0; i < scenario_.changes.size(); ++i) {
      schedule(scenario_.changes[i].time, kChange, static_cast<std::int64_t>(i));
    }
    PacketId next_packet = 0;
    for (const auto& inj : scenario_.injections) {
      for (int k = 0; k < inj.count; ++k) {
        PacketState ps;
        ps.packet = Packet{next_packet, inj.source, inj.destination, inj.ttl, {}};
        ps.holder = inj.source;
        ps.terms = AuctionTerms{inj.budget, inj.fine};
        packets_.emplace(next_packet, std::move(ps));
        schedule(inj.time + k * inj.interval, kInject, next_packet);
        ++next_packet;
      }
    }
    SimTime next_checkpoint = scenario_.round_length;
    while (!queue_.empty()) {
      const auto item = queue_.top();
      queue_.pop();
      if (scenario_.round_length > 0) {
        while (item.time >= next_checkpoint) {
          checkpoint(next_checkpoint);
          next_checkpoint += scenario_.round_length;
        }
      }
      now_ = item.time;
      switch (item.kind) {
        case kChange: apply_change(scenario_.changes[static_cast<std::size_t>(item.id)]); break;
        case kClose: close_auction(item.id); break;
        case kInject: inject(item.id); break;
      }
    }
    checkpoint(now_);
    return std::move(trace_);
  }

  static void apply_prior(ProfileStore& store, const ProfilePrior& p) {
    const auto bucket = store.bucket(p.context);
    switch (p.kind) {
      case ProfilePrior::Kind::Bidding: {
        auto& s = store.bidding_mut(p.peer, bucket);
        for (const auto& [amount, count] : p.bids) {
          s.histogram[amount] += count;
          s.bid_count += count;
          s.bid_sum += count * static_cast<double>(amount);
          s.participation += count;
        }
        s.exposure += std::max(p.exposure, 0.0);
        s.exposure = std::max(s.exposure, s.participation);
        break;
      }
      case ProfilePrior::Kind::Reliability: {
        auto& s = store.reliability_mut(p.peer, bucket);
        s.successes += p.successes;
        s.attempts += p.attempts;
        break;
      }
      case ProfilePrior::Kind::Auction: {
        auto& s = store.auction_mut(p.peer);
        s.cheapest += p.auction.cheapest;
        s.cheapest_feasible += p.auction.cheapest_feasible;
        s.other += p.auction.other;
        break;
      }
    }
  }

 private:
  enum QueueKind { kChange = 0, kClose = 1, kInject = 2 };

  struct QueueItem {
    SimTime time;
    int kind;
    std::uint64_t order;
    std::int64_t id;

    bool operator>(const QueueItem& o) const {
      if (time != o.time) return time > o.time;
      if (kind != o.kind) return kind > o.kind;
      return order > o.order;
    }
  };

  struct NodeState {
    std::unique_ptr<Strategy> strategy;  // null for backbones
    ProfileStore store;
  };

  struct PacketState {
    Packet packet;
    NodeId holder = kNoNode;
    AuctionTerms terms;                    // terms for the holder's next auction
    std::optional<AuctionTerms> upstream;  // terms of the auction the holder won
    bool done = false;
  };

  struct AuctionState {
    Advert advert;
    std::vector<NodeId> recipients;
    std::vector<Bid> bids;                 // received and admitted
    std::vector<NodeId> bidders;           // everyone who submitted
    std::map<NodeId, BidPlan> plans;
    std::map<NodeId, Credits> submitted;
  };

  static std::uint64_t edge_key(NodeId a, NodeId b) {
    const auto lo = static_cast<std::uint64_t>(std::min(a, b));
    const auto hi = static_cast<std::uint64_t>(std::max(a, b));
    return (lo << 32) | hi;
  }

  double loss(NodeId a, NodeId b) const {
    auto it = loss_.find(edge_key(a, b));
    return it != loss_.end() ? it->second : scenario_.default_loss;
  }

  void schedule(SimTime t, QueueKind kind, std::int64_t id) { queue_.push({t, kind, order_++, id}); }

  template <class T>
  void emit(T data) {
    trace_.events.push_back(TraceEvent{trace_.events.size(), now_, EventData(std::move(data))});
  }

  const std::vector<int>& distances(NodeId destination) {
    auto it = dist_cache_.find(destination);
    if (it == dist_cache_.end()) it = dist_cache_.emplace(destination, topo_.distances_to(destination)).first;
    return it->second;
  }

  NodeView view(NodeId self, NodeId destination) {
    return NodeView{self, now_, scenario_.gend, topo_, distances(destination), nodes_[self].store, rng_};
  }

  bool is_relay(NodeId n) const { return !topo_.is_backbone(n); }

  void observe(NodeId observer, ObservationKind kind, NodeId actor, const Advert& advert, NodeId destination,
               Credits amount = 0, AuctionClass cls = AuctionClass::Cheapest) {
    if (!is_relay(observer)) return;
    ObservedEvent e;
    e.kind = kind;
    e.actor = actor;
    e.context = AuctionContext{advert.budget, advert.fine, distances(destination)[actor]};
    e.amount = amount;
    e.auction_class = cls;
    e.time = now_;
    nodes_[observer].store.observe(e);
  }

  void apply_change(const TopologyChange& c) {
    if (c.add) {
      topo_.add_edge(c.a, c.b);
    } else {
      topo_.remove_edge(c.a, c.b);
    }
    dist_cache_.clear();
    emit(ev::TopologyChanged{c.add, c.a, c.b});
  }

  void inject(PacketId id) {
    auto& ps = packets_.at(id);
    emit(ev::Inject{id, ps.packet.source, ps.packet.destination, ps.terms.budget, ps.terms.fine, ps.packet.ttl});
    open_auction(ps);
  }

  void open_auction(PacketState& ps) {
    const NodeId holder = ps.holder;
    Packet& packet = ps.packet;
    if (packet.ttl < 1) return fail(ps, FailureReason::TtlExhausted);

    Advert advert;
    advert.auction_id = next_auction_++;
    advert.packet_id = packet.id;
    advert.auctioneer = holder;
    advert.budget = ps.terms.budget;
    advert.fine = ps.terms.fine;
    advert.deadline = now_ + scenario_.bidding_window;
    if (const auto v = validate_advert(advert, ps.upstream)) {
      throw Error(Errc::InvalidDecision, "node " + std::to_string(holder) + " advert: " + std::string(to_string(*v)));
    }

    AuctionState a;
    a.advert = advert;
    const auto excluded = detail::chain_nodes(packet);
    for (NodeId n : topo_.neighbors(holder)) {
      if (is_relay(n) && !excluded.count(n)) a.recipients.push_back(n);
    }
    emit(ev::AdvertOpen{advert.auction_id, packet.id, holder, advert.budget, advert.fine, advert.deadline,
                        a.recipients});

    const auto pid = static_cast<std::uint64_t>(packet.id);
    const auto depth = static_cast<std::uint64_t>(packet.custody_chain.size());
    for (NodeId r : a.recipients) {
      const auto from = static_cast<std::uint64_t>(holder);
      const auto to = static_cast<std::uint64_t>(r);
      if (rng_.uniform({KeyedRng::kAdvertLoss, pid, depth, from, to}) < loss(holder, r)) {
        emit(ev::MessageLost{advert.auction_id, holder, r, MessageType::Advert});
        observe(holder, ObservationKind::AdvertSeen, r, advert, packet.destination);
        continue;
      }
      auto plan = nodes_[r].strategy->on_advert(view(r, packet.destination), advert, packet, a.recipients);
      if (!plan) {
        observe(holder, ObservationKind::AdvertSeen, r, advert, packet.destination);
        continue;
      }
      const Bid bid{advert.auction_id, r, plan->amount};
      if (const auto v = admit_bid(advert, bid, topo_, now_)) {
        throw Error(Errc::InvalidDecision, "node " + std::to_string(r) + " bid: " + std::string(to_string(*v)));
      }
      a.bidders.push_back(r);
      a.submitted[r] = plan->amount;
      a.plans[r] = *plan;
      if (rng_.uniform({KeyedRng::kBidLoss, pid, depth, to, from}) < loss(holder, r)) {
        emit(ev::MessageLost{advert.auction_id, r, holder, MessageType::Bid});
        observe(holder, ObservationKind::AdvertSeen, r, advert, packet.destination);
        continue;
      }
      emit(ev::BidPlaced{advert.auction_id, r, plan->amount});
      observe(holder, ObservationKind::BidSeen, r, advert, packet.destination, plan->amount);
      a.bids.push_back(bid);
    }
    const AuctionId aid = advert.auction_id;
    auctions_.emplace(aid, std::move(a));
    open_by_packet_[packet.id] = aid;
    schedule(advert.deadline, kClose, aid);
  }

  void close_auction(AuctionId aid) {
    auto& a = auctions_.at(aid);
    auto& ps = packets_.at(a.advert.packet_id);
    const NodeId holder = a.advert.auctioneer;
    const NodeId destination = ps.packet.destination;

    std::vector<Bid> live;
    for (const auto& b : a.bids) {
      if (topo_.adjacent(b.bidder, holder)) live.push_back(b);
    }
    std::optional<NodeId> winner;
    if (is_relay(holder)) {
      winner = nodes_[holder].strategy->choose_winner(view(holder, destination), a.advert, ps.packet, live);
    } else if (auto best = default_select_winner(live)) {
      winner = best->bidder;
    }
    Credits amount = 0;
    if (winner) {
      auto it = std::find_if(live.begin(), live.end(), [&](const Bid& b) { return b.bidder == *winner; });
      if (it == live.end()) {
        throw Error(Errc::InvalidDecision, "node " + std::to_string(holder) + " chose a non-bidder");
      }
      amount = it->amount;
    }
    emit(ev::WinnerSelected{aid, holder, winner.value_or(kNoNode), amount});

    for (NodeId b : a.bidders) {
      if (winner) {
        const auto& dist = distances(destination);
        observe(b, ObservationKind::WinnerSeen, holder, a.advert, destination, amount,
                classify_winner(a.submitted[b], amount, dist[b], dist[*winner]));
      }
      nodes_[b].strategy->on_auction_result(view(b, destination), a.advert, winner, amount);
    }

    if (!winner) return fail(ps, FailureReason::NoWinner);

    Packet& packet = ps.packet;
    packet.custody_chain.push_back(CustodyHop{aid, holder, *winner, amount, a.advert.fine});
    packet.ttl -= 1;
    emit(ev::CustodyTransfer{packet.id, aid, holder, *winner, amount, a.advert.fine, packet.ttl});
    ps.holder = *winner;
    ps.upstream = a.advert.terms();

    // A destination-adjacent holder delivers unless its strategy drops.
    const bool adjacent = topo_.adjacent(*winner, destination);
    if (!adjacent && packet.ttl < 1) return fail(ps, FailureReason::TtlExhausted);
    const auto decision =
        nodes_[*winner].strategy->on_custody(view(*winner, destination), packet, a.advert, a.plans.at(*winner));
    if (decision.drop) return fail(ps, FailureReason::Dropped);
    if (adjacent) return deliver(ps);
    ps.terms = decision.terms;
    open_auction(ps);
  }

  void settle(PacketState& ps, const std::vector<LedgerEntry>& entries, bool delivered) {
    for (const auto& e : entries) emit(ev::Ledger{ps.packet.id, e});
    trace_.final_balances = apply_entries(std::move(trace_.final_balances), entries);
    for (const auto& hop : ps.packet.custody_chain) {
      observe(hop.auctioneer, delivered ? ObservationKind::DeliveryConfirmed : ObservationKind::FailureObserved,
              hop.winner, auctions_.at(hop.auction).advert, ps.packet.destination);
    }
    ps.done = true;
  }

  void deliver(PacketState& ps) {
    emit(ev::Delivered{ps.packet.id, ps.holder});
    settle(ps, settle_delivery(ps.packet), true);
  }

  void fail(PacketState& ps, FailureReason reason) {
    emit(ev::Failed{ps.packet.id, ps.holder, reason});
    if (ps.packet.custody_chain.empty()) {
      ps.done = true;
      return;
    }
    settle(ps, settle_failure(ps.packet), false);
  }

  void checkpoint(SimTime t) {
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      if (nodes_[i].strategy) trace_.profiles.push_back({static_cast<NodeId>(i), t, nodes_[i].store});
    }
  }

  const Scenario& scenario_;
  Topology topo_;
  KeyedRng rng_;
  RunObserver observer_;
  std::vector<NodeState> nodes_;
  std::map<std::uint64_t, double> loss_;
  std::map<NodeId, std::vector<int>> dist_cache_;
  std::map<PacketId, PacketState> packets_;
  std::map<AuctionId, AuctionState> auctions_;
  std::map<PacketId, AuctionId> open_by_packet_;
  std::priority_queue<QueueItem, std::vector<QueueItem>, std::greater<>> queue_;
  std::uint64_t order_ = 0;
  AuctionId next_auction_ = 0;
  SimTime now_ = 0;
  Trace trace_;
};

inline Trace run(const Scenario& scenario, RunObserver observer = {}) {
  return Simulator(scenario, std::move(observer)).run();
}

}  // namespace savman
