#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include "savman/core.hpp"
#include "savman/engine.hpp"
#include "savman/profiles.hpp"

namespace savman {

enum class MessageType { Advert, Bid };
enum class FailureReason { TtlExhausted, Dropped, NoWinner };

inline std::string_view to_string(MessageType m) { return m == MessageType::Advert ? "advert" : "bid"; }

inline std::string_view to_string(FailureReason r) {
  switch (r) {
    case FailureReason::TtlExhausted: return "ttl_exhausted";
    case FailureReason::Dropped: return "dropped";
    case FailureReason::NoWinner: return "no_winner";
  }
  return "?";
}

namespace ev {

struct Inject {
  PacketId packet = 0;
  NodeId source = kNoNode;
  NodeId destination = kNoNode;
  Credits budget = 0;
  Credits fine = 0;
  int ttl = 0;
  bool operator==(const Inject&) const = default;
};

struct AdvertOpen {
  AuctionId auction = 0;
  PacketId packet = 0;
  NodeId auctioneer = kNoNode;
  Credits budget = 0;
  Credits fine = 0;
  SimTime deadline = 0;
  std::vector<NodeId> recipients;
  bool operator==(const AdvertOpen&) const = default;
};

struct BidPlaced {
  AuctionId auction = 0;
  NodeId bidder = kNoNode;
  Credits amount = 0;
  bool operator==(const BidPlaced&) const = default;
};

struct MessageLost {
  AuctionId auction = 0;
  NodeId from = kNoNode;
  NodeId to = kNoNode;
  MessageType message = MessageType::Advert;
  bool operator==(const MessageLost&) const = default;
};

struct WinnerSelected {
  AuctionId auction = 0;
  NodeId auctioneer = kNoNode;
  NodeId winner = kNoNode;  // kNoNode: no winner
  Credits amount = 0;
  bool operator==(const WinnerSelected&) const = default;
};

struct CustodyTransfer {
  PacketId packet = 0;
  AuctionId auction = 0;
  NodeId from = kNoNode;
  NodeId to = kNoNode;
  Credits bid = 0;
  Credits fine = 0;
  int ttl = 0;  // remaining after the transfer
  bool operator==(const CustodyTransfer&) const = default;
};

struct Delivered {
  PacketId packet = 0;
  NodeId holder = kNoNode;
  bool operator==(const Delivered&) const = default;
};

struct Failed {
  PacketId packet = 0;
  NodeId holder = kNoNode;
  FailureReason reason = FailureReason::NoWinner;
  bool operator==(const Failed&) const = default;
};

struct Ledger {
  PacketId packet = 0;
  LedgerEntry entry;
  bool operator==(const Ledger&) const = default;
};

struct TopologyChanged {
  bool add = false;
  NodeId a = kNoNode;
  NodeId b = kNoNode;
  bool operator==(const TopologyChanged&) const = default;
};

}  // namespace ev

using EventData = std::variant<ev::Inject, ev::AdvertOpen, ev::BidPlaced, ev::MessageLost, ev::WinnerSelected,
                               ev::CustodyTransfer, ev::Delivered, ev::Failed, ev::Ledger, ev::TopologyChanged>;

// Stable names, also used as JSON array keys and CSV file stems.
inline constexpr std::array<std::string_view, std::variant_size_v<EventData>> kEventKindNames{
    "inject", "advert", "bid", "loss", "winner", "custody", "delivery", "failure", "ledger", "topology"};

inline std::string_view event_kind_name(const EventData& e) { return kEventKindNames[e.index()]; }

struct TraceEvent {
  std::uint64_t seq = 0;
  SimTime time = 0;
  EventData data;

  bool operator==(const TraceEvent&) const = default;
};

struct ProfileSnapshot {
  NodeId node = kNoNode;
  SimTime time = 0;
  ProfileStore store;

  bool operator==(const ProfileSnapshot&) const = default;
};

struct Trace {
  std::vector<TraceEvent> events;
  Balances final_balances;
  std::vector<ProfileSnapshot> profiles;

  template <class T>
  std::vector<const T*> all() const {
    std::vector<const T*> out;
    for (const auto& e : events)
      if (const auto* p = std::get_if<T>(&e.data)) out.push_back(p);
    return out;
  }

  bool operator==(const Trace&) const = default;
};

/// Balances obtained by replaying every ledger event; includes every account
/// present in `final_balances` so the two can be compared directly.
inline Balances replay_balances(const Trace& trace) {
  Balances b;
  for (const auto& [account, value] : trace.final_balances) b[account] = 0;
  for (const auto* l : trace.all<ev::Ledger>()) {
    const LedgerEntry entries[] = {l->entry};
    b = apply_entries(std::move(b), entries);
  }
  return b;
}

struct NodeMetrics {
  Credits balance = 0;
  int auctions = 0;
  int wins = 0;
  int drops = 0;
  bool operator==(const NodeMetrics&) const = default;
};

struct MetricsReport {
  std::map<NodeId, NodeMetrics> nodes;
  std::size_t injected = 0;
  std::size_t delivered = 0;
  std::size_t failed = 0;
  double delivery_ratio = 1.0;
  // No packets were injected; delivery_ratio is 1 by convention.
  bool vacuous = true;
  Credits balance_sum = 0;
  // Median winning bid over consecutive, complete windows of `window` auctions
  // that had a winner, in trace order.
  int window = 10;
  std::vector<double> median_winning_bid;
};

inline double median(std::vector<Credits> v) {
  if (v.empty()) return 0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? static_cast<double>(v[m]) : (static_cast<double>(v[m - 1]) + static_cast<double>(v[m])) / 2;
}

inline MetricsReport metrics(const Trace& trace, int window = 10) {
  MetricsReport r;
  r.window = std::max(window, 1);
  for (const auto& [account, value] : trace.final_balances) r.nodes[account].balance = value;
  std::vector<Credits> winning;
  for (const auto& e : trace.events) {
    std::visit(
        [&](const auto& d) {
          using T = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<T, ev::Inject>) {
            ++r.injected;
          } else if constexpr (std::is_same_v<T, ev::AdvertOpen>) {
            ++r.nodes[d.auctioneer].auctions;
          } else if constexpr (std::is_same_v<T, ev::CustodyTransfer>) {
            ++r.nodes[d.to].wins;
          } else if constexpr (std::is_same_v<T, ev::Delivered>) {
            ++r.delivered;
          } else if constexpr (std::is_same_v<T, ev::Failed>) {
            ++r.failed;
            if (d.reason == FailureReason::Dropped) ++r.nodes[d.holder].drops;
          } else if constexpr (std::is_same_v<T, ev::WinnerSelected>) {
            if (d.winner != kNoNode) winning.push_back(d.amount);
          }
        },
        e.data);
  }
  r.vacuous = r.injected == 0;
  r.delivery_ratio = r.vacuous ? 1.0 : static_cast<double>(r.delivered) / static_cast<double>(r.injected);
  r.balance_sum = balance_sum(trace.final_balances);
  const auto w = static_cast<std::size_t>(r.window);
  for (std::size_t start = 0; start + w <= winning.size(); start += w) {
    r.median_winning_bid.push_back(median({winning.begin() + start, winning.begin() + start + w}));
  }
  return r;
}

}  // namespace savman
