#pragma once

// Rules of the forwarding auction: advert and bid admission, the default
// winner policy, and the credit/fine settlement ledger.
//
// Settlement rulebook:
//   * pay-on-delivery: every winner in the custody chain is paid its bid by
//     its auctioneer, but only once the packet reaches the destination;
//   * fine-on-failure: if the packet fails anywhere, every winner in the chain
//     pays its auctioneer that auction's fine.
// With re-auction terms bounded by the upstream terms (budget and fine may
// only shrink) a relay can never profit from a failure.

#include <algorithm>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "savman/core.hpp"

namespace savman {

struct CustodyHop {
  AuctionId auction = 0;
  NodeId auctioneer = kNoNode;
  NodeId winner = kNoNode;
  Credits bid = 0;
  Credits fine = 0;

  bool operator==(const CustodyHop&) const = default;
};

struct Packet {
  PacketId id = 0;
  NodeId source = kNoNode;
  NodeId destination = kNoNode;
  int ttl = 0;
  std::vector<CustodyHop> custody_chain;

  bool operator==(const Packet&) const = default;
};

struct AuctionTerms {
  Credits budget = 1;
  Credits fine = 0;

  bool operator==(const AuctionTerms&) const = default;
};

struct Advert {
  AuctionId auction_id = 0;
  PacketId packet_id = 0;
  NodeId auctioneer = kNoNode;
  Credits budget = 1;
  Credits fine = 0;
  SimTime deadline = 0;

  AuctionTerms terms() const { return {budget, fine}; }
  bool operator==(const Advert&) const = default;
};

struct Bid {
  AuctionId auction_id = 0;
  NodeId bidder = kNoNode;
  Credits amount = 0;

  bool operator==(const Bid&) const = default;
};

enum class LedgerReason { BidPayout, FinePayment };

inline std::string_view to_string(LedgerReason reason) {
  return reason == LedgerReason::BidPayout ? "bid_payout" : "fine_payment";
}

struct LedgerEntry {
  NodeId from = kNoNode;
  NodeId to = kNoNode;
  Credits amount = 0;
  LedgerReason reason = LedgerReason::BidPayout;
  AuctionId auction_id = 0;

  bool operator==(const LedgerEntry&) const = default;
};

// Account id -> signed credits. Missing accounts read as 0.
using Balances = std::map<NodeId, Credits>;

enum class AdvertViolation { BudgetTooLow, NegativeFine, BudgetExceedsUpstream, FineExceedsUpstream };
enum class BidViolation { BidTooLow, BidExceedsBudget, NotNeighbor, AuctionClosed };

inline std::string_view to_string(AdvertViolation v) {
  switch (v) {
    case AdvertViolation::BudgetTooLow: return "BudgetTooLow (budget < 1)";
    case AdvertViolation::NegativeFine: return "NegativeFine (fine < 0)";
    case AdvertViolation::BudgetExceedsUpstream: return "BudgetExceedsUpstream (budget > upstream budget)";
    case AdvertViolation::FineExceedsUpstream: return "FineExceedsUpstream (fine > upstream fine)";
  }
  return "?";
}

inline std::string_view to_string(BidViolation v) {
  switch (v) {
    case BidViolation::BidTooLow: return "BidTooLow (amount < 1)";
    case BidViolation::BidExceedsBudget: return "BidExceedsBudget (amount > budget)";
    case BidViolation::NotNeighbor: return "NotNeighbor";
    case BidViolation::AuctionClosed: return "AuctionClosed";
  }
  return "?";
}

/// Checks an advert's terms. `upstream` is present iff the auctioneer acquired
/// the packet by auction; backbone-originated adverts pass std::nullopt.
inline std::optional<AdvertViolation> validate_advert(const Advert& advert,
                                                      const std::optional<AuctionTerms>& upstream) {
  if (advert.budget < 1) return AdvertViolation::BudgetTooLow;
  if (advert.fine < 0) return AdvertViolation::NegativeFine;
  if (upstream) {
    if (advert.budget > upstream->budget) return AdvertViolation::BudgetExceedsUpstream;
    if (advert.fine > upstream->fine) return AdvertViolation::FineExceedsUpstream;
  }
  return std::nullopt;
}

/// `topology` only needs `bool adjacent(NodeId, NodeId) const`.
template <class TopologyView>
std::optional<BidViolation> admit_bid(const Advert& advert, const Bid& bid, const TopologyView& topology,
                                      SimTime now) {
  if (now >= advert.deadline) return BidViolation::AuctionClosed;
  if (bid.amount < 1) return BidViolation::BidTooLow;
  if (bid.amount > advert.budget) return BidViolation::BidExceedsBudget;
  if (!topology.adjacent(bid.bidder, advert.auctioneer)) return BidViolation::NotNeighbor;
  return std::nullopt;
}

/// Cheapest bid wins; equal amounts go to the smallest bidder id.
inline std::optional<Bid> default_select_winner(std::span<const Bid> bids) {
  if (bids.empty()) return std::nullopt;
  return *std::min_element(bids.begin(), bids.end(), [](const Bid& a, const Bid& b) {
    return a.amount != b.amount ? a.amount < b.amount : a.bidder < b.bidder;
  });
}

inline std::vector<LedgerEntry> settle_delivery(const Packet& packet) {
  if (packet.custody_chain.empty()) throw Error(Errc::EmptyChain, "packet " + std::to_string(packet.id));
  std::vector<LedgerEntry> entries;
  entries.reserve(packet.custody_chain.size());
  for (const auto& hop : packet.custody_chain) {
    if (hop.bid > 0) {
      entries.push_back({hop.auctioneer, hop.winner, hop.bid, LedgerReason::BidPayout, hop.auction});
    }
  }
  return entries;
}

inline std::vector<LedgerEntry> settle_failure(const Packet& packet) {
  if (packet.custody_chain.empty()) throw Error(Errc::EmptyChain, "packet " + std::to_string(packet.id));
  std::vector<LedgerEntry> entries;
  for (const auto& hop : packet.custody_chain) {
    // zero fines are elided
    if (hop.fine > 0) {
      entries.push_back({hop.winner, hop.auctioneer, hop.fine, LedgerReason::FinePayment, hop.auction});
    }
  }
  return entries;
}

inline Balances apply_entries(Balances balances, std::span<const LedgerEntry> entries) {
  for (const auto& e : entries) {
    balances[e.from] -= e.amount;
    balances[e.to] += e.amount;
  }
  return balances;
}

inline Credits balance_sum(const Balances& balances) {
  Credits sum = 0;
  for (const auto& [account, value] : balances) sum += value;
  return sum;
}

}  // namespace savman
