#pragma once

// Expected-gain model a relay maximizes when it bids on a packet.
//
//   G_tot = P_bid * G_bid
//   G_bid = max_i (P_for,i * G_for,i) + P_end * G_end
//   G_for,i = (B_U - B_D,i) * P_succ,i + (F_D - F_U) * P_fail,i
//
// P_for,i is the chance that neighbour i bids on our re-auction at all
// (1 for a bid already in hand); P_succ,i is its delivery rate once it holds
// the packet. B_U/F_U: our bid on / the fine of the upstream advert. F_D and the budget
// are the terms of our own re-auction; B_D,i is neighbour i's expected bid.
// G_end has two forms: the literal B_U - F_U, and -F_U which is what the
// settlement ledger actually pays a relay that holds a packet it cannot
// forward.

#include <algorithm>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "savman/core.hpp"
#include "savman/engine.hpp"
#include "savman/fibsearch.hpp"
#include "savman/profiles.hpp"

namespace savman {

enum class GainMode { Paper, Consistent };

inline std::string_view to_string(GainMode mode) { return mode == GainMode::Paper ? "paper" : "consistent"; }

struct GainParams {
  Credits bid_up = 1;
  Credits fine_down = 0;
  Credits budget_down = 1;

  bool operator==(const GainParams&) const = default;
};

struct HopEstimate {
  NodeId neighbor = kNoNode;
  double bid_down_est = 0;
  double p_succ = 0.5;
  double p_for = 1.0;

  double p_fail() const { return 1.0 - p_succ; }
};

struct GainBreakdown {
  double g_tot = 0;
  double p_bid = 0;
  double g_bid = 0;
  std::optional<NodeId> best_hop;
  double forward_term = 0;
  double p_end = 1;
  double end_term = 0;
  std::map<NodeId, double> fail_component_per_hop;
};

inline double hop_gain(Credits bid_up, Credits fine_down, Credits fine_up, const HopEstimate& hop) {
  if (fine_down > fine_up) {
    throw Error(Errc::FineOrderViolation,
                "fine_down " + std::to_string(fine_down) + " > fine_up " + std::to_string(fine_up));
  }
  return hop.p_for * ((static_cast<double>(bid_up) - hop.bid_down_est) * hop.p_succ +
                      static_cast<double>(fine_down - fine_up) * hop.p_fail());
}

inline double end_gain(Credits bid_up, Credits fine_up, GainMode mode) {
  return mode == GainMode::Paper ? static_cast<double>(bid_up - fine_up) : -static_cast<double>(fine_up);
}

struct ConditionalGain {
  double g_bid = 0;
  std::optional<NodeId> best_hop;
  double forward_term = 0;
};

/// Empty `hops` contribute a forward term of 0; callers pass p_end = 1 then.
inline ConditionalGain conditional_gain(const GainParams& params, Credits fine_up, std::span<const HopEstimate> hops,
                                        double p_end, GainMode mode) {
  ConditionalGain out;
  for (const auto& hop : hops) {
    const double g = hop_gain(params.bid_up, params.fine_down, fine_up, hop);
    if (!out.best_hop || g > out.forward_term) {
      out.forward_term = g;
      out.best_hop = hop.neighbor;
    }
  }
  out.g_bid = out.forward_term + p_end * end_gain(params.bid_up, fine_up, mode);
  return out;
}

inline double total_gain(double p_bid, double g_bid) { return p_bid * g_bid; }

// Everything a relay's objective needs about one advert, frozen at receipt.
struct DecisionContext {
  struct Candidate {
    NodeId peer = kNoNode;
    int hop_distance = -1;
  };

  NodeId self = kNoNode;
  Advert advert;
  NodeId destination = kNoNode;
  // Custody would mean immediate delivery.
  bool destination_adjacent = false;
  // Other relays the advert went to.
  std::vector<Candidate> competitors;
  // Relays we could re-auction to.
  std::vector<Candidate> next_hops;
  ProfileStore store;
  GainMode mode = GainMode::Paper;

  Box3 search_box() const {
    return Box3{{Interval{1, advert.budget}, Interval{0, advert.fine}, Interval{1, advert.budget}}};
  }
};

inline double bid_win_probability(const DecisionContext& ctx, Credits bid_up) {
  std::vector<PeerContext> rivals;
  rivals.reserve(ctx.competitors.size());
  for (const auto& c : ctx.competitors) {
    rivals.push_back({c.peer, AuctionContext{ctx.advert.budget, ctx.advert.fine, c.hop_distance}});
  }
  return win_probability(ctx.store, ctx.advert.auctioneer, bid_up, rivals, ctx.advert.budget);
}

inline std::vector<HopEstimate> hop_estimates(const DecisionContext& ctx, const GainParams& params) {
  std::vector<HopEstimate> hops;
  if (ctx.destination_adjacent) {
    hops.push_back({ctx.destination, 0.0, 1.0});
    return hops;
  }
  for (const auto& c : ctx.next_hops) {
    const AuctionContext ac{params.budget_down, params.fine_down, c.hop_distance};
    const double bid = std::min(expected_bid(ctx.store, c.peer, ac), static_cast<double>(params.budget_down));
    hops.push_back({c.peer, bid, success_probability(ctx.store, c.peer, ac), participation_rate(ctx.store, c.peer, ac)});
  }
  return hops;
}

inline double forwarding_end_probability(const DecisionContext& ctx, const GainParams& params) {
  if (ctx.destination_adjacent) return 0.0;
  std::vector<PeerContext> peers;
  for (const auto& c : ctx.next_hops) {
    peers.push_back({c.peer, AuctionContext{params.budget_down, params.fine_down, c.hop_distance}});
  }
  return end_probability(ctx.store, peers);
}

inline GainBreakdown evaluate_gain(const DecisionContext& ctx, const GainParams& params) {
  GainBreakdown out;
  const auto hops = hop_estimates(ctx, params);
  out.p_end = forwarding_end_probability(ctx, params);
  const auto cond = conditional_gain(params, ctx.advert.fine, hops, out.p_end, ctx.mode);
  out.p_bid = bid_win_probability(ctx, params.bid_up);
  out.g_bid = cond.g_bid;
  out.best_hop = cond.best_hop;
  out.forward_term = cond.forward_term;
  out.end_term = out.p_end * end_gain(params.bid_up, ctx.advert.fine, ctx.mode);
  for (const auto& h : hops) {
    out.fail_component_per_hop[h.neighbor] = static_cast<double>(params.fine_down - ctx.advert.fine) * h.p_fail();
  }
  out.g_tot = total_gain(out.p_bid, out.g_bid);
  return out;
}

// G_tot as a function of (bid, fine, budget) over a frozen context.
class Objective {
 public:
  explicit Objective(std::shared_ptr<const DecisionContext> ctx) : ctx_(std::move(ctx)) {}

  double operator()(Coord bid_up, Coord fine_down, Coord budget_down) const {
    return evaluate_gain(*ctx_, GainParams{bid_up, fine_down, budget_down}).g_tot;
  }
  GainBreakdown breakdown(const GainParams& params) const { return evaluate_gain(*ctx_, params); }
  const DecisionContext& context() const { return *ctx_; }

 private:
  std::shared_ptr<const DecisionContext> ctx_;
};

inline Objective make_objective(DecisionContext ctx) {
  return Objective(std::make_shared<const DecisionContext>(std::move(ctx)));
}

}  // namespace savman
