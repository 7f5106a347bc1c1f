#pragma once

// Built-in reproduction scenarios and their evaluations, shared by the CLI
// (`repro`, `audit`) and the acceptance suite.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "savman/fibsearch.hpp"
#include "savman/sim.hpp"

namespace savman::repro {

inline StrategySpec strategy(StrategyKind kind) {
  StrategySpec s;
  s.kind = kind;
  return s;
}

// ---------------------------------------------------------------- scenarios

// 0 source backbone, 1 SAVMAN fork, 2 black hole, 3 cooperative relay,
// 4 cooperative merge relay, 5 destination backbone. Both branches rejoin at
// 4. The black hole has the lower id and wins every tie until SAVMAN learns
// otherwise.
inline Scenario blackhole_avoidance(std::uint64_t seed = 1) {
  Scenario s;
  s.topology = TopologySpec::explicit_edges(6, {{0, 1}, {1, 2}, {1, 3}, {2, 4}, {3, 4}, {4, 5}});
  s.backbones = {0, 5};
  s.default_strategy = strategy(StrategyKind::CooperativeCheapest);
  s.strategies = {{1, strategy(StrategyKind::Savman)}, {2, strategy(StrategyKind::BlackHole)}};
  s.injections = {Injection{0, 0, 5, 20, 4, 6, 220, 4}};
  s.gend = GainMode::Consistent;
  s.seed = seed;
  return s;
}

inline constexpr int kBlackholeWarmup = 20;
inline constexpr int kBlackholeMeasured = 200;

// Source backbone, four undercutters, destination backbone on a line.
inline Scenario undercut_collapse(std::uint64_t seed = 1) {
  Scenario s;
  s.topology = TopologySpec::line(6);
  s.backbones = {0, 5};
  s.default_strategy = strategy(StrategyKind::Undercutter);
  s.injections = {Injection{0, 0, 5, 20, 2, 8, 40, 5}};
  s.seed = seed;
  s.metrics_window = 10;
  return s;
}

// 0 source, 1 budget-1 selfish relay, 2 punisher(2), 3 cooperative relay,
// 4 destination. The punisher hangs off the selfish relay as a leaf; without
// the punisher that edge is absent.
inline Scenario punisher(bool with_punisher, std::uint64_t seed = 1) {
  Scenario s;
  std::vector<std::pair<NodeId, NodeId>> edges{{0, 1}, {1, 3}, {3, 4}};
  if (with_punisher) edges.push_back({1, 2});
  s.topology = TopologySpec::explicit_edges(5, edges);
  s.backbones = {0, 4};
  s.default_strategy = strategy(StrategyKind::CooperativeCheapest);
  StrategySpec p = strategy(StrategyKind::Punisher);
  p.threshold = 2;
  s.strategies = {{1, strategy(StrategyKind::Budget1Selfish)}, {2, p}};
  s.injections = {Injection{0, 0, 4, 10, 2, 6, 20, 3}};
  s.default_loss = 0.1;
  s.seed = seed;
  return s;
}

// 4x4 grid, corner backbones, cooperative relays, no loss. Every corner sends
// to the opposite corner; ttl equals the diameter.
inline Scenario cooperative_baseline(std::uint64_t seed = 1) {
  Scenario s;
  s.topology = TopologySpec::grid(4, 4);
  s.backbones = {0, 3, 12, 15};
  s.default_strategy = strategy(StrategyKind::CooperativeCheapest);
  const int diameter = 6;
  s.injections = {Injection{0, 0, 15, 40, 4, diameter, 10, 4}, Injection{1, 15, 0, 40, 4, diameter, 10, 4},
                  Injection{2, 3, 12, 40, 4, diameter, 10, 4}, Injection{3, 12, 3, 40, 4, diameter, 10, 4}};
  s.seed = seed;
  return s;
}

inline constexpr NodeId kBaselineSavman = 5;

// The cooperative baseline with one SAVMAN relay in the middle of the grid.
inline Scenario cooperative_baseline_with_savman(std::uint64_t seed = 1) {
  Scenario s = cooperative_baseline(seed);
  s.strategies[kBaselineSavman] = strategy(StrategyKind::Savman);
  s.gend = GainMode::Consistent;
  return s;
}

// 0 source, 1 SAVMAN, 2 and 3 cooperative, 4 destination on a line; only the
// 2-3 link is lossy. SAVMAN starts with a (large) learned profile of node 2:
// always bids, p_succ = (1 - q)^2.
struct OracleSetup {
  double loss = 0.3;
  Credits budget = 20;
  Credits fine = 6;
  double prior_weight = 1e9;
};

inline Scenario oracle(const OracleSetup& o, std::uint64_t seed) {
  Scenario s;
  s.topology = TopologySpec::line(5);
  s.backbones = {0, 4};
  s.default_strategy = strategy(StrategyKind::CooperativeCheapest);
  s.strategies = {{1, strategy(StrategyKind::Savman)}};
  s.injections = {Injection{0, 0, 4, o.budget, o.fine, 6, 1, 1}};
  s.edge_loss = {EdgeLoss{2, 3, o.loss}};
  s.gend = GainMode::Consistent;
  s.seed = seed;
  s.profile.budget_scale = o.budget;
  const double p = (1 - o.loss) * (1 - o.loss);
  for (Credits b = 1; b <= o.budget; ++b) {
    ProfilePrior rel;
    rel.owner = 1;
    rel.peer = 2;
    rel.kind = ProfilePrior::Kind::Reliability;
    rel.context = AuctionContext{b, 0, 2};
    // One prior per budget band is enough; later duplicates are skipped below.
    rel.successes = std::round(p * o.prior_weight);
    rel.attempts = o.prior_weight;
    ProfilePrior bid = rel;
    bid.kind = ProfilePrior::Kind::Bidding;
    bid.successes = bid.attempts = 0;
    bid.exposure = o.prior_weight;
    bid.bids = {{std::max<Credits>(b / 2, 1), o.prior_weight}};
    ProfileConfig cfg;
    cfg.budget_scale = o.budget;
    const bool first_in_band = b == 1 || cfg.bucket(AuctionContext{b, 0, 2}) != cfg.bucket(AuctionContext{b - 1, 0, 2});
    if (first_in_band) {
      s.priors.push_back(rel);
      s.priors.push_back(bid);
    }
  }
  return s;
}

// ---------------------------------------------------------------- evaluations

struct BlackholeResult {
  int measured = 0;
  int blackhole_awards = 0;
  double fraction = 0;
};

inline BlackholeResult evaluate_blackhole(const Trace& t, NodeId fork = 1, NodeId blackhole = 2) {
  // Packet ids are assigned in injection order; count the fork's awards on
  // packets after the warm-up.
  BlackholeResult r;
  for (const auto* c : t.all<ev::CustodyTransfer>()) {
    if (c->from != fork || c->packet < kBlackholeWarmup || c->packet >= kBlackholeWarmup + kBlackholeMeasured) continue;
    ++r.measured;
    if (c->to == blackhole) ++r.blackhole_awards;
  }
  r.fraction = static_cast<double>(r.blackhole_awards) / kBlackholeMeasured;
  return r;
}

struct UndercutResult {
  std::vector<double> medians;
  bool non_increasing = true;
  // Auctions (with a winner) up to the end of the first window whose median is 1; -1 if never.
  int auctions_to_one = -1;
};

inline UndercutResult evaluate_undercut(const Trace& t, int window) {
  UndercutResult r;
  r.medians = metrics(t, window).median_winning_bid;
  for (std::size_t i = 1; i < r.medians.size(); ++i) {
    if (r.medians[i] > r.medians[i - 1]) r.non_increasing = false;
  }
  for (std::size_t i = 0; i < r.medians.size(); ++i) {
    if (r.medians[i] <= 1) {
      r.auctions_to_one = static_cast<int>((i + 1) * static_cast<std::size_t>(window));
      break;
    }
  }
  return r;
}

struct PunisherPair {
  std::uint64_t seed = 0;
  double with_punisher = 0;
  double without_punisher = 0;
};

inline std::vector<PunisherPair> evaluate_punisher(std::uint64_t first_seed, int seeds) {
  std::vector<PunisherPair> out;
  for (int i = 0; i < seeds; ++i) {
    const auto seed = first_seed + static_cast<std::uint64_t>(i);
    out.push_back({seed, metrics(run(punisher(true, seed))).delivery_ratio,
                   metrics(run(punisher(false, seed))).delivery_ratio});
  }
  return out;
}

struct OracleResult {
  double analytic = 0;
  double mean = 0;
  double std_error = 0;
  int runs = 0;
  Point3 triple{};
  bool same_triple = true;  // every run chose the same triple
};

inline OracleResult evaluate_oracle(const OracleSetup& o, std::uint64_t first_seed, int runs) {
  OracleResult r;
  r.runs = runs;
  double sum = 0, sum_sq = 0;
  bool have_triple = false;
  for (int i = 0; i < runs; ++i) {
    std::optional<SavmanDecision> first;
    RunObserver obs;
    obs.on_savman_decision = [&](const SavmanDecision& d) {
      if (!first) first = d;
    };
    const auto t = run(oracle(o, first_seed + static_cast<std::uint64_t>(i)), obs);
    if (!first) continue;
    if (!have_triple) {
      r.triple = first->search.arg;
      r.analytic = first->search.value;
      have_triple = true;
    } else if (first->search.arg != r.triple) {
      r.same_triple = false;
    }
    const auto it = t.final_balances.find(1);
    const double g = it == t.final_balances.end() ? 0.0 : static_cast<double>(it->second);
    sum += g;
    sum_sq += g * g;
  }
  const double n = runs;
  r.mean = sum / n;
  const double var = runs > 1 ? (sum_sq - n * r.mean * r.mean) / (n - 1) : 0.0;
  r.std_error = std::sqrt(std::max(var, 0.0) / n);
  return r;
}

// ---------------------------------------------------------------- audit

struct AuditSample {
  NodeId node = kNoNode;
  AuctionId auction = 0;
  Box3 box;
  double search_value = 0;
  double brute_value = 0;
  Point3 search_arg{};
  Point3 brute_arg{};
  bool exact() const { return search_value == brute_value; }
};

struct AuditReport {
  std::vector<AuditSample> samples;
  int exact = 0;
  double fraction = 0;
  double seconds = 0;
};

// Small-box scenarios whose SAVMAN nodes see a spread of contexts.
inline std::vector<Scenario> audit_scenarios() {
  std::vector<Scenario> out;
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    Scenario s;
    s.topology = TopologySpec::grid(3, 3);
    s.backbones = {0, 8};
    s.default_strategy = strategy(StrategyKind::Savman);
    s.strategies = {{4, strategy(StrategyKind::CooperativeCheapest)},
                    {2, strategy(seed % 2 ? StrategyKind::BlackHole : StrategyKind::Random)}};
    s.injections = {Injection{0, 0, 8, 9, 8, 5, 30, 3}, Injection{1, 8, 0, 9, 5, 5, 30, 3}};
    s.default_loss = 0.1 * static_cast<double>(seed % 3);
    s.gend = seed <= 2 ? GainMode::Consistent : GainMode::Paper;
    s.seed = seed;
    out.push_back(s);
  }
  {
    Scenario s = blackhole_avoidance(7);
    s.injections = {Injection{0, 0, 5, 9, 8, 6, 60, 4}};
    out.push_back(s);
  }
  return out;
}

/// Brute-forces the live SAVMAN objective for up to `max_samples` decisions
/// taken from the audit scenarios and compares it with search_3d.
inline AuditReport unimodality_audit(std::size_t max_samples = 200) {
  const auto start = std::chrono::steady_clock::now();
  AuditReport rep;
  for (const auto& scenario : audit_scenarios()) {
    if (rep.samples.size() >= max_samples) break;
    RunObserver obs;
    obs.on_savman_decision = [&](const SavmanDecision& d) {
      if (rep.samples.size() >= max_samples) return;
      const Box3 box = d.context->search_box();
      if (std::any_of(box.dims.begin(), box.dims.end(), [](const Interval& i) { return i.extent() + 1 > 9; })) return;
      const Objective objective(d.context);
      const auto brute = brute_force(objective, box);
      AuditSample a;
      a.node = d.node;
      a.auction = d.auction;
      a.box = box;
      a.search_value = d.search.value;
      a.search_arg = d.search.arg;
      a.brute_value = brute.value;
      a.brute_arg = brute.arg;
      rep.samples.push_back(a);
    };
    run(scenario, obs);
  }
  for (const auto& s : rep.samples) rep.exact += s.exact() ? 1 : 0;
  rep.fraction = rep.samples.empty() ? 1.0 : static_cast<double>(rep.exact) / static_cast<double>(rep.samples.size());
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

inline const std::vector<std::string>& names() {
  static const std::vector<std::string> n{"blackhole-avoidance", "undercut-collapse", "punisher",
                                          "cooperative-baseline"};
  return n;
}

}  // namespace savman::repro
