#pragma once

// JSON and CSV serialization: scenarios (strict, versioned), traces,
// profile stores and metrics reports.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "savman/core.hpp"
#include "savman/sim.hpp"
#include "savman/trace.hpp"

namespace savman {

using Json = nlohmann::ordered_json;

inline constexpr int kScenarioSchemaVersion = 1;
inline constexpr int kTraceSchemaVersion = 1;

namespace detail {

[[noreturn]] inline void parse_fail(const std::string& path, const std::string& what) {
  throw Error(Errc::ParseError, (path.empty() ? std::string("<root>") : path) + ": " + what);
}

// Reads fields out of one JSON object and rejects any it did not ask for.
class Fields {
 public:
  Fields(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) parse_fail(path_, "expected an object");
  }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  bool has(const std::string& key) const { return j_.contains(key); }

  const Json& raw(const std::string& key) {
    if (!j_.contains(key)) parse_fail(at(key), "missing required field");
    used_.insert(key);
    return j_.at(key);
  }

  template <class T>
  T get(const std::string& key, T fallback) {
    if (!j_.contains(key)) return fallback;
    return convert<T>(raw(key), at(key));
  }

  template <class T>
  T require(const std::string& key) {
    if (!j_.contains(key)) parse_fail(at(key), "missing required field");
    return convert<T>(raw(key), at(key));
  }

  void done() const {
    for (const auto& [key, value] : j_.items()) {
      if (!used_.count(key)) parse_fail(at(key), "unknown field");
    }
  }

  template <class T>
  static T convert(const Json& v, const std::string& path) {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) parse_fail(path, "expected a boolean");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) parse_fail(path, "expected an integer");
      if constexpr (std::is_unsigned_v<T>) {
        if (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0) {
          parse_fail(path, "expected a non-negative integer");
        }
      }
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) parse_fail(path, "expected a number");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) parse_fail(path, "expected a string");
    }
    return v.get<T>();
  }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> used_;
};

inline const Json& require_array(const Json& v, const std::string& path) {
  if (!v.is_array()) parse_fail(path, "expected an array");
  return v;
}

inline std::string index_path(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

inline NodeId node_key(const std::string& key, const std::string& path) {
  try {
    std::size_t used = 0;
    const long v = std::stol(key, &used);
    if (used == key.size() && v >= 0 && v <= INT32_MAX) return static_cast<NodeId>(v);
  } catch (const std::exception&) {
  }
  parse_fail(path, "object key '" + key + "' is not a node id");
}

inline Json parse_text(const std::string& text, const std::string& origin) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    // what() already carries "parse error at line L, column C".
    std::string msg = e.what();
    if (const auto p = msg.find("parse error"); p != std::string::npos) msg = msg.substr(p);
    throw Error(Errc::ParseError, origin + ": " + msg);
  }
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoFailure, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoFailure, "cannot write " + path.string());
  out << content;
  out.flush();
  if (!out) throw Error(Errc::IoFailure, "write failed for " + path.string());
}

}  // namespace detail

// ---------------------------------------------------------------- scenario

inline std::string_view to_string(TopologySpec::Kind k) {
  switch (k) {
    case TopologySpec::Kind::Edges: return "edges";
    case TopologySpec::Kind::Line: return "line";
    case TopologySpec::Kind::Star: return "star";
    case TopologySpec::Kind::Grid: return "grid";
  }
  return "?";
}

inline std::string_view to_string(ProfilePrior::Kind k) {
  switch (k) {
    case ProfilePrior::Kind::Bidding: return "bidding";
    case ProfilePrior::Kind::Reliability: return "reliability";
    case ProfilePrior::Kind::Auction: return "auction";
  }
  return "?";
}

inline GainMode parse_gain_mode(const std::string& s, const std::string& path) {
  if (s == "paper") return GainMode::Paper;
  if (s == "consistent") return GainMode::Consistent;
  detail::parse_fail(path, "expected \"paper\" or \"consistent\", got \"" + s + "\"");
}

namespace detail {

inline StrategySpec parse_strategy(const Json& v, const std::string& path, StrategySpec base = {}) {
  std::string kind_path = path;
  std::string kind;
  StrategySpec spec = base;
  if (v.is_string()) {
    kind = v.get<std::string>();
  } else {
    Fields f(v, path);
    kind = f.require<std::string>("kind");
    kind_path = f.at("kind");
    spec.bid_divisor = f.get<Credits>("bid_divisor", spec.bid_divisor);
    spec.undercut_step = f.get<Credits>("undercut_step", spec.undercut_step);
    spec.threshold = f.get<Credits>("threshold", spec.threshold);
    spec.bid_probability = f.get<double>("bid_probability", spec.bid_probability);
    f.done();
    if (spec.bid_divisor < 1) parse_fail(f.at("bid_divisor"), "must be >= 1");
    if (spec.undercut_step < 0) parse_fail(f.at("undercut_step"), "must be >= 0");
    if (!(spec.bid_probability >= 0 && spec.bid_probability <= 1)) parse_fail(f.at("bid_probability"), "must be in [0,1]");
  }
  const auto k = parse_strategy_kind(kind);
  if (!k) throw Error(Errc::UnknownStrategy, kind_path + ": unknown strategy kind \"" + kind + "\"");
  spec.kind = *k;
  return spec;
}

inline TopologySpec parse_topology(const Json& v, const std::string& path) {
  Fields f(v, path);
  const auto kind = f.require<std::string>("kind");
  TopologySpec t;
  if (kind == "line" || kind == "star") {
    t = kind == "line" ? TopologySpec::line(f.require<int>("n")) : TopologySpec::star(f.require<int>("n"));
  } else if (kind == "grid") {
    t = TopologySpec::grid(f.require<int>("width"), f.require<int>("height"));
  } else if (kind == "edges") {
    std::vector<std::pair<NodeId, NodeId>> edges;
    const auto nodes = f.require<int>("nodes");
    const auto& arr = require_array(f.raw("edges"), f.at("edges"));
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const auto p = index_path(f.at("edges"), i);
      if (!arr[i].is_array() || arr[i].size() != 2) parse_fail(p, "expected [a, b]");
      edges.emplace_back(Fields::convert<NodeId>(arr[i][0], p + "[0]"), Fields::convert<NodeId>(arr[i][1], p + "[1]"));
    }
    t = TopologySpec::explicit_edges(nodes, std::move(edges));
  } else {
    parse_fail(f.at("kind"), "expected one of line, star, grid, edges; got \"" + kind + "\"");
  }
  f.done();
  return t;
}

inline AuctionContext parse_context(const Json& v, const std::string& path) {
  Fields f(v, path);
  AuctionContext c;
  c.budget = f.require<Credits>("budget");
  c.fine = f.get<Credits>("fine", 0);
  c.hop_distance = f.require<int>("hop_distance");
  f.done();
  return c;
}

inline ProfilePrior parse_prior(const Json& v, const std::string& path) {
  Fields f(v, path);
  ProfilePrior p;
  p.owner = f.require<NodeId>("owner");
  p.peer = f.require<NodeId>("peer");
  const auto kind = f.require<std::string>("kind");
  if (kind == "bidding") {
    p.kind = ProfilePrior::Kind::Bidding;
    p.context = parse_context(f.raw("context"), f.at("context"));
    p.exposure = f.get<double>("exposure", 0);
    if (f.has("bids")) {
      Fields bids(f.raw("bids"), f.at("bids"));
      for (const auto& [key, count] : f.raw("bids").items()) {
        const auto amount = node_key(key, bids.at(key));
        p.bids[amount] = bids.require<double>(key);
        if (amount < 1 || p.bids[amount] < 0) parse_fail(bids.at(key), "bids need amount >= 1 and count >= 0");
      }
      bids.done();
    }
  } else if (kind == "reliability") {
    p.kind = ProfilePrior::Kind::Reliability;
    p.context = parse_context(f.raw("context"), f.at("context"));
    p.successes = f.require<double>("successes");
    p.attempts = f.require<double>("attempts");
  } else if (kind == "auction") {
    p.kind = ProfilePrior::Kind::Auction;
    p.auction.cheapest = f.get<double>("cheapest", 0);
    p.auction.cheapest_feasible = f.get<double>("cheapest_feasible", 0);
    p.auction.other = f.get<double>("other", 0);
  } else {
    parse_fail(f.at("kind"), "expected bidding, reliability or auction; got \"" + kind + "\"");
  }
  f.done();
  return p;
}

}  // namespace detail

/// Parses a scenario document. `origin` names the source in diagnostics.
inline Scenario parse_scenario(const std::string& text, const std::string& origin = "<scenario>") {
  using namespace detail;
  const Json doc = parse_text(text, origin);
  Fields f(doc, "");
  const auto& version = f.raw("schema_version");
  if (!version.is_number_integer() || version.get<std::int64_t>() != kScenarioSchemaVersion) {
    throw Error(Errc::SchemaVersionMismatch, "schema_version " + version.dump() + " is not supported (expected " +
                                                 std::to_string(kScenarioSchemaVersion) + ")");
  }

  Scenario s;
  s.topology = parse_topology(f.raw("topology"), "topology");
  {
    const auto& arr = require_array(f.raw("backbones"), "backbones");
    for (std::size_t i = 0; i < arr.size(); ++i) s.backbones.push_back(Fields::convert<NodeId>(arr[i], index_path("backbones", i)));
  }
  if (f.has("strategies")) {
    const auto& sv = f.raw("strategies");
    Fields st(sv, "strategies");
    if (st.has("default")) s.default_strategy = parse_strategy(st.raw("default"), "strategies.default");
    if (st.has("nodes")) {
      Fields nodes(st.raw("nodes"), "strategies.nodes");
      for (const auto& [key, value] : st.raw("nodes").items()) {
        const auto p = nodes.at(key);
        s.strategies[node_key(key, p)] = parse_strategy(nodes.raw(key), p);
      }
      nodes.done();
    }
    st.done();
  }
  if (f.has("injections")) {
    const auto& arr = require_array(f.raw("injections"), "injections");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      Fields in(arr[i], index_path("injections", i));
      Injection inj;
      inj.time = in.get<double>("time", 0);
      inj.source = in.require<NodeId>("source");
      inj.destination = in.require<NodeId>("destination");
      inj.budget = in.require<Credits>("budget");
      inj.fine = in.get<Credits>("fine", 0);
      inj.ttl = in.get<int>("ttl", inj.ttl);
      inj.count = in.get<int>("count", 1);
      inj.interval = in.get<double>("interval", 1);
      in.done();
      s.injections.push_back(inj);
    }
  }
  if (f.has("loss")) {
    const auto& lv = f.raw("loss");
    if (lv.is_number()) {
      s.default_loss = lv.get<double>();
    } else {
      Fields l(lv, "loss");
      s.default_loss = l.get<double>("default", 0);
      if (l.has("edges")) {
        const auto& arr = require_array(l.raw("edges"), "loss.edges");
        for (std::size_t i = 0; i < arr.size(); ++i) {
          Fields e(arr[i], index_path("loss.edges", i));
          s.edge_loss.push_back({e.require<NodeId>("a"), e.require<NodeId>("b"), e.require<double>("p")});
          e.done();
        }
      }
      l.done();
    }
  }
  if (f.has("changes")) {
    const auto& arr = require_array(f.raw("changes"), "changes");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      Fields c(arr[i], index_path("changes", i));
      TopologyChange ch;
      ch.time = c.require<double>("time");
      const auto op = c.require<std::string>("op");
      if (op != "add" && op != "remove") parse_fail(c.at("op"), "expected \"add\" or \"remove\"");
      ch.add = op == "add";
      ch.a = c.require<NodeId>("a");
      ch.b = c.require<NodeId>("b");
      c.done();
      s.changes.push_back(ch);
    }
  }
  s.bidding_window = f.get<double>("bidding_window", s.bidding_window);
  if (f.has("gend")) s.gend = parse_gain_mode(f.require<std::string>("gend"), "gend");
  s.seed = f.get<std::uint64_t>("seed", s.seed);
  s.round_length = f.get<double>("round_length", s.round_length);
  s.metrics_window = f.get<int>("metrics_window", s.metrics_window);
  if (f.has("profile")) {
    Fields p(f.raw("profile"), "profile");
    s.profile.budget_scale = p.get<Credits>("budget_scale", s.profile.budget_scale);
    s.profile.decay = p.get<double>("decay", s.profile.decay);
    p.done();
  }
  if (f.has("priors")) {
    const auto& arr = require_array(f.raw("priors"), "priors");
    for (std::size_t i = 0; i < arr.size(); ++i) s.priors.push_back(parse_prior(arr[i], index_path("priors", i)));
  }
  f.done();
  return s;
}

/// Reads, parses and validates a scenario file.
inline Scenario load_scenario(const std::filesystem::path& path) {
  auto s = parse_scenario(detail::read_file(path), path.string());
  validate_scenario(s);
  return s;
}

inline Json strategy_to_json(const StrategySpec& spec) {
  return Json{{"kind", to_string(spec.kind)},
              {"bid_divisor", spec.bid_divisor},
              {"undercut_step", spec.undercut_step},
              {"threshold", spec.threshold},
              {"bid_probability", spec.bid_probability}};
}

/// Every field with defaults materialized; parse_scenario(dump) == s.
inline Json scenario_to_json(const Scenario& s) {
  Json j;
  j["schema_version"] = kScenarioSchemaVersion;
  Json topo{{"kind", to_string(s.topology.kind)}};
  switch (s.topology.kind) {
    case TopologySpec::Kind::Line:
    case TopologySpec::Kind::Star: topo["n"] = s.topology.n; break;
    case TopologySpec::Kind::Grid:
      topo["width"] = s.topology.width;
      topo["height"] = s.topology.height;
      break;
    case TopologySpec::Kind::Edges: {
      topo["nodes"] = s.topology.nodes;
      Json edges = Json::array();
      for (const auto& [a, b] : s.topology.edges) edges.push_back({a, b});
      topo["edges"] = edges;
      break;
    }
  }
  j["topology"] = topo;
  j["backbones"] = s.backbones;
  Json nodes = Json::object();
  for (const auto& [id, spec] : s.strategies) nodes[std::to_string(id)] = strategy_to_json(spec);
  j["strategies"] = {{"default", strategy_to_json(s.default_strategy)}, {"nodes", nodes}};
  Json inj = Json::array();
  for (const auto& i : s.injections) {
    inj.push_back({{"time", i.time},
                   {"source", i.source},
                   {"destination", i.destination},
                   {"budget", i.budget},
                   {"fine", i.fine},
                   {"ttl", i.ttl},
                   {"count", i.count},
                   {"interval", i.interval}});
  }
  j["injections"] = inj;
  Json loss_edges = Json::array();
  for (const auto& l : s.edge_loss) loss_edges.push_back({{"a", l.a}, {"b", l.b}, {"p", l.probability}});
  j["loss"] = {{"default", s.default_loss}, {"edges", loss_edges}};
  Json changes = Json::array();
  for (const auto& c : s.changes) {
    changes.push_back({{"time", c.time}, {"op", c.add ? "add" : "remove"}, {"a", c.a}, {"b", c.b}});
  }
  j["changes"] = changes;
  j["bidding_window"] = s.bidding_window;
  j["gend"] = to_string(s.gend);
  j["seed"] = s.seed;
  j["round_length"] = s.round_length;
  j["metrics_window"] = s.metrics_window;
  j["profile"] = {{"budget_scale", s.profile.budget_scale}, {"decay", s.profile.decay}};
  Json priors = Json::array();
  for (const auto& p : s.priors) {
    Json pj{{"owner", p.owner}, {"peer", p.peer}, {"kind", to_string(p.kind)}};
    const Json ctx{{"budget", p.context.budget}, {"fine", p.context.fine}, {"hop_distance", p.context.hop_distance}};
    switch (p.kind) {
      case ProfilePrior::Kind::Bidding: {
        pj["context"] = ctx;
        pj["exposure"] = p.exposure;
        Json bids = Json::object();
        for (const auto& [amount, count] : p.bids) bids[std::to_string(amount)] = count;
        pj["bids"] = bids;
        break;
      }
      case ProfilePrior::Kind::Reliability:
        pj["context"] = ctx;
        pj["successes"] = p.successes;
        pj["attempts"] = p.attempts;
        break;
      case ProfilePrior::Kind::Auction:
        pj["cheapest"] = p.auction.cheapest;
        pj["cheapest_feasible"] = p.auction.cheapest_feasible;
        pj["other"] = p.auction.other;
        break;
    }
    priors.push_back(pj);
  }
  j["priors"] = priors;
  return j;
}

// ---------------------------------------------------------------- profiles

inline std::string_view to_string(DistanceBand d) {
  switch (d) {
    case DistanceBand::One: return "1";
    case DistanceBand::Two: return "2";
    case DistanceBand::ThreeOrMore: return "3+";
  }
  return "?";
}

inline std::string_view to_string(BudgetBand b) {
  switch (b) {
    case BudgetBand::Low: return "low";
    case BudgetBand::Mid: return "mid";
    case BudgetBand::High: return "high";
  }
  return "?";
}

namespace detail {

template <class Enum, std::size_t N>
Enum enum_from(const std::string& s, const std::array<Enum, N>& values, const std::string& path) {
  for (auto v : values)
    if (to_string(v) == s) return v;
  parse_fail(path, "unexpected value \"" + s + "\"");
}

inline ContextBucket parse_bucket(Fields& f) {
  ContextBucket b;
  b.distance = enum_from(f.require<std::string>("distance"),
                         std::array{DistanceBand::One, DistanceBand::Two, DistanceBand::ThreeOrMore}, f.at("distance"));
  b.budget = enum_from(f.require<std::string>("budget_band"),
                       std::array{BudgetBand::Low, BudgetBand::Mid, BudgetBand::High}, f.at("budget_band"));
  return b;
}

}  // namespace detail

inline Json profile_to_json(const ProfileStore& store) {
  Json bidding = Json::array();
  for (const auto& [key, s] : store.bidding_table()) {
    Json hist = Json::array();
    for (const auto& [amount, w] : s.histogram) hist.push_back({amount, w});
    bidding.push_back({{"peer", key.first},
                       {"distance", to_string(key.second.distance)},
                       {"budget_band", to_string(key.second.budget)},
                       {"exposure", s.exposure},
                       {"participation", s.participation},
                       {"bid_sum", s.bid_sum},
                       {"bid_count", s.bid_count},
                       {"histogram", hist}});
  }
  Json auction = Json::array();
  for (const auto& [peer, s] : store.auction_table()) {
    auction.push_back(
        {{"peer", peer}, {"cheapest", s.cheapest}, {"cheapest_feasible", s.cheapest_feasible}, {"other", s.other}});
  }
  Json reliability = Json::array();
  for (const auto& [key, s] : store.reliability_table()) {
    reliability.push_back({{"peer", key.first},
                           {"distance", to_string(key.second.distance)},
                           {"budget_band", to_string(key.second.budget)},
                           {"successes", s.successes},
                           {"attempts", s.attempts}});
  }
  return Json{{"config", {{"budget_scale", store.config().budget_scale}, {"decay", store.config().decay}}},
              {"bidding", bidding},
              {"auction", auction},
              {"reliability", reliability}};
}

inline ProfileStore profile_from_json(const Json& j, const std::string& path) {
  using namespace detail;
  Fields f(j, path);
  Fields cfg(f.raw("config"), f.at("config"));
  ProfileStore store(ProfileConfig{cfg.require<Credits>("budget_scale"), cfg.require<double>("decay")});
  cfg.done();
  const auto& bidding = require_array(f.raw("bidding"), f.at("bidding"));
  for (std::size_t i = 0; i < bidding.size(); ++i) {
    Fields e(bidding[i], index_path(f.at("bidding"), i));
    auto& s = store.bidding_mut(e.require<NodeId>("peer"), parse_bucket(e));
    s.exposure = e.require<double>("exposure");
    s.participation = e.require<double>("participation");
    s.bid_sum = e.require<double>("bid_sum");
    s.bid_count = e.require<double>("bid_count");
    const auto& hist = require_array(e.raw("histogram"), e.at("histogram"));
    for (std::size_t k = 0; k < hist.size(); ++k) {
      const auto p = index_path(e.at("histogram"), k);
      if (!hist[k].is_array() || hist[k].size() != 2) parse_fail(p, "expected [amount, weight]");
      s.histogram[Fields::convert<Credits>(hist[k][0], p)] = Fields::convert<double>(hist[k][1], p);
    }
    e.done();
  }
  const auto& auction = require_array(f.raw("auction"), f.at("auction"));
  for (std::size_t i = 0; i < auction.size(); ++i) {
    Fields e(auction[i], index_path(f.at("auction"), i));
    auto& s = store.auction_mut(e.require<NodeId>("peer"));
    s.cheapest = e.require<double>("cheapest");
    s.cheapest_feasible = e.require<double>("cheapest_feasible");
    s.other = e.require<double>("other");
    e.done();
  }
  const auto& reliability = require_array(f.raw("reliability"), f.at("reliability"));
  for (std::size_t i = 0; i < reliability.size(); ++i) {
    Fields e(reliability[i], index_path(f.at("reliability"), i));
    auto& s = store.reliability_mut(e.require<NodeId>("peer"), parse_bucket(e));
    s.successes = e.require<double>("successes");
    s.attempts = e.require<double>("attempts");
    e.done();
  }
  f.done();
  return store;
}

// ---------------------------------------------------------------- metrics

inline Json metrics_to_json(const MetricsReport& m) {
  Json nodes = Json::array();
  for (const auto& [id, n] : m.nodes) {
    nodes.push_back(
        {{"node", id}, {"balance", n.balance}, {"auctions", n.auctions}, {"wins", n.wins}, {"drops", n.drops}});
  }
  return Json{{"injected", m.injected},
              {"delivered", m.delivered},
              {"failed", m.failed},
              {"delivery_ratio", m.delivery_ratio},
              {"vacuous", m.vacuous},
              {"balance_sum", m.balance_sum},
              {"window", m.window},
              {"median_winning_bid", m.median_winning_bid},
              {"nodes", nodes}};
}

// ---------------------------------------------------------------- trace

namespace detail {

// Column names for each event kind, in CSV order after seq and time.
inline const std::array<std::vector<std::string>, std::variant_size_v<EventData>>& event_columns() {
  static const std::array<std::vector<std::string>, std::variant_size_v<EventData>> cols{{
      {"packet", "source", "destination", "budget", "fine", "ttl"},
      {"auction", "packet", "auctioneer", "budget", "fine", "deadline", "recipients"},
      {"auction", "bidder", "amount"},
      {"auction", "from", "to", "message"},
      {"auction", "auctioneer", "winner", "amount"},
      {"packet", "auction", "from", "to", "bid", "fine", "ttl"},
      {"packet", "holder"},
      {"packet", "holder", "reason"},
      {"packet", "from", "to", "amount", "reason", "auction"},
      {"op", "a", "b"},
  }};
  return cols;
}

inline Json event_fields(const EventData& data) {
  return std::visit(
      [](const auto& d) -> Json {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, ev::Inject>) {
          return {{"packet", d.packet}, {"source", d.source}, {"destination", d.destination},
                  {"budget", d.budget}, {"fine", d.fine},     {"ttl", d.ttl}};
        } else if constexpr (std::is_same_v<T, ev::AdvertOpen>) {
          return {{"auction", d.auction}, {"packet", d.packet},     {"auctioneer", d.auctioneer},
                  {"budget", d.budget},   {"fine", d.fine},         {"deadline", d.deadline},
                  {"recipients", d.recipients}};
        } else if constexpr (std::is_same_v<T, ev::BidPlaced>) {
          return {{"auction", d.auction}, {"bidder", d.bidder}, {"amount", d.amount}};
        } else if constexpr (std::is_same_v<T, ev::MessageLost>) {
          return {{"auction", d.auction}, {"from", d.from}, {"to", d.to}, {"message", to_string(d.message)}};
        } else if constexpr (std::is_same_v<T, ev::WinnerSelected>) {
          return {{"auction", d.auction}, {"auctioneer", d.auctioneer}, {"winner", d.winner}, {"amount", d.amount}};
        } else if constexpr (std::is_same_v<T, ev::CustodyTransfer>) {
          return {{"packet", d.packet}, {"auction", d.auction}, {"from", d.from}, {"to", d.to},
                  {"bid", d.bid},       {"fine", d.fine},       {"ttl", d.ttl}};
        } else if constexpr (std::is_same_v<T, ev::Delivered>) {
          return {{"packet", d.packet}, {"holder", d.holder}};
        } else if constexpr (std::is_same_v<T, ev::Failed>) {
          return {{"packet", d.packet}, {"holder", d.holder}, {"reason", to_string(d.reason)}};
        } else if constexpr (std::is_same_v<T, ev::Ledger>) {
          return {{"packet", d.packet},          {"from", d.entry.from},
                  {"to", d.entry.to},            {"amount", d.entry.amount},
                  {"reason", to_string(d.entry.reason)}, {"auction", d.entry.auction_id}};
        } else {
          return {{"op", d.add ? "add" : "remove"}, {"a", d.a}, {"b", d.b}};
        }
      },
      data);
}

template <class E>
E parse_enum(const std::string& s, std::initializer_list<E> values, const std::string& path) {
  for (auto v : values)
    if (to_string(v) == s) return v;
  parse_fail(path, "unexpected value \"" + s + "\"");
}

inline EventData event_from_fields(std::size_t kind, Fields& f) {
  auto id = [&](const char* k) { return f.require<NodeId>(k); };
  auto i64 = [&](const char* k) { return f.require<std::int64_t>(k); };
  switch (kind) {
    case 0: return ev::Inject{i64("packet"), id("source"), id("destination"), i64("budget"), i64("fine"),
                              f.require<int>("ttl")};
    case 1: {
      ev::AdvertOpen a{i64("auction"), i64("packet"), id("auctioneer"), i64("budget"), i64("fine"),
                       f.require<double>("deadline"), {}};
      const auto& r = require_array(f.raw("recipients"), f.at("recipients"));
      for (std::size_t i = 0; i < r.size(); ++i) a.recipients.push_back(Fields::convert<NodeId>(r[i], f.at("recipients")));
      return a;
    }
    case 2: return ev::BidPlaced{i64("auction"), id("bidder"), i64("amount")};
    case 3:
      return ev::MessageLost{i64("auction"), id("from"), id("to"),
                             parse_enum(f.require<std::string>("message"), {MessageType::Advert, MessageType::Bid},
                                        f.at("message"))};
    case 4: return ev::WinnerSelected{i64("auction"), id("auctioneer"), id("winner"), i64("amount")};
    case 5: return ev::CustodyTransfer{i64("packet"), i64("auction"), id("from"), id("to"), i64("bid"), i64("fine"),
                                       f.require<int>("ttl")};
    case 6: return ev::Delivered{i64("packet"), id("holder")};
    case 7:
      return ev::Failed{i64("packet"), id("holder"),
                        parse_enum(f.require<std::string>("reason"),
                                   {FailureReason::TtlExhausted, FailureReason::Dropped, FailureReason::NoWinner},
                                   f.at("reason"))};
    case 8: {
      ev::Ledger l;
      l.packet = i64("packet");
      l.entry.from = id("from");
      l.entry.to = id("to");
      l.entry.amount = i64("amount");
      l.entry.reason = parse_enum(f.require<std::string>("reason"),
                                  {LedgerReason::BidPayout, LedgerReason::FinePayment}, f.at("reason"));
      l.entry.auction_id = i64("auction");
      return l;
    }
    default: {
      const auto op = f.require<std::string>("op");
      if (op != "add" && op != "remove") parse_fail(f.at("op"), "expected add or remove");
      return ev::TopologyChanged{op == "add", id("a"), id("b")};
    }
  }
}

}  // namespace detail

/// Single JSON document: schema_version, events grouped by kind (each event
/// carries its global seq), final balances, profile snapshots and metrics.
inline Json trace_to_json(const Trace& trace, int metrics_window = 10) {
  Json events = Json::object();
  for (const auto name : kEventKindNames) events[std::string(name)] = Json::array();
  for (const auto& e : trace.events) {
    Json row{{"seq", e.seq}, {"time", e.time}};
    row.update(detail::event_fields(e.data));
    events[std::string(event_kind_name(e.data))].push_back(std::move(row));
  }
  Json balances = Json::array();
  for (const auto& [node, value] : trace.final_balances) balances.push_back({{"node", node}, {"balance", value}});
  Json profiles = Json::array();
  for (const auto& p : trace.profiles) {
    profiles.push_back({{"node", p.node}, {"time", p.time}, {"store", profile_to_json(p.store)}});
  }
  return Json{{"schema_version", kTraceSchemaVersion},
              {"events", events},
              {"final_balances", balances},
              {"profiles", profiles},
              {"metrics", metrics_to_json(metrics(trace, metrics_window))}};
}

inline std::string dump_trace_json(const Trace& trace, int metrics_window = 10) {
  return trace_to_json(trace, metrics_window).dump(1) + "\n";
}

/// Inverse of trace_to_json; the metrics block is derived data and is not read back.
inline Trace parse_trace_json(const std::string& text, const std::string& origin = "<trace>") {
  using namespace detail;
  const Json doc = parse_text(text, origin);
  Fields f(doc, "");
  const auto& version = f.raw("schema_version");
  if (!version.is_number_integer() || version.get<std::int64_t>() != kTraceSchemaVersion) {
    throw Error(Errc::SchemaVersionMismatch, "trace schema_version " + version.dump());
  }
  Trace t;
  Fields events(f.raw("events"), "events");
  for (std::size_t kind = 0; kind < kEventKindNames.size(); ++kind) {
    const std::string name(kEventKindNames[kind]);
    const auto& arr = require_array(events.raw(name), events.at(name));
    for (std::size_t i = 0; i < arr.size(); ++i) {
      Fields ef(arr[i], index_path(events.at(name), i));
      TraceEvent e;
      e.seq = ef.require<std::uint64_t>("seq");
      e.time = ef.require<double>("time");
      e.data = event_from_fields(kind, ef);
      ef.done();
      t.events.push_back(std::move(e));
    }
  }
  events.done();
  std::sort(t.events.begin(), t.events.end(), [](const TraceEvent& a, const TraceEvent& b) { return a.seq < b.seq; });
  for (std::size_t i = 0; i < t.events.size(); ++i) {
    if (t.events[i].seq != i) parse_fail("events", "seq values are not 0..n-1");
  }
  const auto& balances = require_array(f.raw("final_balances"), "final_balances");
  for (std::size_t i = 0; i < balances.size(); ++i) {
    Fields b(balances[i], index_path("final_balances", i));
    t.final_balances[b.require<NodeId>("node")] = b.require<Credits>("balance");
    b.done();
  }
  const auto& profiles = require_array(f.raw("profiles"), "profiles");
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    Fields p(profiles[i], index_path("profiles", i));
    ProfileSnapshot snap;
    snap.node = p.require<NodeId>("node");
    snap.time = p.require<double>("time");
    snap.store = profile_from_json(p.raw("store"), p.at("store"));
    p.done();
    t.profiles.push_back(std::move(snap));
  }
  if (f.has("metrics")) f.raw("metrics");
  f.done();
  return t;
}

// ---------------------------------------------------------------- csv

namespace detail {

inline std::string csv_cell(const Json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_array()) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ";" : "") + csv_cell(v[i]);
    return out;
  }
  return v.dump();
}

}  // namespace detail

/// One CSV document per event kind: header `seq,time,<columns>` and one row
/// per event; list cells are ';'-separated.
inline std::map<std::string, std::string> trace_to_csv(const Trace& trace) {
  std::map<std::string, std::string> files;
  const auto& cols = detail::event_columns();
  for (std::size_t k = 0; k < kEventKindNames.size(); ++k) {
    std::string header = "seq,time";
    for (const auto& c : cols[k]) header += "," + c;
    files[std::string(kEventKindNames[k])] = header + "\n";
  }
  for (const auto& e : trace.events) {
    const auto fields = detail::event_fields(e.data);
    std::string row = std::to_string(e.seq) + "," + Json(e.time).dump();
    for (const auto& c : cols[e.data.index()]) row += "," + detail::csv_cell(fields.at(c));
    files[std::string(event_kind_name(e.data))] += row + "\n";
  }
  return files;
}

inline std::string balances_csv(const Balances& b) {
  std::string out = "node,balance\n";
  for (const auto& [node, value] : b) out += std::to_string(node) + "," + std::to_string(value) + "\n";
  return out;
}

inline std::string metrics_csv(const MetricsReport& m) {
  std::string out = "node,balance,auctions,wins,drops\n";
  for (const auto& [id, n] : m.nodes) {
    out += std::to_string(id) + "," + std::to_string(n.balance) + "," + std::to_string(n.auctions) + "," +
           std::to_string(n.wins) + "," + std::to_string(n.drops) + "\n";
  }
  return out;
}

enum class OutputFormat { Json, Csv };

/// Writes the trace and its metrics into `dir` and returns the file names.
///   json: trace.json, metrics.json
///   csv:  events_<kind>.csv per event kind, balances.csv, metrics.csv, metrics.json
inline std::vector<std::string> dump_stats(const Trace& trace, OutputFormat format, const std::filesystem::path& dir,
                                           int metrics_window = 10) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(Errc::IoFailure, "cannot create " + dir.string() + ": " + ec.message());
  std::vector<std::string> written;
  auto put = [&](const std::string& name, const std::string& content) {
    detail::write_file(dir / name, content);
    written.push_back(name);
  };
  const auto report = metrics(trace, metrics_window);
  if (format == OutputFormat::Json) {
    put("trace.json", dump_trace_json(trace, metrics_window));
  } else {
    for (const auto& [kind, content] : trace_to_csv(trace)) put("events_" + kind + ".csv", content);
    put("balances.csv", balances_csv(trace.final_balances));
    put("metrics.csv", metrics_csv(report));
  }
  put("metrics.json", metrics_to_json(report).dump(1) + "\n");
  return written;
}

}  // namespace savman
