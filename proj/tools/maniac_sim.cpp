// maniac-sim: run scenarios, seed sweeps and the built-in reproductions.
//
// Exit codes: 0 success, 1 scenario/configuration error, 2 runtime failure.

#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "savman/io.hpp"
#include "savman/repro.hpp"
#include "savman/sim.hpp"

namespace fs = std::filesystem;
using namespace savman;

namespace {

struct Options {
  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::string seeds;
  std::string out;
  std::string format = "json";
  std::string gend;
  bool quiet = false;
  std::string repro_name;
  std::size_t audit_samples = 200;
};

struct SeedRange {
  std::uint64_t first = 0;
  std::uint64_t last = 0;
};

SeedRange parse_seeds(const std::string& text) {
  const auto dots = text.find("..");
  auto number = [&](const std::string& s) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != s.size()) throw Error(Errc::MalformedSpec, "--seeds expects A..B, got '" + text + "'");
    return static_cast<std::uint64_t>(v);
  };
  if (dots == std::string::npos) {
    const auto v = number(text);
    return {v, v};
  }
  SeedRange r{number(text.substr(0, dots)), number(text.substr(dots + 2))};
  if (r.last < r.first) throw Error(Errc::MalformedSpec, "--seeds range '" + text + "' is empty");
  return r;
}

OutputFormat parse_format(const std::string& f) {
  if (f == "json") return OutputFormat::Json;
  if (f == "csv") return OutputFormat::Csv;
  throw Error(Errc::MalformedSpec, "--format must be json or csv");
}

Scenario load_with_overrides(const Options& o) {
  Scenario s = load_scenario(o.scenario);
  if (o.seed) s.seed = *o.seed;
  if (!o.gend.empty()) s.gend = parse_gain_mode(o.gend, "--gend");
  validate_scenario(s);
  return s;
}

void write_run(const Scenario& s, const Trace& t, const fs::path& dir, OutputFormat format) {
  dump_stats(t, format, dir, s.metrics_window);
  detail::write_file(dir / "scenario.resolved.json", scenario_to_json(s).dump(1) + "\n");
}

std::string summary_line(const Scenario& s, const MetricsReport& m) {
  std::ostringstream os;
  os << "seed " << s.seed << ": delivered " << m.delivered << "/" << m.injected << " (ratio " << m.delivery_ratio
     << "), balance sum " << m.balance_sum;
  return os.str();
}

int cmd_run(const Options& o) {
  const auto s = load_with_overrides(o);
  const auto format = parse_format(o.format);
  const auto t = run(s);
  write_run(s, t, o.out, format);
  if (!o.quiet) std::cout << summary_line(s, metrics(t, s.metrics_window)) << "\n";
  return 0;
}

struct Moments {
  double mean = 0;
  double stddev = 0;
};

Moments moments(const std::vector<double>& xs) {
  Moments m;
  if (xs.empty()) return m;
  for (double x : xs) m.mean += x;
  m.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0;
    for (double x : xs) ss += (x - m.mean) * (x - m.mean);
    m.stddev = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return m;
}

int cmd_sweep(const Options& o) {
  if (o.seeds.empty()) throw Error(Errc::MalformedSpec, "sweep needs --seeds A..B");
  const auto range = parse_seeds(o.seeds);
  const auto format = parse_format(o.format);
  Options base = o;
  base.seed.reset();
  const auto scenario = load_with_overrides(base);

  Json rows = Json::array();
  std::vector<double> ratios;
  std::map<NodeId, std::vector<double>> balances;
  std::string csv = "seed,injected,delivered,failed,delivery_ratio\n";
  for (auto seed = range.first;; ++seed) {
    Scenario s = scenario;
    s.seed = seed;
    const auto t = run(s);
    const auto m = metrics(t, s.metrics_window);
    write_run(s, t, fs::path(o.out) / ("seed_" + std::to_string(seed)), format);
    ratios.push_back(m.delivery_ratio);
    Json bal = Json::object();
    for (const auto& [node, b] : t.final_balances) {
      balances[node].push_back(static_cast<double>(b));
      bal[std::to_string(node)] = b;
    }
    rows.push_back({{"seed", seed},
                    {"injected", m.injected},
                    {"delivered", m.delivered},
                    {"failed", m.failed},
                    {"delivery_ratio", m.delivery_ratio},
                    {"balances", bal}});
    csv += std::to_string(seed) + "," + std::to_string(m.injected) + "," + std::to_string(m.delivered) + "," +
           std::to_string(m.failed) + "," + Json(m.delivery_ratio).dump() + "\n";
    if (!o.quiet) std::cout << summary_line(s, m) << "\n";
    if (seed == range.last) break;
  }
  const auto r = moments(ratios);
  Json bal = Json::object();
  for (const auto& [node, xs] : balances) {
    const auto b = moments(xs);
    bal[std::to_string(node)] = {{"mean", b.mean}, {"stddev", b.stddev}};
  }
  const Json aggregate{{"seeds", rows},
                       {"delivery_ratio", {{"mean", r.mean}, {"stddev", r.stddev}}},
                       {"balance", bal}};
  detail::write_file(fs::path(o.out) / "aggregate.json", aggregate.dump(1) + "\n");
  detail::write_file(fs::path(o.out) / "aggregate.csv", csv);
  if (!o.quiet) std::cout << "delivery ratio mean " << r.mean << " stddev " << r.stddev << "\n";
  return 0;
}

int cmd_validate(const Options& o) {
  load_with_overrides(o);
  if (!o.quiet) std::cout << o.scenario << ": ok\n";
  return 0;
}

int cmd_repro(const Options& o) {
  const std::string& name = o.repro_name;
  const auto format = parse_format(o.format);
  const std::uint64_t seed = o.seed.value_or(1);
  auto finish = [&](const Scenario& s, const Trace& t) {
    if (!o.out.empty()) write_run(s, t, o.out, format);
  };
  std::ostringstream report;
  if (name == "blackhole-avoidance") {
    const auto s = repro::blackhole_avoidance(seed);
    const auto t = run(s);
    finish(s, t);
    const auto r = repro::evaluate_blackhole(t);
    report << "black hole awards after warm-up: " << r.blackhole_awards << "/" << repro::kBlackholeMeasured << " ("
           << r.fraction * 100 << "%)";
  } else if (name == "undercut-collapse") {
    const auto s = repro::undercut_collapse(seed);
    const auto t = run(s);
    finish(s, t);
    const auto r = repro::evaluate_undercut(t, s.metrics_window);
    report << "windowed median winning bid:";
    for (double m : r.medians) report << " " << m;
    report << "\nnon-increasing: " << (r.non_increasing ? "yes" : "no") << ", auctions until median 1: "
           << r.auctions_to_one;
  } else if (name == "punisher") {
    const auto range = o.seeds.empty() ? SeedRange{seed, seed + 19} : parse_seeds(o.seeds);
    const auto s = repro::punisher(true, range.first);
    finish(s, run(s));
    const auto pairs = repro::evaluate_punisher(range.first, static_cast<int>(range.last - range.first + 1));
    int lower = 0;
    report << "seed  with  without\n";
    for (const auto& p : pairs) {
      report << p.seed << "  " << p.with_punisher << "  " << p.without_punisher << "\n";
      lower += p.with_punisher < p.without_punisher ? 1 : 0;
    }
    report << "pairs where the punisher lowers delivery: " << lower << "/" << pairs.size();
  } else if (name == "cooperative-baseline") {
    const auto s = repro::cooperative_baseline(seed);
    const auto t = run(s);
    finish(s, t);
    report << summary_line(s, metrics(t, s.metrics_window));
  } else {
    throw Error(Errc::UnknownKind, "unknown reproduction '" + name + "'");
  }
  if (!o.quiet) std::cout << report.str() << "\n";
  return 0;
}

int cmd_audit(const Options& o) {
  const auto rep = repro::unimodality_audit(o.audit_samples);
  if (!o.out.empty()) {
    Json samples = Json::array();
    for (const auto& s : rep.samples) {
      samples.push_back({{"node", s.node},
                         {"auction", s.auction},
                         {"box", {{s.box.dims[0].lo, s.box.dims[0].hi},
                                  {s.box.dims[1].lo, s.box.dims[1].hi},
                                  {s.box.dims[2].lo, s.box.dims[2].hi}}},
                         {"search_arg", s.search_arg},
                         {"search_value", s.search_value},
                         {"brute_arg", s.brute_arg},
                         {"brute_value", s.brute_value},
                         {"exact", s.exact()}});
    }
    fs::create_directories(o.out);
    detail::write_file(fs::path(o.out) / "audit.json",
                       Json{{"contexts", rep.samples.size()}, {"exact", rep.exact}, {"fraction", rep.fraction},
                            {"samples", samples}}
                               .dump(1) +
                           "\n");
  }
  if (!o.quiet) {
    std::cout << "unimodality audit: search_3d matched brute force on " << rep.exact << "/" << rep.samples.size()
              << " contexts (" << rep.fraction * 100 << "%)\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Credit-based forwarding auction simulator"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--format", o.format, "Output format")->check(CLI::IsMember({"json", "csv"}));
    cmd->add_option("--gend", o.gend, "End-gain formula")->check(CLI::IsMember({"paper", "consistent"}));
    cmd->add_flag("--quiet", o.quiet, "Suppress the summary");
  };

  auto* run_cmd = app.add_subcommand("run", "Run one scenario and write trace + metrics");
  run_cmd->add_option("--scenario", o.scenario, "Scenario JSON file")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--seed", o.seed, "Override the scenario seed");
  run_cmd->add_option("--out", o.out, "Output directory")->default_val("out");
  add_common(run_cmd);

  auto* sweep_cmd = app.add_subcommand("sweep", "Run a scenario over a seed range and aggregate");
  sweep_cmd->add_option("--scenario", o.scenario, "Scenario JSON file")->required()->check(CLI::ExistingFile);
  sweep_cmd->add_option("--seeds", o.seeds, "Seed range A..B")->required();
  sweep_cmd->add_option("--out", o.out, "Output directory")->default_val("out");
  add_common(sweep_cmd);

  auto* repro_cmd = app.add_subcommand("repro", "Run a built-in reproduction scenario");
  repro_cmd->add_option("name", o.repro_name, "Reproduction name")->required()->check(CLI::IsMember(repro::names()));
  repro_cmd->add_option("--seed", o.seed, "Seed");
  repro_cmd->add_option("--seeds", o.seeds, "Seed range A..B (punisher)");
  repro_cmd->add_option("--out", o.out, "Also write the trace to this directory");
  add_common(repro_cmd);

  auto* validate_cmd = app.add_subcommand("validate", "Parse and check a scenario without running it");
  validate_cmd->add_option("--scenario", o.scenario, "Scenario JSON file")->required()->check(CLI::ExistingFile);
  validate_cmd->add_option("--seed", o.seed, "Seed override to check");
  add_common(validate_cmd);

  auto* audit_cmd = app.add_subcommand("audit", "Compare search_3d with brute force on live SAVMAN decisions");
  audit_cmd->add_option("--samples", o.audit_samples, "Number of decision contexts")->default_val(200);
  audit_cmd->add_option("--out", o.out, "Write audit.json to this directory");
  audit_cmd->add_flag("--quiet", o.quiet, "Suppress the summary");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (*run_cmd) return cmd_run(o);
    if (*sweep_cmd) return cmd_sweep(o);
    if (*repro_cmd) return cmd_repro(o);
    if (*validate_cmd) return cmd_validate(o);
    if (*audit_cmd) return cmd_audit(o);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.is_config_error() ? 1 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
