#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <future>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "stps/stps.hpp"

using namespace stps;
namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config;
  std::string scenario;
  std::string mode;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> episodes;
  std::optional<std::size_t> grid;
  std::optional<std::size_t> samples;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "scenario YAML file")->check(CLI::ExistingFile);
  cmd->add_option("--scenario", c.scenario, "weight preset C1..C4");
  cmd->add_option("--mode", c.mode, "individual or joint");
  cmd->add_option("--seed", c.seed, "root seed");
  cmd->add_option("--episodes", c.episodes, "training episodes for the selected mode");
  cmd->add_option("--grid", c.grid, "surface grid resolution per side");
  cmd->add_option("--mc", c.samples, "Monte-Carlo samples per grid point");
}

ScenarioConfig resolve_scenario(const Common& c) {
  ScenarioConfig s = c.config.empty() ? parse_scenario("") : load_scenario(c.config);
  if (!c.scenario.empty()) apply_preset(s, c.scenario);
  if (!c.mode.empty()) {
    if (c.mode == "individual") {
      s.mode = DecisionMode::Individual;
    } else if (c.mode == "joint") {
      s.mode = DecisionMode::Joint;
    } else {
      throw ConfigError("--mode must be individual or joint, got '" + c.mode + "'");
    }
  }
  if (c.seed) s.seed = *c.seed;
  if (c.episodes) s.hyperparams(s.mode).episodes = *c.episodes;
  if (c.grid) s.grid_resolution = *c.grid;
  if (c.samples) s.mc_samples = *c.samples;
  validate(s);
  for (const auto& w : scenario_warnings(s)) std::cerr << "warning: " << w << "\n";
  return s;
}

std::pair<std::uint64_t, std::uint64_t> parse_seed_range(const std::string& text) {
  const auto dots = text.find("..");
  if (dots == std::string::npos) throw ConfigError("--seeds expects N..M, got '" + text + "'");
  const auto lo = parse_size(text.substr(0, dots));
  const auto hi = parse_size(text.substr(dots + 2));
  if (hi < lo) throw ConfigError("--seeds range is empty: " + text);
  return {lo, hi};
}

void print_report(const RelativeIndicatorReport& r, std::ostream& out) {
  std::vector<PlsPolicy> baselines;
  std::size_t agents = 0;
  for (const auto& c : r.cells) {
    if (std::find(baselines.begin(), baselines.end(), c.baseline) == baselines.end()) baselines.push_back(c.baseline);
    agents = std::max(agents, c.agent + 1);
  }
  std::sort(baselines.begin(), baselines.end());
  char buf[64];
  for (std::size_t i = 0; i < agents; ++i) {
    out << "agent " << i + 1 << "\n";
    std::snprintf(buf, sizeof(buf), "  %-9s", "metric");
    out << buf;
    for (auto b : baselines) {
      std::snprintf(buf, sizeof(buf), " %10s", std::string(to_string(b)).c_str());
      out << buf;
    }
    out << "\n";
    for (auto m : kAllMetrics) {
      std::snprintf(buf, sizeof(buf), "  %-9s", std::string(to_string(m)).c_str());
      out << buf;
      for (auto b : baselines) {
        const auto* cell = r.find(i, b, m);
        if (cell != nullptr && cell->percent) {
          std::snprintf(buf, sizeof(buf), " %+9.3f%%", *cell->percent);
        } else {
          std::snprintf(buf, sizeof(buf), " %10s", "n/a");
        }
        out << buf;
      }
      out << "\n";
    }
  }
}

int cmd_run(const Common& c, const std::string& seeds, const std::string& out, std::size_t jobs) {
  const auto base = resolve_scenario(c);
  if (seeds.empty()) {
    const auto run = run_experiment(base);
    const auto manifest = emit_outputs(run, out);
    std::cout << "seed " << base.seed << ": mean network utility "
              << format_double(mean_network_utility(run.adaptive)) << ", " << manifest.files.size()
              << " files in " << out << "\n";
    print_report(run.report, std::cout);
    return EXIT_SUCCESS;
  }

  const auto [lo, hi] = parse_seed_range(seeds);
  std::vector<std::uint64_t> todo;
  for (auto s = lo; s <= hi; ++s) todo.push_back(s);
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  // one worker per run; each run's secrecy table is single-threaded when
  // several runs share the machine
  std::vector<RelativeIndicatorReport> reports(todo.size());
  std::vector<double> utilities(todo.size());
  std::size_t next = 0;
  while (next < todo.size()) {
    std::vector<std::future<void>> batch;
    for (std::size_t k = 0; k < jobs && next < todo.size(); ++k, ++next) {
      const std::size_t idx = next;
      batch.push_back(std::async(std::launch::async, [&, idx] {
        auto s = base;
        s.seed = todo[idx];
        if (jobs > 1) s.threads = 1;
        const auto run = run_experiment(s);
        emit_outputs(run, fs::path(out) / ("seed_" + std::to_string(s.seed)));
        reports[idx] = run.report;
        utilities[idx] = mean_network_utility(run.adaptive);
      }));
    }
    for (auto& f : batch) f.get();
  }
  for (std::size_t k = 0; k < todo.size(); ++k) {
    std::cout << "seed " << todo[k] << ": mean network utility " << format_double(utilities[k]) << "\n";
  }
  const auto avg = average_reports(reports);
  OutputWriter w(out);
  w.write("relative_indicator_mean.csv", report_to_csv(avg));
  w.finish();
  std::cout << "seed-averaged relative indicator (" << todo.size() << " seeds)\n";
  print_report(avg, std::cout);
  return EXIT_SUCCESS;
}

int cmd_baseline(const Common& c, const std::string& policy_text, const std::string& out) {
  const auto s = resolve_scenario(c);
  const auto policy = parse_policy(policy_text);
  if (!policy) throw ConfigError("--policy must be one of scan, fdai, an, b; got '" + policy_text + "'");
  const auto trace = run_baseline(*policy, s);
  const auto csv = trace_to_csv(trace, s.options());
  if (out.empty()) {
    std::cout << csv;
  } else {
    OutputWriter w(out);
    w.write(baseline_trace_name(*policy), csv);
    w.write("network_utility.csv", network_series_csv(trace));
    w.finish();
    std::cout << to_string(*policy) << " baseline: mean network utility "
              << format_double(mean_network_utility(trace)) << "\n";
  }
  return EXIT_SUCCESS;
}

int cmd_report(const std::string& in) {
  const fs::path dir(in);
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + in);
  std::vector<fs::path> runs;
  if (fs::exists(dir / "relative_indicator.csv")) runs.push_back(dir);
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_directory() && e.path().filename().string().rfind("seed_", 0) == 0) runs.push_back(e.path());
  }
  if (runs.empty()) throw IoError("no run outputs under " + in);
  std::sort(runs.begin(), runs.end());
  std::vector<RelativeIndicatorReport> reports;
  for (const auto& r : runs) {
    const auto bad = verify_manifest(r);
    for (const auto& b : bad) std::cerr << "warning: checksum mismatch for " << (r / b).string() << "\n";
    reports.push_back(report_from_directory(r));
  }
  if (reports.size() == 1) {
    print_report(reports.front(), std::cout);
  } else {
    for (std::size_t k = 0; k < runs.size(); ++k) {
      std::cout << runs[k].filename().string() << "\n";
      print_report(reports[k], std::cout);
    }
    std::cout << "mean over " << reports.size() << " runs\n";
    print_report(average_reports(reports), std::cout);
  }
  return EXIT_SUCCESS;
}

int cmd_dump_map(const Common& c, const std::string& policy_text, double msg_db, double sec_db,
                 const std::string& out) {
  const auto s = resolve_scenario(c);
  const auto policy = parse_policy(policy_text);
  if (!policy) throw ConfigError("--policy must be one of scan, fdai, an, b; got '" + policy_text + "'");
  const TransmissionConfig cfg{msg_db, sec_db};
  std::vector<Transmission> tx;
  for (std::size_t i = 0; i < s.agent_count(); ++i) {
    tx.push_back({*policy, cfg.message_power(), cfg.security_power()});
  }
  const auto grid = scenario_grid(s);
  const auto pdf = scenario_pdf(s, grid);
  const auto map = secrecy_map(s.network(), tx, grid, s.mc_samples, secrecy_stream(s.seed), &pdf);
  const auto csv = secrecy_map_to_csv(map);
  if (out.empty()) {
    std::cout << csv;
  } else {
    write_file(out, csv);
  }
  for (std::size_t i = 0; i < s.agent_count(); ++i) {
    std::cerr << "agent " << i + 1 << " secrecy pressure " << format_double(secrecy_pressure(map.capacity[i], pdf))
              << "\n";
  }
  return EXIT_SUCCESS;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Secure transmission policy selection with Q-learning"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "stps 1.0.0");

  Common run_opts;
  std::string seeds;
  std::string run_out = "out";
  std::size_t jobs = 0;
  auto* run = app.add_subcommand("run", "train, evaluate and score against the fixed-policy baselines");
  add_common(run, run_opts);
  run->add_option("--seeds", seeds, "inclusive seed range N..M, one subdirectory per seed");
  run->add_option("--out", run_out, "output directory");
  run->add_option("--jobs", jobs, "parallel runs for --seeds (0 = all cores)");

  Common base_opts;
  std::string base_policy;
  std::string base_out;
  auto* baseline = app.add_subcommand("baseline", "roll out one fixed policy at the baseline configuration");
  add_common(baseline, base_opts);
  baseline->add_option("--policy", base_policy, "scan, fdai, an or b")->required();
  baseline->add_option("--out", base_out, "output directory (default: trace CSV to stdout)");

  std::string report_in;
  auto* report = app.add_subcommand("report", "relative-indicator tables from run outputs");
  report->add_option("--in", report_in, "run directory or directory of seed_* runs")->required();

  Common map_opts;
  std::string map_policy = "b";
  double map_msg = 10.0;
  double map_sec = 10.0;
  std::string map_out;
  auto* dump = app.add_subcommand("dump-secrecy-map", "ergodic secrecy capacity over the surface grid");
  add_common(dump, map_opts);
  dump->add_option("--policy", map_policy, "policy used by every agent");
  dump->add_option("--msg-db", map_msg, "message power in dB");
  dump->add_option("--sec-db", map_sec, "security power in dB");
  dump->add_option("--out", map_out, "CSV file (default: stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(run_opts, seeds, run_out, jobs);
    if (*baseline) return cmd_baseline(base_opts, base_policy, base_out);
    if (*report) return cmd_report(report_in);
    if (*dump) return cmd_dump_map(map_opts, map_policy, map_msg, map_sec, map_out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return EXIT_SUCCESS;
}
