#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "stps/environment.hpp"
#include "stps/errors.hpp"
#include "stps/learner.hpp"
#include "stps/scenario.hpp"

namespace stps {

enum class Metric { Utility, Security, Qos, Cost };

inline constexpr std::array<Metric, 4> kAllMetrics{Metric::Utility, Metric::Security, Metric::Qos,
                                                   Metric::Cost};

constexpr std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::Utility: return "utility";
    case Metric::Security: return "security";
    case Metric::Qos: return "qos";
    case Metric::Cost: return "cost";
  }
  return "?";
}

inline double metric_value(const AgentUtility& a, Metric m) {
  switch (m) {
    case Metric::Utility: return a.utility;
    case Metric::Security: return a.s;
    case Metric::Qos: return a.q;
    case Metric::Cost: return a.c;
  }
  return 0.0;
}

/// Time-averaged signed percentage difference of the adaptive trace over the
/// baseline for one agent and metric. Empty when some baseline slot is not
/// positive. Cost is compared on raw c (lower is better), so a negative cost
/// indicator means the adaptive scheme spends less.
inline std::optional<double> relative_indicator(const EpisodeTrace& adaptive, const EpisodeTrace& baseline,
                                                std::size_t agent, Metric metric) {
  if (adaptive.slots.size() != baseline.slots.size() || adaptive.slots.empty()) {
    throw ContractViolation("relative indicator needs traces of equal, nonzero length");
  }
  double sum = 0.0;
  for (std::size_t t = 0; t < adaptive.slots.size(); ++t) {
    const double xa = metric_value(adaptive.slots[t].utility.agents.at(agent), metric);
    const double xb = metric_value(baseline.slots[t].utility.agents.at(agent), metric);
    if (!(xb > 0.0)) return std::nullopt;
    sum += (xa - xb) / xb;
  }
  return 100.0 * sum / static_cast<double>(adaptive.slots.size());
}

struct IndicatorCell {
  std::size_t agent = 0;
  PlsPolicy baseline = PlsPolicy::B;
  Metric metric = Metric::Utility;
  std::optional<double> percent;
  std::size_t seeds = 1;  // how many defined per-seed values were averaged
};

struct RelativeIndicatorReport {
  std::vector<IndicatorCell> cells;

  [[nodiscard]] const IndicatorCell* find(std::size_t agent, PlsPolicy baseline, Metric metric) const {
    for (const auto& c : cells) {
      if (c.agent == agent && c.baseline == baseline && c.metric == metric) return &c;
    }
    return nullptr;
  }
};

inline RelativeIndicatorReport build_report(const EpisodeTrace& adaptive,
                                            const std::map<PlsPolicy, EpisodeTrace>& baselines) {
  RelativeIndicatorReport r;
  const std::size_t agents = adaptive.slots.empty() ? 0 : adaptive.slots.front().agents.size();
  for (std::size_t i = 0; i < agents; ++i) {
    for (const auto& [policy, trace] : baselines) {
      for (auto m : kAllMetrics) {
        r.cells.push_back({i, policy, m, relative_indicator(adaptive, trace, i, m), 1});
      }
    }
  }
  return r;
}

/// Mean over seeds of each defined cell; a cell undefined in every seed
/// stays undefined.
inline RelativeIndicatorReport average_reports(const std::vector<RelativeIndicatorReport>& per_seed) {
  RelativeIndicatorReport out;
  if (per_seed.empty()) return out;
  for (const auto& proto : per_seed.front().cells) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& rep : per_seed) {
      const auto* c = rep.find(proto.agent, proto.baseline, proto.metric);
      if (c != nullptr && c->percent) {
        sum += *c->percent;
        ++n;
      }
    }
    IndicatorCell cell = proto;
    cell.seeds = n;
    cell.percent = n > 0 ? std::optional<double>(sum / static_cast<double>(n)) : std::nullopt;
    out.cells.push_back(cell);
  }
  return out;
}

/// Both agents pinned to (policy, baseline configuration) for a full frame,
/// on the same evaluation fading as the adaptive run.
inline EpisodeTrace run_baseline(PlsPolicy policy, PlsEnvironment& env, DecisionMode mode) {
  const auto& s = env.scenario();
  ActionProfile pinned;
  for (std::size_t i = 0; i < s.agent_count(); ++i) {
    const auto k = s.policy_index(i, policy);
    const auto l = s.config_index(i, s.baseline_config);
    if (!k) {
      throw ConfigError("agent " + std::to_string(i + 1) + " cannot run baseline policy " +
                        std::string(to_string(policy)));
    }
    if (!l) {
      throw ConfigError("agent " + std::to_string(i + 1) + " has no baseline configuration " +
                        s.baseline_config.label());
    }
    pinned.push_back({*k, *l});
  }
  return pinned_rollout(env, mode, pinned, s.slots);
}

inline EpisodeTrace run_baseline(PlsPolicy policy, const ScenarioConfig& s,
                                 std::shared_ptr<const SecrecyTable> secrecy = nullptr) {
  if (!secrecy) secrecy = build_secrecy_table(s);
  PlsEnvironment env(s, std::move(secrecy));
  return run_baseline(policy, env, s.mode);
}

inline QTables train(const ScenarioConfig& s, DecisionMode mode, const Hyperparams& hp,
                     std::shared_ptr<const SecrecyTable> secrecy = nullptr) {
  validate(s);
  if (!secrecy) secrecy = build_secrecy_table(s);
  PlsEnvironment env(s, std::move(secrecy));
  return train(env, mode, hp, SeededStream(s.seed).derive("training").key());
}

struct RunMetadata {
  std::uint64_t seed = 0;
  DecisionMode mode = DecisionMode::Individual;
  std::string preset;
  double secrecy_seconds = 0.0;
  double training_seconds = 0.0;
  double evaluation_seconds = 0.0;
};

struct RunOutput {
  ScenarioConfig scenario;
  EpisodeTrace adaptive;
  std::map<PlsPolicy, EpisodeTrace> baselines;
  QTables tables;
  RelativeIndicatorReport report;
  RunMetadata metadata;
};

/// Policies every agent can run at the baseline configuration.
inline std::vector<PlsPolicy> baseline_policies(const ScenarioConfig& s) {
  std::vector<PlsPolicy> out;
  for (auto p : kAllPolicies) {
    bool ok = true;
    for (std::size_t i = 0; i < s.agent_count(); ++i) {
      ok = ok && s.policy_index(i, p) && s.config_index(i, s.baseline_config);
    }
    if (ok) out.push_back(p);
  }
  return out;
}

/// Train, evaluate greedily, run the fixed-policy baselines on paired fading
/// and score the adaptive trace against each of them.
inline RunOutput run_experiment(const ScenarioConfig& s, std::shared_ptr<const SecrecyTable> secrecy = nullptr) {
  using Clock = std::chrono::steady_clock;
  auto seconds = [](Clock::time_point a, Clock::time_point b) {
    return std::chrono::duration<double>(b - a).count();
  };
  validate(s);
  RunOutput out;
  out.scenario = s;
  out.metadata.seed = s.seed;
  out.metadata.mode = s.mode;
  out.metadata.preset = s.preset;

  const auto t0 = Clock::now();
  if (!secrecy) secrecy = build_secrecy_table(s);
  const auto t1 = Clock::now();
  PlsEnvironment env(s, secrecy);
  Hyperparams hp = s.hyperparams(s.mode);
  hp.slots = s.slots;
  out.tables = train(env, s.mode, hp, SeededStream(s.seed).derive("training").key());
  const auto t2 = Clock::now();
  out.adaptive = evaluate(out.tables, env, s.slots);
  for (auto p : baseline_policies(s)) out.baselines[p] = run_baseline(p, env, s.mode);
  out.report = build_report(out.adaptive, out.baselines);
  const auto t3 = Clock::now();

  out.metadata.secrecy_seconds = seconds(t0, t1);
  out.metadata.training_seconds = seconds(t1, t2);
  out.metadata.evaluation_seconds = seconds(t2, t3);
  return out;
}

inline double mean_network_utility(const EpisodeTrace& trace) {
  if (trace.slots.empty()) return 0.0;
  double s = 0.0;
  for (const auto& r : trace.slots) s += r.utility.network;
  return s / static_cast<double>(trace.slots.size());
}

}  // namespace stps
