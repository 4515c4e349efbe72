#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "stps/stps.hpp"

using namespace stps;
namespace fs = std::filesystem;

namespace {

ScenarioConfig quick(std::string_view preset = "C1", DecisionMode mode = DecisionMode::Individual) {
  auto s = default_scenario(preset);
  s.mode = mode;
  s.grid_resolution = 5;
  s.mc_samples = 20;
  s.individual.episodes = 5;
  s.joint.episodes = 5;
  return s;
}

EpisodeTrace scaled(const EpisodeTrace& t, double f) {
  EpisodeTrace out = t;
  for (auto& r : out.slots) {
    for (auto& a : r.utility.agents) {
      a.utility *= f;
      a.s *= f;
      a.q *= f;
      a.c *= f;
    }
  }
  return out;
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("stps_test_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST(Scenario, PresetsAsPrinted) {
  const auto& c1 = application_preset("C1");
  EXPECT_EQ(c1.rows[0], (UtilityWeights{0.4, 0.3, 0.3}));
  EXPECT_EQ(c1.rows[1], (UtilityWeights{0.33, 0.33, 0.33}));
  const auto s = default_scenario("C1");
  EXPECT_NEAR(s.agents[1].weights.security, 1.0 / 3.0, 1e-15);
  EXPECT_NO_THROW(validate(s));
  EXPECT_THROW(application_preset("C9"), ConfigError);
}

TEST(Scenario, EmptyDocumentGivesDefaults) {
  const auto s = parse_scenario("");
  EXPECT_EQ(s.preset, "C1");
  EXPECT_EQ(s.mode, DecisionMode::Individual);
  EXPECT_EQ(s.seed, 0u);
  EXPECT_EQ(s.agent_count(), 2u);
  EXPECT_EQ(s.agents[0].transmitter, (NodePosition{-1, 1}));
  EXPECT_EQ(s.agents[1].receiver, (NodePosition{1, -1}));
  EXPECT_EQ(s.grid_resolution, 21u);
  EXPECT_EQ(s.mc_samples, 500u);
}

TEST(Scenario, ParsesOverrides) {
  const auto s = parse_scenario(R"(
scenario: C3
mode: joint
seed: 17
slots: 20
agents:
  - weights: [0.2, 0.2, 0.6]
    configs: [[5, 5], [10, 10]]
  - policies: [SC-AN, B]
    antennas: 3
cost_power: security_only
hyperparams:
  joint: {episodes: 12, epsilon: 0.5}
)");
  EXPECT_EQ(s.preset, "C3");
  EXPECT_EQ(s.mode, DecisionMode::Joint);
  EXPECT_EQ(s.seed, 17u);
  EXPECT_EQ(s.slots, 20u);
  EXPECT_EQ(s.agents[0].weights, (UtilityWeights{0.2, 0.2, 0.6}));
  EXPECT_EQ(s.agents[0].configs.size(), 2u);
  EXPECT_EQ(s.agents[1].policies, (std::vector<PlsPolicy>{PlsPolicy::SCAN, PlsPolicy::B}));
  EXPECT_EQ(s.agents[1].antennas, 3u);
  EXPECT_NEAR(s.agents[1].weights.security, 0.5, 1e-15);  // C3 agent 2
  EXPECT_EQ(s.cost_power, CostPower::SecurityOnly);
  EXPECT_EQ(s.joint.episodes, 12u);
  EXPECT_EQ(s.joint.epsilon, 0.5);
  EXPECT_EQ(s.joint.discount, 0.85);
}

TEST(Scenario, RejectsBadInputWithLineNumbers) {
  try {
    parse_scenario("seed: 1\nagents:\n  - weights: [0.5, 0.5, 0.5]\n");
    FAIL() << "expected a ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
  try {
    parse_scenario("seed: 1\nbogus: 2\n");
    FAIL() << "expected a ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("bogus"), std::string::npos);
  }
  EXPECT_THROW(parse_scenario("reference_config: [7, 7]\n"), ConfigError);
  EXPECT_THROW(parse_scenario("agents:\n  - policies: [AN]\n    antennas: 1\n"), ConfigError);
  EXPECT_THROW(parse_scenario("mode: sideways\n"), ConfigError);
  EXPECT_THROW(parse_scenario("hyperparams:\n  individual: {slots: 3}\n"), ConfigError);
  EXPECT_THROW(parse_scenario("agents:\n  - {}\n  - {}\n  - {weights: [0.2, 0.3, 0.5]}\n"), ConfigError);
  EXPECT_THROW(load_scenario("/nonexistent/scenario.yaml"), IoError);
}

TEST(RelativeIndicator, Examples) {
  const auto run = run_experiment(quick());
  const auto& base = run.baselines.at(PlsPolicy::B);
  EXPECT_EQ(*relative_indicator(base, base, 0, Metric::Utility), 0.0);
  EXPECT_NEAR(*relative_indicator(scaled(base, 2.0), base, 1, Metric::Qos), 100.0, 1e-9);
  auto zero = base;
  zero.slots[3].utility.agents[0].s = 0.0;
  EXPECT_FALSE(relative_indicator(base, zero, 0, Metric::Security).has_value());
  EpisodeTrace shorter = base;
  shorter.slots.pop_back();
  EXPECT_THROW(relative_indicator(base, shorter, 0, Metric::Utility), ContractViolation);
}

TEST(RelativeIndicator, SeedAveraging) {
  RelativeIndicatorReport a;
  RelativeIndicatorReport b;
  a.cells.push_back({0, PlsPolicy::B, Metric::Utility, 10.0, 1});
  b.cells.push_back({0, PlsPolicy::B, Metric::Utility, 20.0, 1});
  a.cells.push_back({0, PlsPolicy::AN, Metric::Cost, std::nullopt, 1});
  b.cells.push_back({0, PlsPolicy::AN, Metric::Cost, 4.0, 1});
  a.cells.push_back({1, PlsPolicy::AN, Metric::Cost, std::nullopt, 1});
  b.cells.push_back({1, PlsPolicy::AN, Metric::Cost, std::nullopt, 1});
  const auto avg = average_reports({a, b});
  EXPECT_EQ(*avg.find(0, PlsPolicy::B, Metric::Utility)->percent, 15.0);
  EXPECT_EQ(avg.find(0, PlsPolicy::B, Metric::Utility)->seeds, 2u);
  EXPECT_EQ(*avg.find(0, PlsPolicy::AN, Metric::Cost)->percent, 4.0);
  EXPECT_FALSE(avg.find(1, PlsPolicy::AN, Metric::Cost)->percent.has_value());
}

TEST(Baseline, PinnedAndPaired) {
  const auto s = quick();
  const auto table = build_secrecy_table(s);
  PlsEnvironment env(s, table);
  const auto b = run_baseline(PlsPolicy::B, env, s.mode);
  ASSERT_EQ(b.slots.size(), 50u);
  for (std::size_t t = 0; t < b.slots.size(); ++t) {
    for (const auto& a : b.slots[t].agents) EXPECT_EQ(a.action, (AgentAction{3, 3}));
    if (t > 0) {
      for (const auto& u : b.slots[t].utility.agents) EXPECT_EQ(u.delta, 1.0);
    }
  }
  // B emits no security signal, so the receiver SINR of a B baseline equals
  // the one computed with all security powers set to zero.
  env.begin_slot({Phase::Evaluation, 0, 1});
  const auto tx = resolve(b.slots[0].profile(), s.options());
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 2; ++j) {
      EXPECT_EQ(security_interference(tx[j].policy, env.realization(), j, Target::receiver_of(i),
                                      tx[j].security_power),
                0.0);
    }
  }
  // same fading stream as the adaptive evaluation
  PlsEnvironment other(s, table);
  const auto q = train(s, s.mode, s.individual, table);
  (void)evaluate(q, other, s.slots);
  other.begin_slot({Phase::Evaluation, 0, 9});
  env.begin_slot({Phase::Evaluation, 0, 9});
  EXPECT_EQ(other.realization().tx_rx, env.realization().tx_rx);

  auto missing = s;
  missing.baseline_config = {7, 7};
  EXPECT_THROW(run_baseline(PlsPolicy::B, missing, table), ConfigError);
}

TEST(Outputs, RoundTripAndManifest) {
  const auto run = run_experiment(quick());
  const auto dir = scratch("roundtrip");
  const auto manifest = emit_outputs(run, dir);
  EXPECT_TRUE(verify_manifest(dir).empty());
  for (const auto& f : manifest.files) {
    ASSERT_TRUE(fs::exists(dir / f.path)) << f.path;
    EXPECT_EQ(fs::file_size(dir / f.path), f.bytes);
    EXPECT_EQ(sha256_hex(read_file(dir / f.path)), f.sha256);
  }

  const auto back = trace_from_csv(read_file(dir / "trace_adaptive.csv"));
  ASSERT_EQ(back.slots.size(), run.adaptive.slots.size());
  for (std::size_t t = 0; t < back.slots.size(); ++t) {
    const auto& a = run.adaptive.slots[t];
    const auto& b = back.slots[t];
    EXPECT_EQ(a.slot, b.slot);
    EXPECT_EQ(a.agents, b.agents);
    EXPECT_EQ(a.utility.network, b.utility.network);
    for (std::size_t i = 0; i < a.agents.size(); ++i) {
      EXPECT_EQ(a.utility.agents[i].s, b.utility.agents[i].s);
      EXPECT_EQ(a.utility.agents[i].utility, b.utility.agents[i].utility);
      EXPECT_EQ(a.utility.agents[i].weights, b.utility.agents[i].weights);
    }
  }
  EXPECT_EQ(trace_to_csv(back, run.scenario.options()), read_file(dir / "trace_adaptive.csv"));

  const auto q = qtable_from_csv(read_file(dir / "qtable_agent2.csv"));
  EXPECT_EQ(q.policy, run.tables.tables[1].policy);
  EXPECT_EQ(q.config, run.tables.tables[1].config);

  const auto rep = report_from_csv(read_file(dir / "relative_indicator.csv"));
  ASSERT_EQ(rep.cells.size(), run.report.cells.size());
  const auto rebuilt = report_from_directory(dir);
  for (std::size_t k = 0; k < rep.cells.size(); ++k) {
    EXPECT_EQ(rep.cells[k].percent, run.report.cells[k].percent);
    EXPECT_EQ(rebuilt.cells[k].percent, run.report.cells[k].percent);
  }

  // tampering is detected
  std::ofstream(dir / "network_utility.csv", std::ios::app) << "x\n";
  EXPECT_EQ(verify_manifest(dir), (std::vector<std::string>{"network_utility.csv"}));
}

TEST(Outputs, JointQTableLayout) {
  const auto run = run_experiment(quick("C2", DecisionMode::Joint));
  const auto csv = qtable_to_csv(run.tables, run.scenario.options(), 0);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "state,SCAN+SCAN,SCAN+FDAI,SCAN+AN,SCAN+B,FDAI+SCAN,FDAI+FDAI,FDAI+AN,FDAI+B,AN+SCAN,AN+FDAI,"
            "AN+AN,AN+B,B+SCAN,B+FDAI,B+AN,B+B");
  const auto q = qtable_from_csv(csv);
  EXPECT_EQ(q.policy_actions, 16u);
  EXPECT_EQ(q.config_actions, 16u);
  const auto dir = scratch("joint");
  const auto m = emit_outputs(run, dir);
  EXPECT_TRUE(fs::exists(dir / "qtable_joint.csv"));
}

TEST(Outputs, UnwritableDirectoryNamesThePath) {
  try {
    OutputWriter w("/proc/stps-cannot-exist/run");
    FAIL() << "expected IoError";
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("/proc/stps-cannot-exist"), std::string::npos);
  }
  EXPECT_THROW(trace_from_csv("slot,agent\n"), IoError);
}

TEST(Determinism, EqualSeedsGiveIdenticalTraces) {
  const auto a = run_experiment(quick());
  const auto b = run_experiment(quick());
  const auto opts = a.scenario.options();
  EXPECT_EQ(trace_to_csv(a.adaptive, opts), trace_to_csv(b.adaptive, opts));
  auto other = quick();
  other.seed = 1;
  EXPECT_NE(trace_to_csv(run_experiment(other).adaptive, opts), trace_to_csv(a.adaptive, opts));
}

TEST(Scenarios, EveryPresetAndModeCompletes) {
  for (const auto& p : kApplicationPresets) {
    for (auto mode : {DecisionMode::Individual, DecisionMode::Joint}) {
      const auto run = run_experiment(quick(p.name, mode));
      EXPECT_EQ(run.adaptive.slots.size(), 50u);
      EXPECT_EQ(run.baselines.size(), 4u);
      EXPECT_EQ(run.report.cells.size(), 2u * 4u * 4u);
      for (const auto& r : run.adaptive.slots) {
        EXPECT_GE(r.utility.network, 0.0);
        EXPECT_LE(r.utility.network, 1.0);
      }
    }
  }
}

TEST(Environment, DimensionsPeakAtOne) {
  const auto s = quick();
  PlsEnvironment env(s, build_secrecy_table(s));
  SeededStream rng(3);
  for (int k = 0; k < 200; ++k) {
    env.begin_slot({Phase::Training, static_cast<std::size_t>(k), 1 + static_cast<std::size_t>(k % 50)});
    ActionProfile p(2), prev(2);
    for (std::size_t i = 0; i < 2; ++i) {
      p[i] = {rng.uniform_index(4), rng.uniform_index(4)};
      prev[i] = {rng.uniform_index(4), rng.uniform_index(4)};
    }
    const auto b = env.evaluate(p, prev, 1 + static_cast<std::size_t>(k % 50));
    double ms = 0, mq = 0, mc = 0;
    for (const auto& a : b.agents) {
      ms = std::max(ms, a.s);
      mq = std::max(mq, a.q);
      mc = std::max(mc, a.c);
      EXPECT_GE(a.utility, 0.0);
      EXPECT_LE(a.utility, 1.0);
    }
    EXPECT_EQ(ms, 1.0);
    EXPECT_EQ(mq, 1.0);
    EXPECT_EQ(mc, 1.0);
  }
}

TEST(ShippedConfigs, ParseToTheirPresets) {
  const fs::path dir = fs::path(STPS_SOURCE_DIR) / "configs";
  for (const char* p : {"C1", "C2", "C3", "C4"}) {
    std::string file(p);
    file[0] = 'c';
    const auto s = load_scenario(dir / (file + ".yaml"));
    EXPECT_EQ(s.preset, p);
    EXPECT_EQ(s.agent_count(), 2u);
    const auto d = default_scenario(p);
    for (std::size_t i = 0; i < 2; ++i) {
      EXPECT_NEAR(s.agents[i].weights.security, d.agents[i].weights.security, 1e-12);
      EXPECT_NEAR(s.agents[i].weights.cost, d.agents[i].weights.cost, 1e-12);
    }
  }
  EXPECT_EQ(load_scenario(dir / "c2.yaml").mode, DecisionMode::Joint);
  EXPECT_EQ(load_scenario(dir / "c4.yaml").cost_power, CostPower::SecurityOnly);
}
