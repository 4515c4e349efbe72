#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "stps/channel.hpp"
#include "stps/decision.hpp"
#include "stps/errors.hpp"
#include "stps/learner.hpp"
#include "stps/pls.hpp"
#include "stps/utility.hpp"

namespace stps {

enum class CostPower { Total, SecurityOnly };

constexpr std::string_view to_string(CostPower c) {
  return c == CostPower::Total ? "total" : "security_only";
}

struct AgentSpec {
  NodePosition transmitter;
  NodePosition receiver;
  std::size_t antennas = 2;
  double noise = 1.0;
  std::vector<PlsPolicy> policies{kAllPolicies.begin(), kAllPolicies.end()};
  std::vector<TransmissionConfig> configs{{5, 5}, {5, 10}, {10, 5}, {10, 10}};
  UtilityWeights weights;
  double network_weight = 0.0;  // share in the network utility
};

/// Application weight rows as printed (per agent: security, QoS, cost).
struct ApplicationPreset {
  std::string_view name;
  std::string_view application;
  std::array<UtilityWeights, 2> rows;
};

inline constexpr std::array<ApplicationPreset, 4> kApplicationPresets{{
    {"C1", "drone swarms", {{{0.4, 0.3, 0.3}, {0.33, 0.33, 0.33}}}},
    {"C2", "URLLC, V2X", {{{0.3, 0.5, 0.2}, {0.4, 0.4, 0.2}}}},
    {"C3", "mMTC, smart grid", {{{0.2, 0.3, 0.5}, {0.5, 0.1, 0.4}}}},
    {"C4", "health networks", {{{0.3, 0.2, 0.5}, {0.2, 0.2, 0.6}}}},
}};

inline const ApplicationPreset& application_preset(std::string_view name) {
  for (const auto& p : kApplicationPresets) {
    if (p.name == name) return p;
  }
  throw ConfigError("unknown scenario preset '" + std::string(name) + "' (expected C1..C4)");
}

struct ScenarioConfig {
  std::string preset = "C1";
  std::vector<AgentSpec> agents;
  Rect surface;
  NodePosition eavesdropper_mean{0.0, 0.0};
  double eavesdropper_variance = 1.0;
  double eavesdropper_noise = 1.0;
  TimeImpacts time_impacts;
  double delta_switch = 0.95;
  std::size_t slots = 50;
  TransmissionConfig reference_config{5, 5};
  PlsPolicy initial_policy = PlsPolicy::B;
  TransmissionConfig initial_config{5, 5};
  TransmissionConfig baseline_config{10, 10};
  std::size_t grid_resolution = 21;
  std::size_t mc_samples = 500;
  std::uint64_t seed = 0;
  DecisionMode mode = DecisionMode::Individual;
  Hyperparams individual = Hyperparams::defaults(DecisionMode::Individual);
  Hyperparams joint = Hyperparams::defaults(DecisionMode::Joint);
  bool enforce_equal_msg_power = false;
  double equal_message_power_db = 10.0;
  CostPower cost_power = CostPower::Total;
  std::size_t threads = 0;  // 0 = hardware concurrency

  [[nodiscard]] std::size_t agent_count() const { return agents.size(); }

  [[nodiscard]] const Hyperparams& hyperparams(DecisionMode m) const {
    return m == DecisionMode::Individual ? individual : joint;
  }
  Hyperparams& hyperparams(DecisionMode m) {
    return m == DecisionMode::Individual ? individual : joint;
  }

  [[nodiscard]] Network network() const {
    Network n;
    n.geometry.surface = surface;
    n.geometry.eavesdropper_mean = eavesdropper_mean;
    n.geometry.eavesdropper_variance = eavesdropper_variance;
    for (const auto& a : agents) {
      n.geometry.transmitters.push_back(a.transmitter);
      n.geometry.receivers.push_back(a.receiver);
      n.antennas.push_back(a.antennas);
      n.receiver_noise.push_back(a.noise);
    }
    n.eavesdropper_noise = eavesdropper_noise;
    return n;
  }

  [[nodiscard]] std::vector<AgentOptions> options() const {
    std::vector<AgentOptions> o;
    for (const auto& a : agents) o.push_back({a.policies, a.configs});
    return o;
  }

  [[nodiscard]] std::optional<double> equal_message_power() const {
    if (!enforce_equal_msg_power) return std::nullopt;
    return db_to_linear(equal_message_power_db);
  }

  [[nodiscard]] std::vector<double> network_weights() const {
    std::vector<double> w;
    for (const auto& a : agents) w.push_back(a.network_weight);
    return w;
  }

  // Index of `cfg` in agent i's configuration set, if present.
  [[nodiscard]] std::optional<std::size_t> config_index(std::size_t i, const TransmissionConfig& cfg) const {
    const auto& c = agents.at(i).configs;
    const auto it = std::find(c.begin(), c.end(), cfg);
    if (it == c.end()) return std::nullopt;
    return static_cast<std::size_t>(it - c.begin());
  }

  [[nodiscard]] std::optional<std::size_t> policy_index(std::size_t i, PlsPolicy p) const {
    const auto& v = agents.at(i).policies;
    const auto it = std::find(v.begin(), v.end(), p);
    if (it == v.end()) return std::nullopt;
    return static_cast<std::size_t>(it - v.begin());
  }

  [[nodiscard]] ActionProfile initial_profile() const {
    ActionProfile p;
    for (std::size_t i = 0; i < agents.size(); ++i) {
      p.push_back({*policy_index(i, initial_policy), *config_index(i, initial_config)});
    }
    return p;
  }

  [[nodiscard]] std::vector<std::size_t> reference_indices() const {
    std::vector<std::size_t> r;
    for (std::size_t i = 0; i < agents.size(); ++i) r.push_back(*config_index(i, reference_config));
    return r;
  }
};

/// Two agents in the 4 m x 4 m layout with weights from `preset`.
inline ScenarioConfig default_scenario(std::string_view preset = "C1") {
  const auto& p = application_preset(preset);
  ScenarioConfig s;
  s.preset = std::string(preset);
  AgentSpec a1;
  a1.transmitter = {-1.0, 1.0};
  a1.receiver = {1.0, 1.0};
  a1.weights = p.rows[0].normalized();
  AgentSpec a2;
  a2.transmitter = {-1.0, -1.0};
  a2.receiver = {1.0, -1.0};
  a2.weights = p.rows[1].normalized();
  s.agents = {a1, a2};
  for (auto& a : s.agents) a.network_weight = 0.5;
  return s;
}

/// Replaces every agent's weights with the preset row for its index.
inline void apply_preset(ScenarioConfig& s, std::string_view preset) {
  const auto& p = application_preset(preset);
  if (s.agents.size() > p.rows.size()) {
    throw ConfigError("preset " + std::string(preset) + " defines weights for two agents only");
  }
  for (std::size_t i = 0; i < s.agents.size(); ++i) s.agents[i].weights = p.rows[i].normalized();
  s.preset = std::string(preset);
}

inline void validate(const ScenarioConfig& s) {
  const std::size_t n = s.agents.size();
  if (n < 1) throw ConfigError("scenario needs at least one agent");
  if (!(s.surface.area() > 0.0)) throw ConfigError("surface must have positive area");
  if (!(s.eavesdropper_variance > 0.0)) throw ConfigError("eavesdropper pdf variance must be positive");
  if (!(s.eavesdropper_noise > 0.0)) throw ConfigError("eavesdropper noise must be positive");
  validate_time_impacts(s.time_impacts);
  if (!(s.delta_switch > 0.0 && s.delta_switch <= 1.0)) throw ConfigError("delta_switch must lie in (0, 1]");
  if (s.slots < 1) throw ConfigError("slots must be at least 1");
  if (s.grid_resolution < 2) throw ConfigError("grid_resolution must be at least 2");
  if (s.mc_samples < 1) throw ConfigError("mc_samples must be at least 1");
  validate(s.individual);
  validate(s.joint);

  double weight_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = s.agents[i];
    const std::string who = "agent " + std::to_string(i + 1);
    if (a.antennas < 1) throw ConfigError(who + ": needs at least one antenna");
    if (!(a.noise > 0.0)) throw ConfigError(who + ": noise must be positive");
    if (a.policies.empty()) throw ConfigError(who + ": policy set is empty");
    if (a.configs.empty()) throw ConfigError(who + ": configuration set is empty");
    for (const auto& c : a.configs) {
      if (!std::isfinite(c.message_power_db) || !std::isfinite(c.security_power_db)) {
        throw ConfigError(who + ": configuration powers must be finite");
      }
    }
    const bool uses_an = std::find(a.policies.begin(), a.policies.end(), PlsPolicy::AN) != a.policies.end();
    if (uses_an && a.antennas < 2) {
      throw ConfigError(who + ": AN needs at least two transmit antennas");
    }
    try {
      validate_weights(a.weights);
    } catch (const ConfigError& e) {
      throw ConfigError(who + ": " + e.what());
    }
    if (!(a.network_weight >= 0.0)) throw ConfigError(who + ": network weight must be nonnegative");
    weight_sum += a.network_weight;
    if (!s.config_index(i, s.reference_config)) {
      throw ConfigError(who + ": reference configuration " + s.reference_config.label() +
                        " is not in the configuration set");
    }
    if (!s.config_index(i, s.initial_config) || !s.policy_index(i, s.initial_policy)) {
      throw ConfigError(who + ": initial action is not in the agent's action sets");
    }
  }
  if (std::abs(weight_sum - 1.0) > 1e-9) throw ConfigError("agent network weights must sum to 1");

  // Every link the signal model uses must have positive length.
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      if (!(distance(s.agents[j].transmitter, s.agents[i].receiver) > 0.0)) {
        throw ConfigError("transmitter " + std::to_string(j + 1) + " coincides with receiver " +
                          std::to_string(i + 1));
      }
      if (i != j && !(distance(s.agents[j].receiver, s.agents[i].receiver) > 0.0)) {
        throw ConfigError("receivers " + std::to_string(j + 1) + " and " + std::to_string(i + 1) +
                          " coincide");
      }
    }
  }
}

// Non-fatal observations (nodes outside the surface).
inline std::vector<std::string> scenario_warnings(const ScenarioConfig& s) {
  std::vector<std::string> w;
  for (std::size_t i = 0; i < s.agents.size(); ++i) {
    if (!s.surface.contains(s.agents[i].transmitter) || !s.surface.contains(s.agents[i].receiver)) {
      w.push_back("agent " + std::to_string(i + 1) + " has a node outside the surface");
    }
  }
  return w;
}

namespace detail {

inline std::string where(const YAML::Node& node) {
  const auto m = node.Mark();
  if (m.line < 0) return "";
  return "line " + std::to_string(m.line + 1) + ": ";
}

[[noreturn]] inline void fail_at(const YAML::Node& node, const std::string& msg) {
  throw ConfigError(where(node) + msg);
}

inline void check_keys(const YAML::Node& map, std::initializer_list<std::string_view> allowed,
                       std::string_view context) {
  if (!map.IsMap()) fail_at(map, std::string(context) + " must be a mapping");
  for (const auto& kv : map) {
    const auto key = kv.first.as<std::string>();
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      fail_at(kv.first, "unknown key '" + key + "' in " + std::string(context));
    }
  }
}

template <class T>
T read(const YAML::Node& node, std::string_view what) {
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    fail_at(node, "cannot read " + std::string(what));
  }
}

inline NodePosition read_position(const YAML::Node& node, std::string_view what) {
  if (!node.IsSequence() || node.size() != 2) fail_at(node, std::string(what) + " must be [x, y]");
  return {read<double>(node[0], what), read<double>(node[1], what)};
}

inline TransmissionConfig read_config(const YAML::Node& node, std::string_view what) {
  if (!node.IsSequence() || node.size() != 2) {
    fail_at(node, std::string(what) + " must be [message_db, security_db]");
  }
  return {read<double>(node[0], what), read<double>(node[1], what)};
}

inline PlsPolicy read_policy(const YAML::Node& node) {
  const auto text = read<std::string>(node, "policy");
  const auto p = parse_policy(text);
  if (!p) fail_at(node, "unknown policy '" + text + "' (expected SCAN, FDAI, AN or B)");
  return *p;
}

inline UtilityWeights read_weights(const YAML::Node& node, std::string_view what) {
  if (!node.IsSequence() || node.size() != 3) {
    fail_at(node, std::string(what) + " must be [security, qos, cost]");
  }
  UtilityWeights w{read<double>(node[0], what), read<double>(node[1], what),
                   read<double>(node[2], what)};
  try {
    validate_weights(w);
  } catch (const ConfigError& e) {
    fail_at(node, std::string(what) + ": " + e.what());
  }
  return w;
}

inline DecisionMode read_mode(const YAML::Node& node) {
  const auto m = read<std::string>(node, "mode");
  if (m == "individual") return DecisionMode::Individual;
  if (m == "joint") return DecisionMode::Joint;
  fail_at(node, "mode must be 'individual' or 'joint'");
}

inline void read_hyperparams(const YAML::Node& node, Hyperparams& hp, std::string_view context) {
  check_keys(node, {"discount", "learning_rate", "epsilon", "episodes"}, context);
  if (node["discount"]) hp.discount = read<double>(node["discount"], "discount");
  if (node["learning_rate"]) hp.learning_rate = read<double>(node["learning_rate"], "learning_rate");
  if (node["epsilon"]) hp.epsilon = read<double>(node["epsilon"], "epsilon");
  if (node["episodes"]) hp.episodes = read<std::size_t>(node["episodes"], "episodes");
}

inline void read_agent(const YAML::Node& node, AgentSpec& a, bool has_default, std::size_t index) {
  const std::string ctx = "agent " + std::to_string(index + 1);
  check_keys(node, {"transmitter", "receiver", "antennas", "noise", "policies", "configs", "weights",
                    "network_weight"},
             ctx);
  if (!has_default && (!node["transmitter"] || !node["receiver"])) {
    fail_at(node, ctx + " needs explicit transmitter and receiver positions");
  }
  if (node["transmitter"]) a.transmitter = read_position(node["transmitter"], "transmitter");
  if (node["receiver"]) a.receiver = read_position(node["receiver"], "receiver");
  if (node["antennas"]) a.antennas = read<std::size_t>(node["antennas"], "antennas");
  if (node["noise"]) a.noise = read<double>(node["noise"], "noise");
  if (node["policies"]) {
    const auto& seq = node["policies"];
    if (!seq.IsSequence()) fail_at(seq, "policies must be a list");
    a.policies.clear();
    std::set<PlsPolicy> seen;
    for (const auto& p : seq) {
      const auto pol = read_policy(p);
      if (!seen.insert(pol).second) fail_at(p, "policy listed twice");
      a.policies.push_back(pol);
    }
  }
  if (node["configs"]) {
    const auto& seq = node["configs"];
    if (!seq.IsSequence()) fail_at(seq, "configs must be a list");
    a.configs.clear();
    for (const auto& c : seq) {
      const auto cfg = read_config(c, "config");
      if (std::find(a.configs.begin(), a.configs.end(), cfg) != a.configs.end()) {
        fail_at(c, "configuration listed twice");
      }
      a.configs.push_back(cfg);
    }
  }
  if (node["weights"]) a.weights = read_weights(node["weights"], "weights");
  if (node["network_weight"]) a.network_weight = read<double>(node["network_weight"], "network_weight");
}

}  // namespace detail

/// Parses a scenario from YAML text. Omitted keys keep the two-agent
/// defaults; an empty document yields default_scenario("C1").
inline ScenarioConfig parse_scenario(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError("line " + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  if (root.IsNull()) {
    auto s = default_scenario("C1");
    validate(s);
    return s;
  }
  using namespace detail;
  check_keys(root,
             {"scenario", "mode", "seed", "agents", "surface", "eavesdropper", "time_impacts",
              "delta_switch", "slots", "reference_config", "initial_action", "baseline_config",
              "grid_resolution", "mc_samples", "enforce_equal_msg_power", "equal_message_power_db",
              "cost_power", "hyperparams", "threads"},
             "scenario");

  const std::string preset = root["scenario"] ? read<std::string>(root["scenario"], "scenario") : "C1";
  ScenarioConfig s;
  try {
    s = default_scenario(preset);
  } catch (const ConfigError& e) {
    fail_at(root["scenario"], e.what());
  }

  if (root["mode"]) s.mode = read_mode(root["mode"]);
  if (root["seed"]) s.seed = read<std::uint64_t>(root["seed"], "seed");
  if (root["agents"]) {
    const auto& seq = root["agents"];
    if (!seq.IsSequence() || seq.size() == 0) fail_at(seq, "agents must be a nonempty list");
    const auto defaults = s.agents;
    s.agents.clear();
    for (std::size_t i = 0; i < seq.size(); ++i) {
      AgentSpec a = i < defaults.size() ? defaults[i] : AgentSpec{};
      if (i >= defaults.size()) a.weights = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
      read_agent(seq[i], a, i < defaults.size(), i);
      s.agents.push_back(a);
    }
    bool explicit_weights = false;
    for (const auto& a : seq) explicit_weights = explicit_weights || a["network_weight"];
    if (!explicit_weights) {
      for (auto& a : s.agents) a.network_weight = 1.0 / static_cast<double>(s.agents.size());
    }
  }
  if (root["surface"]) {
    const auto& n = root["surface"];
    check_keys(n, {"x_min", "x_max", "y_min", "y_max"}, "surface");
    if (n["x_min"]) s.surface.x_min = read<double>(n["x_min"], "x_min");
    if (n["x_max"]) s.surface.x_max = read<double>(n["x_max"], "x_max");
    if (n["y_min"]) s.surface.y_min = read<double>(n["y_min"], "y_min");
    if (n["y_max"]) s.surface.y_max = read<double>(n["y_max"], "y_max");
    if (!(s.surface.area() > 0.0)) fail_at(n, "surface must have positive area");
  }
  if (root["eavesdropper"]) {
    const auto& n = root["eavesdropper"];
    check_keys(n, {"mean", "variance", "noise"}, "eavesdropper");
    if (n["mean"]) s.eavesdropper_mean = read_position(n["mean"], "eavesdropper mean");
    if (n["variance"]) s.eavesdropper_variance = read<double>(n["variance"], "variance");
    if (n["noise"]) s.eavesdropper_noise = read<double>(n["noise"], "noise");
  }
  if (root["time_impacts"]) {
    const auto& n = root["time_impacts"];
    if (!n.IsSequence() || n.size() != 3) fail_at(n, "time_impacts must be [security, qos, cost]");
    s.time_impacts = {read<double>(n[0], "time impact"), read<double>(n[1], "time impact"),
                      read<double>(n[2], "time impact")};
    try {
      validate_time_impacts(s.time_impacts);
    } catch (const ConfigError& e) {
      fail_at(n, e.what());
    }
  }
  if (root["delta_switch"]) s.delta_switch = read<double>(root["delta_switch"], "delta_switch");
  if (root["slots"]) {
    s.slots = read<std::size_t>(root["slots"], "slots");
    s.individual.slots = s.slots;
    s.joint.slots = s.slots;
  }
  if (root["reference_config"]) s.reference_config = read_config(root["reference_config"], "reference_config");
  if (root["baseline_config"]) s.baseline_config = read_config(root["baseline_config"], "baseline_config");
  if (root["initial_action"]) {
    const auto& n = root["initial_action"];
    check_keys(n, {"policy", "config"}, "initial_action");
    if (n["policy"]) s.initial_policy = read_policy(n["policy"]);
    if (n["config"]) s.initial_config = read_config(n["config"], "initial config");
  }
  if (root["grid_resolution"]) s.grid_resolution = read<std::size_t>(root["grid_resolution"], "grid_resolution");
  if (root["mc_samples"]) s.mc_samples = read<std::size_t>(root["mc_samples"], "mc_samples");
  if (root["enforce_equal_msg_power"]) {
    s.enforce_equal_msg_power = read<bool>(root["enforce_equal_msg_power"], "enforce_equal_msg_power");
  }
  if (root["equal_message_power_db"]) {
    s.equal_message_power_db = read<double>(root["equal_message_power_db"], "equal_message_power_db");
  }
  if (root["cost_power"]) {
    const auto v = read<std::string>(root["cost_power"], "cost_power");
    if (v == "total") {
      s.cost_power = CostPower::Total;
    } else if (v == "security_only") {
      s.cost_power = CostPower::SecurityOnly;
    } else {
      fail_at(root["cost_power"], "cost_power must be 'total' or 'security_only'");
    }
  }
  if (root["hyperparams"]) {
    const auto& n = root["hyperparams"];
    check_keys(n, {"individual", "joint"}, "hyperparams");
    if (n["individual"]) read_hyperparams(n["individual"], s.individual, "hyperparams.individual");
    if (n["joint"]) read_hyperparams(n["joint"], s.joint, "hyperparams.joint");
  }
  if (root["threads"]) s.threads = read<std::size_t>(root["threads"], "threads");

  try {
    validate(s);
  } catch (const ConfigError& e) {
    fail_at(root, e.what());
  }
  return s;
}

inline ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scenario file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_scenario(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace stps
