#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "stps/decision.hpp"
#include "stps/errors.hpp"
#include "stps/rng.hpp"
#include "stps/utility.hpp"

namespace stps {

struct Hyperparams {
  double discount = 0.75;
  double learning_rate = 0.02;
  double epsilon = 0.95;
  std::size_t episodes = 200;
  std::size_t slots = 50;  // T, slots per frame; one episode is one frame

  static Hyperparams defaults(DecisionMode mode) {
    if (mode == DecisionMode::Individual) return {0.75, 0.02, 0.95, 200, 50};
    return {0.85, 0.035, 0.7, 300, 50};
  }

  friend bool operator==(const Hyperparams&, const Hyperparams&) = default;
};

inline void validate(const Hyperparams& hp) {
  if (!(hp.discount >= 0.0 && hp.discount <= 1.0)) throw ConfigError("discount must lie in [0, 1]");
  if (!(hp.learning_rate > 0.0 && hp.learning_rate <= 1.0)) {
    throw ConfigError("learning rate must lie in (0, 1]");
  }
  if (!(hp.epsilon >= 0.0 && hp.epsilon <= 1.0)) throw ConfigError("epsilon must lie in [0, 1]");
  if (hp.slots < 1) throw ConfigError("a frame needs at least one slot");
}

// Lowest index wins ties.
inline std::size_t argmax(std::span<const double> values) {
  if (values.empty()) throw ContractViolation("argmax of an empty row");
  return static_cast<std::size_t>(std::distance(values.begin(),
                                                std::max_element(values.begin(), values.end())));
}

inline std::size_t epsilon_greedy(std::span<const double> values, double epsilon, SeededStream& rng,
                                  bool* explored = nullptr) {
  if (values.empty()) throw ContractViolation("epsilon-greedy over an empty row");
  const bool explore = epsilon > 0.0 && rng.uniform() < epsilon;
  if (explored != nullptr) *explored = explore;
  return explore ? rng.uniform_index(values.size()) : argmax(values);
}

inline double q_update(double q, double reward, double max_next, double alpha, double gamma) {
  return q + alpha * (reward + gamma * max_next - q);
}

/// Two-stage action values of one learner: the current-operational state's
/// row over policy actions, then one configuration row per policy action.
struct QTable {
  std::size_t policy_actions = 0;
  std::size_t config_actions = 0;
  std::vector<double> policy;                   // [k]
  std::vector<double> config;                   // [k * config_actions + m]
  std::vector<std::uint64_t> policy_visits;
  std::vector<std::uint64_t> config_visits;

  QTable() = default;
  QTable(std::size_t n, std::size_t m)
      : policy_actions(n),
        config_actions(m),
        policy(n, 0.0),
        config(n * m, 0.0),
        policy_visits(n, 0),
        config_visits(n * m, 0) {}

  [[nodiscard]] std::span<const double> config_row(std::size_t k) const {
    return std::span<const double>(config).subspan(k * config_actions, config_actions);
  }
  double& config_value(std::size_t k, std::size_t m) { return config[k * config_actions + m]; }
  [[nodiscard]] double config_value(std::size_t k, std::size_t m) const {
    return config[k * config_actions + m];
  }

  [[nodiscard]] std::uint64_t total_visits() const {
    std::uint64_t s = 0;
    for (auto v : policy_visits) s += v;
    for (auto v : config_visits) s += v;
    return s;
  }
};

struct QTables {
  DecisionMode mode = DecisionMode::Individual;
  std::vector<QTable> tables;  // one per agent (Individual) or a single joint table
};

struct AgentStep {
  AgentAction action;
  double policy_reward = 0.0;
  double config_reward = 0.0;
  bool explored = false;

  friend bool operator==(const AgentStep&, const AgentStep&) = default;
};

struct SlotRecord {
  std::size_t slot = 0;
  std::vector<AgentStep> agents;
  UtilityBreakdown utility;

  [[nodiscard]] ActionProfile profile() const {
    ActionProfile p;
    for (const auto& a : agents) p.push_back(a.action);
    return p;
  }
};

struct EpisodeTrace {
  std::vector<SlotRecord> slots;
};

namespace detail {

struct StageChoice {
  std::size_t policy = 0;
  std::size_t config = 0;
  double policy_reward = 0.0;
  double config_reward = 0.0;
  bool explored = false;
};

// One slot of one learner: pick and (optionally) learn both stages in order.
template <DecisionEnvironment E>
StageChoice decide(const E& env, const StageContext& ctx, QTable& q, double epsilon,
                   SeededStream* rng, const Hyperparams* learn) {
  StageChoice c;
  bool explored_policy = false;
  bool explored_config = false;
  c.policy = rng != nullptr ? epsilon_greedy(q.policy, epsilon, *rng, &explored_policy)
                            : argmax(q.policy);
  c.policy_reward = policy_stage_reward(env, ctx, c.policy);
  if (learn != nullptr) {
    const auto row = q.config_row(c.policy);
    const double max_next = *std::max_element(row.begin(), row.end());
    q.policy[c.policy] =
        q_update(q.policy[c.policy], c.policy_reward, max_next, learn->learning_rate, learn->discount);
    ++q.policy_visits[c.policy];
  }
  const auto row = q.config_row(c.policy);
  c.config = rng != nullptr ? epsilon_greedy(row, epsilon, *rng, &explored_config) : argmax(row);
  c.config_reward = config_stage_reward(env, ctx, c.policy, c.config);
  if (learn != nullptr) {
    double& v = q.config_value(c.policy, c.config);
    v = q_update(v, c.config_reward, 0.0, learn->learning_rate, learn->discount);
    ++q.config_visits[c.policy * q.config_actions + c.config];
  }
  c.explored = explored_policy || explored_config;
  return c;
}

template <DecisionEnvironment E>
QTables empty_tables(const E& env, DecisionMode mode) {
  QTables t;
  t.mode = mode;
  for (const auto& s : build_state_space(env, mode)) t.tables.emplace_back(s.policy_actions, s.config_actions);
  return t;
}

/// Advances one slot for every learner; returns the chosen steps. Individual
/// learners all read the frozen previous profile, so their order is immaterial.
template <DecisionEnvironment E>
std::vector<AgentStep> step_slot(const E& env, DecisionMode mode, const ActionProfile& previous,
                                 std::size_t t, QTables& tables, double epsilon,
                                 std::vector<SeededStream>* rngs, const Hyperparams* learn) {
  const std::size_t agents = env.agent_count();
  std::vector<AgentStep> steps(agents);
  if (mode == DecisionMode::Individual) {
    for (std::size_t i = 0; i < agents; ++i) {
      const StageContext ctx{mode, i, &previous, t};
      const auto c = decide(env, ctx, tables.tables[i], epsilon,
                            rngs != nullptr ? &(*rngs)[i] : nullptr, learn);
      steps[i] = {{c.policy, c.config}, c.policy_reward, c.config_reward, c.explored};
    }
  } else {
    const StageContext ctx{mode, 0, &previous, t};
    const auto c = decide(env, ctx, tables.tables[0], epsilon,
                          rngs != nullptr ? &(*rngs)[0] : nullptr, learn);
    const auto profile = candidate_profile(env, ctx, c.policy, c.config);
    for (std::size_t i = 0; i < agents; ++i) {
      steps[i] = {profile[i], c.policy_reward, c.config_reward, c.explored};
    }
  }
  return steps;
}

}  // namespace detail

/// Tabular Q-learning over `hp.episodes` frames of `hp.slots` slots. Each
/// frame restarts from the environment's initial profile. Deterministic in
/// (environment, mode, hp, seed).
template <DecisionEnvironment E>
QTables train(E& env, DecisionMode mode, const Hyperparams& hp, std::uint64_t seed) {
  validate(hp);
  QTables tables = detail::empty_tables(env, mode);
  const SeededStream root(seed);
  std::vector<SeededStream> rngs;
  for (std::size_t l = 0; l < tables.tables.size(); ++l) rngs.push_back(root.derive("learner", l));

  for (std::size_t ep = 0; ep < hp.episodes; ++ep) {
    ActionProfile previous = env.initial_profile();
    for (std::size_t t = 1; t <= hp.slots; ++t) {
      env.begin_slot({Phase::Training, ep, t});
      const auto steps = detail::step_slot(env, mode, previous, t, tables, hp.epsilon, &rngs, &hp);
      for (std::size_t i = 0; i < steps.size(); ++i) previous[i] = steps[i].action;
    }
  }
  return tables;
}

/// Records one frame in which `choose(t, previous)` fixes every slot's steps.
template <DecisionEnvironment E>
EpisodeTrace rollout(E& env, std::size_t slots,
                     const std::function<std::vector<AgentStep>(std::size_t, const ActionProfile&)>& choose) {
  EpisodeTrace trace;
  ActionProfile previous = env.initial_profile();
  for (std::size_t t = 1; t <= slots; ++t) {
    env.begin_slot({Phase::Evaluation, 0, t});
    SlotRecord rec;
    rec.slot = t;
    rec.agents = choose(t, previous);
    const auto profile = rec.profile();
    rec.utility = env.evaluate(profile, previous, t);
    trace.slots.push_back(std::move(rec));
    previous = profile;
  }
  return trace;
}

/// Greedy (epsilon = 0) rollout of trained tables.
template <DecisionEnvironment E>
EpisodeTrace evaluate(const QTables& trained, E& env, std::size_t slots) {
  QTables tables = trained;
  return rollout(env, slots, [&](std::size_t t, const ActionProfile& previous) {
    return detail::step_slot(env, tables.mode, previous, t, tables, 0.0, nullptr, nullptr);
  });
}

/// Fixed-action rollout; rewards are still reported as the given mode would
/// score the pinned choice.
template <DecisionEnvironment E>
EpisodeTrace pinned_rollout(E& env, DecisionMode mode, const ActionProfile& pinned,
                            std::size_t slots) {
  return rollout(env, slots, [&](std::size_t t, const ActionProfile& previous) {
    std::vector<AgentStep> steps(pinned.size());
    if (mode == DecisionMode::Individual) {
      for (std::size_t i = 0; i < pinned.size(); ++i) {
        const StageContext ctx{mode, i, &previous, t};
        steps[i] = {pinned[i], policy_stage_reward(env, ctx, pinned[i].policy),
                    config_stage_reward(env, ctx, pinned[i].policy, pinned[i].config), false};
      }
    } else {
      const StageContext ctx{mode, 0, &previous, t};
      const auto ja = joint_actions(env);
      std::vector<std::size_t> k;
      std::vector<std::size_t> m;
      for (const auto& a : pinned) {
        k.push_back(a.policy);
        m.push_back(a.config);
      }
      const auto kp = ja.policies.encode(k);
      const auto mc = ja.configs.encode(m);
      const double pr = policy_stage_reward(env, ctx, kp);
      const double cr = config_stage_reward(env, ctx, kp, mc);
      for (std::size_t i = 0; i < pinned.size(); ++i) steps[i] = {pinned[i], pr, cr, false};
    }
    return steps;
  });
}

}  // namespace stps
