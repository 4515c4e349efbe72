#pragma once

#include <concepts>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "stps/errors.hpp"
#include "stps/pls.hpp"
#include "stps/utility.hpp"

namespace stps {

enum class DecisionMode { Individual, Joint };

constexpr std::string_view to_string(DecisionMode m) {
  return m == DecisionMode::Individual ? "individual" : "joint";
}

/// Size of one learner's two-stage MDP: the current-operational state, one
/// state per policy action and one per configuration action.
struct StateSpace {
  DecisionMode mode = DecisionMode::Individual;
  std::size_t policy_actions = 0;
  std::size_t config_actions = 0;
  std::size_t states = 0;

  friend bool operator==(const StateSpace&, const StateSpace&) = default;
};

/// One entry per learner: every agent in Individual mode, a single
/// centralized learner over product actions in Joint mode.
inline std::vector<StateSpace> build_state_space(DecisionMode mode, std::span<const std::size_t> n,
                                                 std::span<const std::size_t> m) {
  if (n.size() != m.size() || n.empty()) throw ConfigError("policy and config counts per agent");
  for (std::size_t i = 0; i < n.size(); ++i) {
    if (n[i] < 1 || m[i] < 1) throw ConfigError("every agent needs at least one policy and config");
  }
  std::vector<StateSpace> out;
  if (mode == DecisionMode::Individual) {
    for (std::size_t i = 0; i < n.size(); ++i) out.push_back({mode, n[i], m[i], n[i] + m[i] + 1});
  } else {
    std::size_t pn = 1;
    std::size_t pm = 1;
    for (std::size_t i = 0; i < n.size(); ++i) {
      pn *= n[i];
      pm *= m[i];
    }
    out.push_back({mode, pn, pm, pn + pm + 1});
  }
  return out;
}

/// Mixed-radix tuple <-> index, first agent most significant.
class TupleIndexer {
 public:
  TupleIndexer() = default;
  explicit TupleIndexer(std::vector<std::size_t> radices) : radices_(std::move(radices)) {
    size_ = 1;
    for (auto r : radices_) size_ *= r;
  }

  [[nodiscard]] std::size_t size() const { return size_; }

  [[nodiscard]] std::size_t encode(std::span<const std::size_t> digits) const {
    if (digits.size() != radices_.size()) throw ContractViolation("tuple length mismatch");
    std::size_t index = 0;
    for (std::size_t i = 0; i < digits.size(); ++i) {
      if (digits[i] >= radices_[i]) throw ContractViolation("tuple digit out of range");
      index = index * radices_[i] + digits[i];
    }
    return index;
  }

  [[nodiscard]] std::vector<std::size_t> decode(std::size_t index) const {
    if (index >= size_) throw ContractViolation("tuple index out of range");
    std::vector<std::size_t> digits(radices_.size());
    for (std::size_t i = radices_.size(); i-- > 0;) {
      digits[i] = index % radices_[i];
      index /= radices_[i];
    }
    return digits;
  }

 private:
  std::vector<std::size_t> radices_;
  std::size_t size_ = 0;
};

inline double transition_penalty(std::size_t k_prev, std::size_t k_next, double delta_switch) {
  if (!(delta_switch > 0.0 && delta_switch <= 1.0)) {
    throw ConfigError("switching penalty must lie in (0, 1]");
  }
  return k_prev == k_next ? 1.0 : delta_switch;
}

enum class Phase { Training, Evaluation };

struct SlotKey {
  Phase phase = Phase::Evaluation;
  std::size_t episode = 0;
  std::size_t slot = 1;  // 1-based
};

/// What the learner needs from the world: action-set sizes, the reference
/// configuration of the policy stage, and utility evaluation of a candidate
/// profile given the previous slot's profile (for transition penalties).
template <class E>
concept DecisionEnvironment = requires(E& env, const E& cenv, const ActionProfile& p,
                                       std::size_t i, const SlotKey& key) {
  { cenv.agent_count() } -> std::convertible_to<std::size_t>;
  { cenv.policy_count(i) } -> std::convertible_to<std::size_t>;
  { cenv.config_count(i) } -> std::convertible_to<std::size_t>;
  { cenv.reference_config(i) } -> std::convertible_to<std::size_t>;
  { cenv.initial_profile() } -> std::convertible_to<ActionProfile>;
  { env.begin_slot(key) };
  { cenv.evaluate(p, p, i) } -> std::same_as<UtilityBreakdown>;
};

/// Indexers for the product action spaces of a Joint learner.
struct JointActions {
  TupleIndexer policies;
  TupleIndexer configs;
};

template <DecisionEnvironment E>
JointActions joint_actions(const E& env) {
  std::vector<std::size_t> n;
  std::vector<std::size_t> m;
  for (std::size_t i = 0; i < env.agent_count(); ++i) {
    n.push_back(env.policy_count(i));
    m.push_back(env.config_count(i));
  }
  return {TupleIndexer(std::move(n)), TupleIndexer(std::move(m))};
}

template <DecisionEnvironment E>
std::vector<StateSpace> build_state_space(const E& env, DecisionMode mode) {
  std::vector<std::size_t> n;
  std::vector<std::size_t> m;
  for (std::size_t i = 0; i < env.agent_count(); ++i) {
    n.push_back(env.policy_count(i));
    m.push_back(env.config_count(i));
  }
  return build_state_space(mode, n, m);
}

/// Who is deciding and against what. In Individual mode the other agents are
/// pinned at their previous-slot actions; in Joint mode `agent` is unused and
/// action indices refer to product tuples.
struct StageContext {
  DecisionMode mode = DecisionMode::Individual;
  std::size_t agent = 0;
  const ActionProfile* previous = nullptr;
  std::size_t slot = 1;
};

template <DecisionEnvironment E>
ActionProfile candidate_profile(const E& env, const StageContext& ctx, std::size_t policy_action,
                                std::size_t config_action) {
  if (ctx.mode == DecisionMode::Individual) {
    ActionProfile p = *ctx.previous;
    p.at(ctx.agent) = {policy_action, config_action};
    return p;
  }
  const auto ja = joint_actions(env);
  const auto k = ja.policies.decode(policy_action);
  const auto m = ja.configs.decode(config_action);
  ActionProfile p(k.size());
  for (std::size_t i = 0; i < k.size(); ++i) p[i] = {k[i], m[i]};
  return p;
}

// Reference configuration action: the per-agent reference, or its tuple.
template <DecisionEnvironment E>
std::size_t reference_action(const E& env, const StageContext& ctx) {
  if (ctx.mode == DecisionMode::Individual) return env.reference_config(ctx.agent);
  std::vector<std::size_t> ref;
  for (std::size_t i = 0; i < env.agent_count(); ++i) ref.push_back(env.reference_config(i));
  return joint_actions(env).configs.encode(ref);
}

template <DecisionEnvironment E>
double stage_utility(const E& env, const StageContext& ctx, std::size_t policy_action,
                     std::size_t config_action) {
  const auto b = env.evaluate(candidate_profile(env, ctx, policy_action, config_action),
                              *ctx.previous, ctx.slot);
  return ctx.mode == DecisionMode::Individual ? b.agents.at(ctx.agent).utility : b.network;
}

template <DecisionEnvironment E>
std::size_t policy_action_count(const E& env, const StageContext& ctx) {
  return ctx.mode == DecisionMode::Individual ? env.policy_count(ctx.agent)
                                              : joint_actions(env).policies.size();
}

template <DecisionEnvironment E>
std::size_t config_action_count(const E& env, const StageContext& ctx) {
  return ctx.mode == DecisionMode::Individual ? env.config_count(ctx.agent)
                                              : joint_actions(env).configs.size();
}

// Utility of policy action k at the reference configuration.
template <DecisionEnvironment E>
double policy_stage_reward(const E& env, const StageContext& ctx, std::size_t k) {
  return stage_utility(env, ctx, k, reference_action(env, ctx));
}

// Utility gain of configuration m over the reference, for policy action k.
template <DecisionEnvironment E>
double config_stage_reward(const E& env, const StageContext& ctx, std::size_t k, std::size_t m) {
  const std::size_t ref = reference_action(env, ctx);
  if (m == ref) return 0.0;
  return stage_utility(env, ctx, k, m) - stage_utility(env, ctx, k, ref);
}

template <DecisionEnvironment E>
std::vector<double> policy_stage_rewards(const E& env, const StageContext& ctx) {
  std::vector<double> r(policy_action_count(env, ctx));
  for (std::size_t k = 0; k < r.size(); ++k) r[k] = policy_stage_reward(env, ctx, k);
  return r;
}

template <DecisionEnvironment E>
std::vector<double> config_stage_rewards(const E& env, const StageContext& ctx,
                                         std::size_t chosen_policy) {
  const std::size_t ref = reference_action(env, ctx);
  const double base = stage_utility(env, ctx, chosen_policy, ref);
  std::vector<double> r(config_action_count(env, ctx));
  for (std::size_t m = 0; m < r.size(); ++m) {
    r[m] = m == ref ? 0.0 : stage_utility(env, ctx, chosen_policy, m) - base;
  }
  return r;
}

}  // namespace stps
