#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <vector>

#include "stps/channel.hpp"
#include "stps/decision.hpp"
#include "stps/pls.hpp"
#include "stps/scenario.hpp"
#include "stps/secrecy.hpp"
#include "stps/utility.hpp"

namespace stps {

inline SurfaceGrid scenario_grid(const ScenarioConfig& s) {
  return make_surface_grid(s.surface, s.grid_resolution);
}

// Grid points on a transmitter or receiver carry no eavesdropper mass.
inline EavesdropperPdf scenario_pdf(const ScenarioConfig& s, const SurfaceGrid& grid) {
  std::vector<NodePosition> nodes;
  for (const auto& a : s.agents) {
    nodes.push_back(a.transmitter);
    nodes.push_back(a.receiver);
  }
  return eavesdropper_pdf(grid, s.eavesdropper_mean, s.eavesdropper_variance, nodes);
}

inline SeededStream secrecy_stream(std::uint64_t seed) { return SeededStream(seed).derive("secrecy"); }

/// Secrecy pressure of every agent under every joint profile. Depends on the
/// geometry, action sets, grid, sample budget and seed, but not on weights,
/// so scenarios differing only in weights may share one table.
inline std::shared_ptr<const SecrecyTable> build_secrecy_table(const ScenarioConfig& s) {
  validate(s);
  const auto grid = scenario_grid(s);
  const auto pdf = scenario_pdf(s, grid);
  const auto opts = s.options();
  const std::size_t threads = s.threads == 0 ? detail::default_threads() : s.threads;
  return std::make_shared<const SecrecyTable>(build_secrecy_table(
      s.network(), opts, s.equal_message_power(), grid, pdf, s.mc_samples, secrecy_stream(s.seed),
      threads));
}

/// The PLS world as the learner sees it: per-slot Rayleigh draws, cached
/// secrecy pressures, and the utility of any candidate profile.
class PlsEnvironment {
 public:
  PlsEnvironment(ScenarioConfig scenario, std::shared_ptr<const SecrecyTable> secrecy)
      : scenario_(std::move(scenario)),
        network_(scenario_.network()),
        options_(scenario_.options()),
        equal_power_(scenario_.equal_message_power()),
        agent_weights_(scenario_.network_weights()),
        references_(scenario_.reference_indices()),
        initial_(scenario_.initial_profile()),
        secrecy_(std::move(secrecy)) {
    validate(scenario_);
    if (!secrecy_ || secrecy_->agents != scenario_.agent_count() ||
        secrecy_->indexer.size() != ProfileIndexer(options_).size()) {
      throw ContractViolation("secrecy table does not match the scenario's action sets");
    }
    for (const auto& a : scenario_.agents) antennas_.push_back(a.antennas);
    begin_slot({Phase::Evaluation, 0, 1});
  }

  [[nodiscard]] std::size_t agent_count() const { return scenario_.agent_count(); }
  [[nodiscard]] std::size_t policy_count(std::size_t i) const { return options_.at(i).policies.size(); }
  [[nodiscard]] std::size_t config_count(std::size_t i) const { return options_.at(i).configs.size(); }
  [[nodiscard]] std::size_t reference_config(std::size_t i) const { return references_.at(i); }
  [[nodiscard]] ActionProfile initial_profile() const { return initial_; }

  [[nodiscard]] const ScenarioConfig& scenario() const { return scenario_; }
  [[nodiscard]] const std::vector<AgentOptions>& options() const { return options_; }
  [[nodiscard]] const ChannelRealization& realization() const { return realization_; }
  [[nodiscard]] const SecrecyTable& secrecy() const { return *secrecy_; }

  /// Redraws the fading for a slot. Streams are keyed by (seed, phase,
  /// episode, slot), so an evaluation frame sees the same channels no
  /// matter which actions are taken in it.
  void begin_slot(const SlotKey& key) {
    auto rng = SeededStream(scenario_.seed)
                   .derive(key.phase == Phase::Training ? "train-fading" : "eval-fading", key.episode)
                   .derive("slot", key.slot);
    realization_ = draw_realization(network_, rng);
    gains_ = compute_gains(realization_);
  }

  [[nodiscard]] UtilityBreakdown evaluate(const ActionProfile& profile, const ActionProfile& previous,
                                          std::size_t t) const {
    const std::size_t n = agent_count();
    const auto tx = resolve(profile, options_, equal_power_);
    const auto omega = secrecy_->row(profile);

    std::vector<double> sinr(n);
    std::vector<double> power(n);
    for (std::size_t i = 0; i < n; ++i) {
      sinr[i] = receiver_sinr(i, tx, gains_);
      power[i] = scenario_.cost_power == CostPower::Total ? tx[i].message_power + tx[i].security_power
                                                          : tx[i].security_power;
    }
    const auto s = security_dim(omega);
    const auto q = qos_dim(sinr);
    const auto c = cost_dim(antennas_, power);

    UtilityBreakdown b;
    b.agents.resize(n);
    std::vector<double> u(n);
    for (std::size_t i = 0; i < n; ++i) {
      auto& a = b.agents[i];
      a.s = s[i];
      a.q = q[i];
      a.c = c[i];
      a.delta = transition_penalty(previous.at(i).policy, profile[i].policy, scenario_.delta_switch);
      a.weights = weight_schedule(scenario_.agents[i].weights, scenario_.time_impacts, t);
      a.utility = agent_utility(a.s, a.q, a.c, a.weights, a.delta);
      u[i] = a.utility;
    }
    b.network = network_utility(u, agent_weights_);
    return b;
  }

  // Receiver SINRs of a profile on the current slot's draw.
  [[nodiscard]] std::vector<double> receiver_sinrs(const ActionProfile& profile) const {
    const auto tx = resolve(profile, options_, equal_power_);
    std::vector<double> out(agent_count());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = receiver_sinr(i, tx, gains_);
    return out;
  }

 private:
  ScenarioConfig scenario_;
  Network network_;
  std::vector<AgentOptions> options_;
  std::optional<double> equal_power_;
  std::vector<double> agent_weights_;
  std::vector<std::size_t> references_;
  ActionProfile initial_;
  std::vector<std::size_t> antennas_;
  std::shared_ptr<const SecrecyTable> secrecy_;
  ChannelRealization realization_;
  LinkGains gains_;
};

static_assert(DecisionEnvironment<PlsEnvironment>);

}  // namespace stps
