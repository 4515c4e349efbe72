#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stps/channel.hpp"
#include "stps/errors.hpp"

namespace stps {

enum class PlsPolicy : std::size_t { SCAN = 0, FDAI = 1, AN = 2, B = 3 };

inline constexpr std::array<PlsPolicy, 4> kAllPolicies{PlsPolicy::SCAN, PlsPolicy::FDAI,
                                                       PlsPolicy::AN, PlsPolicy::B};

constexpr std::string_view to_string(PlsPolicy p) {
  switch (p) {
    case PlsPolicy::SCAN: return "SCAN";
    case PlsPolicy::FDAI: return "FDAI";
    case PlsPolicy::AN: return "AN";
    case PlsPolicy::B: return "B";
  }
  return "?";
}

// Accepts "SCAN", "SC-AN", "sc_an", "fdai", "FD-AI", "an", "b" (case-insensitive).
inline std::optional<PlsPolicy> parse_policy(std::string_view text) {
  std::string key;
  for (char c : text) {
    if (c == '-' || c == '_' || c == ' ') continue;
    key.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  }
  for (auto p : kAllPolicies) {
    if (key == to_string(p)) return p;
  }
  return std::nullopt;
}

// Residual-interference multiplier in the receiver SINR denominator.
constexpr double cancellation_coefficient(PlsPolicy p) { return p == PlsPolicy::SCAN ? 2.0 : 1.0; }

struct TransmissionConfig {
  double message_power_db = 5.0;
  double security_power_db = 5.0;

  [[nodiscard]] double message_power() const { return db_to_linear(message_power_db); }
  [[nodiscard]] double security_power() const { return db_to_linear(security_power_db); }

  // "5/10" style label; also the CSV representation.
  [[nodiscard]] std::string label() const {
    auto fmt = [](double v) {
      std::string s = std::to_string(v);
      s.erase(s.find_last_not_of('0') + 1);
      if (!s.empty() && s.back() == '.') s.pop_back();
      return s;
    };
    return fmt(message_power_db) + "/" + fmt(security_power_db);
  }

  friend bool operator==(const TransmissionConfig&, const TransmissionConfig&) = default;
};

struct AgentAction {
  std::size_t policy = 0;  // index into the agent's policy set
  std::size_t config = 0;  // index into the agent's configuration set

  friend bool operator==(const AgentAction&, const AgentAction&) = default;
};

using ActionProfile = std::vector<AgentAction>;

// What an agent may choose from.
struct AgentOptions {
  std::vector<PlsPolicy> policies;
  std::vector<TransmissionConfig> configs;
};

// A resolved, physical per-agent transmission (linear powers).
struct Transmission {
  PlsPolicy policy = PlsPolicy::B;
  double message_power = 1.0;
  double security_power = 1.0;
};

inline void check_profile(const ActionProfile& profile, std::span<const AgentOptions> options) {
  if (profile.size() != options.size()) {
    throw ContractViolation("action profile has " + std::to_string(profile.size()) +
                            " agents, expected " + std::to_string(options.size()));
  }
  for (std::size_t i = 0; i < profile.size(); ++i) {
    if (profile[i].policy >= options[i].policies.size() ||
        profile[i].config >= options[i].configs.size()) {
      throw ContractViolation("action index out of range for agent " + std::to_string(i + 1));
    }
  }
}

/// Maps index choices onto powers. `equal_message_power` pins every agent's
/// message power to a common linear value instead of the config's own.
inline std::vector<Transmission> resolve(const ActionProfile& profile,
                                         std::span<const AgentOptions> options,
                                         std::optional<double> equal_message_power = {}) {
  check_profile(profile, options);
  std::vector<Transmission> out(profile.size());
  for (std::size_t i = 0; i < profile.size(); ++i) {
    const auto& cfg = options[i].configs[profile[i].config];
    out[i].policy = options[i].policies[profile[i].policy];
    out[i].message_power = equal_message_power.value_or(cfg.message_power());
    out[i].security_power = cfg.security_power();
  }
  return out;
}

// a^H b
inline Complex inner(std::span<const Complex> a, std::span<const Complex> b) {
  if (a.size() != b.size()) {
    throw ContractViolation("inner product of vectors of length " + std::to_string(a.size()) +
                            " and " + std::to_string(b.size()));
  }
  Complex s{0.0, 0.0};
  for (std::size_t n = 0; n < a.size(); ++n) s += std::conj(a[n]) * b[n];
  return s;
}

/// Unit-norm maximum-ratio beamformer h / |h|.
inline CVec beamform(std::span<const Complex> h) {
  const double nrm = std::sqrt(squared_norm(h));
  if (!(nrm > 0.0)) throw NumericalError("beamformer requested for a zero channel vector");
  CVec v(h.begin(), h.end());
  for (auto& c : v) c /= nrm;
  return v;
}

inline double message_interference(std::span<const Complex> v_j, std::span<const Complex> h_to_target,
                                   double message_power) {
  return std::norm(inner(v_j, h_to_target)) * message_power;
}

// Where a security signal lands.
struct Target {
  enum class Kind { Receiver, Eavesdropper };
  Kind kind = Kind::Receiver;
  std::size_t receiver = 0;  // b_i when kind == Receiver

  static Target receiver_of(std::size_t i) { return {Kind::Receiver, i}; }
  static Target eavesdropper() { return {Kind::Eavesdropper, 0}; }
};

namespace detail {

inline const EavesdropperLinks& require_eavesdropper(const ChannelRealization& r) {
  if (!r.eavesdropper) throw ContractViolation("realization carries no eavesdropper links");
  return *r.eavesdropper;
}

inline const CVec& tx_toward(const ChannelRealization& r, std::size_t j, const Target& t) {
  return t.kind == Target::Kind::Receiver ? r.tx_to_rx(j, t.receiver)
                                          : require_eavesdropper(r).from_transmitter[j];
}

}  // namespace detail

/// Power of agent j's security signal arriving at `target`.
///
/// SCAN radiates from the first antenna only, FDAI from the receiver b_j
/// (which cancels its own jamming perfectly), AN along a null-space direction
/// of h_{a_j b_j}, and B radiates nothing.
inline double security_interference(PlsPolicy policy_j, const ChannelRealization& r, std::size_t j,
                                    const Target& target, double security_power,
                                    std::span<const Complex> an_direction_j) {
  switch (policy_j) {
    case PlsPolicy::B: return 0.0;
    case PlsPolicy::SCAN: {
      const CVec& h = detail::tx_toward(r, j, target);
      return std::norm(h.front()) * security_power;
    }
    case PlsPolicy::FDAI: {
      if (target.kind == Target::Kind::Receiver) {
        if (target.receiver == j) return 0.0;
        return std::norm(r.rx_to_rx(j, target.receiver)) * security_power;
      }
      return std::norm(detail::require_eavesdropper(r).from_receiver[j]) * security_power;
    }
    case PlsPolicy::AN: {
      if (an_direction_j.size() < 1 || r.own_link(j).size() < 2) {
        throw PolicyInfeasible("AN needs at least two transmit antennas (agent " +
                               std::to_string(j + 1) + ")");
      }
      return std::norm(inner(an_direction_j, detail::tx_toward(r, j, target))) * security_power;
    }
  }
  return 0.0;
}

inline double security_interference(PlsPolicy policy_j, const ChannelRealization& r, std::size_t j,
                                    const Target& target, double security_power) {
  return security_interference(policy_j, r, j, target, security_power, r.an_direction[j]);
}

inline double receiver_sinr(std::size_t i, std::span<const Transmission> tx,
                            const ChannelRealization& r) {
  const CVec& own = r.own_link(i);
  const CVec v = beamform(own);
  const double signal = std::norm(inner(v, own)) * tx[i].message_power;
  double interference = 0.0;
  for (std::size_t j = 0; j < tx.size(); ++j) {
    if (j == i) continue;
    const CVec vj = beamform(r.own_link(j));
    interference += message_interference(vj, r.tx_to_rx(j, i), tx[j].message_power);
    interference += security_interference(tx[j].policy, r, j, Target::receiver_of(i),
                                          tx[j].security_power);
  }
  return signal / (cancellation_coefficient(tx[i].policy) * (interference + r.noise[i]));
}

/// SINR of agent i's message at the eavesdropper point carried by `r`. Every
/// agent's security signal, including agent i's own, degrades the eavesdropper.
inline double eavesdropper_sinr(std::size_t i, std::span<const Transmission> tx,
                                const ChannelRealization& r) {
  const auto& eve = detail::require_eavesdropper(r);
  const CVec v = beamform(r.own_link(i));
  const double signal = std::norm(inner(v, eve.from_transmitter[i])) * tx[i].message_power;
  double interference = 0.0;
  for (std::size_t j = 0; j < tx.size(); ++j) {
    if (j != i) {
      interference += message_interference(beamform(r.own_link(j)), eve.from_transmitter[j],
                                           tx[j].message_power);
    }
    interference += security_interference(tx[j].policy, r, j, Target::eavesdropper(),
                                          tx[j].security_power);
  }
  return signal / (interference + eve.noise);
}

inline double eavesdropper_sinr(std::size_t i, const NodePosition& point,
                                std::span<const Transmission> tx, const ChannelRealization& r) {
  if (!(detail::require_eavesdropper(r).point == point)) {
    throw ContractViolation("realization was drawn for a different eavesdropper point");
  }
  return eavesdropper_sinr(i, tx, r);
}

/// Power-independent channel gains of one realization. Every SINR is a
/// linear combination of these with the profile's powers, which lets one
/// draw be scored against many action profiles cheaply.
struct LinkGains {
  std::size_t agents = 0;
  std::vector<double> own;                        // |v_i^H h_{a_i b_i}|^2
  std::vector<double> message;                    // [j*n+i] |v_j^H h_{a_j b_i}|^2
  std::array<std::vector<double>, 4> security;    // [policy][j*n+i] unit-power leakage to b_i
  std::vector<double> noise;
  std::vector<bool> an_feasible;

  bool has_eavesdropper = false;
  std::vector<double> eve_message;                // |v_j^H h_{a_j e}|^2
  std::array<std::vector<double>, 4> eve_security;  // [policy][j]
  double eve_noise = 1.0;
};

inline LinkGains compute_gains(const ChannelRealization& r) {
  const std::size_t n = r.agents;
  LinkGains g;
  g.agents = n;
  g.own.resize(n);
  g.message.assign(n * n, 0.0);
  for (auto& s : g.security) s.assign(n * n, 0.0);
  g.noise = r.noise;
  g.an_feasible.resize(n);

  std::vector<CVec> v(n);
  for (std::size_t j = 0; j < n; ++j) {
    v[j] = beamform(r.own_link(j));
    g.own[j] = std::norm(inner(v[j], r.own_link(j)));
    g.an_feasible[j] = !r.an_direction[j].empty();
  }
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      if (i == j) continue;
      const auto target = Target::receiver_of(i);
      g.message[j * n + i] = message_interference(v[j], r.tx_to_rx(j, i), 1.0);
      for (auto p : kAllPolicies) {
        if (p == PlsPolicy::AN && !g.an_feasible[j]) continue;
        g.security[static_cast<std::size_t>(p)][j * n + i] =
            security_interference(p, r, j, target, 1.0);
      }
    }
  }
  if (r.eavesdropper) {
    const auto& eve = *r.eavesdropper;
    g.has_eavesdropper = true;
    g.eve_noise = eve.noise;
    g.eve_message.resize(n);
    for (auto& s : g.eve_security) s.assign(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      g.eve_message[j] = message_interference(v[j], eve.from_transmitter[j], 1.0);
      for (auto p : kAllPolicies) {
        if (p == PlsPolicy::AN && !g.an_feasible[j]) continue;
        g.eve_security[static_cast<std::size_t>(p)][j] =
            security_interference(p, r, j, Target::eavesdropper(), 1.0);
      }
    }
  }
  return g;
}

namespace detail {

inline void require_feasible(const LinkGains& g, PlsPolicy p, std::size_t j) {
  if (p == PlsPolicy::AN && !g.an_feasible[j]) {
    throw PolicyInfeasible("AN needs at least two transmit antennas (agent " +
                           std::to_string(j + 1) + ")");
  }
}

}  // namespace detail

inline double receiver_sinr(std::size_t i, std::span<const Transmission> tx, const LinkGains& g) {
  const std::size_t n = g.agents;
  double interference = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    if (j == i) continue;
    detail::require_feasible(g, tx[j].policy, j);
    interference += g.message[j * n + i] * tx[j].message_power;
    interference +=
        g.security[static_cast<std::size_t>(tx[j].policy)][j * n + i] * tx[j].security_power;
  }
  return g.own[i] * tx[i].message_power /
         (cancellation_coefficient(tx[i].policy) * (interference + g.noise[i]));
}

inline double eavesdropper_sinr(std::size_t i, std::span<const Transmission> tx, const LinkGains& g) {
  if (!g.has_eavesdropper) throw ContractViolation("gains carry no eavesdropper links");
  double interference = 0.0;
  for (std::size_t j = 0; j < g.agents; ++j) {
    detail::require_feasible(g, tx[j].policy, j);
    if (j != i) interference += g.eve_message[j] * tx[j].message_power;
    interference += g.eve_security[static_cast<std::size_t>(tx[j].policy)][j] * tx[j].security_power;
  }
  return g.eve_message[i] * tx[i].message_power / (interference + g.eve_noise);
}

}  // namespace stps
