#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "stps/errors.hpp"

namespace stps {

struct UtilityWeights {
  double security = 1.0 / 3.0;
  double qos = 1.0 / 3.0;
  double cost = 1.0 / 3.0;

  [[nodiscard]] double sum() const { return security + qos + cost; }

  // Rescales onto the simplex; used for preset rows printed with rounding.
  [[nodiscard]] UtilityWeights normalized() const {
    const double s = sum();
    return {security / s, qos / s, cost / s};
  }

  friend bool operator==(const UtilityWeights&, const UtilityWeights&) = default;
};

inline void validate_weights(const UtilityWeights& w, double tol = 1e-9) {
  for (double x : {w.security, w.qos, w.cost}) {
    if (!(x >= 0.0 && x <= 1.0)) throw ConfigError("utility weight outside [0, 1]");
  }
  if (std::abs(w.sum() - 1.0) > tol) {
    throw ConfigError("utility weights sum to " + std::to_string(w.sum()) + ", expected 1");
  }
}

/// Per-slot multiplicative drift of the weights: security fades, QoS and
/// cost gain importance.
struct TimeImpacts {
  double security = 0.99;
  double qos = 1.005;
  double cost = 1.005;
};

inline void validate_time_impacts(const TimeImpacts& g) {
  if (!(g.security > 0.0 && g.qos > 0.0 && g.cost > 0.0)) {
    throw ConfigError("time impacts must be positive");
  }
  if (!(g.security <= 1.0 && g.qos >= 1.0 && g.cost >= 1.0)) {
    throw ConfigError("time impacts must satisfy security <= 1 <= qos and cost >= 1");
  }
}

/// Weights at slot t (t >= 1): base * impacts^(t-1), renormalized.
inline UtilityWeights weight_schedule(const UtilityWeights& base, const TimeImpacts& impacts,
                                      std::size_t t) {
  if (t < 1) throw ContractViolation("slot index starts at 1");
  if (t == 1) return base;
  const double e = static_cast<double>(t - 1);
  UtilityWeights w{base.security * std::pow(impacts.security, e),
                   base.qos * std::pow(impacts.qos, e), base.cost * std::pow(impacts.cost, e)};
  return w.normalized();
}

namespace detail {

inline std::vector<double> normalize_by_max(std::span<const double> values) {
  std::vector<double> out(values.begin(), values.end());
  if (out.empty()) return out;
  for (double v : out) {
    if (!(v >= 0.0)) throw ContractViolation("dimension inputs must be nonnegative");
  }
  const double m = *std::max_element(out.begin(), out.end());
  if (!(m > 0.0)) {
    std::fill(out.begin(), out.end(), 0.0);
    return out;
  }
  for (auto& v : out) v /= m;
  return out;
}

}  // namespace detail

// s_i = omega_i / max_j omega_j; all-zero input maps to all zeros.
inline std::vector<double> security_dim(std::span<const double> omegas) {
  return detail::normalize_by_max(omegas);
}

inline std::vector<double> qos_dim(std::span<const double> sinrs) {
  return detail::normalize_by_max(sinrs);
}

// c_i = (W_i + R_i) / max_j (W_j + R_j)
inline std::vector<double> cost_dim(std::span<const std::size_t> antennas,
                                    std::span<const double> powers) {
  if (antennas.size() != powers.size()) throw ContractViolation("cost inputs differ in length");
  std::vector<double> raw(antennas.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (antennas[i] < 1 || !(powers[i] > 0.0)) {
      throw ContractViolation("cost needs at least one antenna and positive power");
    }
    raw[i] = static_cast<double>(antennas[i]) + powers[i];
  }
  return detail::normalize_by_max(raw);
}

inline double agent_utility(double s, double q, double c, const UtilityWeights& w, double delta) {
  return delta * (w.security * s + w.qos * q + w.cost * (1.0 - c));
}

inline double network_utility(std::span<const double> utilities, std::span<const double> agent_weights) {
  if (utilities.size() != agent_weights.size()) {
    throw ContractViolation("network utility inputs differ in length");
  }
  double u = 0.0;
  for (std::size_t i = 0; i < utilities.size(); ++i) u += agent_weights[i] * utilities[i];
  return u;
}

struct AgentUtility {
  double s = 0.0;
  double q = 0.0;
  double c = 0.0;
  double delta = 1.0;
  UtilityWeights weights;
  double utility = 0.0;
};

struct UtilityBreakdown {
  std::vector<AgentUtility> agents;
  double network = 0.0;
};

}  // namespace stps
