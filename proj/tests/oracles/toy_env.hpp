#pragma once

// Table-driven environment for learner checks: utility of agent i under a
// profile is base[i][k*M+m] plus a small per-slot jitter, with the usual
// switching penalty on top. Network utility is the plain mean.

#include <cstddef>
#include <vector>

#include "stps/decision.hpp"
#include "stps/rng.hpp"
#include "stps/utility.hpp"

namespace oracle {

class ToyEnvironment {
 public:
  ToyEnvironment(std::size_t agents, std::size_t n, std::size_t m, std::vector<std::vector<double>> base,
                 double jitter, std::uint64_t seed)
      : agents_(agents), n_(n), m_(m), base_(std::move(base)), jitter_(jitter), seed_(seed) {
    noise_.assign(agents_, 0.0);
  }

  std::size_t agent_count() const { return agents_; }
  std::size_t policy_count(std::size_t) const { return n_; }
  std::size_t config_count(std::size_t) const { return m_; }
  std::size_t reference_config(std::size_t) const { return 0; }
  stps::ActionProfile initial_profile() const { return stps::ActionProfile(agents_, {n_ - 1, 0}); }

  void begin_slot(const stps::SlotKey& key) {
    auto rng = stps::SeededStream(seed_)
                   .derive(key.phase == stps::Phase::Training ? "train" : "eval", key.episode)
                   .derive("slot", key.slot);
    for (auto& x : noise_) x = jitter_ * (2.0 * rng.uniform() - 1.0);
    ++slots_begun;
  }

  stps::UtilityBreakdown evaluate(const stps::ActionProfile& p, const stps::ActionProfile& prev,
                                  std::size_t) const {
    stps::UtilityBreakdown b;
    b.agents.resize(agents_);
    double sum = 0.0;
    for (std::size_t i = 0; i < agents_; ++i) {
      auto& a = b.agents[i];
      a.delta = stps::transition_penalty(prev[i].policy, p[i].policy, 0.95);
      a.utility = a.delta * (base_[i][p[i].policy * m_ + p[i].config] + noise_[i]);
      sum += a.utility;
    }
    b.network = sum / static_cast<double>(agents_);
    return b;
  }

  std::size_t slots_begun = 0;

 private:
  std::size_t agents_;
  std::size_t n_;
  std::size_t m_;
  std::vector<std::vector<double>> base_;
  double jitter_;
  std::uint64_t seed_;
  std::vector<double> noise_;
};

static_assert(stps::DecisionEnvironment<ToyEnvironment>);

// Utility tables where (k_star, m_star) beats every other entry by at least
// `margin`, with other entries filled from `rng` in [0.1, 0.3].
inline std::vector<double> dominant_table(std::size_t n, std::size_t m, std::size_t k_star,
                                          std::size_t m_star, double margin, stps::SeededStream& rng) {
  std::vector<double> t(n * m);
  for (auto& x : t) x = 0.1 + 0.2 * rng.uniform();
  // the reference column must also favor k_star so the policy stage can find it
  for (std::size_t k = 0; k < n; ++k) {
    if (k != k_star) t[k * m] = 0.1 + 0.05 * rng.uniform();
  }
  t[k_star * m] = 0.3;
  t[k_star * m + m_star] = 0.3 + margin + 0.1;
  if (m_star == 0) t[k_star * m] = 0.3 + margin + 0.1;
  return t;
}

}  // namespace oracle
