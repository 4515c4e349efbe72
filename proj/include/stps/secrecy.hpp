#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <thread>
#include <vector>

#include "stps/channel.hpp"
#include "stps/errors.hpp"
#include "stps/pls.hpp"
#include "stps/rng.hpp"

namespace stps {

/// Uniform midpoint grid over a rectangle; points are cell centers.
struct SurfaceGrid {
  Rect bounds;
  std::size_t resolution = 0;  // points per axis
  double cell_area = 0.0;
  std::vector<NodePosition> points;  // row-major, y outer, x inner
};

inline SurfaceGrid make_surface_grid(const Rect& bounds, std::size_t resolution) {
  if (resolution < 2) throw ConfigError("grid resolution must be at least 2 points per axis");
  if (!(bounds.area() > 0.0)) throw ConfigError("surface must have positive area");
  SurfaceGrid g;
  g.bounds = bounds;
  g.resolution = resolution;
  const double dx = bounds.width() / static_cast<double>(resolution);
  const double dy = bounds.height() / static_cast<double>(resolution);
  g.cell_area = dx * dy;
  g.points.reserve(resolution * resolution);
  for (std::size_t r = 0; r < resolution; ++r) {
    for (std::size_t c = 0; c < resolution; ++c) {
      g.points.push_back({bounds.x_min + (static_cast<double>(c) + 0.5) * dx,
                          bounds.y_min + (static_cast<double>(r) + 0.5) * dy});
    }
  }
  return g;
}

/// Probability mass per grid point; sums to 1 over the grid.
struct EavesdropperPdf {
  std::vector<double> weights;
};

/// Gaussian eavesdropper-location pdf evaluated at the grid points and
/// renormalized over the grid. Points within `exclusion_radius` of any node in
/// `excluded` get zero mass (the fading variance 1/D is undefined there).
inline EavesdropperPdf eavesdropper_pdf(const SurfaceGrid& grid, const NodePosition& mean,
                                        double variance,
                                        std::span<const NodePosition> excluded = {},
                                        double exclusion_radius = 1e-9) {
  if (!(variance > 0.0)) throw ConfigError("eavesdropper pdf variance must be positive");
  EavesdropperPdf pdf;
  pdf.weights.resize(grid.points.size());
  double total = 0.0;
  for (std::size_t p = 0; p < grid.points.size(); ++p) {
    const auto& pt = grid.points[p];
    const bool blocked = std::any_of(excluded.begin(), excluded.end(), [&](const NodePosition& n) {
      return distance(n, pt) <= exclusion_radius;
    });
    const double dx = pt.x - mean.x;
    const double dy = pt.y - mean.y;
    const double w = blocked ? 0.0 : std::exp(-(dx * dx + dy * dy) / (2.0 * variance));
    pdf.weights[p] = w;
    total += w;
  }
  if (!(total > 0.0)) throw ConfigError("eavesdropper pdf has no mass on the grid");
  for (auto& w : pdf.weights) w /= total;
  return pdf;
}

// Bits per channel use.
inline double secrecy_capacity(double sinr_b, double sinr_e) {
  return std::max(0.0, 0.5 * std::log2(1.0 + sinr_b) - 0.5 * std::log2(1.0 + sinr_e));
}

struct SecrecyEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t samples = 0;
};

namespace detail {

struct RunningMoments {
  std::size_t n = 0;
  double sum = 0.0;
  double sum_sq = 0.0;

  void add(double x) {
    ++n;
    sum += x;
    sum_sq += x * x;
  }
  [[nodiscard]] SecrecyEstimate estimate() const {
    SecrecyEstimate e;
    e.samples = n;
    if (n == 0) return e;
    const double nn = static_cast<double>(n);
    e.mean = sum / nn;
    if (n > 1) {
      const double var = std::max(0.0, (sum_sq - nn * e.mean * e.mean) / (nn - 1.0));
      e.std_error = std::sqrt(var / nn);
    }
    return e;
  }
};

// Runs fn(begin, end) over [0, n) split into contiguous chunks.
inline void parallel_for(std::size_t n, std::size_t threads,
                         const std::function<void(std::size_t, std::size_t)>& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    fn(0, n);
    return;
  }
  std::vector<std::jthread> pool;
  const std::size_t chunk = (n + threads - 1) / threads;
  for (std::size_t t = 0; t < threads; ++t) {
    const std::size_t b = t * chunk;
    const std::size_t e = std::min(n, b + chunk);
    if (b >= e) break;
    pool.emplace_back([&fn, b, e] { fn(b, e); });
  }
}

inline std::size_t default_threads() {
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace detail

/// Ergodic secrecy capacity of agent i with the eavesdropper at `point`,
/// averaged over `n_mc` independent realizations drawn from `rng`.
inline SecrecyEstimate ergodic_secrecy_capacity(std::size_t i, const NodePosition& point,
                                                const Network& net, std::span<const Transmission> tx,
                                                std::size_t n_mc, SeededStream& rng) {
  if (n_mc < 1) throw ConfigError("Monte-Carlo sample count must be at least 1");
  detail::RunningMoments m;
  for (std::size_t n = 0; n < n_mc; ++n) {
    const auto r = draw_realization(net, rng, point);
    m.add(secrecy_capacity(receiver_sinr(i, tx, r), eavesdropper_sinr(i, tx, r)));
  }
  return m.estimate();
}

/// Per-agent ergodic secrecy capacity over the grid for one action profile.
struct SecrecyMap {
  std::vector<NodePosition> points;
  std::vector<std::vector<double>> capacity;   // [agent][point]
  std::vector<std::vector<double>> std_error;  // [agent][point]
  std::size_t samples = 0;
};

/// Computes the map with common random numbers: agent i and agent j at one
/// point see the same draws. Point p uses stream root.derive("point", p), so
/// the result does not depend on evaluation order or thread count. Points with
/// zero pdf mass (if `pdf` is given) are skipped and left at 0.
inline SecrecyMap secrecy_map(const Network& net, std::span<const Transmission> tx,
                              const SurfaceGrid& grid, std::size_t n_mc, const SeededStream& root,
                              const EavesdropperPdf* pdf = nullptr,
                              std::size_t threads = detail::default_threads()) {
  if (n_mc < 1) throw ConfigError("Monte-Carlo sample count must be at least 1");
  const std::size_t agents = net.agent_count();
  SecrecyMap map;
  map.points = grid.points;
  map.samples = n_mc;
  map.capacity.assign(agents, std::vector<double>(grid.points.size(), 0.0));
  map.std_error.assign(agents, std::vector<double>(grid.points.size(), 0.0));
  detail::parallel_for(grid.points.size(), threads, [&](std::size_t begin, std::size_t end) {
    std::vector<detail::RunningMoments> moments(agents);
    for (std::size_t p = begin; p < end; ++p) {
      if (pdf != nullptr && pdf->weights[p] == 0.0) continue;
      auto rng = root.derive("point", p);
      for (auto& m : moments) m = {};
      for (std::size_t n = 0; n < n_mc; ++n) {
        const auto r = draw_realization(net, rng, grid.points[p]);
        for (std::size_t i = 0; i < agents; ++i) {
          moments[i].add(secrecy_capacity(receiver_sinr(i, tx, r), eavesdropper_sinr(i, tx, r)));
        }
      }
      for (std::size_t i = 0; i < agents; ++i) {
        const auto e = moments[i].estimate();
        map.capacity[i][p] = e.mean;
        map.std_error[i][p] = e.std_error;
      }
    }
  });
  return map;
}

// pdf-weighted sum of a secrecy map row; weights already absorb dx dy.
inline double secrecy_pressure(std::span<const double> map_row, const EavesdropperPdf& pdf) {
  if (map_row.size() != pdf.weights.size()) {
    throw ContractViolation("secrecy map and pdf are defined on different grids");
  }
  double omega = 0.0;
  for (std::size_t p = 0; p < map_row.size(); ++p) omega += pdf.weights[p] * map_row[p];
  return omega;
}

/// Secrecy pressure of agent i for one profile.
inline double secrecy_pressure(std::size_t i, const Network& net, std::span<const Transmission> tx,
                               const SurfaceGrid& grid, const EavesdropperPdf& pdf, std::size_t n_mc,
                               const SeededStream& root,
                               std::size_t threads = detail::default_threads()) {
  const auto map = secrecy_map(net, tx, grid, n_mc, root, &pdf, threads);
  return secrecy_pressure(map.capacity.at(i), pdf);
}

/// Mixed-radix enumeration of joint action profiles: agent 0 is the most
/// significant digit, and within an agent the policy is more significant than
/// the configuration.
class ProfileIndexer {
 public:
  ProfileIndexer() = default;
  explicit ProfileIndexer(std::span<const AgentOptions> options) {
    for (const auto& o : options) {
      policies_.push_back(o.policies.size());
      configs_.push_back(o.configs.size());
    }
    size_ = 1;
    for (std::size_t i = 0; i < policies_.size(); ++i) size_ *= policies_[i] * configs_[i];
  }

  [[nodiscard]] std::size_t size() const { return size_; }
  [[nodiscard]] std::size_t agents() const { return policies_.size(); }

  [[nodiscard]] std::size_t encode(const ActionProfile& profile) const {
    if (profile.size() != agents()) throw ContractViolation("profile size mismatch");
    std::size_t index = 0;
    for (std::size_t i = 0; i < agents(); ++i) {
      if (profile[i].policy >= policies_[i] || profile[i].config >= configs_[i]) {
        throw ContractViolation("action index out of range for agent " + std::to_string(i + 1));
      }
      index = index * (policies_[i] * configs_[i]) + profile[i].policy * configs_[i] +
              profile[i].config;
    }
    return index;
  }

  [[nodiscard]] ActionProfile decode(std::size_t index) const {
    ActionProfile p(agents());
    for (std::size_t i = agents(); i-- > 0;) {
      const std::size_t radix = policies_[i] * configs_[i];
      const std::size_t digit = index % radix;
      index /= radix;
      p[i] = {digit / configs_[i], digit % configs_[i]};
    }
    return p;
  }

 private:
  std::vector<std::size_t> policies_;
  std::vector<std::size_t> configs_;
  std::size_t size_ = 0;
};

/// Secrecy pressure of every agent under every joint action profile.
struct SecrecyTable {
  ProfileIndexer indexer;
  std::size_t agents = 0;
  std::vector<double> omega;  // [profile * agents + i]

  [[nodiscard]] double at(const ActionProfile& profile, std::size_t i) const {
    return omega[indexer.encode(profile) * agents + i];
  }
  [[nodiscard]] std::span<const double> row(const ActionProfile& profile) const {
    return std::span<const double>(omega).subspan(indexer.encode(profile) * agents, agents);
  }
};

/// Evaluates every profile on the same per-point draws (common random
/// numbers), so each entry equals secrecy_pressure() for that profile with
/// the same root stream.
inline SecrecyTable build_secrecy_table(const Network& net, std::span<const AgentOptions> options,
                                        std::optional<double> equal_message_power,
                                        const SurfaceGrid& grid, const EavesdropperPdf& pdf,
                                        std::size_t n_mc, const SeededStream& root,
                                        std::size_t threads = detail::default_threads()) {
  if (n_mc < 1) throw ConfigError("Monte-Carlo sample count must be at least 1");
  SecrecyTable table;
  table.indexer = ProfileIndexer(options);
  table.agents = net.agent_count();
  const std::size_t profiles = table.indexer.size();
  const std::size_t agents = table.agents;

  std::vector<std::vector<Transmission>> tx(profiles);
  for (std::size_t k = 0; k < profiles; ++k) {
    tx[k] = resolve(table.indexer.decode(k), options, equal_message_power);
  }

  const std::size_t points = grid.points.size();
  std::vector<double> point_mean(points * profiles * agents, 0.0);
  detail::parallel_for(points, threads, [&](std::size_t begin, std::size_t end) {
    std::vector<double> acc(profiles * agents);
    for (std::size_t p = begin; p < end; ++p) {
      if (pdf.weights[p] == 0.0) continue;
      auto rng = root.derive("point", p);
      std::fill(acc.begin(), acc.end(), 0.0);
      for (std::size_t n = 0; n < n_mc; ++n) {
        const auto r = draw_realization(net, rng, grid.points[p]);
        const auto g = compute_gains(r);
        for (std::size_t k = 0; k < profiles; ++k) {
          for (std::size_t i = 0; i < agents; ++i) {
            acc[k * agents + i] +=
                secrecy_capacity(receiver_sinr(i, tx[k], g), eavesdropper_sinr(i, tx[k], g));
          }
        }
      }
      double* out = point_mean.data() + p * profiles * agents;
      for (std::size_t k = 0; k < profiles * agents; ++k) out[k] = acc[k] / static_cast<double>(n_mc);
    }
  });

  table.omega.assign(profiles * agents, 0.0);
  for (std::size_t p = 0; p < points; ++p) {
    const double w = pdf.weights[p];
    if (w == 0.0) continue;
    const double* in = point_mean.data() + p * profiles * agents;
    for (std::size_t k = 0; k < profiles * agents; ++k) table.omega[k] += w * in[k];
  }
  return table;
}

}  // namespace stps
