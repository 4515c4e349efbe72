#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stps/errors.hpp"
#include "stps/rng.hpp"

namespace stps {

using Complex = std::complex<double>;
using CVec = std::vector<Complex>;

struct NodePosition {
  double x = 0.0;  // meters
  double y = 0.0;

  friend bool operator==(const NodePosition&, const NodePosition&) = default;
};

struct Rect {
  double x_min = -2.0;
  double x_max = 2.0;
  double y_min = -2.0;
  double y_max = 2.0;

  [[nodiscard]] double width() const { return x_max - x_min; }
  [[nodiscard]] double height() const { return y_max - y_min; }
  [[nodiscard]] double area() const { return width() * height(); }
  [[nodiscard]] bool contains(const NodePosition& p) const {
    return p.x >= x_min && p.x <= x_max && p.y >= y_min && p.y <= y_max;
  }
};

struct Geometry {
  std::vector<NodePosition> transmitters;  // a_i
  std::vector<NodePosition> receivers;     // b_i
  Rect surface;
  NodePosition eavesdropper_mean{0.0, 0.0};
  double eavesdropper_variance = 1.0;  // m^2

  [[nodiscard]] std::size_t agent_count() const { return transmitters.size(); }
};

// Node layout plus the radio parameters the fading model needs.
struct Network {
  Geometry geometry;
  std::vector<std::size_t> antennas;  // W_i per transmitter
  std::vector<double> receiver_noise;  // N0 at b_i, watts
  double eavesdropper_noise = 1.0;

  [[nodiscard]] std::size_t agent_count() const { return geometry.agent_count(); }
};

inline double distance(const NodePosition& p, const NodePosition& q) {
  return std::hypot(p.x - q.x, p.y - q.y);
}

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

/// Rayleigh fading vector of `w` coefficients, each CN(0, 1/d).
inline CVec sample_fading(SeededStream& rng, double d, std::size_t w) {
  if (!(d > 0.0)) {
    throw ConfigError("fading requested for a link of nonpositive length " + std::to_string(d));
  }
  CVec h(w);
  const double variance = 1.0 / d;
  for (auto& c : h) c = rng.complex_normal(variance);
  return h;
}

inline double squared_norm(std::span<const Complex> v) {
  double s = 0.0;
  for (const auto& c : v) s += std::norm(c);
  return s;
}

/// Isotropic unit vector in the orthogonal complement of `h`.
///
/// Draws a complex Gaussian vector and removes its component along `h`; the
/// projection of an isotropic vector onto a subspace is isotropic there.
inline CVec null_space_direction(std::span<const Complex> h, SeededStream& rng) {
  const std::size_t w = h.size();
  if (w < 2) throw PolicyInfeasible("null space of a single-antenna channel is empty");
  const double hh = squared_norm(h);
  if (!(hh > 0.0)) throw NumericalError("null space requested for a zero channel vector");
  for (;;) {
    CVec z(w);
    for (auto& c : z) c = rng.complex_normal(1.0);
    Complex proj{0.0, 0.0};  // h^H z
    for (std::size_t n = 0; n < w; ++n) proj += std::conj(h[n]) * z[n];
    for (std::size_t n = 0; n < w; ++n) z[n] -= h[n] * (proj / hh);
    const double zz = std::sqrt(squared_norm(z));
    if (zz > 1e-12) {
      for (auto& c : z) c /= zz;
      return z;
    }
  }
}

struct EavesdropperLinks {
  NodePosition point;
  std::vector<CVec> from_transmitter;  // h_{a_j e}, length W_j
  std::vector<Complex> from_receiver;  // h_{b_j e}
  double noise = 1.0;
};

/// One block-fading draw for every link the signal model touches.
struct ChannelRealization {
  std::size_t agents = 0;
  std::vector<CVec> tx_rx;             // [j * agents + i] = h_{a_j b_i}
  std::vector<Complex> rx_rx;          // [j * agents + i] = h_{b_j b_i}, j != i
  std::vector<CVec> an_direction;      // per transmitter; empty when W_j < 2
  std::vector<double> noise;           // N0 at b_i
  std::optional<EavesdropperLinks> eavesdropper;

  [[nodiscard]] const CVec& tx_to_rx(std::size_t j, std::size_t i) const {
    return tx_rx[j * agents + i];
  }
  [[nodiscard]] Complex rx_to_rx(std::size_t j, std::size_t i) const {
    return rx_rx[j * agents + i];
  }
  [[nodiscard]] const CVec& own_link(std::size_t i) const { return tx_to_rx(i, i); }
};

namespace detail {

inline void draw_agent_links(const Network& net, SeededStream& rng, ChannelRealization& r) {
  const auto& g = net.geometry;
  const std::size_t n = net.agent_count();
  r.agents = n;
  r.tx_rx.resize(n * n);
  r.rx_rx.assign(n * n, Complex{0.0, 0.0});
  r.an_direction.assign(n, CVec{});
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      r.tx_rx[j * n + i] =
          sample_fading(rng, distance(g.transmitters[j], g.receivers[i]), net.antennas[j]);
    }
  }
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      if (i == j) continue;
      r.rx_rx[j * n + i] = sample_fading(rng, distance(g.receivers[j], g.receivers[i]), 1)[0];
    }
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (net.antennas[j] >= 2) r.an_direction[j] = null_space_direction(r.own_link(j), rng);
  }
  r.noise = net.receiver_noise;
}

inline void draw_eavesdropper_links(const Network& net, const NodePosition& point,
                                    SeededStream& rng, ChannelRealization& r) {
  const auto& g = net.geometry;
  const std::size_t n = net.agent_count();
  EavesdropperLinks e;
  e.point = point;
  e.noise = net.eavesdropper_noise;
  e.from_transmitter.resize(n);
  e.from_receiver.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    e.from_transmitter[j] = sample_fading(rng, distance(g.transmitters[j], point), net.antennas[j]);
  }
  for (std::size_t j = 0; j < n; ++j) {
    e.from_receiver[j] = sample_fading(rng, distance(g.receivers[j], point), 1)[0];
  }
  r.eavesdropper = std::move(e);
}

}  // namespace detail

/// Draws the agent-to-agent links and the per-transmitter AN directions.
/// When `eavesdropper_at` is given, the links toward that point are drawn
/// afterwards from the same stream.
inline ChannelRealization draw_realization(const Network& net, SeededStream& rng,
                                           const std::optional<NodePosition>& eavesdropper_at = {}) {
  ChannelRealization r;
  detail::draw_agent_links(net, rng, r);
  if (eavesdropper_at) detail::draw_eavesdropper_links(net, *eavesdropper_at, rng, r);
  return r;
}

}  // namespace stps
