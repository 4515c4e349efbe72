#pragma once

// Scalar re-derivation of the SINR expressions. Everything is expanded into
// real and imaginary parts by hand; nothing here calls into the library's
// signal model, only its data containers.

#include <cmath>
#include <cstddef>
#include <vector>

#include "stps/channel.hpp"
#include "stps/pls.hpp"

namespace oracle {

struct Link {
  std::vector<double> re;
  std::vector<double> im;
};

inline Link split(const stps::CVec& v) {
  Link l;
  for (const auto& c : v) {
    l.re.push_back(c.real());
    l.im.push_back(c.imag());
  }
  return l;
}

inline double energy(const Link& a) {
  double s = 0.0;
  for (std::size_t n = 0; n < a.re.size(); ++n) s += a.re[n] * a.re[n] + a.im[n] * a.im[n];
  return s;
}

// |a^H b|^2 written out: a^H b = sum (ar - i ai)(br + i bi)
inline double gain(const Link& a, const Link& b) {
  double re = 0.0;
  double im = 0.0;
  for (std::size_t n = 0; n < a.re.size(); ++n) {
    re += a.re[n] * b.re[n] + a.im[n] * b.im[n];
    im += a.re[n] * b.im[n] - a.im[n] * b.re[n];
  }
  return re * re + im * im;
}

// |(h/|h|)^H g|^2 = |h^H g|^2 / |h|^2
inline double beam_gain(const Link& h, const Link& g) { return gain(h, g) / energy(h); }

inline double abs2(stps::Complex c) { return c.real() * c.real() + c.imag() * c.imag(); }

struct Powers {
  stps::PlsPolicy policy;
  double msg;
  double sec;
};

// Security power of agent j landing at a receiver i (i may equal j).
inline double jam_at_receiver(const stps::ChannelRealization& r, const std::vector<Powers>& p,
                              std::size_t j, std::size_t i) {
  const Link hji = split(r.tx_to_rx(j, i));
  switch (p[j].policy) {
    case stps::PlsPolicy::SCAN:
      return (hji.re[0] * hji.re[0] + hji.im[0] * hji.im[0]) * p[j].sec;
    case stps::PlsPolicy::FDAI:
      return i == j ? 0.0 : abs2(r.rx_to_rx(j, i)) * p[j].sec;
    case stps::PlsPolicy::AN:
      return gain(split(r.an_direction[j]), hji) * p[j].sec;
    case stps::PlsPolicy::B:
      return 0.0;
  }
  return 0.0;
}

inline double jam_at_eavesdropper(const stps::ChannelRealization& r, const std::vector<Powers>& p,
                                  std::size_t j) {
  const auto& e = *r.eavesdropper;
  const Link hje = split(e.from_transmitter[j]);
  switch (p[j].policy) {
    case stps::PlsPolicy::SCAN:
      return (hje.re[0] * hje.re[0] + hje.im[0] * hje.im[0]) * p[j].sec;
    case stps::PlsPolicy::FDAI:
      return abs2(e.from_receiver[j]) * p[j].sec;
    case stps::PlsPolicy::AN:
      return gain(split(r.an_direction[j]), hje) * p[j].sec;
    case stps::PlsPolicy::B:
      return 0.0;
  }
  return 0.0;
}

inline double receiver_sinr(std::size_t i, const stps::ChannelRealization& r,
                            const std::vector<Powers>& p) {
  const Link hii = split(r.own_link(i));
  const double signal = energy(hii) * p[i].msg;  // MRT: |v^H h|^2 = |h|^2
  double denom = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (j == i) continue;
    denom += beam_gain(split(r.own_link(j)), split(r.tx_to_rx(j, i))) * p[j].msg;
    denom += jam_at_receiver(r, p, j, i);
  }
  denom += r.noise[i];
  const double gamma = p[i].policy == stps::PlsPolicy::SCAN ? 2.0 : 1.0;
  return signal / (gamma * denom);
}

inline double eavesdropper_sinr(std::size_t i, const stps::ChannelRealization& r,
                                const std::vector<Powers>& p) {
  const auto& e = *r.eavesdropper;
  const double signal = beam_gain(split(r.own_link(i)), split(e.from_transmitter[i])) * p[i].msg;
  double denom = e.noise;
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (j != i) denom += beam_gain(split(r.own_link(j)), split(e.from_transmitter[j])) * p[j].msg;
    denom += jam_at_eavesdropper(r, p, j);
  }
  return signal / denom;
}

}  // namespace oracle
