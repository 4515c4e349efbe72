#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <string_view>

namespace stps {

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t derive_key(std::uint64_t parent, std::string_view name,
                                   std::uint64_t index) noexcept {
  return splitmix64(splitmix64(parent ^ fnv1a(name)) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

}  // namespace detail

/// A named, reproducible random stream.
///
/// Every stream is identified by a 64-bit key derived from the master seed and
/// a path of (name, index) pairs, so consumers never share state and adding a
/// new consumer does not shift anybody else's draws. Distributions are
/// implemented here rather than via <random> distributions because the latter
/// are not specified bit-exactly across standard libraries.
class SeededStream {
 public:
  explicit SeededStream(std::uint64_t master_seed)
      : key_(detail::splitmix64(master_seed)), engine_(key_) {}

  SeededStream(std::uint64_t master_seed, std::string_view name, std::uint64_t index = 0)
      : SeededStream(SeededStream(master_seed).derive(name, index)) {}

  // Child stream; does not consume from this one.
  [[nodiscard]] SeededStream derive(std::string_view name, std::uint64_t index = 0) const {
    return SeededStream(Key{detail::derive_key(key_, name, index)});
  }

  [[nodiscard]] std::uint64_t key() const noexcept { return key_; }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Unbiased integer in [0, n).
  std::size_t uniform_index(std::size_t n) {
    const std::uint64_t range = n;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % range;
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return static_cast<std::size_t>(x % range);
  }

  // Standard normal via Box-Muller; the second variate is cached.
  double normal() {
    if (spare_) {
      const double v = *spare_;
      spare_.reset();
      return v;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    return r * std::cos(theta);
  }

  // Circularly-symmetric complex Gaussian with E|z|^2 = variance.
  std::complex<double> complex_normal(double variance) {
    const double sigma = std::sqrt(variance / 2.0);
    const double re = normal();
    const double im = normal();
    return {sigma * re, sigma * im};
  }

 private:
  struct Key {
    std::uint64_t value;
  };
  explicit SeededStream(Key k) : key_(k.value), engine_(key_) {}

  std::uint64_t key_;
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

}  // namespace stps
