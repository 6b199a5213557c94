#pragma once

// Counter-based random streams.
//
// Every random quantity in the library is drawn from SplitMix64 evaluated at
// an explicit counter: output(key, k) = mix64(key + (k + 1) * 0x9E3779B97F4A7C15).
// Because the state is just (key, counter), streams are reproducible on every
// platform and any element can be regenerated without replaying the stream,
// which is what the Gaussian sketch relies on to avoid storing S.
//
// Uniform doubles take the top 53 bits. Standard normals use the Box-Muller
// transform on a pair of uniforms; the pair at counter (2p, 2p+1) yields the
// cosine variate for slot 2p and the sine variate for slot 2p+1.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>

namespace sketchls::rng {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Derives an independent key from a parent key and a tag.
constexpr std::uint64_t derive_key(std::uint64_t parent, std::uint64_t tag) noexcept {
  return mix64(mix64(parent ^ 0xD1B54A32D192ED03ULL) + (tag + 1) * kGolden);
}

/// Maps 64 random bits to a double in [0, 1).
constexpr double to_unit(std::uint64_t bits) noexcept {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

class CounterStream {
 public:
  explicit constexpr CounterStream(std::uint64_t key, std::uint64_t counter = 0) noexcept
      : key_(key), counter_(counter) {}

  /// Random access; does not advance the stream.
  constexpr std::uint64_t at(std::uint64_t k) const noexcept {
    return mix64(key_ + (k + 1) * kGolden);
  }

  constexpr std::uint64_t next() noexcept { return at(counter_++); }

  /// Uniform in [0, 1).
  constexpr double uniform() noexcept { return to_unit(next()); }

  /// Uniform integer in [0, bound) via the multiply-high reduction.
  constexpr std::uint64_t below(std::uint64_t bound) noexcept {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next()) * bound) >> 64);
  }

  /// +1 or -1 with equal probability.
  constexpr double sign() noexcept { return (next() >> 63) ? -1.0 : 1.0; }

  constexpr std::uint64_t key() const noexcept { return key_; }
  constexpr std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_;
};

/// Box-Muller pair for pair index p under `key`.
inline void normal_pair(std::uint64_t key, std::uint64_t p, double& z0, double& z1) noexcept {
  const CounterStream s(key);
  // 1 - u keeps the log argument in (0, 1].
  const double u1 = 1.0 - to_unit(s.at(2 * p));
  const double u2 = to_unit(s.at(2 * p + 1));
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  z0 = radius * std::cos(angle);
  z1 = radius * std::sin(angle);
}

/// Fills `out` with standard normals for slots [first, first + out.size())
/// of the normal stream under `key`. Slot i always receives the same value
/// no matter how the range is split.
inline void fill_normal(std::uint64_t key, std::uint64_t first, std::span<double> out) noexcept {
  std::uint64_t slot = first;
  std::size_t i = 0;
  const std::size_t count = out.size();
  double z0 = 0.0;
  double z1 = 0.0;
  if (count > 0 && (slot & 1U) != 0) {
    normal_pair(key, slot / 2, z0, z1);
    out[i++] = z1;
    ++slot;
  }
  for (; i + 1 < count; i += 2, slot += 2) {
    normal_pair(key, slot / 2, z0, z1);
    out[i] = z0;
    out[i + 1] = z1;
  }
  if (i < count) {
    normal_pair(key, slot / 2, z0, z1);
    out[i] = z0;
  }
}

}  // namespace sketchls::rng
