#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace census {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// FNV-1a, 64 bit. Stable across platforms; used to key deterministic draws.
inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  return splitmix64(a ^ (splitmix64(b) + 0x632be59bd9b4e019ULL));
}

/// Uniform in [0, 1) from the top 53 bits.
inline double unit_from_bits(std::uint64_t x) {
  return static_cast<double>(x >> 11) * (1.0 / 9007199254740992.0);
}

/// Counter-based stream: draw i of a keyed stream is a pure function of
/// (key, i), so sampling order never leaks between consumers.
class KeyedStream {
 public:
  explicit KeyedStream(std::uint64_t key) : key_(key) {}
  std::uint64_t next_u64() { return mix(key_, counter_++); }
  double uniform() { return unit_from_bits(next_u64()); }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  /// Standard normal (Box-Muller, one value per call).
  double normal();
  /// Poisson by inversion for small means, normal approximation above 500.
  std::int64_t poisson(double mean);
  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Lowercase hex SHA-256 of the bytes.
std::string sha256_hex(std::string_view bytes);

}  // namespace census
