#include "census/hashing.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace census {

std::uint64_t KeyedStream::below(std::uint64_t n) {
  if (n == 0) return 0;
  // rejection sampling keeps the draw unbiased
  std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  for (;;) {
    std::uint64_t x = next_u64();
    if (x < limit) return x % n;
  }
}

double KeyedStream::normal() {
  double u1 = uniform();
  double u2 = uniform();
  if (u1 < 1e-300) u1 = 1e-300;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::int64_t KeyedStream::poisson(double mean) {
  if (mean <= 0.0) return 0;
  if (mean > 500.0) {
    double v = std::round(mean + std::sqrt(mean) * normal());
    return v < 0 ? 0 : static_cast<std::int64_t>(v);
  }
  double u = uniform();
  double p = std::exp(-mean);
  double cdf = p;
  std::int64_t k = 0;
  while (u > cdf && k < 100000) {
    ++k;
    p *= mean / static_cast<double>(k);
    cdf += p;
  }
  return k;
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 digest failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 0xf]);
  }
  return out;
}

}  // namespace census
