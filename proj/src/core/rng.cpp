#include "core/rng.hpp"

#include <cmath>

namespace hhi::core {
namespace {

constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ull;

// splitmix64 finalizer; full 64-bit avalanche.
std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::string_view label, std::uint64_t index) {
  std::uint64_t k = mix64(seed + kGamma);
  k = mix64(k ^ fnv1a(label));
  k = mix64(k ^ (index + kGamma));
  return k;
}

RngStream::RngStream(std::uint64_t seed, std::string_view label, std::uint64_t index)
    : key_(derive_seed(seed, label, index)) {}

std::uint64_t RngStream::next_u64() {
  return mix64(key_ + (++counter_) * kGamma);
}

double RngStream::uniform() {
  // Top 53 bits give a double in [0, 1).
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform_pos() {
  return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
}

double RngStream::normal() {
  if (has_cached_normal_) {
    has_cached_normal_ = false;
    return cached_normal_;
  }
  double u1 = uniform_pos();
  double u2 = uniform();
  double r = std::sqrt(-2.0 * std::log(u1));
  double a = 6.283185307179586476925286766559 * u2;
  cached_normal_ = r * std::sin(a);
  has_cached_normal_ = true;
  return r * std::cos(a);
}

std::uint64_t RngStream::below(std::uint64_t n) {
  // Rejection sampling removes modulo bias; the loop almost never repeats.
  std::uint64_t limit = n * (~0ull / n);
  std::uint64_t v = next_u64();
  while (v >= limit) v = next_u64();
  return v % n;
}

void RngStream::fill_normal(std::span<float> out, float mean, float stddev) {
  for (float& x : out) x = mean + stddev * static_cast<float>(normal());
}

void RngStream::fill_uniform(std::span<float> out, float lo, float hi) {
  for (float& x : out) x = lo + (hi - lo) * static_cast<float>(uniform());
}

}  // namespace hhi::core
