#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace pascpr {

/// Seeded random stream. Child streams are derived by hashing the parent seed
/// with a tag, so the stream handed to a sweep point, channel or span never
/// depends on how many draws happened elsewhere.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : seed_(seed), engine_(mix(seed)) {}

  std::uint64_t seed() const { return seed_; }
  std::mt19937_64& engine() { return engine_; }

  RngStream split(std::uint64_t tag) const;
  RngStream split(std::initializer_list<std::uint64_t> tags) const;

  double normal() { return normal_(engine_); }
  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  std::uint8_t bit() { return static_cast<std::uint8_t>(engine_() >> 63); }

  static std::uint64_t mix(std::uint64_t x);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

}  // namespace pascpr
