// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace tivgan {

/// Seeded random source shared by model init, noise draws and data sampling.
///
/// The full state (engine plus the cached normal deviate) round-trips through
/// state()/restore(), which is what makes checkpoint resume bit-exact.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  double uniform();                                   // [0, 1)
  double uniform(double lo, double hi);               // [lo, hi)
  double normal();                                    // N(0, 1)
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);  // inclusive
  std::uint64_t next_u64();

  /// Independent child stream; advances this generator by one draw.
  Rng fork();

  std::string state() const;
  void restore(const std::string& state);

  bool operator==(const Rng& other) const;

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

}  // namespace tivgan
