// SPDX-License-Identifier: Apache-2.0
#include "tivgan/util/rng.hpp"

#include <sstream>

#include "tivgan/errors.hpp"

namespace tivgan {

Rng::Rng(std::uint64_t seed) : engine_(seed) {}

double Rng::uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

double Rng::uniform(double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(engine_);
}

double Rng::normal() { return normal_(engine_); }

std::int64_t Rng::uniform_int(std::int64_t lo, std::int64_t hi) {
  if (hi < lo) throw InvalidInput("Rng::uniform_int: empty range");
  return std::uniform_int_distribution<std::int64_t>(lo, hi)(engine_);
}

std::uint64_t Rng::next_u64() { return engine_(); }

Rng Rng::fork() { return Rng(engine_()); }

std::string Rng::state() const {
  std::ostringstream os;
  os << engine_ << '\n' << normal_;
  return os.str();
}

void Rng::restore(const std::string& state) {
  std::istringstream is(state);
  is >> engine_ >> normal_;
  if (!is) throw FormatError("Rng::restore: malformed generator state");
}

bool Rng::operator==(const Rng& other) const {
  return engine_ == other.engine_ && normal_ == other.normal_;
}

}  // namespace tivgan
