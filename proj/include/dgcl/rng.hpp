#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "dgcl/tensor.hpp"

namespace dgcl {

// Owned, seedable random stream. Every stochastic routine takes one of these
// explicitly so runs replay bit-for-bit from a seed.
class SeedStream {
 public:
  explicit SeedStream(std::uint64_t seed = 0) : engine_(seed) {}

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  // Uniform on the open interval (0, 1).
  double uniform_open();
  double normal() { return normal_(engine_); }
  // Uniform integer in [0, n).
  std::size_t index(std::size_t n);
  std::uint64_t next() { return engine_(); }

  // Independent child stream derived from this one.
  SeedStream fork() { return SeedStream(engine_()); }

  nd::Tensor normal_tensor(nd::Shape shape, double stddev = 1.0);

  std::mt19937_64& engine() { return engine_; }

  // Text snapshot of the engine state, restorable with restore().
  std::string serialize() const;
  void restore(const std::string& state);

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace dgcl
