#include "dgcl/rng.hpp"

#include <sstream>

#include "dgcl/error.hpp"

namespace dgcl {

double SeedStream::uniform_open() {
  double u = 0.0;
  do {
    u = uniform();
  } while (u <= 0.0 || u >= 1.0);
  return u;
}

std::size_t SeedStream::index(std::size_t n) {
  if (n == 0) throw ContractError("SeedStream::index on an empty range");
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
}

nd::Tensor SeedStream::normal_tensor(nd::Shape shape, double stddev) {
  nd::Tensor t(std::move(shape));
  for (double& v : t.storage()) v = stddev * normal();
  return t;
}

std::string SeedStream::serialize() const {
  std::ostringstream os;
  os << engine_ << ' ' << normal_;
  return os.str();
}

void SeedStream::restore(const std::string& state) {
  std::istringstream is(state);
  is >> engine_ >> normal_;
  if (!is) throw CheckpointError("malformed RNG state");
}

}  // namespace dgcl
