#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "dgcl/rng.hpp"
#include "dgcl/tape.hpp"

#include "json.hpp"

namespace dgcl::nd {

using ParamHandle = std::size_t;

// Ordered, named parameter tensors. Modules keep handles into the store and
// bind the whole store onto a tape once per step.
class ParamStore {
 public:
  ParamHandle add(std::string name, Tensor init);

  std::size_t size() const { return tensors_.size(); }
  Tensor& operator[](ParamHandle h) { return tensors_[h]; }
  const Tensor& operator[](ParamHandle h) const { return tensors_[h]; }
  const std::string& name(ParamHandle h) const { return names_[h]; }

  // One Var per parameter, same order as the handles. `trainable` records
  // leaves, otherwise constants (gradients flow through but not into them).
  std::vector<Var> bind(Tape& tape, bool trainable) const;
  std::vector<Tensor*> tensors();

  // {"name": {"shape": [...], "data": [...]}, ...}
  nlohmann::json to_json() const;
  // Overwrites every parameter from `j`; names and shapes must match.
  void load_json(const nlohmann::json& j);

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> tensors_;
};

// Affine layer y = x W + b with W stored in x out layout.
struct Linear {
  ParamHandle weight = 0;
  ParamHandle bias = 0;
};

// Uniform(-1/sqrt(in), 1/sqrt(in)) weights and zero bias.
Linear add_linear(ParamStore& store, const std::string& name, std::size_t in, std::size_t out,
                  SeedStream& rng, double weight_scale = 1.0);
Var apply(const Linear& layer, const std::vector<Var>& bound, const Var& x);

nlohmann::json tensor_to_json(const Tensor& t);
Tensor tensor_from_json(const nlohmann::json& j);

}  // namespace dgcl::nd
