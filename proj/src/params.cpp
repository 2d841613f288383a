#include "dgcl/params.hpp"

#include <cmath>

#include "dgcl/error.hpp"
#include "dgcl/ops.hpp"

namespace dgcl::nd {

ParamHandle ParamStore::add(std::string name, Tensor init) {
  for (const auto& n : names_) {
    if (n == name) throw ContractError("duplicate parameter name '" + name + "'");
  }
  names_.push_back(std::move(name));
  tensors_.push_back(std::move(init));
  return tensors_.size() - 1;
}

std::vector<Var> ParamStore::bind(Tape& tape, bool trainable) const {
  std::vector<Var> vars;
  vars.reserve(tensors_.size());
  for (const Tensor& t : tensors_) vars.push_back(trainable ? tape.leaf(t) : tape.constant(t));
  return vars;
}

std::vector<Tensor*> ParamStore::tensors() {
  std::vector<Tensor*> out;
  for (Tensor& t : tensors_) out.push_back(&t);
  return out;
}

nlohmann::json tensor_to_json(const Tensor& t) {
  return {{"shape", t.shape()}, {"data", t.storage()}};
}

Tensor tensor_from_json(const nlohmann::json& j) {
  try {
    return Tensor(j.at("shape").get<Shape>(), j.at("data").get<std::vector<double>>());
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("malformed tensor record: ") + e.what());
  }
}

nlohmann::json ParamStore::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (std::size_t k = 0; k < tensors_.size(); ++k) j[names_[k]] = tensor_to_json(tensors_[k]);
  return j;
}

void ParamStore::load_json(const nlohmann::json& j) {
  if (!j.is_object() || j.size() != tensors_.size()) {
    throw CheckpointError("parameter map has " + std::to_string(j.size()) + " entries, expected " +
                          std::to_string(tensors_.size()));
  }
  for (std::size_t k = 0; k < tensors_.size(); ++k) {
    if (!j.contains(names_[k])) throw CheckpointError("missing parameter '" + names_[k] + "'");
    Tensor t = tensor_from_json(j.at(names_[k]));
    if (t.shape() != tensors_[k].shape()) {
      throw CheckpointError("parameter '" + names_[k] + "' has shape " + shape_str(t.shape()) +
                            ", expected " + shape_str(tensors_[k].shape()));
    }
    tensors_[k] = std::move(t);
  }
}

Linear add_linear(ParamStore& store, const std::string& name, std::size_t in, std::size_t out,
                  SeedStream& rng, double weight_scale) {
  const double bound = weight_scale / std::sqrt(static_cast<double>(in));
  Tensor w({in, out});
  for (double& v : w.storage()) v = bound * (2.0 * rng.uniform() - 1.0);
  Linear layer;
  layer.weight = store.add(name + ".weight", std::move(w));
  layer.bias = store.add(name + ".bias", Tensor({out}));
  return layer;
}

Var apply(const Linear& layer, const std::vector<Var>& bound, const Var& x) {
  return add_row(matmul(x, bound[layer.weight]), bound[layer.bias]);
}

}  // namespace dgcl::nd
