#include "dgcl/checkpoint.hpp"

#include <fstream>

#include "dgcl/error.hpp"
#include "dgcl/params.hpp"

namespace dgcl::train {

nlohmann::json checkpoint_to_json(const DgclModel& model) {
  nlohmann::json modules = nlohmann::json::object();
  if (model.user_denoiser) modules["user_denoiser"] = model.user_denoiser->params().to_json();
  if (model.item_denoiser) modules["item_denoiser"] = model.item_denoiser->params().to_json();
  if (model.user_vae) modules["user_vae"] = model.user_vae->params().to_json();
  if (model.item_vae) modules["item_vae"] = model.item_vae->params().to_json();
  return {{"format", kCheckpointFormat},
          {"version", kCheckpointVersion},
          {"config", model.config.to_json()},
          {"num_users", model.num_users()},
          {"num_items", model.num_items()},
          {"embeddings", nd::tensor_to_json(model.embeddings.weights)},
          {"modules", modules},
          {"rng", model.rng.serialize()}};
}

DgclModel checkpoint_from_json(const nlohmann::json& j) {
  try {
    if (j.value("format", "") != kCheckpointFormat) {
      throw CheckpointError("not a DGCL checkpoint (format field missing or wrong)");
    }
    const int version = j.at("version").get<int>();
    if (version != kCheckpointVersion) {
      throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
    }
    const TrainConfig config = TrainConfig::from_json(j.at("config"));
    DgclModel model(config, j.at("num_users").get<std::size_t>(),
                    j.at("num_items").get<std::size_t>());
    nd::Tensor weights = nd::tensor_from_json(j.at("embeddings"));
    if (weights.shape() != model.embeddings.weights.shape()) {
      throw CheckpointError("embedding table " + nd::shape_str(weights.shape()) +
                            " does not match config " +
                            nd::shape_str(model.embeddings.weights.shape()));
    }
    model.embeddings.weights = std::move(weights);

    const auto& modules = j.at("modules");
    auto load = [&](const char* name, nd::ParamStore* store) {
      if (store == nullptr) {
        if (modules.contains(name)) {
          throw CheckpointError(std::string("checkpoint has module '") + name +
                                "' which the configured arm does not use");
        }
        return;
      }
      if (!modules.contains(name)) {
        throw CheckpointError(std::string("checkpoint lacks module '") + name + "'");
      }
      store->load_json(modules.at(name));
    };
    load("user_denoiser", model.user_denoiser ? &model.user_denoiser->params() : nullptr);
    load("item_denoiser", model.item_denoiser ? &model.item_denoiser->params() : nullptr);
    load("user_vae", model.user_vae ? &model.user_vae->params() : nullptr);
    load("item_vae", model.item_vae ? &model.item_vae->params() : nullptr);
    model.rng.restore(j.at("rng"));
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("malformed checkpoint: ") + e.what());
  } catch (const ConfigError& e) {
    throw CheckpointError(std::string("checkpoint config: ") + e.what());
  }
}

void save_checkpoint(const DgclModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw CheckpointError("cannot write checkpoint '" + path + "'");
  out << checkpoint_to_json(model).dump() << "\n";
  if (!out) throw CheckpointError("failed writing checkpoint '" + path + "'");
}

DgclModel load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CheckpointError("cannot open checkpoint '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError("checkpoint '" + path + "' is not valid JSON: " + e.what());
  }
  return checkpoint_from_json(j);
}

}  // namespace dgcl::train
