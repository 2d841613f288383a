#pragma once

#include <string>

#include "dgcl/trainer.hpp"
#include "json.hpp"

namespace dgcl::train {

inline constexpr const char* kCheckpointFormat = "dgcl-checkpoint";
inline constexpr int kCheckpointVersion = 1;

// {
//   "format": "dgcl-checkpoint", "version": 1,
//   "config": {flat config echo},
//   "num_users": U, "num_items": I,
//   "embeddings": {"shape": [U+I, d], "data": [...]},
//   "modules": {"user_denoiser": {name: {"shape", "data"}}, ...},
//   "rng": {stream: engine state}
// }
// Optimiser moments are not stored; a resumed run restarts them.
nlohmann::json checkpoint_to_json(const DgclModel& model);
DgclModel checkpoint_from_json(const nlohmann::json& j);

void save_checkpoint(const DgclModel& model, const std::string& path);
// CheckpointError on a missing file, unknown format/version or shape mismatch.
DgclModel load_checkpoint(const std::string& path);

}  // namespace dgcl::train
