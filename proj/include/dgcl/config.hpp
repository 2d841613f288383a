#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "dgcl/schedule.hpp"
#include "json.hpp"

namespace dgcl::train {

enum class Ablation { kFull, kNoDiff, kNoNeg, kUniformNoise, kVae };

inline constexpr Ablation kAllAblations[] = {Ablation::kFull, Ablation::kNoDiff, Ablation::kNoNeg,
                                             Ablation::kUniformNoise, Ablation::kVae};

Ablation parse_ablation(std::string_view name);
std::string to_string(Ablation arm);

// Everything a run depends on. Field comments give the config key.
struct TrainConfig {
  // [data]
  std::string data;                 // data: interaction file; empty = synthetic blocks
  std::size_t synthetic_users = 32;   // synthetic-users
  std::size_t synthetic_items = 32;   // synthetic-items
  std::size_t synthetic_blocks = 2;   // synthetic-blocks
  double synthetic_prob = 0.5;        // synthetic-prob
  std::uint64_t data_seed = 0;        // data-seed: block generation and split
  double split_ratio = 0.8;           // split-ratio

  // [model]
  std::size_t layers = 3;            // layers
  std::size_t embed_dim = 64;        // embed-dim
  std::size_t neg_candidates = 8;    // neg-candidates
  bool include_layer_zero = false;   // include-layer-zero
  double init_std = 0.1;             // init-std

  // [diffusion]
  std::size_t diff_steps = 30;                                  // diff-steps
  double beta_min = 1e-5;                                       // beta-min
  double beta_max = 2e-2;                                       // beta-max
  diffusion::ScheduleKind beta_schedule = diffusion::ScheduleKind::kLinear;  // beta-schedule
  std::size_t heads = 4;                                        // heads
  std::size_t t_start = 0;                                      // t-start; 0 means diff-steps
  bool row_independent = false;                                 // row-independent
  double diff_lr = 1e-3;                                        // diff-lr
  std::size_t diff_batch_size = 64;                             // diff-batch-size
  std::size_t diff_pretrain_epochs = 0;                         // diff-pretrain-epochs
  std::size_t vae_hidden = 64;                                  // vae-hidden
  std::size_t vae_latent = 32;                                  // vae-latent
  double vae_kl_weight = 1.0;                                   // vae-kl-weight
  double noise_eps = 0.1;                                       // noise-eps (uniform-noise arm)

  // [contrastive]
  double tau = 0.2;       // tau
  bool raw_dot = false;   // raw-dot
  double lambda = 0.1;    // lambda

  // [train]
  double lr = 1e-3;                   // lr
  double weight_decay = 1e-4;         // weight-decay
  std::size_t epochs = 500;           // epochs
  std::size_t batch_size = 2048;      // batch-size
  std::uint64_t seed = 0;             // seed
  std::size_t eval_every = 1;         // eval-every
  std::size_t patience = 10;          // patience (evaluations without improvement)
  Ablation ablation = Ablation::kFull;  // ablation

  std::size_t effective_t_start() const { return t_start == 0 ? diff_steps : t_start; }

  // Throws ConfigError naming the offending key.
  void validate() const;

  // Sets one key from its textual value; accepts "key" or "section.key".
  void set(std::string_view key, std::string_view value);

  // Flat {key: value} echo; from_json inverts it.
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);

  // All keys, grouped by section, in file order.
  static std::vector<std::pair<std::string, std::string>> keys();
};

// Plain text: `key = value` lines, optional `[section]` headers, `#` or `;`
// comments. Unknown keys and keys under the wrong section are ConfigErrors
// carrying the line number.
TrainConfig parse_config(std::istream& in, TrainConfig base = {});
TrainConfig load_config(const std::string& path, TrainConfig base = {});

// Applies "key=value".
void apply_override(TrainConfig& config, std::string_view assignment);

// Renders the config back into the file format.
std::string format_config(const TrainConfig& config);

}  // namespace dgcl::train
