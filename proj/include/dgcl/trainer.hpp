#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dgcl/adam.hpp"
#include "dgcl/config.hpp"
#include "dgcl/dataset.hpp"
#include "dgcl/denoiser.hpp"
#include "dgcl/encoder.hpp"
#include "dgcl/metrics.hpp"
#include "dgcl/rng.hpp"
#include "dgcl/schedule.hpp"
#include "dgcl/vae.hpp"
#include "json.hpp"

namespace dgcl::train {

// Synthetic block data when config.data is empty, otherwise the file; split
// with data-seed either way.
data::InteractionDataset load_dataset(const TrainConfig& config);

// Independent streams so that arms differing in one mechanism replay the
// others identically.
struct RngStreams {
  SeedStream init;     // parameter initialisation
  SeedStream batches;  // BPR sampling
  SeedStream mixing;   // positive-mixing weights
  SeedStream views;    // augmentation noise in joint steps
  SeedStream augment;  // denoiser / VAE training

  explicit RngStreams(std::uint64_t seed);
  nlohmann::json serialize() const;
  void restore(const nlohmann::json& j);
};

// Trainable state of one run.
struct DgclModel {
  DgclModel(const TrainConfig& config, std::size_t num_users, std::size_t num_items);

  TrainConfig config;
  graph::EmbeddingTable embeddings;
  diffusion::NoiseSchedule schedule;
  // Present for the arms that use them: denoisers for `full` and `no-neg`,
  // VAEs for `vae`.
  std::optional<diffusion::DenoiserNet> user_denoiser, item_denoiser;
  std::optional<diffusion::VaeAugmenter> user_vae, item_vae;
  nd::AdamState encoder_opt, user_aug_opt, item_aug_opt;
  RngStreams rng;

  std::size_t num_users() const { return embeddings.num_users; }
  std::size_t num_items() const { return embeddings.num_items; }
  graph::EncoderOptions encoder_options() const;
  // Layer-aggregated embeddings, no gradient.
  nd::Tensor aggregated(const data::NormalizedAdjacency& adj) const;
};

// mean_r softplus(<u_r, n_r> - <u_r, p_r>) = mean_r -log sigma(<u,p> - <u,n>).
nd::Var bpr_loss(const nd::Var& users, const nd::Var& positives, const nd::Var& negatives);

// One pass over the rows of `embeddings` (detached) in shuffled mini-batches,
// stepping only the denoiser. Returns the mean batch loss.
double train_diffusion_epoch(diffusion::DenoiserNet& net, nd::AdamState& opt,
                             const nd::Tensor& embeddings, const diffusion::NoiseSchedule& schedule,
                             const TrainConfig& config, SeedStream& rng);

// Same contract for the VAE baseline.
double train_vae_epoch(diffusion::VaeAugmenter& vae, nd::AdamState& opt,
                       const nd::Tensor& embeddings, const TrainConfig& config, SeedStream& rng);

struct JointLosses {
  double l_rec = 0.0;
  double l_cl = 0.0;
  double l_reg = 0.0;
  double l_joint = 0.0;  // l_rec + lambda * l_cl
};

// Builds the joint objective for one batch on `tape` without stepping.
// Returns the differentiated total (joint + reg); `ego` receives the leaf for
// the embedding table.
struct JointGraph {
  nd::Var total;
  nd::Var ego;
  JointLosses losses;
};
JointGraph build_joint_loss(DgclModel& model, const data::NormalizedAdjacency& adj,
                            std::span<const data::BprSample> batch, nd::Tape& tape);

// build_joint_loss, backward, one Adam step on the embedding table.
JointLosses joint_step(DgclModel& model, const data::NormalizedAdjacency& adj,
                       std::span<const data::BprSample> batch);

struct EpochRecord {
  std::size_t epoch = 0;
  double l_rec = 0.0, l_cl = 0.0, l_reg = 0.0, l_joint = 0.0;
  double l_diff_user = 0.0, l_diff_item = 0.0;
  std::optional<nlohmann::json> metrics;
  double wall_ms = 0.0;

  nlohmann::json to_json(bool include_time = true) const;
};

struct TrainReport {
  nlohmann::json config;
  std::vector<EpochRecord> epochs;
  nlohmann::json final_metrics;
  std::size_t best_epoch = 0;
  bool stopped_early = false;

  // One JSON object per line: a config header, one per epoch, a final summary.
  std::string to_json_lines(bool include_time = true) const;
};

struct TrainResult {
  TrainReport report;
  DgclModel model;
};

// Optional per-epoch callback for progress output.
using EpochObserver = std::function<void(const EpochRecord&)>;

TrainResult train(const TrainConfig& config, const data::InteractionDataset& dataset,
                  const EpochObserver& observer = {});

// Full-ranking metrics of a model on a dataset of matching dimensions
// (CheckpointError otherwise).
eval::RankingResult evaluate_model(const DgclModel& model, const data::InteractionDataset& dataset,
                                   const std::vector<std::size_t>& cutoffs = eval::kDefaultCutoffs);

}  // namespace dgcl::train
