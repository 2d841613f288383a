#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "dgcl/config.hpp"
#include "dgcl/dataset.hpp"
#include "json.hpp"

namespace dgcl::train {

// Versioned first lines of the CSVs below. Bump on any column change.
inline constexpr const char* kAblationSchema = "# dgcl-ablation-csv v1";
inline constexpr const char* kSweepSchema = "# dgcl-sweep-csv v1";
inline constexpr const char* kFiguresSchema = "# dgcl-figures-csv v1";

// Metric columns shared by the result CSVs, in order.
inline const std::vector<std::string> kMetricColumns{"recall@10", "ndcg@10", "recall@20",
                                                     "ndcg@20"};

struct RunSummary {
  std::string param;  // sweep parameter, or "arm" for ablations
  std::string value;  // grid value, or the arm name
  std::uint64_t seed = 0;
  nlohmann::json metrics;
  std::size_t best_epoch = 0;
  std::size_t epochs_run = 0;
};

// One sweep cell: the config key it overrides and the textual value.
struct SweepCell {
  std::string param;  // lambda, T, L or schedule
  std::string key;    // config key
  std::string value;
};

// lambda {0.1, 0.2, 0.3}; T {10, 20, 30, 50}; L {1, 2, 3};
// schedule {linear, quadratic, sigmoid}; "all" concatenates them in that order.
std::vector<SweepCell> sweep_grid(std::string_view param);

RunSummary run_one(const TrainConfig& config, const data::InteractionDataset& dataset,
                   std::string param, std::string value);

// Every arm for every seed, arms in declaration order within each seed.
std::vector<RunSummary> run_ablation(const TrainConfig& base, const data::InteractionDataset& dataset,
                                     const std::vector<std::uint64_t>& seeds);

std::vector<RunSummary> run_sweep(const TrainConfig& base, const data::InteractionDataset& dataset,
                                  std::string_view param);

// Schema line, header, one row per run. No timings, so re-runs are identical.
std::string ablation_csv(const std::vector<RunSummary>& runs);
std::string sweep_csv(const std::vector<RunSummary>& runs);

// Long format (figure, x, seed, metric, value) from any mix of ablation and
// sweep CSV texts. ParseError on an unknown schema line or malformed row.
std::string export_figures(const std::vector<std::string>& csv_texts);

}  // namespace dgcl::train
