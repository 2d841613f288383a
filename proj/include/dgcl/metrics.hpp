#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "dgcl/dataset.hpp"
#include "dgcl/tensor.hpp"
#include "json.hpp"

namespace dgcl::eval {

// |top-K ∩ relevant| / |relevant|. `relevant` must be non-empty.
double recall_at_k(std::span<const std::size_t> ranked, std::span<const std::size_t> relevant,
                   std::size_t k);

// DCG@K with binary gains and 1/log2(rank + 1) discounts, divided by the ideal
// DCG over min(K, |relevant|) hits.
double ndcg_at_k(std::span<const std::size_t> ranked, std::span<const std::size_t> relevant,
                 std::size_t k);

// Top-k item ids by descending score with `masked` items excluded; equal
// scores rank the lower id first.
std::vector<std::size_t> rank_items(std::span<const double> scores,
                                    std::span<const std::size_t> masked, std::size_t k);

struct RankingResult {
  std::vector<std::size_t> cutoffs;
  std::map<std::size_t, double> recall;
  std::map<std::size_t, double> ndcg;
  std::size_t users_evaluated = 0;
  // Top max(cutoffs) per user; empty for users without test items.
  std::vector<std::vector<std::size_t>> ranked;

  nlohmann::json to_json() const;
};

inline const std::vector<std::size_t> kDefaultCutoffs{10, 20};

// Full ranking: score(u, i) = <e_u, e_i> over all items, train items masked.
// `embeddings` holds users in rows [0, U) and items in rows [U, U + I).
// Metrics are averaged over users that have test items.
RankingResult evaluate_embeddings(const nd::Tensor& embeddings,
                                  const data::InteractionDataset& dataset,
                                  const std::vector<std::size_t>& cutoffs = kDefaultCutoffs);

// Expected Recall@K of a uniformly random ranking of each user's unmasked
// items, averaged like evaluate_embeddings: mean_u min(K, C_u) / C_u with
// C_u = num_items - |train(u)|.
double random_recall_baseline(const data::InteractionDataset& dataset, std::size_t k);

}  // namespace dgcl::eval
