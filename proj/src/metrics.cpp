#include "dgcl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "dgcl/error.hpp"

namespace dgcl::eval {
namespace {

bool contains(std::span<const std::size_t> set, std::size_t x) {
  return std::find(set.begin(), set.end(), x) != set.end();
}

void require_valid(std::span<const std::size_t> relevant, std::size_t k) {
  if (k == 0) throw ContractError("metric cutoff K must be >= 1");
  if (relevant.empty()) throw ContractError("metric needs a non-empty relevant set");
}

}  // namespace

double recall_at_k(std::span<const std::size_t> ranked, std::span<const std::size_t> relevant,
                   std::size_t k) {
  require_valid(relevant, k);
  const std::size_t depth = std::min(k, ranked.size());
  std::size_t hits = 0;
  for (std::size_t r = 0; r < depth; ++r) hits += contains(relevant, ranked[r]) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(relevant.size());
}

double ndcg_at_k(std::span<const std::size_t> ranked, std::span<const std::size_t> relevant,
                 std::size_t k) {
  require_valid(relevant, k);
  const std::size_t depth = std::min(k, ranked.size());
  double dcg = 0.0;
  for (std::size_t r = 0; r < depth; ++r) {
    if (contains(relevant, ranked[r])) dcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
  }
  double idcg = 0.0;
  const std::size_t ideal = std::min(k, relevant.size());
  for (std::size_t r = 0; r < ideal; ++r) idcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
  return dcg / idcg;
}

std::vector<std::size_t> rank_items(std::span<const double> scores,
                                    std::span<const std::size_t> masked, std::size_t k) {
  std::vector<std::size_t> ids;
  ids.reserve(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!contains(masked, i)) ids.push_back(i);
  }
  const std::size_t depth = std::min(k, ids.size());
  std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(depth), ids.end(),
                    [&](std::size_t a, std::size_t b) {
                      return scores[a] > scores[b] || (scores[a] == scores[b] && a < b);
                    });
  ids.resize(depth);
  return ids;
}

nlohmann::json RankingResult::to_json() const {
  nlohmann::json j;
  for (std::size_t k : cutoffs) {
    j["recall@" + std::to_string(k)] = recall.at(k);
    j["ndcg@" + std::to_string(k)] = ndcg.at(k);
  }
  j["users_evaluated"] = users_evaluated;
  return j;
}

RankingResult evaluate_embeddings(const nd::Tensor& embeddings,
                                  const data::InteractionDataset& dataset,
                                  const std::vector<std::size_t>& cutoffs) {
  const std::size_t nu = dataset.num_users(), ni = dataset.num_items();
  if (embeddings.rank() != 2 || embeddings.rows() != nu + ni) {
    throw DimensionError("evaluate: embeddings " + nd::shape_str(embeddings.shape()) +
                         " do not cover " + std::to_string(nu) + " users + " +
                         std::to_string(ni) + " items");
  }
  if (cutoffs.empty()) throw ContractError("evaluate: no cutoffs given");
  const std::size_t max_k = *std::max_element(cutoffs.begin(), cutoffs.end());

  RankingResult result;
  result.cutoffs = cutoffs;
  result.ranked.resize(nu);
  for (std::size_t k : cutoffs) {
    result.recall[k] = 0.0;
    result.ndcg[k] = 0.0;
  }
  std::vector<double> scores(ni);
  for (std::size_t u = 0; u < nu; ++u) {
    const auto& relevant = dataset.test_items(u);
    if (relevant.empty()) continue;
    const auto user = embeddings.row(u);
    for (std::size_t i = 0; i < ni; ++i) scores[i] = nd::dot(user, embeddings.row(nu + i));
    result.ranked[u] = rank_items(scores, dataset.train_items(u), max_k);
    for (std::size_t k : cutoffs) {
      result.recall[k] += recall_at_k(result.ranked[u], relevant, k);
      result.ndcg[k] += ndcg_at_k(result.ranked[u], relevant, k);
    }
    ++result.users_evaluated;
  }
  if (result.users_evaluated > 0) {
    const double n = static_cast<double>(result.users_evaluated);
    for (std::size_t k : cutoffs) {
      result.recall[k] /= n;
      result.ndcg[k] /= n;
    }
  }
  return result;
}

double random_recall_baseline(const data::InteractionDataset& dataset, std::size_t k) {
  double total = 0.0;
  std::size_t users = 0;
  for (std::size_t u = 0; u < dataset.num_users(); ++u) {
    if (dataset.test_items(u).empty()) continue;
    const double candidates =
        static_cast<double>(dataset.num_items() - dataset.train_items(u).size());
    total += std::min(static_cast<double>(k), candidates) / candidates;
    ++users;
  }
  return users == 0 ? 0.0 : total / static_cast<double>(users);
}

}  // namespace dgcl::eval
