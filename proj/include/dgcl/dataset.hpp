#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "dgcl/ops.hpp"
#include "dgcl/rng.hpp"

namespace dgcl::data {

struct Edge {
  std::size_t user = 0;
  std::size_t item = 0;

  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

// Bijection between raw string ids and dense indices, assigned in first-seen
// order.
class IdMap {
 public:
  std::size_t encode(const std::string& raw);
  std::size_t find(const std::string& raw) const;  // IndexError if unknown
  const std::string& decode(std::size_t id) const { return names_.at(id); }
  std::size_t size() const { return names_.size(); }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Deduplicated interactions before the train/test split.
struct RawInteractions {
  IdMap users;
  IdMap items;
  std::vector<Edge> edges;  // file order, duplicates removed
};

// Reads one interaction per line: `<user> <item> [ignored columns...]`.
// Blank lines and lines starting with '#' are skipped.
RawInteractions parse_interactions(std::istream& in);
RawInteractions load_interactions(const std::filesystem::path& path);

class InteractionDataset {
 public:
  InteractionDataset() = default;
  // Validates dense ids, per-split uniqueness and train/test disjointness.
  InteractionDataset(std::size_t num_users, std::size_t num_items,
                     std::vector<Edge> train, std::vector<Edge> test);

  std::size_t num_users() const { return num_users_; }
  std::size_t num_items() const { return num_items_; }
  std::size_t num_nodes() const { return num_users_ + num_items_; }

  const std::vector<Edge>& train_edges() const { return train_; }
  const std::vector<Edge>& test_edges() const { return test_; }

  // Sorted item lists per user.
  const std::vector<std::size_t>& train_items(std::size_t user) const { return train_items_[user]; }
  const std::vector<std::size_t>& test_items(std::size_t user) const { return test_items_[user]; }
  // Sorted user lists per item (train split).
  const std::vector<std::size_t>& item_users(std::size_t item) const { return item_users_[item]; }

  bool in_train(std::size_t user, std::size_t item) const;

  nlohmann::json summary() const;

 private:
  std::size_t num_users_ = 0;
  std::size_t num_items_ = 0;
  std::vector<Edge> train_;
  std::vector<Edge> test_;
  std::vector<std::vector<std::size_t>> train_items_;
  std::vector<std::vector<std::size_t>> test_items_;
  std::vector<std::vector<std::size_t>> item_users_;
};

// Per-user random holdout. Each user keeps round(ratio * n) edges in train
// (at least one), the rest go to test.
InteractionDataset split_train_test(std::size_t num_users, std::size_t num_items,
                                    const std::vector<Edge>& edges, double ratio,
                                    std::uint64_t seed);
InteractionDataset split_train_test(const RawInteractions& raw, double ratio,
                                    std::uint64_t seed);

// Users and items are cut into `blocks` equal groups; a user interacts with
// each item of its own group with probability `within_prob` and never
// outside it.
struct BlockDatasetSpec {
  std::size_t num_users = 32;
  std::size_t num_items = 32;
  std::size_t blocks = 2;
  double within_prob = 0.5;
};
std::vector<Edge> make_block_edges(const BlockDatasetSpec& spec, std::uint64_t seed);
std::size_t block_of_user(const BlockDatasetSpec& spec, std::size_t user);
std::size_t block_of_item(const BlockDatasetSpec& spec, std::size_t item);

// Symmetric normalised adjacency over users (rows 0..U-1) then items
// (rows U..U+I-1). Entry (u, U+i) = 1/sqrt(|N_u| |N_i|) from train degrees.
struct NormalizedAdjacency {
  std::size_t num_users = 0;
  std::size_t num_items = 0;
  std::vector<std::size_t> degree;  // per node, train split
  nd::CsrMatrix matrix;

  std::size_t num_nodes() const { return num_users + num_items; }
  // Stored value at (row, col); 0 when absent.
  double entry(std::size_t row, std::size_t col) const;
};

NormalizedAdjacency build_norm_adjacency(const InteractionDataset& ds);

struct BprSample {
  std::size_t user = 0;
  std::size_t positive = 0;
  std::vector<std::size_t> candidates;  // M uniform non-interacted items
};

// Uniform (u, i+) from the train edges plus M rejection-sampled negatives.
std::vector<BprSample> sample_bpr_batch(const InteractionDataset& ds, std::size_t batch_size,
                                        std::size_t num_candidates, SeedStream& rng);

}  // namespace dgcl::data
