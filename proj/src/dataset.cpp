#include "dgcl/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "dgcl/error.hpp"

namespace dgcl::data {

std::size_t IdMap::encode(const std::string& raw) {
  auto [it, inserted] = index_.try_emplace(raw, names_.size());
  if (inserted) names_.push_back(raw);
  return it->second;
}

std::size_t IdMap::find(const std::string& raw) const {
  auto it = index_.find(raw);
  if (it == index_.end()) throw IndexError("unknown raw id '" + raw + "'");
  return it->second;
}

RawInteractions parse_interactions(std::istream& in) {
  RawInteractions raw;
  std::set<Edge> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    std::string user, item;
    if (!(fields >> user >> item)) {
      throw ParseError("line " + std::to_string(line_no) +
                       ": expected at least 2 whitespace-separated columns, got '" + line + "'");
    }
    const Edge e{raw.users.encode(user), raw.items.encode(item)};
    if (seen.insert(e).second) raw.edges.push_back(e);
  }
  if (raw.edges.empty()) throw DatasetError("no interactions found");
  return raw;
}

RawInteractions load_interactions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot open interaction file " + path.string());
  try {
    return parse_interactions(in);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  } catch (const DatasetError& e) {
    throw DatasetError(path.string() + ": " + e.what());
  }
}

InteractionDataset::InteractionDataset(std::size_t num_users, std::size_t num_items,
                                       std::vector<Edge> train, std::vector<Edge> test)
    : num_users_(num_users),
      num_items_(num_items),
      train_(std::move(train)),
      test_(std::move(test)),
      train_items_(num_users),
      test_items_(num_users),
      item_users_(num_items) {
  auto check = [&](const Edge& e, const char* split) {
    if (e.user >= num_users_ || e.item >= num_items_) {
      throw DatasetError(std::string(split) + " edge (" + std::to_string(e.user) + ", " +
                         std::to_string(e.item) + ") outside id space " +
                         std::to_string(num_users_) + "x" + std::to_string(num_items_));
    }
  };
  for (const Edge& e : train_) {
    check(e, "train");
    train_items_[e.user].push_back(e.item);
    item_users_[e.item].push_back(e.user);
  }
  for (const Edge& e : test_) {
    check(e, "test");
    test_items_[e.user].push_back(e.item);
  }
  auto sort_unique = [](std::vector<std::size_t>& v, const char* what) {
    std::sort(v.begin(), v.end());
    if (std::adjacent_find(v.begin(), v.end()) != v.end()) {
      throw DatasetError(std::string("duplicate edge in ") + what + " split");
    }
  };
  for (auto& v : train_items_) sort_unique(v, "train");
  for (auto& v : test_items_) sort_unique(v, "test");
  for (auto& v : item_users_) std::sort(v.begin(), v.end());
  for (const Edge& e : test_) {
    if (in_train(e.user, e.item)) {
      throw DatasetError("edge (" + std::to_string(e.user) + ", " + std::to_string(e.item) +
                         ") is in both train and test");
    }
  }
}

bool InteractionDataset::in_train(std::size_t user, std::size_t item) const {
  const auto& items = train_items_[user];
  return std::binary_search(items.begin(), items.end(), item);
}

nlohmann::json InteractionDataset::summary() const {
  return {{"num_users", num_users_},
          {"num_items", num_items_},
          {"train_edges", train_.size()},
          {"test_edges", test_.size()}};
}

InteractionDataset split_train_test(std::size_t num_users, std::size_t num_items,
                                    const std::vector<Edge>& edges, double ratio,
                                    std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw ConfigError("split ratio must lie in (0, 1), got " + std::to_string(ratio));
  }
  std::vector<std::vector<std::size_t>> per_user(num_users);
  for (const Edge& e : edges) {
    if (e.user >= num_users) throw DatasetError("edge user id out of range");
    per_user[e.user].push_back(e.item);
  }
  SeedStream rng(seed);
  std::vector<Edge> train, test;
  for (std::size_t u = 0; u < num_users; ++u) {
    auto& items = per_user[u];
    std::shuffle(items.begin(), items.end(), rng.engine());
    const auto n = items.size();
    auto n_train = static_cast<std::size_t>(std::lround(ratio * static_cast<double>(n)));
    n_train = std::clamp<std::size_t>(n_train, std::min<std::size_t>(n, 1), n);
    for (std::size_t k = 0; k < n; ++k) {
      (k < n_train ? train : test).push_back({u, items[k]});
    }
  }
  return InteractionDataset(num_users, num_items, std::move(train), std::move(test));
}

InteractionDataset split_train_test(const RawInteractions& raw, double ratio, std::uint64_t seed) {
  return split_train_test(raw.users.size(), raw.items.size(), raw.edges, ratio, seed);
}

std::size_t block_of_user(const BlockDatasetSpec& spec, std::size_t user) {
  return user * spec.blocks / spec.num_users;
}

std::size_t block_of_item(const BlockDatasetSpec& spec, std::size_t item) {
  return item * spec.blocks / spec.num_items;
}

std::vector<Edge> make_block_edges(const BlockDatasetSpec& spec, std::uint64_t seed) {
  if (spec.blocks == 0 || spec.blocks > spec.num_users || spec.blocks > spec.num_items) {
    throw ConfigError("block count must be in [1, min(users, items)]");
  }
  SeedStream rng(seed);
  std::vector<Edge> edges;
  for (std::size_t u = 0; u < spec.num_users; ++u) {
    for (std::size_t i = 0; i < spec.num_items; ++i) {
      if (block_of_user(spec, u) != block_of_item(spec, i)) continue;
      if (rng.uniform() < spec.within_prob) edges.push_back({u, i});
    }
  }
  return edges;
}

double NormalizedAdjacency::entry(std::size_t row, std::size_t col) const {
  const auto begin = matrix.col_idx.begin() + static_cast<std::ptrdiff_t>(matrix.row_ptr[row]);
  const auto end = matrix.col_idx.begin() + static_cast<std::ptrdiff_t>(matrix.row_ptr[row + 1]);
  auto it = std::lower_bound(begin, end, col);
  if (it == end || *it != col) return 0.0;
  return matrix.values[static_cast<std::size_t>(it - matrix.col_idx.begin())];
}

NormalizedAdjacency build_norm_adjacency(const InteractionDataset& ds) {
  if (ds.train_edges().empty()) throw DatasetError("cannot build adjacency without train edges");
  NormalizedAdjacency adj;
  adj.num_users = ds.num_users();
  adj.num_items = ds.num_items();
  const std::size_t n = ds.num_nodes();
  const std::size_t nu = ds.num_users();
  adj.degree.assign(n, 0);
  for (std::size_t u = 0; u < nu; ++u) adj.degree[u] = ds.train_items(u).size();
  for (std::size_t i = 0; i < ds.num_items(); ++i) adj.degree[nu + i] = ds.item_users(i).size();

  auto& m = adj.matrix;
  m.rows = m.cols = n;
  m.row_ptr.assign(n + 1, 0);
  // Users link to items (columns nu + i), items to users; both lists are
  // already sorted so column indices come out sorted per row.
  for (std::size_t r = 0; r < n; ++r) {
    const bool is_user = r < nu;
    const auto& nbrs = is_user ? ds.train_items(r) : ds.item_users(r - nu);
    for (std::size_t other : nbrs) {
      const std::size_t c = is_user ? nu + other : other;
      m.col_idx.push_back(c);
      m.values.push_back(1.0 / std::sqrt(static_cast<double>(adj.degree[r]) *
                                         static_cast<double>(adj.degree[c])));
    }
    m.row_ptr[r + 1] = m.col_idx.size();
  }
  return adj;
}

std::vector<BprSample> sample_bpr_batch(const InteractionDataset& ds, std::size_t batch_size,
                                        std::size_t num_candidates, SeedStream& rng) {
  if (batch_size == 0 || num_candidates == 0) {
    throw ContractError("sample_bpr_batch needs batch_size >= 1 and candidates >= 1");
  }
  const auto& edges = ds.train_edges();
  if (edges.empty()) throw SamplingError("no train edges to sample from");
  const std::size_t max_tries = 64 * ds.num_items() + 64;
  std::vector<BprSample> batch;
  batch.reserve(batch_size);
  for (std::size_t b = 0; b < batch_size; ++b) {
    const Edge& e = edges[rng.index(edges.size())];
    BprSample s{e.user, e.item, {}};
    if (ds.train_items(e.user).size() >= ds.num_items()) {
      throw SamplingError("user " + std::to_string(e.user) +
                          " interacted with every item; no negative exists");
    }
    for (std::size_t k = 0; k < num_candidates; ++k) {
      std::size_t tries = 0;
      std::size_t j = 0;
      do {
        if (++tries > max_tries) {
          throw SamplingError("negative sampling for user " + std::to_string(e.user) +
                              " exceeded " + std::to_string(max_tries) + " retries");
        }
        j = rng.index(ds.num_items());
      } while (ds.in_train(e.user, j));
      s.candidates.push_back(j);
    }
    batch.push_back(std::move(s));
  }
  return batch;
}

}  // namespace dgcl::data
