#include "dgcl/encoder.hpp"

#include <string>

#include "dgcl/error.hpp"
#include "dgcl/ops.hpp"

namespace dgcl::graph {

EmbeddingTable EmbeddingTable::init(std::size_t num_users, std::size_t num_items,
                                    std::size_t dim, SeedStream& rng, double stddev) {
  EmbeddingTable t;
  t.num_users = num_users;
  t.num_items = num_items;
  t.weights = rng.normal_tensor({num_users + num_items, dim}, stddev);
  return t;
}

nd::Var propagate(const data::NormalizedAdjacency& adj, const nd::Var& embeddings) {
  if (embeddings.value().rows() != adj.num_nodes()) {
    throw DimensionError("propagate: embeddings " + nd::shape_str(embeddings.shape()) +
                         " vs adjacency over " + std::to_string(adj.num_nodes()) + " nodes");
  }
  return nd::spmm(adj.matrix, embeddings);
}

LayerStack propagate_layers(const data::NormalizedAdjacency& adj, const nd::Var& ego,
                            std::size_t layers) {
  LayerStack stack{ego};
  for (std::size_t l = 0; l < layers; ++l) stack.push_back(propagate(adj, stack.back()));
  return stack;
}

nd::Var aggregate_layers(const LayerStack& stack, bool include_layer_zero) {
  if (stack.size() < 2) throw ContractError("aggregate_layers needs L >= 1");
  const std::size_t first = include_layer_zero ? 0 : 1;
  nd::Var acc = stack[first];
  for (std::size_t l = first + 1; l < stack.size(); ++l) acc = nd::add(acc, stack[l]);
  return nd::scale(acc, 1.0 / static_cast<double>(stack.size() - first));
}

nd::Tensor encode(const data::NormalizedAdjacency& adj, const nd::Tensor& ego,
                  const EncoderOptions& options) {
  nd::Tape tape;
  const nd::Var e0 = tape.constant(ego);
  return aggregate_layers(propagate_layers(adj, e0, options.layers), options.include_layer_zero)
      .value();
}

MixWeights draw_mix_weights(std::size_t layers, std::size_t rows, SeedStream& rng) {
  MixWeights w(layers, std::vector<double>(rows));
  for (auto& layer : w)
    for (double& a : layer) a = rng.uniform_open();
  return w;
}

LayerStack positive_mix(const LayerStack& positive, const LayerStack& negative,
                        const MixWeights& alphas) {
  if (positive.size() != negative.size() || alphas.size() != positive.size()) {
    throw DimensionError("positive_mix: stack lengths differ (" +
                         std::to_string(positive.size()) + ", " +
                         std::to_string(negative.size()) + ", " +
                         std::to_string(alphas.size()) + ")");
  }
  LayerStack mixed;
  for (std::size_t l = 0; l < positive.size(); ++l) {
    nd::Tape& tape = *positive[l].tape();
    const std::size_t rows = positive[l].value().rows();
    if (alphas[l].size() != rows) {
      throw DimensionError("positive_mix: " + std::to_string(alphas[l].size()) +
                           " weights for " + std::to_string(rows) + " rows");
    }
    nd::Tensor a({rows}), one_minus({rows});
    for (std::size_t r = 0; r < rows; ++r) {
      a[r] = alphas[l][r];
      one_minus[r] = 1.0 - alphas[l][r];
    }
    mixed.push_back(nd::add(nd::scale_rows(positive[l], tape.constant(std::move(a))),
                            nd::scale_rows(negative[l], tape.constant(std::move(one_minus)))));
  }
  return mixed;
}

LayerStack positive_mix(const LayerStack& positive, const LayerStack& negative,
                        SeedStream& rng) {
  const std::size_t rows = positive.empty() ? 0 : positive.front().value().rows();
  return positive_mix(positive, negative, draw_mix_weights(positive.size(), rows, rng));
}

std::size_t select_hard_negative(std::span<const double> user,
                                 const std::vector<std::span<const double>>& candidates) {
  if (candidates.empty()) throw ContractError("select_hard_negative needs M >= 1");
  std::size_t best = 0;
  double best_score = nd::dot(user, candidates[0]);
  for (std::size_t k = 1; k < candidates.size(); ++k) {
    const double s = nd::dot(user, candidates[k]);
    if (s > best_score) {
      best = k;
      best_score = s;
    }
  }
  return best;
}

}  // namespace dgcl::graph
