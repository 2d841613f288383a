#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dgcl/dataset.hpp"
#include "dgcl/rng.hpp"
#include "dgcl/tape.hpp"

namespace dgcl::graph {

struct EncoderOptions {
  std::size_t layers = 3;  // L
  std::size_t embed_dim = 64;
  // Average layers 0..L instead of 1..L.
  bool include_layer_zero = false;
};

// Trainable ego embeddings, users first then items.
struct EmbeddingTable {
  std::size_t num_users = 0;
  std::size_t num_items = 0;
  nd::Tensor weights;  // (num_users + num_items) x d

  static EmbeddingTable init(std::size_t num_users, std::size_t num_items, std::size_t dim,
                             SeedStream& rng, double stddev = 0.1);
  std::size_t dim() const { return weights.cols(); }
  std::size_t item_row(std::size_t item) const { return num_users + item; }
};

// e^(0), e^(1), ..., e^(L); all entries share one shape.
using LayerStack = std::vector<nd::Var>;

// One normalised-adjacency hop: e^(l+1) = A_hat e^(l).
nd::Var propagate(const data::NormalizedAdjacency& adj, const nd::Var& embeddings);
LayerStack propagate_layers(const data::NormalizedAdjacency& adj, const nd::Var& ego,
                            std::size_t layers);

// Mean of layers 1..L (or 0..L with include_layer_zero). Needs L >= 1.
nd::Var aggregate_layers(const LayerStack& stack, bool include_layer_zero = false);

// Forward pass without gradient tracking; rows follow the embedding table.
nd::Tensor encode(const data::NormalizedAdjacency& adj, const nd::Tensor& ego,
                  const EncoderOptions& options);

// alphas[l][r] weights the positive of row r at layer l.
using MixWeights = std::vector<std::vector<double>>;

MixWeights draw_mix_weights(std::size_t layers, std::size_t rows, SeedStream& rng);

// Per layer: alpha * positive + (1 - alpha) * negative, row-wise alphas.
LayerStack positive_mix(const LayerStack& positive, const LayerStack& negative,
                        const MixWeights& alphas);
LayerStack positive_mix(const LayerStack& positive, const LayerStack& negative,
                        SeedStream& rng);

// Index of the candidate with the largest inner product with `user`; ties go
// to the lowest index.
std::size_t select_hard_negative(std::span<const double> user,
                                 const std::vector<std::span<const double>>& candidates);

}  // namespace dgcl::graph
