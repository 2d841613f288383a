#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "dgcl/params.hpp"
#include "dgcl/rng.hpp"
#include "dgcl/tape.hpp"

namespace dgcl::diffusion {

// Sinusoidal step encoding: PE(t, 2i) = sin(t / 10000^(2i/d)),
// PE(t, 2i+1) = cos(t / 10000^(2i/d)). `dim` must be even.
nd::Tensor time_encoding(double t, std::size_t dim);
// One encoding row per entry of `steps`.
nd::Tensor time_encoding_rows(std::span<const std::size_t> steps, std::size_t dim);

struct DenoiserOptions {
  std::size_t dim = 64;
  std::size_t heads = 4;
  std::size_t blocks = 2;
  std::size_t ffn_multiplier = 4;
  // Replace attention by the identity pattern (each row attends to itself);
  // rows are then processed independently.
  bool row_independent = false;
};

// Time-conditioned transformer predicting e0 from (e_t, t).
//
//   (gamma, eta) = TimeMLP(PE(t))          two affine layers, SiLU between
//   h = (gamma + 1) * e_t + eta             FiLM modulation
//   repeat `blocks` times:
//     h = LayerNorm(h + MultiHeadAttention(h))
//     h = LayerNorm(h + FFN(h))
//   e0_hat = h W_out + b_out
//
// The rows of one call form one attention sequence.
class DenoiserNet {
 public:
  DenoiserNet(const DenoiserOptions& options, SeedStream& rng);

  const DenoiserOptions& options() const { return options_; }
  nd::ParamStore& params() { return params_; }
  const nd::ParamStore& params() const { return params_; }

  // `bound` comes from params().bind(); one step per row of e_t.
  nd::Var forward(const std::vector<nd::Var>& bound, const nd::Var& e_t,
                  std::span<const std::size_t> steps) const;

  // Stages of forward(), exposed for inspection.
  std::pair<nd::Var, nd::Var> film_parameters(const std::vector<nd::Var>& bound, nd::Tape& tape,
                                              std::span<const std::size_t> steps) const;
  nd::Var attention(const std::vector<nd::Var>& bound, std::size_t block, const nd::Var& h) const;

 private:
  struct Block {
    nd::Linear query, key, value, output;
    nd::ParamHandle norm1_gain = 0, norm1_bias = 0;
    nd::Linear ffn_in, ffn_out;
    nd::ParamHandle norm2_gain = 0, norm2_bias = 0;
  };

  DenoiserOptions options_;
  nd::ParamStore params_;
  nd::Linear time_in_, time_out_;
  std::vector<Block> blocks_;
  nd::Linear head_;
};

// (gamma + 1) * e + eta
nd::Var film(const nd::Var& e, const nd::Var& gamma, const nd::Var& eta);

}  // namespace dgcl::diffusion
