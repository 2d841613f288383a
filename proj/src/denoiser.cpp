#include "dgcl/denoiser.hpp"

#include <cmath>
#include <string>

#include "dgcl/error.hpp"
#include "dgcl/ops.hpp"

namespace dgcl::diffusion {

nd::Tensor time_encoding(double t, std::size_t dim) {
  if (dim == 0 || dim % 2 != 0) {
    throw ConfigError("time encoding dimension must be even and positive, got " +
                      std::to_string(dim));
  }
  nd::Tensor pe({dim});
  for (std::size_t i = 0; 2 * i < dim; ++i) {
    const double freq = std::pow(10000.0, static_cast<double>(2 * i) / static_cast<double>(dim));
    pe[2 * i] = std::sin(t / freq);
    pe[2 * i + 1] = std::cos(t / freq);
  }
  return pe;
}

nd::Tensor time_encoding_rows(std::span<const std::size_t> steps, std::size_t dim) {
  nd::Tensor out({steps.size(), dim});
  for (std::size_t r = 0; r < steps.size(); ++r) {
    const nd::Tensor pe = time_encoding(static_cast<double>(steps[r]), dim);
    std::copy(pe.storage().begin(), pe.storage().end(), out.row(r).begin());
  }
  return out;
}

nd::Var film(const nd::Var& e, const nd::Var& gamma, const nd::Var& eta) {
  return nd::add(nd::add(e, nd::mul(gamma, e)), eta);
}

DenoiserNet::DenoiserNet(const DenoiserOptions& options, SeedStream& rng) : options_(options) {
  const std::size_t d = options.dim;
  if (d == 0 || d % 2 != 0) throw ConfigError("denoiser dimension must be even");
  if (options.heads == 0 || d % options.heads != 0) {
    throw ConfigError("embedding dimension " + std::to_string(d) +
                      " is not divisible by head count " + std::to_string(options.heads));
  }
  time_in_ = nd::add_linear(params_, "time_mlp.0", d, d, rng);
  // Small initial modulation keeps the FiLM stage close to identity.
  time_out_ = nd::add_linear(params_, "time_mlp.1", d, 2 * d, rng, 0.1);
  for (std::size_t b = 0; b < options.blocks; ++b) {
    const std::string p = "block" + std::to_string(b) + ".";
    Block blk;
    blk.query = nd::add_linear(params_, p + "attn.query", d, d, rng);
    blk.key = nd::add_linear(params_, p + "attn.key", d, d, rng);
    blk.value = nd::add_linear(params_, p + "attn.value", d, d, rng);
    blk.output = nd::add_linear(params_, p + "attn.output", d, d, rng);
    blk.norm1_gain = params_.add(p + "norm1.gain", nd::Tensor({d}, 1.0));
    blk.norm1_bias = params_.add(p + "norm1.bias", nd::Tensor({d}));
    const std::size_t hidden = options.ffn_multiplier * d;
    blk.ffn_in = nd::add_linear(params_, p + "ffn.0", d, hidden, rng);
    blk.ffn_out = nd::add_linear(params_, p + "ffn.1", hidden, d, rng);
    blk.norm2_gain = params_.add(p + "norm2.gain", nd::Tensor({d}, 1.0));
    blk.norm2_bias = params_.add(p + "norm2.bias", nd::Tensor({d}));
    blocks_.push_back(blk);
  }
  head_ = nd::add_linear(params_, "head", d, d, rng, 0.1);
}

std::pair<nd::Var, nd::Var> DenoiserNet::film_parameters(const std::vector<nd::Var>& bound,
                                                         nd::Tape& tape,
                                                         std::span<const std::size_t> steps) const {
  const std::size_t d = options_.dim;
  const nd::Var pe = tape.constant(time_encoding_rows(steps, d));
  const nd::Var hidden = nd::silu(nd::apply(time_in_, bound, pe));
  const nd::Var out = nd::apply(time_out_, bound, hidden);
  return {nd::slice_cols(out, 0, d), nd::slice_cols(out, d, d)};
}

nd::Var DenoiserNet::attention(const std::vector<nd::Var>& bound, std::size_t block,
                               const nd::Var& h) const {
  const Block& blk = blocks_.at(block);
  const nd::Var v = nd::apply(blk.value, bound, h);
  if (options_.row_independent) return nd::apply(blk.output, bound, v);

  const nd::Var q = nd::apply(blk.query, bound, h);
  const nd::Var k = nd::apply(blk.key, bound, h);
  const std::size_t dk = options_.dim / options_.heads;
  const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(dk));
  std::vector<nd::Var> heads;
  for (std::size_t hd = 0; hd < options_.heads; ++hd) {
    const nd::Var qh = nd::slice_cols(q, hd * dk, dk);
    const nd::Var kh = nd::slice_cols(k, hd * dk, dk);
    const nd::Var vh = nd::slice_cols(v, hd * dk, dk);
    const nd::Var weights =
        nd::softmax_rows(nd::scale(nd::matmul(qh, nd::transpose(kh)), inv_sqrt_dk));
    heads.push_back(nd::matmul(weights, vh));
  }
  const nd::Var merged = heads.size() == 1 ? heads.front() : nd::concat_cols(heads);
  return nd::apply(blk.output, bound, merged);
}

nd::Var DenoiserNet::forward(const std::vector<nd::Var>& bound, const nd::Var& e_t,
                             std::span<const std::size_t> steps) const {
  if (bound.size() != params_.size()) {
    throw ContractError("denoiser: bound parameter count does not match the store");
  }
  const auto& shape = e_t.value().shape();
  if (shape.size() != 2 || shape[1] != options_.dim || shape[0] != steps.size()) {
    throw DimensionError("denoiser input " + nd::shape_str(shape) + " with " +
                         std::to_string(steps.size()) + " steps, model dim " +
                         std::to_string(options_.dim));
  }
  nd::Tape& tape = *e_t.tape();
  auto [gamma, eta] = film_parameters(bound, tape, steps);
  nd::Var h = film(e_t, gamma, eta);
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    const Block& blk = blocks_[b];
    h = nd::layer_norm(nd::add(h, attention(bound, b, h)), bound[blk.norm1_gain],
                       bound[blk.norm1_bias]);
    const nd::Var ffn =
        nd::apply(blk.ffn_out, bound, nd::silu(nd::apply(blk.ffn_in, bound, h)));
    h = nd::layer_norm(nd::add(h, ffn), bound[blk.norm2_gain], bound[blk.norm2_bias]);
  }
  return nd::apply(head_, bound, h);
}

}  // namespace dgcl::diffusion
