#include "dgcl/vae.hpp"

#include "dgcl/error.hpp"
#include "dgcl/ops.hpp"

namespace dgcl::diffusion {

VaeAugmenter::VaeAugmenter(const VaeOptions& options, SeedStream& rng) : options_(options) {
  enc_in_ = nd::add_linear(params_, "encoder.0", options.dim, options.hidden, rng);
  enc_out_ = nd::add_linear(params_, "encoder.1", options.hidden, 2 * options.latent, rng);
  dec_in_ = nd::add_linear(params_, "decoder.0", options.latent, options.hidden, rng);
  dec_out_ = nd::add_linear(params_, "decoder.1", options.hidden, options.dim, rng);
}

std::pair<nd::Var, nd::Var> VaeAugmenter::encode(const std::vector<nd::Var>& bound,
                                                 const nd::Var& x) const {
  const nd::Var h = nd::silu(nd::apply(enc_in_, bound, x));
  const nd::Var stats = nd::apply(enc_out_, bound, h);
  return {nd::slice_cols(stats, 0, options_.latent),
          nd::slice_cols(stats, options_.latent, options_.latent)};
}

nd::Var VaeAugmenter::decode(const std::vector<nd::Var>& bound, const nd::Var& z) const {
  return nd::apply(dec_out_, bound, nd::silu(nd::apply(dec_in_, bound, z)));
}

VaeAugmenter::Output VaeAugmenter::forward(const std::vector<nd::Var>& bound, const nd::Var& x,
                                           const nd::Tensor& eps) const {
  auto [mean, log_var] = encode(bound, x);
  return {decode(bound, reparameterize(mean, log_var, eps)), mean, log_var};
}

nd::Var VaeAugmenter::loss(const std::vector<nd::Var>& bound, const nd::Var& x,
                           SeedStream& rng) const {
  const std::size_t rows = x.value().rows();
  if (rows == 0) throw ContractError("VAE loss on an empty batch");
  const Output out = forward(bound, x, rng.normal_tensor({rows, options_.latent}));
  const nd::Var diff = nd::sub(x, out.reconstruction);
  const nd::Var recon = nd::scale(nd::sum(nd::mul(diff, diff)), 1.0 / static_cast<double>(rows));
  return nd::add(recon, nd::scale(kl_to_standard_normal(out.mean, out.log_var), options_.kl_weight));
}

nd::Var reparameterize(const nd::Var& mean, const nd::Var& log_var, const nd::Tensor& eps) {
  nd::Tape& tape = *mean.tape();
  const nd::Var sigma = nd::exp(nd::scale(log_var, 0.5));
  return nd::add(mean, nd::mul(sigma, tape.constant(eps)));
}

nd::Var kl_to_standard_normal(const nd::Var& mean, const nd::Var& log_var) {
  nd::Tape& tape = *mean.tape();
  const std::size_t rows = mean.value().rows();
  const nd::Var ones = tape.constant(nd::Tensor(mean.value().shape(), 1.0));
  const nd::Var terms =
      nd::sub(nd::add(nd::mul(mean, mean), nd::exp(log_var)), nd::add(log_var, ones));
  return nd::scale(nd::sum(terms), 0.5 / static_cast<double>(rows));
}

nd::Var vae_augment(const VaeAugmenter& vae, const std::vector<nd::Var>& bound, const nd::Var& e0,
                    SeedStream& rng) {
  const std::size_t rows = e0.value().rows();
  return vae.forward(bound, e0, rng.normal_tensor({rows, vae.options().latent})).reconstruction;
}

}  // namespace dgcl::diffusion
