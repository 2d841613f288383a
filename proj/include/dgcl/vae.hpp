#pragma once

#include <cstddef>
#include <vector>

#include "dgcl/params.hpp"
#include "dgcl/rng.hpp"
#include "dgcl/tape.hpp"

namespace dgcl::diffusion {

struct VaeOptions {
  std::size_t dim = 64;
  std::size_t hidden = 64;
  std::size_t latent = 32;
  double kl_weight = 1.0;
};

// Single-step augmenter used as a baseline against the diffusion chain:
// encoder MLP -> (mu, log sigma^2), z = mu + sigma * eps, decoder MLP.
class VaeAugmenter {
 public:
  VaeAugmenter(const VaeOptions& options, SeedStream& rng);

  struct Output {
    nd::Var reconstruction;
    nd::Var mean;
    nd::Var log_var;
  };

  const VaeOptions& options() const { return options_; }
  nd::ParamStore& params() { return params_; }
  const nd::ParamStore& params() const { return params_; }

  std::pair<nd::Var, nd::Var> encode(const std::vector<nd::Var>& bound, const nd::Var& x) const;
  nd::Var decode(const std::vector<nd::Var>& bound, const nd::Var& z) const;
  // eps has shape rows x latent.
  Output forward(const std::vector<nd::Var>& bound, const nd::Var& x,
                 const nd::Tensor& eps) const;

  // Mean over rows of ||x - recon||^2 + kl_weight * KL(q(z|x) || N(0, I)).
  nd::Var loss(const std::vector<nd::Var>& bound, const nd::Var& x, SeedStream& rng) const;

 private:
  VaeOptions options_;
  nd::ParamStore params_;
  nd::Linear enc_in_, enc_out_, dec_in_, dec_out_;
};

// mu + exp(log_var / 2) * eps
nd::Var reparameterize(const nd::Var& mean, const nd::Var& log_var, const nd::Tensor& eps);

// Mean over rows of 0.5 * sum_j (mu^2 + sigma^2 - log sigma^2 - 1).
nd::Var kl_to_standard_normal(const nd::Var& mean, const nd::Var& log_var);

// One stochastic view of `e0` through the VAE.
nd::Var vae_augment(const VaeAugmenter& vae, const std::vector<nd::Var>& bound, const nd::Var& e0,
                    SeedStream& rng);

}  // namespace dgcl::diffusion
