#pragma once

#include <cstddef>
#include <functional>
#include <span>

#include "dgcl/denoiser.hpp"
#include "dgcl/rng.hpp"
#include "dgcl/schedule.hpp"
#include "dgcl/tape.hpp"

namespace dgcl::diffusion {

// Predicts e0 from (e_t, per-row steps) on the tape of e_t.
using DenoiseFn =
    std::function<nd::Var(const nd::Var& e_t, std::span<const std::size_t> steps)>;

DenoiseFn bind_denoiser(const DenoiserNet& net, const std::vector<nd::Var>& bound);

// e_t = sqrt(abar_t) e0 + sqrt(1 - abar_t) eps, for 1 <= t <= T.
nd::Tensor q_sample(const NoiseSchedule& s, const nd::Tensor& e0, std::size_t t,
                    const nd::Tensor& eps);
nd::Var q_sample(const NoiseSchedule& s, const nd::Var& e0, std::size_t t, const nd::Tensor& eps);
// Same with one step per row.
nd::Tensor q_sample_rows(const NoiseSchedule& s, const nd::Tensor& e0,
                         std::span<const std::size_t> steps, const nd::Tensor& eps);

// One Markov transition q(e_t | e_{t-1}): sqrt(1 - beta_t) e_prev + sqrt(beta_t) eps.
nd::Tensor forward_step(const NoiseSchedule& s, const nd::Tensor& e_prev, std::size_t t,
                        const nd::Tensor& eps);

// Noise implied by an e0 prediction: (e_t - sqrt(abar_t) e0_hat) / sqrt(1 - abar_t).
nd::Tensor epsilon_from_x0(const NoiseSchedule& s, const nd::Tensor& e_t,
                           const nd::Tensor& x0_hat, std::size_t t);
// (1/sqrt(alpha_t)) (e_t - beta_t / sqrt(1 - abar_t) eps_hat)
nd::Tensor posterior_mean_eps(const NoiseSchedule& s, const nd::Tensor& e_t,
                              const nd::Tensor& eps_hat, std::size_t t);
// sqrt(abar_{t-1}) beta_t / (1 - abar_t) x0_hat
//   + sqrt(alpha_t) (1 - abar_{t-1}) / (1 - abar_t) e_t
nd::Tensor posterior_mean_x0(const NoiseSchedule& s, const nd::Tensor& e_t,
                             const nd::Tensor& x0_hat, std::size_t t);

// Mean over rows of ||e0 - f(e_t, t)||^2 with t ~ U{1..T} and eps ~ N(0, I)
// drawn per row. e0 enters as a constant.
nd::Var diffusion_loss(const DenoiseFn& denoise, nd::Tape& tape, const nd::Tensor& e0,
                       const NoiseSchedule& s, SeedStream& rng);

struct ReverseOptions {
  std::size_t t_start = 1;
  // When false both the initial noising and the per-step z are zero.
  bool inject_noise = true;
};

// Noises e0 to step t_start, then runs the reverse chain down to step 0.
// Each step converts the e0 prediction to a noise estimate and applies
//   e_{t-1} = (1/sqrt(alpha_t)) (e_t - beta_t / sqrt(1 - abar_t) eps_hat) + sigma_t z.
// Differentiable w.r.t. e0 (and the denoiser, if its parameters are tracked).
nd::Var reverse_sample(const DenoiseFn& denoise, const nd::Var& e0, const NoiseSchedule& s,
                       const ReverseOptions& options, SeedStream& rng);

}  // namespace dgcl::diffusion
