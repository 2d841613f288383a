#include "dgcl/diffusion.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "dgcl/error.hpp"
#include "dgcl/ops.hpp"

namespace dgcl::diffusion {
namespace {

void check_step(const NoiseSchedule& s, std::size_t t) {
  if (t < 1 || t > s.steps) {
    throw ContractError("diffusion step " + std::to_string(t) + " outside [1, " +
                        std::to_string(s.steps) + "]");
  }
}

void check_same(const nd::Tensor& a, const nd::Tensor& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(what) + ": " + nd::shape_str(a.shape()) + " vs " +
                         nd::shape_str(b.shape()));
  }
}

// ca * a + cb * b
nd::Tensor lincomb(double ca, const nd::Tensor& a, double cb, const nd::Tensor& b) {
  nd::Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = ca * a[i] + cb * b[i];
  return out;
}

}  // namespace

DenoiseFn bind_denoiser(const DenoiserNet& net, const std::vector<nd::Var>& bound) {
  return [&net, bound](const nd::Var& e_t, std::span<const std::size_t> steps) {
    return net.forward(bound, e_t, steps);
  };
}

nd::Tensor q_sample(const NoiseSchedule& s, const nd::Tensor& e0, std::size_t t,
                    const nd::Tensor& eps) {
  check_step(s, t);
  check_same(e0, eps, "q_sample");
  return lincomb(std::sqrt(s.alpha_bar[t]), e0, std::sqrt(1.0 - s.alpha_bar[t]), eps);
}

nd::Var q_sample(const NoiseSchedule& s, const nd::Var& e0, std::size_t t, const nd::Tensor& eps) {
  check_step(s, t);
  check_same(e0.value(), eps, "q_sample");
  nd::Tape& tape = *e0.tape();
  nd::Tensor noise = eps;
  const double c = std::sqrt(1.0 - s.alpha_bar[t]);
  for (double& v : noise.storage()) v *= c;
  return nd::add(nd::scale(e0, std::sqrt(s.alpha_bar[t])), tape.constant(std::move(noise)));
}

nd::Tensor q_sample_rows(const NoiseSchedule& s, const nd::Tensor& e0,
                         std::span<const std::size_t> steps, const nd::Tensor& eps) {
  check_same(e0, eps, "q_sample_rows");
  if (steps.size() != e0.rows()) throw DimensionError("q_sample_rows: one step per row required");
  nd::Tensor out(e0.shape());
  for (std::size_t r = 0; r < e0.rows(); ++r) {
    check_step(s, steps[r]);
    const double a = std::sqrt(s.alpha_bar[steps[r]]);
    const double b = std::sqrt(1.0 - s.alpha_bar[steps[r]]);
    for (std::size_t j = 0; j < e0.cols(); ++j) out.at(r, j) = a * e0.at(r, j) + b * eps.at(r, j);
  }
  return out;
}

nd::Tensor forward_step(const NoiseSchedule& s, const nd::Tensor& e_prev, std::size_t t,
                        const nd::Tensor& eps) {
  check_step(s, t);
  check_same(e_prev, eps, "forward_step");
  return lincomb(std::sqrt(1.0 - s.beta[t]), e_prev, std::sqrt(s.beta[t]), eps);
}

nd::Tensor epsilon_from_x0(const NoiseSchedule& s, const nd::Tensor& e_t,
                           const nd::Tensor& x0_hat, std::size_t t) {
  check_step(s, t);
  check_same(e_t, x0_hat, "epsilon_from_x0");
  const double inv = 1.0 / std::sqrt(1.0 - s.alpha_bar[t]);
  return lincomb(inv, e_t, -std::sqrt(s.alpha_bar[t]) * inv, x0_hat);
}

nd::Tensor posterior_mean_eps(const NoiseSchedule& s, const nd::Tensor& e_t,
                              const nd::Tensor& eps_hat, std::size_t t) {
  check_step(s, t);
  check_same(e_t, eps_hat, "posterior_mean_eps");
  const double inv_sqrt_alpha = 1.0 / std::sqrt(s.alpha[t]);
  const double c = s.beta[t] / std::sqrt(1.0 - s.alpha_bar[t]);
  return lincomb(inv_sqrt_alpha, e_t, -inv_sqrt_alpha * c, eps_hat);
}

nd::Tensor posterior_mean_x0(const NoiseSchedule& s, const nd::Tensor& e_t,
                             const nd::Tensor& x0_hat, std::size_t t) {
  check_step(s, t);
  check_same(e_t, x0_hat, "posterior_mean_x0");
  const double denom = 1.0 - s.alpha_bar[t];
  const double c0 = std::sqrt(s.alpha_bar[t - 1]) * s.beta[t] / denom;
  const double ct = std::sqrt(s.alpha[t]) * (1.0 - s.alpha_bar[t - 1]) / denom;
  return lincomb(c0, x0_hat, ct, e_t);
}

nd::Var diffusion_loss(const DenoiseFn& denoise, nd::Tape& tape, const nd::Tensor& e0,
                       const NoiseSchedule& s, SeedStream& rng) {
  if (e0.rows() == 0) throw ContractError("diffusion_loss on an empty batch");
  std::vector<std::size_t> steps(e0.rows());
  for (auto& t : steps) t = 1 + rng.index(s.steps);
  const nd::Tensor eps = rng.normal_tensor(e0.shape());
  const nd::Var target = tape.constant(e0);
  const nd::Var e_t = tape.constant(q_sample_rows(s, e0, steps, eps));
  const nd::Var diff = nd::sub(target, denoise(e_t, steps));
  return nd::scale(nd::sum(nd::mul(diff, diff)), 1.0 / static_cast<double>(e0.rows()));
}

nd::Var reverse_sample(const DenoiseFn& denoise, const nd::Var& e0, const NoiseSchedule& s,
                       const ReverseOptions& options, SeedStream& rng) {
  check_step(s, options.t_start);
  nd::Tape& tape = *e0.tape();
  const nd::Shape shape = e0.value().shape();
  const std::size_t rows = e0.value().rows();
  const nd::Tensor eps =
      options.inject_noise ? rng.normal_tensor(shape) : nd::Tensor(shape);
  nd::Var e_t = q_sample(s, e0, options.t_start, eps);
  for (std::size_t t = options.t_start; t >= 1; --t) {
    const std::vector<std::size_t> steps(rows, t);
    const nd::Var x0_hat = denoise(e_t, steps);
    const double inv = 1.0 / std::sqrt(1.0 - s.alpha_bar[t]);
    const nd::Var eps_hat = nd::scale(nd::sub(e_t, nd::scale(x0_hat, std::sqrt(s.alpha_bar[t]))), inv);
    nd::Var next = nd::scale(nd::sub(e_t, nd::scale(eps_hat, s.beta[t] * inv)),
                             1.0 / std::sqrt(s.alpha[t]));
    const double sigma = s.sigma(t);
    if (options.inject_noise && sigma > 0.0) {
      next = nd::add(next, tape.constant(rng.normal_tensor(shape, sigma)));
    }
    e_t = next;
  }
  return e_t;
}

}  // namespace dgcl::diffusion
