#include <gtest/gtest.h>

#include <cmath>

#include "dgcl/adam.hpp"
#include "dgcl/denoiser.hpp"
#include "dgcl/diffusion.hpp"
#include "dgcl/error.hpp"
#include "dgcl/ops.hpp"
#include "dgcl/schedule.hpp"
#include "dgcl/vae.hpp"
#include "grad_check.hpp"

namespace dgcl::diffusion {
namespace {

constexpr double kBetaMin = 1e-5;
constexpr double kBetaMax = 2e-2;
const ScheduleKind kAllKinds[] = {ScheduleKind::kLinear, ScheduleKind::kQuadratic,
                                  ScheduleKind::kSigmoid};

nd::ParamHandle find_param(const nd::ParamStore& store, const std::string& name) {
  for (nd::ParamHandle h = 0; h < store.size(); ++h)
    if (store.name(h) == name) return h;
  throw std::runtime_error("no parameter " + name);
}

// Ignores e_t and returns the true e0.
DenoiseFn oracle(const nd::Tensor& e0) {
  return [e0](const nd::Var& e_t, std::span<const std::size_t>) {
    return e_t.tape()->constant(e0);
  };
}

// ---- schedules ----

TEST(Schedule, LinearTwoSteps) {
  const auto s = build_schedule(ScheduleKind::kLinear, 2, kBetaMin, kBetaMax);
  EXPECT_EQ(s.beta[1], 1e-5);
  EXPECT_EQ(s.beta[2], 2e-2);
  EXPECT_NEAR(s.alpha_bar[2], (1 - 1e-5) * (1 - 2e-2), 1e-15);
  EXPECT_NEAR(s.alpha_bar[2], 0.9799902, 1e-12);
}

TEST(Schedule, SingleStepUsesBetaMin) {
  for (ScheduleKind kind : kAllKinds) {
    const auto s = build_schedule(kind, 1, kBetaMin, kBetaMax);
    EXPECT_EQ(s.beta[1], kBetaMin);
    EXPECT_EQ(s.posterior_variance[1], 0.0);
  }
}

TEST(Schedule, InvariantsForAllKinds) {
  for (ScheduleKind kind : kAllKinds) {
    for (std::size_t T : {2u, 10u, 30u, 50u}) {
      const auto s = build_schedule(kind, T, kBetaMin, kBetaMax);
      EXPECT_EQ(s.beta[1], kBetaMin);
      EXPECT_EQ(s.beta[T], kBetaMax);
      EXPECT_EQ(s.alpha_bar[0], 1.0);
      EXPECT_EQ(s.posterior_variance[1], 0.0);
      EXPECT_EQ(s.sigma(1), 0.0);
      for (std::size_t t = 1; t <= T; ++t) {
        EXPECT_GT(s.beta[t], 0.0);
        EXPECT_LT(s.beta[t], 1.0);
        EXPECT_LT(s.alpha_bar[t], s.alpha_bar[t - 1]) << to_string(kind) << " t=" << t;
        EXPECT_DOUBLE_EQ(s.posterior_variance[t] * (1.0 - s.alpha_bar[t]),
                         (1.0 - s.alpha_bar[t - 1]) * s.beta[t]);
        if (t > 1) EXPECT_GE(s.beta[t], s.beta[t - 1]);
      }
    }
  }
}

TEST(Schedule, DefaultDepthKeepsSignal) {
  const auto s = build_schedule(ScheduleKind::kLinear, 30, kBetaMin, kBetaMax);
  EXPECT_NEAR(s.alpha_bar[30], 0.74, 0.01);
}

TEST(Schedule, RejectsBadConfig) {
  EXPECT_THROW(parse_schedule_kind("cosine"), ConfigError);
  EXPECT_THROW(build_schedule(ScheduleKind::kLinear, 0, kBetaMin, kBetaMax), ConfigError);
  EXPECT_THROW(build_schedule(ScheduleKind::kLinear, 5, 0.0, kBetaMax), ConfigError);
  EXPECT_THROW(build_schedule(ScheduleKind::kLinear, 5, 0.3, 0.2), ConfigError);
  EXPECT_THROW(build_schedule(ScheduleKind::kLinear, 5, 0.1, 1.0), ConfigError);
  for (ScheduleKind kind : kAllKinds) EXPECT_EQ(parse_schedule_kind(to_string(kind)), kind);
}

// ---- forward noising ----

TEST(QSample, ZeroNoiseScalesByRootAlphaBar) {
  const auto s = build_schedule(ScheduleKind::kLinear, 10, kBetaMin, kBetaMax);
  const nd::Tensor e0 = nd::Tensor::matrix({{1, -2}, {0.5, 3}});
  const nd::Tensor out = q_sample(s, e0, 7, nd::Tensor({2, 2}));
  for (std::size_t k = 0; k < 4; ++k) EXPECT_DOUBLE_EQ(out[k], std::sqrt(s.alpha_bar[7]) * e0[k]);
}

TEST(QSample, SmallBetaLimitIsIdentity) {
  const auto s = build_schedule(ScheduleKind::kLinear, 3, 1e-14, 1e-14);
  SeedStream rng(1);
  const nd::Tensor e0 = rng.normal_tensor({3, 4});
  EXPECT_LT(nd::max_abs_diff(q_sample(s, e0, 3, rng.normal_tensor({3, 4})), e0), 1e-6);
}

TEST(QSample, StepOutOfRangeIsContractError) {
  const auto s = build_schedule(ScheduleKind::kLinear, 4, kBetaMin, kBetaMax);
  const nd::Tensor e0({1, 2});
  EXPECT_THROW(q_sample(s, e0, 0, e0), ContractError);
  EXPECT_THROW(q_sample(s, e0, 5, e0), ContractError);
}

// Per-coordinate mean and variance of `draws` against (mean, var) within
// three standard errors.
void expect_moments(const std::vector<nd::Tensor>& draws, const nd::Tensor& mean, double var) {
  const double n = static_cast<double>(draws.size());
  for (std::size_t k = 0; k < mean.size(); ++k) {
    double m = 0.0;
    for (const auto& d : draws) m += d[k];
    m /= n;
    double v = 0.0;
    for (const auto& d : draws) v += (d[k] - m) * (d[k] - m);
    v /= n - 1.0;
    EXPECT_LT(std::abs(m - mean[k]), 3.0 * std::sqrt(var / n)) << "coord " << k;
    EXPECT_LT(std::abs(v - var), 3.0 * var * std::sqrt(2.0 / (n - 1.0))) << "coord " << k;
  }
}

TEST(QSample, MarginalMomentsAllSchedules) {
  const nd::Tensor e0 = nd::Tensor::matrix({{0.8, -1.5, 0.1}});
  const std::size_t T = 30;
  for (ScheduleKind kind : kAllKinds) {
    const auto s = build_schedule(kind, T, kBetaMin, kBetaMax);
    for (std::size_t t : {std::size_t{1}, T / 2, T}) {
      SeedStream rng(100 + t);
      std::vector<nd::Tensor> draws;
      for (int k = 0; k < 10000; ++k) draws.push_back(q_sample(s, e0, t, rng.normal_tensor({1, 3})));
      nd::Tensor mean = e0;
      for (double& v : mean.storage()) v *= std::sqrt(s.alpha_bar[t]);
      expect_moments(draws, mean, 1.0 - s.alpha_bar[t]);
    }
  }
}

TEST(QSample, SequentialStepsMatchClosedForm) {
  const nd::Tensor e0 = nd::Tensor::matrix({{0.8, -1.5, 0.1}});
  const auto s = build_schedule(ScheduleKind::kLinear, 30, kBetaMin, kBetaMax);
  SeedStream rng(9);
  std::vector<nd::Tensor> draws;
  for (int k = 0; k < 10000; ++k) {
    nd::Tensor e = e0;
    for (std::size_t t = 1; t <= 30; ++t) e = forward_step(s, e, t, rng.normal_tensor({1, 3}));
    draws.push_back(std::move(e));
  }
  nd::Tensor mean = e0;
  for (double& v : mean.storage()) v *= std::sqrt(s.alpha_bar[30]);
  expect_moments(draws, mean, 1.0 - s.alpha_bar[30]);
}

TEST(QSample, RowStepsMatchScalarSteps) {
  const auto s = build_schedule(ScheduleKind::kQuadratic, 20, kBetaMin, kBetaMax);
  SeedStream rng(3);
  const nd::Tensor e0 = rng.normal_tensor({3, 2});
  const nd::Tensor eps = rng.normal_tensor({3, 2});
  const std::vector<std::size_t> steps{1, 11, 20};
  const nd::Tensor rows = q_sample_rows(s, e0, steps, eps);
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t c = 0; c < 2; ++c) {
      const double expected = std::sqrt(s.alpha_bar[steps[r]]) * e0.at(r, c) +
                              std::sqrt(1.0 - s.alpha_bar[steps[r]]) * eps.at(r, c);
      EXPECT_DOUBLE_EQ(rows.at(r, c), expected);
    }
  }
}

// ---- posterior ----

TEST(Posterior, EpsilonFormEqualsX0Form) {
  SeedStream rng(21);
  for (ScheduleKind kind : kAllKinds) {
    const auto s = build_schedule(kind, 30, kBetaMin, kBetaMax);
    for (std::size_t t = 1; t <= 30; ++t) {
      const nd::Tensor e_t = rng.normal_tensor({4, 5});
      const nd::Tensor x0 = rng.normal_tensor({4, 5});
      const nd::Tensor via_eps = posterior_mean_eps(s, e_t, epsilon_from_x0(s, e_t, x0, t), t);
      EXPECT_LT(nd::max_abs_diff(via_eps, posterior_mean_x0(s, e_t, x0, t)), 1e-10)
          << to_string(kind) << " t=" << t;
    }
  }
}

// ---- time encoding ----

TEST(TimeEncoding, Examples) {
  const nd::Tensor zero = time_encoding(0, 6);
  EXPECT_EQ(zero, nd::Tensor::vector({0, 1, 0, 1, 0, 1}));
  const nd::Tensor one = time_encoding(1, 8);
  EXPECT_NEAR(one[0], 0.84147, 1e-5);
  EXPECT_NEAR(one[1], 0.54030, 1e-5);
  EXPECT_THROW(time_encoding(1, 5), ConfigError);
}

TEST(TimeEncoding, InjectiveOverSteps) {
  for (std::size_t d : {4u, 8u, 64u}) {
    for (std::size_t a = 0; a <= 50; ++a)
      for (std::size_t b = a + 1; b <= 50; ++b)
        EXPECT_GT(nd::max_abs_diff(time_encoding(a, d), time_encoding(b, d)), 0.0);
  }
}

// ---- denoiser ----

DenoiserOptions small_options(bool row_independent = false) {
  DenoiserOptions o;
  o.dim = 4;
  o.heads = 2;
  o.row_independent = row_independent;
  return o;
}

TEST(Denoiser, HeadCountMustDivideDim) {
  SeedStream rng(1);
  DenoiserOptions o = small_options();
  o.heads = 3;
  EXPECT_THROW(DenoiserNet(o, rng), ConfigError);
}

TEST(Denoiser, ZeroModulationIsIdentity) {
  SeedStream rng(2);
  DenoiserNet net(small_options(), rng);
  auto& p = net.params();
  p[find_param(p, "time_mlp.1.weight")] = nd::Tensor(p[find_param(p, "time_mlp.1.weight")].shape());
  p[find_param(p, "time_mlp.1.bias")] = nd::Tensor(p[find_param(p, "time_mlp.1.bias")].shape());
  nd::Tape tape;
  const auto bound = p.bind(tape, false);
  const nd::Tensor e = rng.normal_tensor({3, 4});
  const std::vector<std::size_t> steps{1, 5, 9};
  auto [gamma, eta] = net.film_parameters(bound, tape, steps);
  EXPECT_EQ(film(tape.constant(e), gamma, eta).value(), e);
}

TEST(Denoiser, FilmFormula) {
  nd::Tape tape;
  const nd::Var e = tape.constant(nd::Tensor::matrix({{2, -1}}));
  const nd::Var g = tape.constant(nd::Tensor::matrix({{0.5, 1}}));
  const nd::Var h = tape.constant(nd::Tensor::matrix({{0.25, 3}}));
  EXPECT_EQ(film(e, g, h).value(), nd::Tensor::matrix({{3.25, 1}}));
}

TEST(Denoiser, SingleTokenAttentionIsProjectedValue) {
  SeedStream a(3), b(3);
  const DenoiserNet full(small_options(false), a);
  const DenoiserNet ident(small_options(true), b);
  nd::Tape tape;
  const auto bound_full = full.params().bind(tape, false);
  const auto bound_ident = ident.params().bind(tape, false);
  SeedStream rng(4);
  const nd::Var h = tape.constant(rng.normal_tensor({1, 4}));
  EXPECT_LT(nd::max_abs_diff(full.attention(bound_full, 0, h).value(),
                             ident.attention(bound_ident, 0, h).value()),
            1e-14);
}

TEST(Denoiser, RowIndependentModeDoesNotMixRows) {
  SeedStream rng(5);
  const DenoiserNet net(small_options(true), rng);
  const nd::Tensor e = rng.normal_tensor({3, 4});
  nd::Tensor perturbed = e;
  perturbed.at(2, 0) += 1.0;
  const std::vector<std::size_t> steps{2, 4, 6};
  auto run = [&](const nd::Tensor& x) {
    nd::Tape tape;
    return net.forward(net.params().bind(tape, false), tape.constant(x), steps).value();
  };
  const nd::Tensor base = run(e), moved = run(perturbed);
  for (std::size_t r = 0; r < 2; ++r)
    for (std::size_t c = 0; c < 4; ++c) EXPECT_EQ(base.at(r, c), moved.at(r, c));
  EXPECT_NE(base.at(2, 0), moved.at(2, 0));

  // With attention on, rows do interact.
  SeedStream rng2(5);
  const DenoiserNet mixing(small_options(false), rng2);
  nd::Tape t1, t2;
  const auto o1 = mixing.forward(mixing.params().bind(t1, false), t1.constant(e), steps).value();
  const auto o2 =
      mixing.forward(mixing.params().bind(t2, false), t2.constant(perturbed), steps).value();
  EXPECT_NE(o1.at(0, 0), o2.at(0, 0));
}

TEST(Denoiser, ForwardGradientMatchesFiniteDifferences) {
  SeedStream rng(6);
  const DenoiserNet net(small_options(), rng);
  const std::vector<std::size_t> steps{3, 17};
  std::vector<nd::Tensor> inputs{testing::random_tensor({2, 4}, rng, -1, 1)};
  for (nd::ParamHandle h = 0; h < net.params().size(); ++h) inputs.push_back(net.params()[h]);
  const auto f = [&](nd::Tape&, const std::vector<nd::Var>& v) {
    const std::vector<nd::Var> bound(v.begin() + 1, v.end());
    return net.forward(bound, v[0], steps);
  };
  EXPECT_LT(testing::max_gradient_error(f, inputs, rng), 1e-4);
}

TEST(Denoiser, RejectsMismatchedShapes) {
  SeedStream rng(7);
  const DenoiserNet net(small_options(), rng);
  nd::Tape tape;
  const auto bound = net.params().bind(tape, false);
  const std::vector<std::size_t> steps{1};
  EXPECT_THROW(net.forward(bound, tape.constant(nd::Tensor({1, 6})), steps), DimensionError);
  EXPECT_THROW(net.forward(bound, tape.constant(nd::Tensor({2, 4})), steps), DimensionError);
}

// ---- diffusion loss ----

TEST(DiffusionLoss, PerfectOracleIsZero) {
  const auto s = build_schedule(ScheduleKind::kLinear, 10, kBetaMin, kBetaMax);
  SeedStream rng(8);
  const nd::Tensor e0 = rng.normal_tensor({5, 3});
  nd::Tape tape;
  EXPECT_EQ(diffusion_loss(oracle(e0), tape, e0, s, rng).value().item(), 0.0);
}

TEST(DiffusionLoss, ZeroNetOnUnitRowsIsOne) {
  const auto s = build_schedule(ScheduleKind::kLinear, 10, kBetaMin, kBetaMax);
  SeedStream rng(8);
  const nd::Tensor e0 = nd::Tensor::matrix({{1, 0, 0}, {0, 0.6, 0.8}, {0, -1, 0}});
  const DenoiseFn zero = [](const nd::Var& e_t, std::span<const std::size_t>) {
    return e_t.tape()->constant(nd::Tensor(e_t.value().shape()));
  };
  nd::Tape tape;
  EXPECT_NEAR(diffusion_loss(zero, tape, e0, s, rng).value().item(), 1.0, 1e-15);
}

TEST(DiffusionLoss, EmptyBatchIsContractError) {
  const auto s = build_schedule(ScheduleKind::kLinear, 10, kBetaMin, kBetaMax);
  SeedStream rng(8);
  nd::Tape tape;
  EXPECT_THROW(diffusion_loss(oracle(nd::Tensor({0, 3})), tape, nd::Tensor({0, 3}), s, rng),
               ContractError);
}

TEST(DiffusionLoss, TrainingHalvesTheLoss) {
  SeedStream rng(11);
  DenoiserOptions o;
  o.dim = 8;
  o.heads = 2;
  DenoiserNet net(o, rng);
  const auto s = build_schedule(ScheduleKind::kLinear, 30, kBetaMin, kBetaMax);
  const nd::Tensor batch = rng.normal_tensor({64, 8}, 0.5);
  nd::AdamState adam(nd::AdamOptions{.learning_rate = 1e-2});

  auto step_loss = [&](bool update) {
    nd::Tape tape;
    const auto bound = net.params().bind(tape, update);
    const nd::Var loss = diffusion_loss(bind_denoiser(net, bound), tape, batch, s, rng);
    if (update) {
      tape.backward(loss);
      std::vector<nd::Tensor> grads;
      for (const auto& b : bound) grads.push_back(*tape.gradient(b));
      std::vector<const nd::Tensor*> gp;
      for (const auto& g : grads) gp.push_back(&g);
      const auto params = net.params().tensors();
      adam.update(params, gp);
    }
    return loss.value().item();
  };
  const double initial = step_loss(false);
  double last = initial;
  for (int k = 0; k < 200; ++k) last = step_loss(true);
  const double final_loss = step_loss(false);
  EXPECT_LT(final_loss, 0.5 * initial) << "initial " << initial << " last " << last;
}

TEST(DiffusionLoss, EncoderInputGetsNoGradient) {
  SeedStream rng(12);
  const DenoiserNet net(small_options(), rng);
  const auto s = build_schedule(ScheduleKind::kLinear, 10, kBetaMin, kBetaMax);
  nd::Tape tape;
  const auto bound = net.params().bind(tape, true);
  const nd::Var loss =
      diffusion_loss(bind_denoiser(net, bound), tape, rng.normal_tensor({3, 4}), s, rng);
  tape.backward(loss);
  double norm = 0.0;
  for (const auto& b : bound)
    for (double g : tape.gradient(b)->storage()) norm += g * g;
  EXPECT_GT(norm, 0.0);
}

// ---- reverse chain ----

TEST(ReverseSample, OneStepOracleIsExact) {
  const auto s = build_schedule(ScheduleKind::kLinear, 30, kBetaMin, kBetaMax);
  SeedStream rng(13);
  const nd::Tensor e0 = rng.normal_tensor({4, 3});
  nd::Tape tape;
  const nd::Var out =
      reverse_sample(oracle(e0), tape.constant(e0), s, ReverseOptions{.t_start = 1}, rng);
  EXPECT_LT(nd::max_abs_diff(out.value(), e0), 1e-12);
}

TEST(ReverseSample, NoiselessOracleRecoversInputFromAnyStart) {
  SeedStream rng(14);
  for (ScheduleKind kind : kAllKinds) {
    const auto s = build_schedule(kind, 50, kBetaMin, kBetaMax);
    const nd::Tensor e0 = rng.normal_tensor({4, 3});
    for (std::size_t t = 1; t <= 50; ++t) {
      nd::Tape tape;
      const nd::Var out = reverse_sample(oracle(e0), tape.constant(e0), s,
                                         ReverseOptions{.t_start = t, .inject_noise = false}, rng);
      EXPECT_LT(nd::max_abs_diff(out.value(), e0), 1e-8) << to_string(kind) << " t=" << t;
    }
  }
}

TEST(ReverseSample, StartOutOfRangeIsContractError) {
  const auto s = build_schedule(ScheduleKind::kLinear, 5, kBetaMin, kBetaMax);
  SeedStream rng(1);
  const nd::Tensor e0({1, 2}, 1.0);
  nd::Tape tape;
  EXPECT_THROW(reverse_sample(oracle(e0), tape.constant(e0), s, {.t_start = 0}, rng),
               ContractError);
  EXPECT_THROW(reverse_sample(oracle(e0), tape.constant(e0), s, {.t_start = 6}, rng),
               ContractError);
}

TEST(ReverseSample, RandomNetOutputIsBounded) {
  const auto s = build_schedule(ScheduleKind::kLinear, 30, kBetaMin, kBetaMax);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    SeedStream rng(seed);
    const DenoiserNet net(small_options(), rng);
    const nd::Tensor e0 = rng.normal_tensor({6, 4});
    nd::Tape tape;
    const auto bound = net.params().bind(tape, false);
    const nd::Var out =
        reverse_sample(bind_denoiser(net, bound), tape.constant(e0), s, {.t_start = 30}, rng);
    ASSERT_TRUE(out.value().all_finite());
    double in_norm = 0, out_norm = 0;
    for (double v : e0.storage()) in_norm += v * v;
    for (double v : out.value().storage()) out_norm += v * v;
    EXPECT_LT(std::sqrt(out_norm), 10.0 * std::sqrt(in_norm)) << "seed " << seed;
  }
}

TEST(ReverseSample, GradientFlowsToInputThroughFrozenNet) {
  SeedStream rng(15);
  const DenoiserNet net(small_options(), rng);
  const auto s = build_schedule(ScheduleKind::kLinear, 5, kBetaMin, kBetaMax);
  const auto f = [&](nd::Tape& tape, const std::vector<nd::Var>& v) {
    SeedStream local(77);  // same noise for every evaluation
    const auto bound = net.params().bind(tape, false);
    return reverse_sample(bind_denoiser(net, bound), v[0], s, {.t_start = 3}, local);
  };
  EXPECT_LT(testing::max_gradient_error(f, {testing::random_tensor({3, 4}, rng, -1, 1)}, rng),
            1e-4);
}

TEST(ReverseSample, SameSeedSameView) {
  SeedStream init(16);
  const DenoiserNet net(small_options(), init);
  const auto s = build_schedule(ScheduleKind::kLinear, 10, kBetaMin, kBetaMax);
  const nd::Tensor e0 = init.normal_tensor({3, 4});
  auto draw = [&](std::uint64_t seed) {
    SeedStream rng(seed);
    nd::Tape tape;
    const auto bound = net.params().bind(tape, false);
    return reverse_sample(bind_denoiser(net, bound), tape.constant(e0), s, {.t_start = 10}, rng)
        .value();
  };
  EXPECT_EQ(draw(1), draw(1));
  EXPECT_NE(draw(1), draw(2));
}

// ---- VAE ----

TEST(Vae, KlExamples) {
  nd::Tape tape;
  const nd::Var zeros = tape.constant(nd::Tensor({2, 3}));
  EXPECT_EQ(kl_to_standard_normal(zeros, zeros).value().item(), 0.0);
  const nd::Var mu = tape.constant(nd::Tensor::matrix({{1.5, -2.0, 0.5}}));
  const nd::Var lv = tape.constant(nd::Tensor({1, 3}));
  EXPECT_NEAR(kl_to_standard_normal(mu, lv).value().item(), (2.25 + 4.0 + 0.25) / 2.0, 1e-15);
}

TEST(Vae, ZeroVarianceIsDeterministic) {
  SeedStream rng(17);
  nd::Tape tape;
  const nd::Var mu = tape.constant(rng.normal_tensor({2, 3}));
  const nd::Var lv = tape.constant(nd::Tensor({2, 3}, -2000.0));
  EXPECT_EQ(reparameterize(mu, lv, rng.normal_tensor({2, 3})).value(), mu.value());
}

TEST(Vae, OutputShapeMatchesInputAndLossGradient) {
  SeedStream rng(18);
  const VaeAugmenter vae(VaeOptions{.dim = 4, .hidden = 6, .latent = 3}, rng);
  nd::Tape tape;
  const auto bound = vae.params().bind(tape, false);
  const nd::Tensor x = rng.normal_tensor({5, 4});
  EXPECT_EQ(vae_augment(vae, bound, tape.constant(x), rng).value().shape(), x.shape());

  std::vector<nd::Tensor> inputs{x};
  for (nd::ParamHandle h = 0; h < vae.params().size(); ++h) inputs.push_back(vae.params()[h]);
  const auto f = [&](nd::Tape&, const std::vector<nd::Var>& v) {
    SeedStream local(3);
    const std::vector<nd::Var> b(v.begin() + 1, v.end());
    return vae.loss(b, v[0], local);
  };
  EXPECT_LT(testing::max_gradient_error(f, inputs, rng), 1e-4);
}

TEST(Vae, ZeroVarianceForwardMatchesAutoencoder) {
  SeedStream rng(19);
  const VaeAugmenter vae(VaeOptions{.dim = 4, .hidden = 6, .latent = 3}, rng);
  nd::Tape tape;
  const auto bound = vae.params().bind(tape, false);
  const nd::Var x = tape.constant(rng.normal_tensor({2, 4}));
  const auto out = vae.forward(bound, x, nd::Tensor({2, 3}));
  EXPECT_EQ(out.reconstruction.value(), vae.decode(bound, out.mean).value());
}

}  // namespace
}  // namespace dgcl::diffusion
