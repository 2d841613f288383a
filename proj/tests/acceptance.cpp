// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Runs the property checks and the desk-scale experiments on
// the synthetic block dataset with default hyperparameters.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dgcl/cli.hpp"
#include "dgcl/contrastive.hpp"
#include "dgcl/denoiser.hpp"
#include "dgcl/diffusion.hpp"
#include "dgcl/encoder.hpp"
#include "dgcl/experiments.hpp"
#include "dgcl/metrics.hpp"
#include "dgcl/ops.hpp"
#include "dgcl/trainer.hpp"
#include "dgcl/vae.hpp"
#include "grad_check.hpp"

namespace {

using namespace dgcl;
using Clock = std::chrono::steady_clock;
using testing::max_gradient_error;
using testing::random_tensor;

constexpr double kBetaMin = 1e-5;
constexpr double kBetaMax = 2e-2;
const diffusion::ScheduleKind kKinds[] = {diffusion::ScheduleKind::kLinear,
                                          diffusion::ScheduleKind::kQuadratic,
                                          diffusion::ScheduleKind::kSigmoid};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream os;
  os << std::setprecision(precision) << v;
  return os.str();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const std::function<Outcome()>& check) {
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  if (!o.pass) ++failures;
  std::cout << (o.pass ? "PASS" : "FAIL") << " [" << std::setw(2) << id << "] " << name << ": "
            << o.detail << std::endl;
}

// ---- 1. autodiff ----

Outcome check_autodiff() {
  using nd::Tape;
  using nd::Tensor;
  using nd::Var;
  using Args = const std::vector<Var>&;
  SeedStream rng(2024);
  const auto t0 = Clock::now();

  // Each case draws fresh random shapes and inputs per trial.
  struct Case {
    std::string name;
    std::function<std::pair<testing::TapeFn, std::vector<Tensor>>(SeedStream&)> make;
  };
  auto dims = [](SeedStream& r, std::size_t lo_cols = 1) {
    return std::make_pair(1 + r.index(4), lo_cols + r.index(5));
  };
  auto unary = [&](std::string name, Var (*op)(const Var&), double lo = -2.0, double hi = 2.0,
                   std::size_t lo_cols = 1) {
    return Case{name, [=](SeedStream& r) {
                  const auto [m, n] = dims(r, lo_cols);
                  return std::make_pair(testing::TapeFn([op](Tape&, Args v) { return op(v[0]); }),
                                        std::vector<Tensor>{random_tensor({m, n}, r, lo, hi)});
                }};
  };
  auto binary = [&](std::string name, Var (*op)(const Var&, const Var&)) {
    return Case{name, [=](SeedStream& r) {
                  const auto [m, n] = dims(r);
                  return std::make_pair(
                      testing::TapeFn([op](Tape&, Args v) { return op(v[0], v[1]); }),
                      std::vector<Tensor>{random_tensor({m, n}, r), random_tensor({m, n}, r)});
                }};
  };

  std::vector<Case> cases{
      binary("add", nd::add),
      binary("sub", nd::sub),
      binary("mul", nd::mul),
      binary("row_dot", nd::row_dot),
      unary("transpose", nd::transpose),
      unary("sum", nd::sum),
      unary("mean", nd::mean),
      unary("exp", nd::exp),
      unary("log", nd::log, 0.5, 3.0),
      unary("silu", nd::silu),
      unary("softplus", nd::softplus),
      unary("softmax_rows", nd::softmax_rows),
      unary("logsumexp_rows", nd::logsumexp_rows),
      unary("normalize_rows", nd::normalize_rows, -2.0, 2.0, 2),
      {"matmul",
       [](SeedStream& r) {
         const std::size_t m = 1 + r.index(4), k = 1 + r.index(4), n = 1 + r.index(4);
         return std::make_pair(testing::TapeFn([](Tape&, Args v) { return nd::matmul(v[0], v[1]); }),
                               std::vector<Tensor>{random_tensor({m, k}, r), random_tensor({k, n}, r)});
       }},
      {"scale",
       [&](SeedStream& r) {
         const auto [m, n] = dims(r);
         const double c = -2.0 + 4.0 * r.uniform();
         return std::make_pair(testing::TapeFn([c](Tape&, Args v) { return nd::scale(v[0], c); }),
                               std::vector<Tensor>{random_tensor({m, n}, r)});
       }},
      {"add_row",
       [&](SeedStream& r) {
         const auto [m, n] = dims(r);
         return std::make_pair(testing::TapeFn([](Tape&, Args v) { return nd::add_row(v[0], v[1]); }),
                               std::vector<Tensor>{random_tensor({m, n}, r), random_tensor({n}, r)});
       }},
      {"scale_rows",
       [&](SeedStream& r) {
         const auto [m, n] = dims(r);
         return std::make_pair(
             testing::TapeFn([](Tape&, Args v) { return nd::scale_rows(v[0], v[1]); }),
             std::vector<Tensor>{random_tensor({m, n}, r), random_tensor({m}, r)});
       }},
      {"layer_norm",
       [&](SeedStream& r) {
         const auto [m, n] = dims(r, 2);
         return std::make_pair(
             testing::TapeFn([](Tape&, Args v) { return nd::layer_norm(v[0], v[1], v[2]); }),
             std::vector<Tensor>{random_tensor({m, n}, r), random_tensor({n}, r),
                                 random_tensor({n}, r)});
       }},
      {"gather_rows",
       [&](SeedStream& r) {
         const auto [m, n] = dims(r);
         std::vector<std::size_t> ids(1 + r.index(6));
         for (auto& id : ids) id = r.index(m);  // duplicates included
         return std::make_pair(
             testing::TapeFn([ids](Tape&, Args v) { return nd::gather_rows(v[0], ids); }),
             std::vector<Tensor>{random_tensor({m, n}, r)});
       }},
      {"slice_cols",
       [&](SeedStream& r) {
         const auto [m, n] = dims(r);
         const std::size_t start = r.index(n), len = 1 + r.index(n - start);
         return std::make_pair(
             testing::TapeFn([=](Tape&, Args v) { return nd::slice_cols(v[0], start, len); }),
             std::vector<Tensor>{random_tensor({m, n}, r)});
       }},
      {"concat_cols",
       [&](SeedStream& r) {
         const std::size_t m = 1 + r.index(4);
         return std::make_pair(
             testing::TapeFn([](Tape&, Args v) { return nd::concat_cols({v[0], v[1], v[2]}); }),
             std::vector<Tensor>{random_tensor({m, 1 + r.index(3)}, r),
                                 random_tensor({m, 1 + r.index(3)}, r),
                                 random_tensor({m, 1 + r.index(3)}, r)});
       }},
      {"spmm",
       [&](SeedStream& r) {
         nd::CsrMatrix a;
         a.rows = 1 + r.index(5);
         a.cols = 1 + r.index(5);
         a.row_ptr.push_back(0);
         for (std::size_t i = 0; i < a.rows; ++i) {
           for (std::size_t j = 0; j < a.cols; ++j) {
             if (r.uniform() < 0.5) {
               a.col_idx.push_back(j);
               a.values.push_back(-1.0 + 2.0 * r.uniform());
             }
           }
           a.row_ptr.push_back(a.col_idx.size());
         }
         const std::size_t n = 1 + r.index(4);
         return std::make_pair(testing::TapeFn([a](Tape&, Args v) { return nd::spmm(a, v[0]); }),
                               std::vector<Tensor>{random_tensor({a.cols, n}, r)});
       }},
      // Composites built from the primitives above.
      {"film",
       [&](SeedStream& r) {
         const auto [m, n] = dims(r);
         return std::make_pair(
             testing::TapeFn([](Tape&, Args v) { return diffusion::film(v[0], v[1], v[2]); }),
             std::vector<Tensor>{random_tensor({m, n}, r), random_tensor({m, n}, r),
                                 random_tensor({m, n}, r)});
       }},
      {"info_nce",
       [&](SeedStream& r) {
         const auto [m, n] = dims(r, 2);
         const bool raw = r.uniform() < 0.5;
         return std::make_pair(testing::TapeFn([raw](Tape&, Args v) {
                                 return cl::info_nce({v[0], v[1], cl::EntityKind::kUser, 0.5},
                                                     {raw});
                               }),
                               std::vector<Tensor>{random_tensor({m, n}, r, -1, 1),
                                                   random_tensor({m, n}, r, -1, 1)});
       }},
      {"bpr_loss",
       [&](SeedStream& r) {
         const auto [m, n] = dims(r);
         return std::make_pair(
             testing::TapeFn([](Tape&, Args v) { return train::bpr_loss(v[0], v[1], v[2]); }),
             std::vector<Tensor>{random_tensor({m, n}, r), random_tensor({m, n}, r),
                                 random_tensor({m, n}, r)});
       }},
      {"q_sample",
       [&](SeedStream& r) {
         const auto [m, n] = dims(r);
         const auto s = diffusion::build_schedule(kKinds[r.index(3)], 30, kBetaMin, kBetaMax);
         const std::size_t t = 1 + r.index(30);
         const Tensor eps = r.normal_tensor({m, n});
         return std::make_pair(
             testing::TapeFn([=](Tape&, Args v) { return diffusion::q_sample(s, v[0], t, eps); }),
             std::vector<Tensor>{random_tensor({m, n}, r)});
       }},
      {"reparameterize+kl",
       [&](SeedStream& r) {
         const auto [m, n] = dims(r);
         const Tensor eps = r.normal_tensor({m, n});
         return std::make_pair(testing::TapeFn([eps](Tape&, Args v) {
                                 return nd::add(
                                     nd::sum(diffusion::reparameterize(v[0], v[1], eps)),
                                     diffusion::kl_to_standard_normal(v[0], v[1]));
                               }),
                               std::vector<Tensor>{random_tensor({m, n}, r), random_tensor({m, n}, r)});
       }},
      {"denoiser",
       [&](SeedStream& r) {
         SeedStream init(r.next());
         auto net = std::make_shared<diffusion::DenoiserNet>(
             diffusion::DenoiserOptions{.dim = 4, .heads = 2, .blocks = 1, .ffn_multiplier = 2},
             init);
         const std::size_t m = 1 + r.index(3);
         std::vector<std::size_t> steps(m);
         for (auto& s : steps) s = 1 + r.index(30);
         return std::make_pair(testing::TapeFn([net, steps](Tape& tape, Args v) {
                                 return net->forward(net->params().bind(tape, false), v[0], steps);
                               }),
                               std::vector<Tensor>{random_tensor({m, 4}, r, -1, 1)});
       }},
  };

  double worst = 0.0;
  std::string worst_op;
  for (const auto& c : cases) {
    for (int trial = 0; trial < 100; ++trial) {
      auto [f, inputs] = c.make(rng);
      const double err = max_gradient_error(f, inputs, rng);
      if (!(err <= worst)) {
        worst = err;
        worst_op = c.name;
      }
    }
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-4 && secs < 60.0,
          std::to_string(cases.size()) + " ops x 100 trials, max rel err " + fmt(worst, 3) + " (" +
              worst_op + ") < 1e-4, " + fmt(secs, 3) + " s < 60 s"};
}

// ---- 2/3. forward process moments ----

// Count of coordinates whose sample mean or variance falls outside 3 SE.
int moment_violations(const std::vector<nd::Tensor>& draws, const nd::Tensor& mean, double var) {
  const double n = static_cast<double>(draws.size());
  int bad = 0;
  for (std::size_t k = 0; k < mean.size(); ++k) {
    double m = 0.0;
    for (const auto& d : draws) m += d[k];
    m /= n;
    double v = 0.0;
    for (const auto& d : draws) v += (d[k] - m) * (d[k] - m);
    v /= n - 1.0;
    if (std::abs(m - mean[k]) >= 3.0 * std::sqrt(var / n)) ++bad;
    if (std::abs(v - var) >= 3.0 * var * std::sqrt(2.0 / (n - 1.0))) ++bad;
  }
  return bad;
}

nd::Tensor scaled(nd::Tensor t, double c) {
  for (double& v : t.storage()) v *= c;
  return t;
}

const nd::Tensor kE0 = nd::Tensor::matrix({{0.8, -1.5, 0.1}});

Outcome check_marginals() {
  const std::size_t T = 30;
  int bad = 0, checks = 0;
  for (auto kind : kKinds) {
    const auto s = diffusion::build_schedule(kind, T, kBetaMin, kBetaMax);
    for (std::size_t t : {std::size_t{1}, T / 2, T}) {
      SeedStream rng(100 + t);
      std::vector<nd::Tensor> draws;
      for (int k = 0; k < 10000; ++k)
        draws.push_back(diffusion::q_sample(s, kE0, t, rng.normal_tensor({1, 3})));
      bad += moment_violations(draws, scaled(kE0, std::sqrt(s.alpha_bar[t])), 1.0 - s.alpha_bar[t]);
      checks += 2 * 3;
    }
  }
  return {bad == 0, "3 schedules x t in {1, T/2, T} (T=30), 10^4 draws: " +
                        std::to_string(checks - bad) + "/" + std::to_string(checks) +
                        " mean/variance checks within 3 SE"};
}

Outcome check_composition() {
  const std::size_t T = 30;
  int bad = 0, checks = 0;
  for (auto kind : kKinds) {
    const auto s = diffusion::build_schedule(kind, T, kBetaMin, kBetaMax);
    SeedStream rng(9);
    std::vector<nd::Tensor> draws;
    for (int k = 0; k < 10000; ++k) {
      nd::Tensor e = kE0;
      for (std::size_t t = 1; t <= T; ++t)
        e = diffusion::forward_step(s, e, t, rng.normal_tensor({1, 3}));
      draws.push_back(std::move(e));
    }
    bad += moment_violations(draws, scaled(kE0, std::sqrt(s.alpha_bar[T])), 1.0 - s.alpha_bar[T]);
    checks += 2 * 3;
  }
  return {bad == 0, std::to_string(T) + " single steps vs closed form, 3 schedules, 10^4 draws: " +
                        std::to_string(checks - bad) + "/" + std::to_string(checks) +
                        " checks within 3 SE"};
}

// ---- 4/5. reverse chain ----

Outcome check_reverse_oracle() {
  const std::size_t T = 50;
  SeedStream rng(14);
  double worst = 0.0;
  int runs = 0;
  for (auto kind : kKinds) {
    const auto s = diffusion::build_schedule(kind, T, kBetaMin, kBetaMax);
    const nd::Tensor e0 = rng.normal_tensor({6, 8});
    const diffusion::DenoiseFn oracle = [&e0](const nd::Var& e_t, std::span<const std::size_t>) {
      return e_t.tape()->constant(e0);
    };
    for (std::size_t t = 1; t <= T; ++t) {
      nd::Tape tape;
      const nd::Var out = diffusion::reverse_sample(
          oracle, tape.constant(e0), s, {.t_start = t, .inject_noise = false}, rng);
      worst = std::max(worst, nd::max_abs_diff(out.value(), e0));
      ++runs;
    }
  }
  return {worst < 1e-8, std::to_string(runs) + " chains (3 schedules, t_start 1..50), max |e0_hat - e0| " +
                            fmt(worst, 3) + " < 1e-8"};
}

Outcome check_posterior() {
  SeedStream rng(21);
  double worst = 0.0;
  for (auto kind : kKinds) {
    const auto s = diffusion::build_schedule(kind, 50, kBetaMin, kBetaMax);
    for (std::size_t t = 1; t <= 50; ++t) {
      const nd::Tensor e_t = rng.normal_tensor({4, 5});
      const nd::Tensor x0 = rng.normal_tensor({4, 5});
      const nd::Tensor via_eps =
          diffusion::posterior_mean_eps(s, e_t, diffusion::epsilon_from_x0(s, e_t, x0, t), t);
      worst = std::max(worst, nd::max_abs_diff(via_eps, diffusion::posterior_mean_x0(s, e_t, x0, t)));
    }
  }
  return {worst < 1e-10, "epsilon-form vs x0-form posterior mean, 150 random cases, max diff " +
                             fmt(worst, 3) + " < 1e-10"};
}

// ---- 6. metrics ----

Outcome check_metrics() {
  using Ids = std::vector<std::size_t>;
  std::size_t cases = 0, mismatches = 0;
  for (std::size_t n = 1; n <= 6; ++n) {
    Ids perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    do {
      for (unsigned mask = 1; mask < (1u << n); ++mask) {
        Ids rel;
        for (std::size_t i = 0; i < n; ++i)
          if (mask & (1u << i)) rel.push_back(i);
        for (std::size_t k = 1; k <= n; ++k) {
          // Oracle: hits counted over the top-k set; DCG summed in rank
          // order; ideal DCG from the first min(k, |rel|) positions.
          const std::set<std::size_t> top(perm.begin(), perm.begin() + k);
          double hits = 0, dcg = 0, idcg = 0;
          for (std::size_t p = 0; p < k; ++p) {
            if (std::find(rel.begin(), rel.end(), perm[p]) != rel.end()) {
              hits += 1;
              dcg += 1.0 / std::log2(p + 2.0);
            }
            if (p < rel.size()) idcg += 1.0 / std::log2(p + 2.0);
          }
          const double recall = hits / double(rel.size());
          if (eval::recall_at_k(perm, rel, k) != recall) ++mismatches;
          if (eval::ndcg_at_k(perm, rel, k) != dcg / idcg) ++mismatches;
          ++cases;
        }
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
  }
  return {mismatches == 0, std::to_string(cases) +
                               " (ranking, relevant set, K) cases over <= 6 items, " +
                               std::to_string(mismatches) + " inexact"};
}

// ---- 7. LightGCN ----

Outcome check_lightgcn() {
  SeedStream rng(77);
  double worst_dense = 0.0, worst_loop = 0.0;
  int graphs = 0;
  while (graphs < 100) {
    const std::size_t users = 2 + rng.index(9);  // 12 nodes split between sides
    const std::size_t items = 12 - users;
    std::vector<data::Edge> edges;
    for (std::size_t u = 0; u < users; ++u)
      for (std::size_t i = 0; i < items; ++i)
        if (rng.uniform() < 0.4) edges.push_back({u, i});
    if (edges.empty()) continue;
    ++graphs;
    const data::InteractionDataset ds(users, items, edges, {});
    const auto adj = data::build_norm_adjacency(ds);
    const nd::Tensor e = rng.normal_tensor({12, 5});
    nd::Tape tape;
    const nd::Tensor sparse = graph::propagate(adj, tape.constant(e)).value();

    std::vector<double> deg(12, 0.0);
    for (const auto& ed : edges) {
      deg[ed.user] += 1;
      deg[users + ed.item] += 1;
    }
    auto linked = [&](std::size_t a, std::size_t b) {
      if (a > b) std::swap(a, b);
      return a < users && b >= users &&
             std::find(edges.begin(), edges.end(), data::Edge{a, b - users}) != edges.end();
    };
    nd::Tensor dense({12, 12});
    nd::Tensor loop({12, 5});
    for (std::size_t a = 0; a < 12; ++a) {
      for (std::size_t b = 0; b < 12; ++b) {
        if (!linked(a, b)) continue;
        const double w = 1.0 / std::sqrt(deg[a] * deg[b]);
        dense.at(a, b) = w;
        for (std::size_t c = 0; c < 5; ++c) loop.at(a, c) += w * e.at(b, c);
      }
    }
    worst_dense = std::max(worst_dense, nd::max_abs_diff(sparse, nd::matmul_plain(dense, e)));
    worst_loop = std::max(worst_loop, nd::max_abs_diff(sparse, loop));
  }

  // Mixing endpoints return the unmixed layers bit for bit.
  bool endpoints = true;
  for (int trial = 0; trial < 20; ++trial) {
    nd::Tape tape;
    const graph::LayerStack pos{tape.constant(rng.normal_tensor({4, 6})),
                                tape.constant(rng.normal_tensor({4, 6}))};
    const graph::LayerStack neg{tape.constant(rng.normal_tensor({4, 6})),
                                tape.constant(rng.normal_tensor({4, 6}))};
    for (double alpha : {0.0, 1.0}) {
      const graph::MixWeights w(2, std::vector<double>(4, alpha));
      const auto mixed = graph::positive_mix(pos, neg, w);
      for (std::size_t l = 0; l < 2; ++l)
        endpoints &= mixed[l].value() == (alpha == 1.0 ? pos : neg)[l].value();
    }
  }
  const double worst = std::max(worst_dense, worst_loop);
  return {worst < 1e-12 && endpoints,
          "100 random 12-node graphs: max diff vs dense " + fmt(worst_dense, 3) +
              ", vs double loop " + fmt(worst_loop, 3) + " (< 1e-12); mixing endpoints " +
              (endpoints ? "exact" : "NOT exact")};
}

// ---- 8/9/11. desk-scale training ----

train::TrainConfig desk_config(train::Ablation arm, std::uint64_t seed) {
  train::TrainConfig c;  // defaults
  c.epochs = 200;
  c.ablation = arm;
  c.seed = seed;
  return c;
}

struct DeskRun {
  nlohmann::json metrics;
  std::size_t epochs = 0;
  double seconds = 0.0;
};

DeskRun desk_run(train::Ablation arm, std::uint64_t seed, const data::InteractionDataset& ds) {
  const auto t0 = Clock::now();
  const auto r = train::train(desk_config(arm, seed), ds);
  return {r.report.final_metrics, r.report.epochs.size(), seconds_since(t0)};
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// ---- 10. sweep ----

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Outcome check_sweep() {
  const std::vector<std::pair<std::string, std::vector<std::string>>> expected{
      {"lambda", {"0.1", "0.2", "0.3"}},
      {"T", {"10", "20", "30", "50"}},
      {"L", {"1", "2", "3"}},
      {"schedule", {"linear", "quadratic", "sigmoid"}}};
  bool grid_ok = true;
  std::vector<std::string> all_cells;
  for (const auto& [param, values] : expected) {
    std::vector<std::string> got;
    for (const auto& cell : train::sweep_grid(param)) got.push_back(cell.value);
    grid_ok &= got == values;
    for (const auto& v : values) all_cells.push_back(param + "," + v);
  }

  // Two independent CLI runs over the whole grid with a short epoch budget.
  const auto root = std::filesystem::temp_directory_path() / "dgcl_acceptance_sweep";
  std::filesystem::remove_all(root);
  std::vector<std::string> csvs;
  for (const char* run : {"a", "b"}) {
    const std::string out = (root / run).string();
    const char* argv[] = {"dgcl", "sweep", "--param", "all", "--set", "epochs=2", "--out", out.c_str()};
    std::ostringstream sink, err;
    if (cli::run_cli(8, argv, sink, err) != 0) return {false, "sweep run failed: " + err.str()};
    csvs.push_back(slurp(root / run / "sweep_all.csv"));
  }
  std::filesystem::remove_all(root);

  // One row per cell, in grid order.
  std::istringstream in(csvs[0]);
  std::string line;
  std::vector<std::string> rows;
  std::getline(in, line);  // schema
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    const auto first = line.find(',');
    const auto second = line.find(',', first + 1);
    rows.push_back(line.substr(0, second));
  }
  const bool rows_ok = rows == all_cells;
  const bool identical = csvs[0] == csvs[1];
  return {grid_ok && rows_ok && identical,
          std::string("grid ") + (grid_ok ? "matches" : "DIFFERS") + "; " + std::to_string(rows.size()) +
              " CSV rows for " + std::to_string(all_cells.size()) + " cells; re-run " +
              (identical ? "byte-identical" : "DIFFERS")};
}

}  // namespace

int main() {
  const auto start = Clock::now();
  report(1, "autodiff integrity", check_autodiff);
  report(2, "diffusion marginal law", check_marginals);
  report(3, "composition consistency", check_composition);
  report(4, "reverse-chain exactness", check_reverse_oracle);
  report(5, "posterior identity", check_posterior);
  report(6, "metric oracles", check_metrics);
  report(7, "LightGCN correctness", check_lightgcn);

  const train::TrainConfig defaults = desk_config(train::Ablation::kFull, 0);
  const auto ds = train::load_dataset(defaults);
  std::vector<std::vector<DeskRun>> runs(3);  // full, no-neg, no-diff over seeds 0..4
  const train::Ablation arms[] = {train::Ablation::kFull, train::Ablation::kNoNeg,
                                  train::Ablation::kNoDiff};

  report(8, "desk-scale learning", [&]() -> Outcome {
    runs[0].push_back(desk_run(train::Ablation::kFull, 0, ds));
    const DeskRun& r = runs[0][0];
    const double recall = r.metrics.at("recall@10").get<double>();
    const double analytic = 10.0 / static_cast<double>(ds.num_items());
    const double masked = eval::random_recall_baseline(ds, 10);
    const train::DgclModel init(defaults, ds.num_users(), ds.num_items());
    const double init_recall = train::evaluate_model(init, ds).recall.at(10);
    return {recall > 3.0 * analytic && r.seconds < 300.0,
            "full R@10 " + fmt(recall) + " > 3 x K/|I| = " + fmt(3.0 * analytic) + " (" +
                std::to_string(r.epochs) + " epochs, " + fmt(r.seconds, 3) +
                " s < 300 s); for reference: masked random baseline " + fmt(masked) +
                ", untrained-model R@10 " + fmt(init_recall)};
  });

  report(9, "directional ablations", [&]() -> Outcome {
    for (std::size_t a = 0; a < 3; ++a)
      for (std::uint64_t seed = runs[a].size(); seed < 5; ++seed)
        runs[a].push_back(desk_run(arms[a], seed, ds));
    auto med = [&](std::size_t a, const char* key) {
      std::vector<double> v;
      for (const auto& r : runs[a]) v.push_back(r.metrics.at(key).get<double>());
      return median(v);
    };
    const double full = med(0, "recall@20"), no_neg = med(1, "recall@20"), no_diff = med(2, "recall@20");
    return {full >= no_neg && full >= no_diff,
            "median R@20 over 5 seeds: full " + fmt(full) + " >= no-neg " + fmt(no_neg) +
                ", full >= no-diff " + fmt(no_diff) + " (median N@20: full " + fmt(med(0, "ndcg@20")) +
                ", no-neg " + fmt(med(1, "ndcg@20")) + ", no-diff " + fmt(med(2, "ndcg@20")) + ")"};
  });

  report(10, "sweep plumbing", check_sweep);

  report(11, "diffusion-vs-VAE harness", [&]() -> Outcome {
    const DeskRun& full = runs[0][0];
    const DeskRun vae = desk_run(train::Ablation::kVae, 0, ds);
    bool ok = true;
    for (const auto& key : train::kMetricColumns) {
      ok &= full.metrics.contains(key) && vae.metrics.contains(key) &&
            std::isfinite(full.metrics.at(key).get<double>()) &&
            std::isfinite(vae.metrics.at(key).get<double>());
    }
    auto line = [](const DeskRun& r) {
      return "R@10 " + fmt(r.metrics.at("recall@10").get<double>()) + ", N@10 " +
             fmt(r.metrics.at("ndcg@10").get<double>()) + ", R@20 " +
             fmt(r.metrics.at("recall@20").get<double>()) + ", N@20 " +
             fmt(r.metrics.at("ndcg@20").get<double>());
    };
    return {ok, "full {" + line(full) + "}; vae {" + line(vae) + "}"};
  });

  std::cout << (failures == 0 ? "ALL PASS" : std::to_string(failures) + " FAILED") << " ("
            << fmt(seconds_since(start), 3) << " s)" << std::endl;
  return failures == 0 ? 0 : 1;
}
