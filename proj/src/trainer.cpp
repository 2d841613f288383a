#include "dgcl/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include "dgcl/contrastive.hpp"
#include "dgcl/diffusion.hpp"
#include "dgcl/error.hpp"
#include "dgcl/ops.hpp"

namespace dgcl::train {
namespace {

// splitmix64 finaliser: decorrelates the per-role stream seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t role) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (role + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

void require_finite(double value, const std::string& what) {
  if (!std::isfinite(value)) throw TrainingError(what + " became non-finite (" +
                                                 std::to_string(value) + "); aborting");
}

bool uses_denoiser(Ablation arm) { return arm == Ablation::kFull || arm == Ablation::kNoNeg; }
bool uses_vae(Ablation arm) { return arm == Ablation::kVae; }

diffusion::DenoiserOptions denoiser_options(const TrainConfig& c) {
  diffusion::DenoiserOptions o;
  o.dim = c.embed_dim;
  o.heads = c.heads;
  o.row_independent = c.row_independent;
  return o;
}

diffusion::VaeOptions vae_options(const TrainConfig& c) {
  return {.dim = c.embed_dim, .hidden = c.vae_hidden, .latent = c.vae_latent,
          .kl_weight = c.vae_kl_weight};
}

nd::Tensor rows_of(const nd::Tensor& table, std::size_t begin, std::size_t count) {
  nd::Tensor out({count, table.cols()});
  std::copy(table.storage().begin() + static_cast<std::ptrdiff_t>(begin * table.cols()),
            table.storage().begin() + static_cast<std::ptrdiff_t>((begin + count) * table.cols()),
            out.storage().begin());
  return out;
}

std::vector<std::size_t> shuffled_rows(std::size_t n, SeedStream& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t k = n; k > 1; --k) std::swap(order[k - 1], order[rng.index(k)]);
  return order;
}

nd::Tensor gather_values(const nd::Tensor& table, std::span<const std::size_t> ids) {
  nd::Tensor out({ids.size(), table.cols()});
  for (std::size_t r = 0; r < ids.size(); ++r) {
    const auto src = table.row(ids[r]);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

void step_params(nd::ParamStore& store, const std::vector<nd::Var>& bound, nd::Tape& tape,
                 nd::AdamState& opt) {
  std::vector<nd::Tensor> grads;
  grads.reserve(bound.size());
  for (const auto& b : bound) grads.push_back(*tape.gradient(b));
  std::vector<const nd::Tensor*> gp;
  for (const auto& g : grads) gp.push_back(&g);
  const auto params = store.tensors();
  opt.update(params, gp);
}

// SimGCL-style perturbation: e + eps * normalize(U(0,1) ⊙ sign(e)), per row.
nd::Var uniform_noise_view(const nd::Var& e, double eps, SeedStream& rng) {
  const nd::Tensor& v = e.value();
  nd::Tensor noise(v.shape());
  for (std::size_t r = 0; r < v.rows(); ++r) {
    auto row = noise.row(r);
    const auto src = v.row(r);
    double norm = 0.0;
    for (std::size_t c = 0; c < row.size(); ++c) {
      const double sign = src[c] > 0.0 ? 1.0 : (src[c] < 0.0 ? -1.0 : 0.0);
      row[c] = rng.uniform() * sign;
      norm += row[c] * row[c];
    }
    norm = std::sqrt(norm);
    if (norm > 0.0)
      for (double& x : row) x *= eps / norm;
  }
  return nd::add(e, e.tape()->constant(std::move(noise)));
}

}  // namespace

data::InteractionDataset load_dataset(const TrainConfig& config) {
  config.validate();
  if (!config.data.empty()) {
    return data::split_train_test(data::load_interactions(config.data), config.split_ratio,
                                  config.data_seed);
  }
  const data::BlockDatasetSpec spec{config.synthetic_users, config.synthetic_items,
                                    config.synthetic_blocks, config.synthetic_prob};
  return data::split_train_test(spec.num_users, spec.num_items,
                                data::make_block_edges(spec, config.data_seed),
                                config.split_ratio, config.data_seed);
}

RngStreams::RngStreams(std::uint64_t seed)
    : init(mix_seed(seed, 0)),
      batches(mix_seed(seed, 1)),
      mixing(mix_seed(seed, 2)),
      views(mix_seed(seed, 3)),
      augment(mix_seed(seed, 4)) {}

nlohmann::json RngStreams::serialize() const {
  return {{"init", init.serialize()},       {"batches", batches.serialize()},
          {"mixing", mixing.serialize()},   {"views", views.serialize()},
          {"augment", augment.serialize()}};
}

void RngStreams::restore(const nlohmann::json& j) {
  init.restore(j.at("init").get<std::string>());
  batches.restore(j.at("batches").get<std::string>());
  mixing.restore(j.at("mixing").get<std::string>());
  views.restore(j.at("views").get<std::string>());
  augment.restore(j.at("augment").get<std::string>());
}

DgclModel::DgclModel(const TrainConfig& cfg, std::size_t num_users, std::size_t num_items)
    : config(cfg),
      encoder_opt(nd::AdamOptions{.learning_rate = cfg.lr}),
      user_aug_opt(nd::AdamOptions{.learning_rate = cfg.diff_lr}),
      item_aug_opt(nd::AdamOptions{.learning_rate = cfg.diff_lr}),
      rng(cfg.seed) {
  config.validate();
  embeddings =
      graph::EmbeddingTable::init(num_users, num_items, cfg.embed_dim, rng.init, cfg.init_std);
  schedule = diffusion::build_schedule(cfg.beta_schedule, cfg.diff_steps, cfg.beta_min,
                                       cfg.beta_max);
  // Separate child streams keep the embedding init identical across arms.
  SeedStream aug_init = rng.init.fork();
  if (uses_denoiser(cfg.ablation)) {
    user_denoiser.emplace(denoiser_options(cfg), aug_init);
    item_denoiser.emplace(denoiser_options(cfg), aug_init);
  }
  if (uses_vae(cfg.ablation)) {
    user_vae.emplace(vae_options(cfg), aug_init);
    item_vae.emplace(vae_options(cfg), aug_init);
  }
}

graph::EncoderOptions DgclModel::encoder_options() const {
  return {config.layers, config.embed_dim, config.include_layer_zero};
}

nd::Tensor DgclModel::aggregated(const data::NormalizedAdjacency& adj) const {
  return graph::encode(adj, embeddings.weights, encoder_options());
}

nd::Var bpr_loss(const nd::Var& users, const nd::Var& positives, const nd::Var& negatives) {
  const auto& s = users.value().shape();
  if (positives.value().shape() != s || negatives.value().shape() != s) {
    throw DimensionError("bpr_loss: operand shapes differ");
  }
  return nd::mean(nd::softplus(nd::sub(nd::row_dot(users, negatives),
                                       nd::row_dot(users, positives))));
}

double train_diffusion_epoch(diffusion::DenoiserNet& net, nd::AdamState& opt,
                             const nd::Tensor& embeddings, const diffusion::NoiseSchedule& schedule,
                             const TrainConfig& config, SeedStream& rng) {
  if (!embeddings.all_finite()) throw TrainingError("diffusion epoch on non-finite embeddings");
  const auto order = shuffled_rows(embeddings.rows(), rng);
  double total = 0.0;
  std::size_t batches = 0;
  for (std::size_t start = 0; start < order.size(); start += config.diff_batch_size) {
    const std::size_t count = std::min(config.diff_batch_size, order.size() - start);
    const nd::Tensor batch =
        gather_values(embeddings, std::span(order).subspan(start, count));
    nd::Tape tape;
    const auto bound = net.params().bind(tape, true);
    const nd::Var loss =
        diffusion::diffusion_loss(diffusion::bind_denoiser(net, bound), tape, batch, schedule, rng);
    const double value = loss.value().item();
    require_finite(value, "diffusion loss");
    tape.backward(loss);
    step_params(net.params(), bound, tape, opt);
    total += value;
    ++batches;
  }
  return batches == 0 ? 0.0 : total / static_cast<double>(batches);
}

double train_vae_epoch(diffusion::VaeAugmenter& vae, nd::AdamState& opt,
                       const nd::Tensor& embeddings, const TrainConfig& config, SeedStream& rng) {
  if (!embeddings.all_finite()) throw TrainingError("VAE epoch on non-finite embeddings");
  const auto order = shuffled_rows(embeddings.rows(), rng);
  double total = 0.0;
  std::size_t batches = 0;
  for (std::size_t start = 0; start < order.size(); start += config.diff_batch_size) {
    const std::size_t count = std::min(config.diff_batch_size, order.size() - start);
    nd::Tape tape;
    const nd::Var x =
        tape.constant(gather_values(embeddings, std::span(order).subspan(start, count)));
    const auto bound = vae.params().bind(tape, true);
    const nd::Var loss = vae.loss(bound, x, rng);
    const double value = loss.value().item();
    require_finite(value, "VAE loss");
    tape.backward(loss);
    step_params(vae.params(), bound, tape, opt);
    total += value;
    ++batches;
  }
  return batches == 0 ? 0.0 : total / static_cast<double>(batches);
}

JointGraph build_joint_loss(DgclModel& model, const data::NormalizedAdjacency& adj,
                            std::span<const data::BprSample> batch, nd::Tape& tape) {
  if (batch.empty()) throw ContractError("joint step on an empty batch");
  const TrainConfig& cfg = model.config;
  const std::size_t nu = model.num_users();
  const std::size_t b = batch.size();

  const nd::Var ego = tape.leaf(model.embeddings.weights);
  const graph::LayerStack stack = graph::propagate_layers(adj, ego, cfg.layers);
  const nd::Var agg = graph::aggregate_layers(stack, cfg.include_layer_zero);

  std::vector<std::size_t> user_rows(b), pos_rows(b), neg_rows(b);
  for (std::size_t k = 0; k < b; ++k) {
    user_rows[k] = batch[k].user;
    pos_rows[k] = nu + batch[k].positive;
  }
  const nd::Var users = nd::gather_rows(agg, user_rows);
  const nd::Var positives = nd::gather_rows(agg, pos_rows);

  nd::Var negatives;
  if (cfg.ablation == Ablation::kNoNeg) {
    for (std::size_t k = 0; k < b; ++k) neg_rows[k] = nu + batch[k].candidates.front();
    negatives = nd::gather_rows(agg, neg_rows);
  } else {
    // Mix every candidate with the positive per layer, keep the one the user
    // scores highest, then rebuild that mixture on the tape.
    const std::size_t m = cfg.neg_candidates;
    const std::size_t first = cfg.include_layer_zero ? 0 : 1;
    const double inv_layers = 1.0 / static_cast<double>(stack.size() - first);
    const graph::MixWeights alphas = graph::draw_mix_weights(stack.size(), b * m, model.rng.mixing);
    graph::MixWeights chosen_alpha(stack.size(), std::vector<double>(b));
    const nd::Tensor& agg_v = agg.value();
    for (std::size_t k = 0; k < b; ++k) {
      if (batch[k].candidates.size() != m) {
        throw ContractError("joint step: sample carries " +
                            std::to_string(batch[k].candidates.size()) + " candidates, expected " +
                            std::to_string(m));
      }
      const auto u = agg_v.row(batch[k].user);
      std::vector<nd::Tensor> mixed(m, nd::Tensor({cfg.embed_dim}));
      std::vector<std::span<const double>> spans;
      for (std::size_t c = 0; c < m; ++c) {
        for (std::size_t l = first; l < stack.size(); ++l) {
          const double a = alphas[l][k * m + c];
          const auto p = stack[l].value().row(nu + batch[k].positive);
          const auto n = stack[l].value().row(nu + batch[k].candidates[c]);
          for (std::size_t j = 0; j < cfg.embed_dim; ++j)
            mixed[c][j] += inv_layers * (a * p[j] + (1.0 - a) * n[j]);
        }
        spans.push_back(mixed[c].data());
      }
      const std::size_t best = graph::select_hard_negative(u, spans);
      neg_rows[k] = nu + batch[k].candidates[best];
      for (std::size_t l = 0; l < stack.size(); ++l) chosen_alpha[l][k] = alphas[l][k * m + best];
    }
    graph::LayerStack pos_layers, neg_layers;
    for (const auto& layer : stack) {
      pos_layers.push_back(nd::gather_rows(layer, pos_rows));
      neg_layers.push_back(nd::gather_rows(layer, neg_rows));
    }
    negatives = graph::aggregate_layers(graph::positive_mix(pos_layers, neg_layers, chosen_alpha),
                                        cfg.include_layer_zero);
  }

  const nd::Var l_rec = bpr_loss(users, positives, negatives);

  // L2 on the ego embeddings the batch touches.
  nd::Var reg;
  {
    const nd::Var eu = nd::gather_rows(ego, user_rows);
    const nd::Var ep = nd::gather_rows(ego, pos_rows);
    const nd::Var en = nd::gather_rows(ego, neg_rows);
    const nd::Var sq = nd::add(nd::add(nd::sum(nd::mul(eu, eu)), nd::sum(nd::mul(ep, ep))),
                               nd::sum(nd::mul(en, en)));
    reg = nd::scale(sq, 0.5 * cfg.weight_decay / static_cast<double>(b));
  }

  JointGraph out;
  out.ego = ego;
  out.losses.l_rec = l_rec.value().item();
  out.losses.l_reg = reg.value().item();
  nd::Var total = nd::add(l_rec, reg);

  if (cfg.ablation != Ablation::kNoDiff) {
    std::vector<std::size_t> bu(user_rows), bi(pos_rows);
    std::sort(bu.begin(), bu.end());
    bu.erase(std::unique(bu.begin(), bu.end()), bu.end());
    std::sort(bi.begin(), bi.end());
    bi.erase(std::unique(bi.begin(), bi.end()), bi.end());
    const nd::Var zu = nd::gather_rows(agg, bu);
    const nd::Var zi = nd::gather_rows(agg, bi);

    std::pair<nd::Var, nd::Var> user_views, item_views;
    SeedStream& rng = model.rng.views;
    switch (cfg.ablation) {
      case Ablation::kFull:
      case Ablation::kNoNeg: {
        if (!model.user_denoiser || !model.item_denoiser) {
          throw ContractError("joint step: denoisers missing for arm " + to_string(cfg.ablation));
        }
        const diffusion::ReverseOptions ro{.t_start = cfg.effective_t_start()};
        const auto bu_params = model.user_denoiser->params().bind(tape, false);
        const auto bi_params = model.item_denoiser->params().bind(tape, false);
        const auto fu = diffusion::bind_denoiser(*model.user_denoiser, bu_params);
        const auto fi = diffusion::bind_denoiser(*model.item_denoiser, bi_params);
        user_views = {diffusion::reverse_sample(fu, zu, model.schedule, ro, rng),
                      diffusion::reverse_sample(fu, zu, model.schedule, ro, rng)};
        item_views = {diffusion::reverse_sample(fi, zi, model.schedule, ro, rng),
                      diffusion::reverse_sample(fi, zi, model.schedule, ro, rng)};
        break;
      }
      case Ablation::kUniformNoise:
        user_views = {uniform_noise_view(zu, cfg.noise_eps, rng),
                      uniform_noise_view(zu, cfg.noise_eps, rng)};
        item_views = {uniform_noise_view(zi, cfg.noise_eps, rng),
                      uniform_noise_view(zi, cfg.noise_eps, rng)};
        break;
      case Ablation::kVae: {
        if (!model.user_vae || !model.item_vae) throw ContractError("joint step: VAEs missing");
        const auto pu = model.user_vae->params().bind(tape, false);
        const auto pi = model.item_vae->params().bind(tape, false);
        user_views = {diffusion::vae_augment(*model.user_vae, pu, zu, rng),
                      diffusion::vae_augment(*model.user_vae, pu, zu, rng)};
        item_views = {diffusion::vae_augment(*model.item_vae, pi, zi, rng),
                      diffusion::vae_augment(*model.item_vae, pi, zi, rng)};
        break;
      }
      case Ablation::kNoDiff:
        break;
    }
    const nd::Var l_cl = cl::total_cl_loss(
        {user_views.first, user_views.second, cl::EntityKind::kUser, cfg.tau},
        {item_views.first, item_views.second, cl::EntityKind::kItem, cfg.tau}, {cfg.raw_dot});
    out.losses.l_cl = l_cl.value().item();
    total = nd::add(total, nd::scale(l_cl, cfg.lambda));
  }
  out.losses.l_joint = out.losses.l_rec + cfg.lambda * out.losses.l_cl;
  out.total = total;
  return out;
}

JointLosses joint_step(DgclModel& model, const data::NormalizedAdjacency& adj,
                       std::span<const data::BprSample> batch) {
  nd::Tape tape;
  const JointGraph g = build_joint_loss(model, adj, batch, tape);
  require_finite(g.total.value().item(), "joint loss");
  tape.backward(g.total);
  const nd::Tensor grad = *tape.gradient(g.ego);
  nd::Tensor* params[] = {&model.embeddings.weights};
  const nd::Tensor* grads[] = {&grad};
  model.encoder_opt.update(params, grads);
  return g.losses;
}

nlohmann::json EpochRecord::to_json(bool include_time) const {
  nlohmann::json j{{"type", "epoch"},        {"epoch", epoch},
                   {"l_rec", l_rec},         {"l_cl", l_cl},
                   {"l_reg", l_reg},         {"l_joint", l_joint},
                   {"l_diff_user", l_diff_user}, {"l_diff_item", l_diff_item}};
  if (metrics) j["metrics"] = *metrics;
  if (include_time) j["wall_ms"] = wall_ms;
  return j;
}

std::string TrainReport::to_json_lines(bool include_time) const {
  std::ostringstream os;
  os << nlohmann::json{{"type", "config"}, {"config", config}}.dump() << "\n";
  for (const auto& e : epochs) os << e.to_json(include_time).dump() << "\n";
  os << nlohmann::json{{"type", "final"},
                       {"metrics", final_metrics},
                       {"best_epoch", best_epoch},
                       {"epochs_run", epochs.size()},
                       {"stopped_early", stopped_early}}
            .dump()
     << "\n";
  return os.str();
}

eval::RankingResult evaluate_model(const DgclModel& model, const data::InteractionDataset& dataset,
                                   const std::vector<std::size_t>& cutoffs) {
  if (model.num_users() != dataset.num_users() || model.num_items() != dataset.num_items()) {
    throw CheckpointError("model covers " + std::to_string(model.num_users()) + " users x " +
                          std::to_string(model.num_items()) + " items but the dataset has " +
                          std::to_string(dataset.num_users()) + " x " +
                          std::to_string(dataset.num_items()));
  }
  const auto adj = data::build_norm_adjacency(dataset);
  return eval::evaluate_embeddings(model.aggregated(adj), dataset, cutoffs);
}

TrainResult train(const TrainConfig& config, const data::InteractionDataset& dataset,
                  const EpochObserver& observer) {
  config.validate();
  TrainResult result{TrainReport{}, DgclModel(config, dataset.num_users(), dataset.num_items())};
  DgclModel& model = result.model;
  TrainReport& report = result.report;
  report.config = config.to_json();
  const auto adj = data::build_norm_adjacency(dataset);

  auto augmenter_epoch = [&](EpochRecord& rec) {
    if (!uses_denoiser(config.ablation) && !uses_vae(config.ablation)) return;
    const nd::Tensor agg = model.aggregated(adj);
    const nd::Tensor users = rows_of(agg, 0, model.num_users());
    const nd::Tensor items = rows_of(agg, model.num_users(), model.num_items());
    if (uses_denoiser(config.ablation)) {
      rec.l_diff_user = train_diffusion_epoch(*model.user_denoiser, model.user_aug_opt, users,
                                              model.schedule, config, model.rng.augment);
      rec.l_diff_item = train_diffusion_epoch(*model.item_denoiser, model.item_aug_opt, items,
                                              model.schedule, config, model.rng.augment);
    } else {
      rec.l_diff_user =
          train_vae_epoch(*model.user_vae, model.user_aug_opt, users, config, model.rng.augment);
      rec.l_diff_item =
          train_vae_epoch(*model.item_vae, model.item_aug_opt, items, config, model.rng.augment);
    }
  };

  for (std::size_t e = 0; e < config.diff_pretrain_epochs; ++e) {
    EpochRecord scratch;
    augmenter_epoch(scratch);
  }

  const std::size_t batches_per_epoch = std::max<std::size_t>(
      1, (dataset.train_edges().size() + config.batch_size - 1) / config.batch_size);
  // Early stopping watches Recall@20; NDCG@20 breaks ties so a saturated
  // recall does not freeze model selection at the first evaluation.
  auto evaluate = [&] {
    return eval::evaluate_embeddings(model.aggregated(adj), dataset, {10, 20});
  };
  std::optional<std::pair<double, double>> best_score;
  DgclModel best_model = model;
  std::size_t stale = 0;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    EpochRecord rec;
    rec.epoch = epoch;
    augmenter_epoch(rec);
    for (std::size_t k = 0; k < batches_per_epoch; ++k) {
      const auto batch =
          data::sample_bpr_batch(dataset, config.batch_size, config.neg_candidates,
                                 model.rng.batches);
      const JointLosses l = joint_step(model, adj, batch);
      rec.l_rec += l.l_rec;
      rec.l_cl += l.l_cl;
      rec.l_reg += l.l_reg;
      rec.l_joint += l.l_joint;
    }
    const double nb = static_cast<double>(batches_per_epoch);
    rec.l_rec /= nb;
    rec.l_cl /= nb;
    rec.l_reg /= nb;
    rec.l_joint /= nb;

    bool stop = false;
    if (epoch % config.eval_every == 0 || epoch == config.epochs) {
      const auto metrics = evaluate();
      rec.metrics = metrics.to_json();
      const std::pair<double, double> score{metrics.recall.at(20), metrics.ndcg.at(20)};
      if (!best_score || score > *best_score) {
        best_score = score;
        best_model = model;
        report.best_epoch = epoch;
        stale = 0;
      } else if (++stale >= config.patience) {
        stop = true;
      }
    }
    rec.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    report.epochs.push_back(rec);
    if (observer) observer(rec);
    if (stop) {
      report.stopped_early = epoch < config.epochs;
      break;
    }
  }
  model = std::move(best_model);
  report.final_metrics = evaluate_model(model, dataset).to_json();
  return result;
}

}  // namespace dgcl::train
