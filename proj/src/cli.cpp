#include "dgcl/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "dgcl/checkpoint.hpp"
#include "dgcl/config.hpp"
#include "dgcl/error.hpp"
#include "dgcl/experiments.hpp"
#include "dgcl/metrics.hpp"
#include "dgcl/trainer.hpp"

namespace dgcl::cli {
namespace {

namespace fs = std::filesystem;

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "dgcl-out";
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config_path, "Config file (key = value, [sections])");
  cmd->add_option("--set", o.overrides, "Override a config key: --set key=value (repeatable)");
  cmd->add_option("--seed", o.seed, "Training seed (overrides the config)");
  cmd->add_option("--out", o.out_dir, "Output directory")->capture_default_str();
}

train::TrainConfig resolve_config(const CommonOptions& o) {
  train::TrainConfig c = o.config_path.empty() ? train::TrainConfig{}
                                               : train::load_config(o.config_path);
  for (const auto& s : o.overrides) train::apply_override(c, s);
  if (o.seed) c.seed = *o.seed;
  c.validate();
  return c;
}

fs::path prepare_out(const std::string& dir) {
  fs::path p(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw ConfigError("cannot create output directory '" + dir + "': " + ec.message());
  return p;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw Error("cannot write '" + path.string() + "'");
  f << text;
}

std::string read_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot read '" + path + "'");
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"DGCL: diffusion-augmented graph contrastive learning for collaborative filtering",
               "dgcl"};
  app.require_subcommand(1);

  CommonOptions train_opts;
  bool quiet = false;
  auto* train_cmd = app.add_subcommand("train", "Train a model; writes report.jsonl and checkpoint.json");
  add_common(train_cmd, train_opts);
  train_cmd->add_flag("--quiet", quiet, "No per-epoch progress on stderr");

  std::string checkpoint_path;
  CommonOptions eval_opts;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint; prints metrics JSON");
  eval_cmd->add_option("--checkpoint", checkpoint_path, "Checkpoint file")->required();
  eval_cmd->add_option("--set", eval_opts.overrides,
                       "Override a data key of the stored config (e.g. data=path)");

  CommonOptions ablate_opts;
  std::vector<std::uint64_t> ablate_seeds;
  auto* ablate_cmd = app.add_subcommand("ablate", "Run every ablation arm; writes ablation.csv");
  add_common(ablate_cmd, ablate_opts);
  ablate_cmd->add_option("--seeds", ablate_seeds, "Seeds to run (default: the config seed)")
      ->delimiter(',');

  CommonOptions sweep_opts;
  std::string sweep_param;
  bool list_only = false;
  auto* sweep_cmd = app.add_subcommand("sweep", "Grid sweep; writes sweep_<param>.csv");
  add_common(sweep_cmd, sweep_opts);
  sweep_cmd->add_option("--param", sweep_param, "lambda, T, L, schedule or all")
      ->required()
      ->check(CLI::IsMember({"lambda", "T", "L", "schedule", "all"}));
  sweep_cmd->add_flag("--list", list_only, "Print the grid cells without training");

  std::vector<std::string> figure_inputs;
  std::string figures_out = "dgcl-out";
  auto* fig_cmd = app.add_subcommand("export-figures",
                                     "Convert sweep/ablation CSVs into one long-format CSV");
  fig_cmd->add_option("--in", figure_inputs, "Input CSV files")->required();
  fig_cmd->add_option("--out", figures_out, "Output directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*train_cmd) {
      const auto config = resolve_config(train_opts);
      const auto dataset = train::load_dataset(config);
      const auto dir = prepare_out(train_opts.out_dir);
      train::EpochObserver progress;
      if (!quiet) {
        progress = [&err](const train::EpochRecord& r) { err << r.to_json().dump() << "\n"; };
      }
      const auto result = train::train(config, dataset, progress);
      write_file(dir / "report.jsonl", result.report.to_json_lines());
      train::save_checkpoint(result.model, (dir / "checkpoint.json").string());
      write_file(dir / "config.txt", train::format_config(config));
      out << result.report.final_metrics.dump() << "\n";
    } else if (*eval_cmd) {
      if (!fs::exists(checkpoint_path)) {
        throw CheckpointError("checkpoint '" + checkpoint_path + "' does not exist");
      }
      const auto model = train::load_checkpoint(checkpoint_path);
      train::TrainConfig data_config = model.config;
      for (const auto& s : eval_opts.overrides) train::apply_override(data_config, s);
      const auto dataset = train::load_dataset(data_config);
      auto metrics = train::evaluate_model(model, dataset).to_json();
      metrics["random_recall@10"] = eval::random_recall_baseline(dataset, 10);
      out << metrics.dump() << "\n";
    } else if (*ablate_cmd) {
      const auto config = resolve_config(ablate_opts);
      const auto dataset = train::load_dataset(config);
      if (ablate_seeds.empty()) ablate_seeds.push_back(config.seed);
      const auto dir = prepare_out(ablate_opts.out_dir);
      const auto path = dir / "ablation.csv";
      write_file(path, train::ablation_csv(train::run_ablation(config, dataset, ablate_seeds)));
      out << path.string() << "\n";
    } else if (*sweep_cmd) {
      if (list_only) {
        for (const auto& cell : train::sweep_grid(sweep_param))
          out << cell.param << "," << cell.value << "\n";
        return 0;
      }
      const auto config = resolve_config(sweep_opts);
      const auto dataset = train::load_dataset(config);
      const auto dir = prepare_out(sweep_opts.out_dir);
      const auto path = dir / ("sweep_" + sweep_param + ".csv");
      write_file(path, train::sweep_csv(train::run_sweep(config, dataset, sweep_param)));
      out << path.string() << "\n";
    } else if (*fig_cmd) {
      std::vector<std::string> texts;
      for (const auto& p : figure_inputs) texts.push_back(read_file(p));
      const auto dir = prepare_out(figures_out);
      const auto path = dir / "figures_long.csv";
      write_file(path, train::export_figures(texts));
      out << path.string() << "\n";
    }
  } catch (const ConfigError& e) {
    err << "dgcl: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "dgcl: " << e.what() << "\n";
    return kExitFailure;
  }
  return 0;
}

}  // namespace dgcl::cli
