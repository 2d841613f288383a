#include "dgcl/experiments.hpp"

#include <iomanip>
#include <sstream>

#include "dgcl/error.hpp"
#include "dgcl/trainer.hpp"

namespace dgcl::train {
namespace {

std::string format_metric(double v) {
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

void write_rows(std::ostringstream& os, const std::vector<RunSummary>& runs, bool with_param) {
  for (const auto& r : runs) {
    if (with_param) os << r.param << ",";
    os << r.value << "," << r.seed;
    for (const auto& m : kMetricColumns) os << "," << format_metric(r.metrics.at(m).get<double>());
    os << "," << r.best_epoch << "," << r.epochs_run << "\n";
  }
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

}  // namespace

std::vector<SweepCell> sweep_grid(std::string_view param) {
  std::vector<SweepCell> cells;
  auto add = [&](const char* p, const char* key, std::initializer_list<const char*> values) {
    for (const char* v : values) cells.push_back({p, key, v});
  };
  const bool all = param == "all";
  if (all || param == "lambda") add("lambda", "lambda", {"0.1", "0.2", "0.3"});
  if (all || param == "T") add("T", "diff-steps", {"10", "20", "30", "50"});
  if (all || param == "L") add("L", "layers", {"1", "2", "3"});
  if (all || param == "schedule") add("schedule", "beta-schedule", {"linear", "quadratic", "sigmoid"});
  if (cells.empty()) {
    throw ConfigError("unknown sweep parameter '" + std::string(param) +
                      "' (expected lambda, T, L, schedule or all)");
  }
  return cells;
}

RunSummary run_one(const TrainConfig& config, const data::InteractionDataset& dataset,
                   std::string param, std::string value) {
  const TrainResult result = train(config, dataset);
  RunSummary s;
  s.param = std::move(param);
  s.value = std::move(value);
  s.seed = config.seed;
  s.metrics = result.report.final_metrics;
  s.best_epoch = result.report.best_epoch;
  s.epochs_run = result.report.epochs.size();
  return s;
}

std::vector<RunSummary> run_ablation(const TrainConfig& base, const data::InteractionDataset& dataset,
                                     const std::vector<std::uint64_t>& seeds) {
  std::vector<RunSummary> runs;
  for (std::uint64_t seed : seeds) {
    for (Ablation arm : kAllAblations) {
      TrainConfig c = base;
      c.seed = seed;
      c.ablation = arm;
      runs.push_back(run_one(c, dataset, "arm", to_string(arm)));
    }
  }
  return runs;
}

std::vector<RunSummary> run_sweep(const TrainConfig& base, const data::InteractionDataset& dataset,
                                  std::string_view param) {
  std::vector<RunSummary> runs;
  for (const SweepCell& cell : sweep_grid(param)) {
    TrainConfig c = base;
    c.set(cell.key, cell.value);
    c.validate();
    runs.push_back(run_one(c, dataset, cell.param, cell.value));
  }
  return runs;
}

std::string ablation_csv(const std::vector<RunSummary>& runs) {
  std::ostringstream os;
  os << kAblationSchema << "\narm,seed";
  for (const auto& m : kMetricColumns) os << "," << m;
  os << ",best_epoch,epochs_run\n";
  write_rows(os, runs, false);
  return os.str();
}

std::string sweep_csv(const std::vector<RunSummary>& runs) {
  std::ostringstream os;
  os << kSweepSchema << "\nparam,value,seed";
  for (const auto& m : kMetricColumns) os << "," << m;
  os << ",best_epoch,epochs_run\n";
  write_rows(os, runs, true);
  return os.str();
}

std::string export_figures(const std::vector<std::string>& csv_texts) {
  std::ostringstream out;
  out << kFiguresSchema << "\nfigure,x,seed,metric,value\n";
  for (const std::string& text : csv_texts) {
    std::istringstream in(text);
    std::string schema, header_line, line;
    std::getline(in, schema);
    const bool ablation = schema == kAblationSchema;
    if (!ablation && schema != kSweepSchema) {
      throw ParseError("unrecognised CSV schema line '" + schema + "'");
    }
    std::getline(in, header_line);
    const auto header = split(header_line, ',');
    const std::size_t first_metric = ablation ? 2 : 3;
    if (header.size() != first_metric + kMetricColumns.size() + 2) {
      throw ParseError("unexpected CSV header '" + header_line + "'");
    }
    std::size_t line_no = 2;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      const auto f = split(line, ',');
      if (f.size() != header.size()) {
        throw ParseError("CSV line " + std::to_string(line_no) + " has " +
                         std::to_string(f.size()) + " fields, expected " +
                         std::to_string(header.size()));
      }
      const std::string figure = ablation ? "ablation" : f[0];
      const std::string& x = ablation ? f[0] : f[1];
      const std::string& seed = f[first_metric - 1];
      for (std::size_t m = 0; m < kMetricColumns.size(); ++m) {
        out << figure << "," << x << "," << seed << "," << header[first_metric + m] << ","
            << f[first_metric + m] << "\n";
      }
    }
  }
  return out.str();
}

}  // namespace dgcl::train
