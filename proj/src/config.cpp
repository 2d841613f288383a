#include "dgcl/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "dgcl/error.hpp"

namespace dgcl::train {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::string describe(std::string_view key, std::string_view value, const char* want) {
  return "config key '" + std::string(key) + "': expected " + want + ", got '" +
         std::string(value) + "'";
}

std::uint64_t parse_uint(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError(describe(key, v, "a non-negative integer"));
  }
  return out;
}

double parse_double(std::string_view key, std::string_view v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError(describe(key, v, "a number"));
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(describe(key, v, "a boolean"));
}

struct Entry {
  const char* key;
  const char* section;
  std::function<void(TrainConfig&, std::string_view key, std::string_view value)> set;
  std::function<nlohmann::json(const TrainConfig&)> get;
};

template <typename T>
Entry size_entry(const char* key, const char* section, T TrainConfig::*field) {
  return {key, section,
          [field](TrainConfig& c, std::string_view k, std::string_view v) {
            c.*field = static_cast<T>(parse_uint(k, v));
          },
          [field](const TrainConfig& c) { return nlohmann::json(c.*field); }};
}

Entry double_entry(const char* key, const char* section, double TrainConfig::*field) {
  return {key, section,
          [field](TrainConfig& c, std::string_view k, std::string_view v) {
            c.*field = parse_double(k, v);
          },
          [field](const TrainConfig& c) { return nlohmann::json(c.*field); }};
}

Entry bool_entry(const char* key, const char* section, bool TrainConfig::*field) {
  return {key, section,
          [field](TrainConfig& c, std::string_view k, std::string_view v) {
            c.*field = parse_bool(k, v);
          },
          [field](const TrainConfig& c) { return nlohmann::json(c.*field); }};
}

const std::vector<Entry>& table() {
  static const std::vector<Entry> entries = {
      {"data", "data",
       [](TrainConfig& c, std::string_view, std::string_view v) { c.data = std::string(v); },
       [](const TrainConfig& c) { return nlohmann::json(c.data); }},
      size_entry("synthetic-users", "data", &TrainConfig::synthetic_users),
      size_entry("synthetic-items", "data", &TrainConfig::synthetic_items),
      size_entry("synthetic-blocks", "data", &TrainConfig::synthetic_blocks),
      double_entry("synthetic-prob", "data", &TrainConfig::synthetic_prob),
      size_entry("data-seed", "data", &TrainConfig::data_seed),
      double_entry("split-ratio", "data", &TrainConfig::split_ratio),

      size_entry("layers", "model", &TrainConfig::layers),
      size_entry("embed-dim", "model", &TrainConfig::embed_dim),
      size_entry("neg-candidates", "model", &TrainConfig::neg_candidates),
      bool_entry("include-layer-zero", "model", &TrainConfig::include_layer_zero),
      double_entry("init-std", "model", &TrainConfig::init_std),

      size_entry("diff-steps", "diffusion", &TrainConfig::diff_steps),
      double_entry("beta-min", "diffusion", &TrainConfig::beta_min),
      double_entry("beta-max", "diffusion", &TrainConfig::beta_max),
      {"beta-schedule", "diffusion",
       [](TrainConfig& c, std::string_view, std::string_view v) {
         c.beta_schedule = diffusion::parse_schedule_kind(v);
       },
       [](const TrainConfig& c) { return nlohmann::json(diffusion::to_string(c.beta_schedule)); }},
      size_entry("heads", "diffusion", &TrainConfig::heads),
      size_entry("t-start", "diffusion", &TrainConfig::t_start),
      bool_entry("row-independent", "diffusion", &TrainConfig::row_independent),
      double_entry("diff-lr", "diffusion", &TrainConfig::diff_lr),
      size_entry("diff-batch-size", "diffusion", &TrainConfig::diff_batch_size),
      size_entry("diff-pretrain-epochs", "diffusion", &TrainConfig::diff_pretrain_epochs),
      size_entry("vae-hidden", "diffusion", &TrainConfig::vae_hidden),
      size_entry("vae-latent", "diffusion", &TrainConfig::vae_latent),
      double_entry("vae-kl-weight", "diffusion", &TrainConfig::vae_kl_weight),
      double_entry("noise-eps", "diffusion", &TrainConfig::noise_eps),

      double_entry("tau", "contrastive", &TrainConfig::tau),
      bool_entry("raw-dot", "contrastive", &TrainConfig::raw_dot),
      double_entry("lambda", "contrastive", &TrainConfig::lambda),

      double_entry("lr", "train", &TrainConfig::lr),
      double_entry("weight-decay", "train", &TrainConfig::weight_decay),
      size_entry("epochs", "train", &TrainConfig::epochs),
      size_entry("batch-size", "train", &TrainConfig::batch_size),
      size_entry("seed", "train", &TrainConfig::seed),
      size_entry("eval-every", "train", &TrainConfig::eval_every),
      size_entry("patience", "train", &TrainConfig::patience),
      {"ablation", "train",
       [](TrainConfig& c, std::string_view, std::string_view v) { c.ablation = parse_ablation(v); },
       [](const TrainConfig& c) { return nlohmann::json(to_string(c.ablation)); }},
  };
  return entries;
}

const Entry& lookup(std::string_view key) {
  for (const auto& e : table())
    if (key == e.key) return e;
  throw ConfigError("unknown config key '" + std::string(key) + "'");
}

}  // namespace

Ablation parse_ablation(std::string_view name) {
  if (name == "full") return Ablation::kFull;
  if (name == "no-diff") return Ablation::kNoDiff;
  if (name == "no-neg") return Ablation::kNoNeg;
  if (name == "uniform-noise") return Ablation::kUniformNoise;
  if (name == "vae") return Ablation::kVae;
  throw ConfigError("unknown ablation '" + std::string(name) +
                    "' (expected full, no-diff, no-neg, uniform-noise or vae)");
}

std::string to_string(Ablation arm) {
  switch (arm) {
    case Ablation::kFull: return "full";
    case Ablation::kNoDiff: return "no-diff";
    case Ablation::kNoNeg: return "no-neg";
    case Ablation::kUniformNoise: return "uniform-noise";
    case Ablation::kVae: return "vae";
  }
  return "unknown";
}

void TrainConfig::validate() const {
  auto require = [](bool ok, const char* key, const std::string& why) {
    if (!ok) throw ConfigError("config key '" + std::string(key) + "': " + why);
  };
  require(split_ratio > 0.0 && split_ratio < 1.0, "split-ratio", "must lie in (0, 1)");
  require(synthetic_blocks >= 1, "synthetic-blocks", "must be >= 1");
  require(synthetic_prob > 0.0 && synthetic_prob <= 1.0, "synthetic-prob", "must lie in (0, 1]");
  require(layers >= 1, "layers", "must be >= 1");
  require(embed_dim >= 2 && embed_dim % 2 == 0, "embed-dim", "must be even and >= 2");
  require(neg_candidates >= 1, "neg-candidates", "must be >= 1");
  require(init_std > 0.0, "init-std", "must be positive");
  require(diff_steps >= 1, "diff-steps", "must be >= 1");
  require(beta_min > 0.0 && beta_min <= beta_max && beta_max < 1.0, "beta-min",
          "need 0 < beta-min <= beta-max < 1");
  require(heads >= 1 && embed_dim % heads == 0, "heads", "must divide embed-dim");
  require(t_start <= diff_steps, "t-start", "must not exceed diff-steps");
  require(diff_lr > 0.0, "diff-lr", "must be positive");
  require(diff_batch_size >= 1, "diff-batch-size", "must be >= 1");
  require(vae_hidden >= 1 && vae_latent >= 1, "vae-latent", "VAE sizes must be >= 1");
  require(vae_kl_weight >= 0.0, "vae-kl-weight", "must be >= 0");
  require(noise_eps >= 0.0, "noise-eps", "must be >= 0");
  require(tau > 0.0, "tau", "must be positive");
  require(lambda >= 0.0, "lambda", "must be >= 0");
  require(lr > 0.0, "lr", "must be positive");
  require(weight_decay >= 0.0, "weight-decay", "must be >= 0");
  require(batch_size >= 1, "batch-size", "must be >= 1");
  require(eval_every >= 1, "eval-every", "must be >= 1");
}

void TrainConfig::set(std::string_view key, std::string_view value) {
  const auto dot = key.find('.');
  std::string_view name = key;
  if (dot != std::string_view::npos) {
    name = key.substr(dot + 1);
    const Entry& e = lookup(name);
    if (key.substr(0, dot) != e.section) {
      throw ConfigError("config key '" + std::string(name) + "' belongs to section [" +
                        e.section + "], not [" + std::string(key.substr(0, dot)) + "]");
    }
  }
  lookup(name).set(*this, name, trim(value));
}

nlohmann::json TrainConfig::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& e : table()) j[e.key] = e.get(*this);
  return j;
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  for (const auto& [key, value] : j.items()) {
    if (value.is_string()) {
      c.set(key, value.get<std::string>());
    } else if (value.is_boolean()) {
      c.set(key, value.get<bool>() ? "true" : "false");
    } else if (value.is_number_unsigned() || value.is_number_integer()) {
      c.set(key, std::to_string(value.get<std::uint64_t>()));
    } else if (value.is_number_float()) {
      // Round-trips doubles exactly.
      std::ostringstream os;
      os.precision(17);
      os << value.get<double>();
      c.set(key, os.str());
    } else {
      throw ConfigError("config key '" + key + "' has an unsupported JSON type");
    }
  }
  return c;
}

std::vector<std::pair<std::string, std::string>> TrainConfig::keys() {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& e : table()) out.emplace_back(e.section, e.key);
  return out;
}

TrainConfig parse_config(std::istream& in, TrainConfig base) {
  std::string line;
  std::string section;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string text = trim(line.substr(0, line.find_first_of("#;")));
    if (text.empty()) continue;
    const auto where = " (line " + std::to_string(line_no) + ")";
    if (text.front() == '[') {
      if (text.back() != ']') throw ConfigError("malformed section header" + where);
      section = trim(std::string_view(text).substr(1, text.size() - 2));
      static const char* kSections[] = {"data", "model", "diffusion", "contrastive", "train"};
      if (std::find(std::begin(kSections), std::end(kSections), section) == std::end(kSections)) {
        throw ConfigError("unknown section [" + section + "]" + where);
      }
      continue;
    }
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ConfigError("expected 'key = value'" + where);
    const std::string key = trim(std::string_view(text).substr(0, eq));
    const std::string value = trim(std::string_view(text).substr(eq + 1));
    try {
      base.set(section.empty() ? key : section + "." + key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(e.what() + where);
    }
  }
  return base;
}

TrainConfig load_config(const std::string& path, TrainConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in, std::move(base));
}

void apply_override(TrainConfig& config, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw ConfigError("override '" + std::string(assignment) + "' is not key=value");
  }
  config.set(trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

std::string format_config(const TrainConfig& config) {
  std::ostringstream os;
  const nlohmann::json j = config.to_json();
  std::string section;
  for (const auto& e : table()) {
    if (section != e.section) {
      if (!section.empty()) os << "\n";
      section = e.section;
      os << "[" << section << "]\n";
    }
    const auto& v = j.at(e.key);
    os << e.key << " = " << (v.is_string() ? v.get<std::string>() : v.dump()) << "\n";
  }
  return os.str();
}

}  // namespace dgcl::train
