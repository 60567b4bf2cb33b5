#include "config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "errors.hpp"

namespace modrel {

namespace {

std::string fmt_f64(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_f64(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("bad numeric value for key '" + key + "': " + v);
  }
}

int64_t parse_i64(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const int64_t x = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("bad integer value for key '" + key + "': " + v);
  }
}

uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const uint64_t x = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("bad integer value for key '" + key + "': " + v);
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("bad boolean value for key '" + key + "': " + v);
}

std::vector<int> parse_widths(const std::string& key, const std::string& v) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const int64_t w = parse_i64(key, item);
    if (w < 1) throw ConfigError("widths in '" + key + "' must be positive");
    out.push_back(static_cast<int>(w));
  }
  if (out.empty()) throw ConfigError("key '" + key + "' needs at least one width");
  return out;
}

struct KeyBinding {
  const char* name;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

const std::vector<KeyBinding>& bindings() {
  static const std::vector<KeyBinding> kBindings = {
      {"seed", [](ExperimentConfig& c, const std::string& v) { c.seed = parse_u64("seed", v); },
       [](const ExperimentConfig& c) { return std::to_string(c.seed); }},
      {"out_dir", [](ExperimentConfig& c, const std::string& v) { c.out_dir = v; },
       [](const ExperimentConfig& c) { return c.out_dir; }},
      {"dataset.factors", [](ExperimentConfig& c, const std::string& v) { c.dataset_factors = v; },
       [](const ExperimentConfig& c) { return c.dataset_factors; }},
      {"dataset.nuisance", [](ExperimentConfig& c, const std::string& v) { c.dataset_nuisance = v; },
       [](const ExperimentConfig& c) { return c.dataset_nuisance; }},
      {"dataset.height",
       [](ExperimentConfig& c, const std::string& v) { c.dataset_height = static_cast<int>(parse_i64("dataset.height", v)); },
       [](const ExperimentConfig& c) { return std::to_string(c.dataset_height); }},
      {"dataset.width",
       [](ExperimentConfig& c, const std::string& v) { c.dataset_width = static_cast<int>(parse_i64("dataset.width", v)); },
       [](const ExperimentConfig& c) { return std::to_string(c.dataset_width); }},
      {"dataset.channels",
       [](ExperimentConfig& c, const std::string& v) { c.dataset_channels = static_cast<int>(parse_i64("dataset.channels", v)); },
       [](const ExperimentConfig& c) { return std::to_string(c.dataset_channels); }},
      {"dataset.tau",
       [](ExperimentConfig& c, const std::string& v) { c.dataset_tau = parse_i64("dataset.tau", v); },
       [](const ExperimentConfig& c) { return std::to_string(c.dataset_tau); }},
      {"dataset.min_per_value",
       [](ExperimentConfig& c, const std::string& v) { c.dataset_min_per_value = static_cast<int>(parse_i64("dataset.min_per_value", v)); },
       [](const ExperimentConfig& c) { return std::to_string(c.dataset_min_per_value); }},
      {"dataset.max_bytes",
       [](ExperimentConfig& c, const std::string& v) { c.dataset_max_bytes = parse_i64("dataset.max_bytes", v); },
       [](const ExperimentConfig& c) { return std::to_string(c.dataset_max_bytes); }},
      {"model.partition_dim",
       [](ExperimentConfig& c, const std::string& v) { c.model_partition_dim = static_cast<int>(parse_i64("model.partition_dim", v)); },
       [](const ExperimentConfig& c) { return std::to_string(c.model_partition_dim); }},
      {"model.encoder_hidden",
       [](ExperimentConfig& c, const std::string& v) { parse_widths("model.encoder_hidden", v); c.model_encoder_hidden = v; },
       [](const ExperimentConfig& c) { return c.model_encoder_hidden; }},
      {"model.decoder_hidden",
       [](ExperimentConfig& c, const std::string& v) { parse_widths("model.decoder_hidden", v); c.model_decoder_hidden = v; },
       [](const ExperimentConfig& c) { return c.model_decoder_hidden; }},
      {"model.disc_hidden",
       [](ExperimentConfig& c, const std::string& v) { parse_widths("model.disc_hidden", v); c.model_disc_hidden = v; },
       [](const ExperimentConfig& c) { return c.model_disc_hidden; }},
      {"model.relnet_hidden",
       [](ExperimentConfig& c, const std::string& v) { parse_widths("model.relnet_hidden", v); c.model_relnet_hidden = v; },
       [](const ExperimentConfig& c) { return c.model_relnet_hidden; }},
      {"train.beta",
       [](ExperimentConfig& c, const std::string& v) { c.train_beta = parse_f64("train.beta", v); },
       [](const ExperimentConfig& c) { return fmt_f64(c.train_beta); }},
      {"train.lr", [](ExperimentConfig& c, const std::string& v) { c.train_lr = parse_f64("train.lr", v); },
       [](const ExperimentConfig& c) { return fmt_f64(c.train_lr); }},
      {"train.batch_mae",
       [](ExperimentConfig& c, const std::string& v) { c.train_batch_mae = static_cast<int>(parse_i64("train.batch_mae", v)); },
       [](const ExperimentConfig& c) { return std::to_string(c.train_batch_mae); }},
      {"train.batch_rel",
       [](ExperimentConfig& c, const std::string& v) { c.train_batch_rel = static_cast<int>(parse_i64("train.batch_rel", v)); },
       [](const ExperimentConfig& c) { return std::to_string(c.train_batch_rel); }},
      {"train.warmup_epochs",
       [](ExperimentConfig& c, const std::string& v) { c.train_warmup_epochs = static_cast<int>(parse_i64("train.warmup_epochs", v)); },
       [](const ExperimentConfig& c) { return std::to_string(c.train_warmup_epochs); }},
      {"train.full_epochs",
       [](ExperimentConfig& c, const std::string& v) { c.train_full_epochs = static_cast<int>(parse_i64("train.full_epochs", v)); },
       [](const ExperimentConfig& c) { return std::to_string(c.train_full_epochs); }},
      {"train.rel_aux_weight",
       [](ExperimentConfig& c, const std::string& v) { c.train_rel_aux_weight = parse_f64("train.rel_aux_weight", v); },
       [](const ExperimentConfig& c) { return fmt_f64(c.train_rel_aux_weight); }},
      {"train.rel_sample_codes",
       [](ExperimentConfig& c, const std::string& v) { c.train_rel_sample_codes = parse_bool("train.rel_sample_codes", v); },
       [](const ExperimentConfig& c) { return c.train_rel_sample_codes ? "true" : "false"; }},
      {"train.prior_refresh_every",
       [](ExperimentConfig& c, const std::string& v) { c.train_prior_refresh_every = static_cast<int>(parse_i64("train.prior_refresh_every", v)); },
       [](const ExperimentConfig& c) { return std::to_string(c.train_prior_refresh_every); }},
      {"train.checkpoint_every",
       [](ExperimentConfig& c, const std::string& v) { c.train_checkpoint_every = static_cast<int>(parse_i64("train.checkpoint_every", v)); },
       [](const ExperimentConfig& c) { return std::to_string(c.train_checkpoint_every); }},
      {"train.triples",
       [](ExperimentConfig& c, const std::string& v) { c.train_triples = parse_i64("train.triples", v); },
       [](const ExperimentConfig& c) { return std::to_string(c.train_triples); }},
      {"train.heldout_triples",
       [](ExperimentConfig& c, const std::string& v) { c.train_heldout_triples = parse_i64("train.heldout_triples", v); },
       [](const ExperimentConfig& c) { return std::to_string(c.train_heldout_triples); }},
      {"train.adam_beta1",
       [](ExperimentConfig& c, const std::string& v) { c.train_adam_beta1 = parse_f64("train.adam_beta1", v); },
       [](const ExperimentConfig& c) { return fmt_f64(c.train_adam_beta1); }},
      {"train.adam_beta2",
       [](ExperimentConfig& c, const std::string& v) { c.train_adam_beta2 = parse_f64("train.adam_beta2", v); },
       [](const ExperimentConfig& c) { return fmt_f64(c.train_adam_beta2); }},
      {"train.adam_eps",
       [](ExperimentConfig& c, const std::string& v) { c.train_adam_eps = parse_f64("train.adam_eps", v); },
       [](const ExperimentConfig& c) { return fmt_f64(c.train_adam_eps); }},
      {"eval.n_trials",
       [](ExperimentConfig& c, const std::string& v) { c.eval_n_trials = parse_i64("eval.n_trials", v); },
       [](const ExperimentConfig& c) { return std::to_string(c.eval_n_trials); }},
  };
  return kBindings;
}

}  // namespace

uint64_t fnv1a64(const std::string& text) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  for (const KeyBinding& b : bindings()) {
    if (key == b.name) {
      b.set(*this, value);
      return;
    }
  }
  throw ConfigError("unknown config key '" + key + "'");
}

std::string ExperimentConfig::get(const std::string& key) const {
  for (const KeyBinding& b : bindings()) {
    if (key == b.name) return b.get(*this);
  }
  throw ConfigError("unknown config key '" + key + "'");
}

std::vector<std::string> ExperimentConfig::key_names() {
  std::vector<std::string> out;
  for (const KeyBinding& b : bindings()) out.push_back(b.name);
  std::sort(out.begin(), out.end());
  return out;
}

std::string ExperimentConfig::canonical_text() const {
  std::string out;
  for (const std::string& key : key_names()) {
    out += key;
    out += " = ";
    out += get(key);
    out += "\n";
  }
  return out;
}

std::string ExperimentConfig::digest() const {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a64(canonical_text())));
  return buf;
}

ExperimentConfig ExperimentConfig::parse_text(const std::string& text) {
  ExperimentConfig cfg;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    auto trim = [](std::string& s) {
      const size_t a = s.find_first_not_of(" \t\r");
      const size_t b = s.find_last_not_of(" \t\r");
      s = a == std::string::npos ? "" : s.substr(a, b - a + 1);
    };
    trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    trim(key);
    trim(value);
    cfg.set(key, value);
  }
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot read config file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_text(ss.str());
}

FactorSpec ExperimentConfig::factor_spec() const {
  return FactorSpec::parse(dataset_factors, dataset_nuisance);
}

ModelConfig ExperimentConfig::model_config() const {
  const FactorSpec spec = factor_spec();
  ModelConfig mc;
  mc.height = dataset_height;
  mc.width = dataset_width;
  mc.channels = dataset_channels;
  mc.partitions = spec.relevant_count();
  mc.partition_dim = model_partition_dim;
  mc.relation_count = static_cast<int>(standard_relations(spec).size());
  mc.encoder_hidden = parse_widths("model.encoder_hidden", model_encoder_hidden);
  mc.decoder_hidden = parse_widths("model.decoder_hidden", model_decoder_hidden);
  mc.disc_hidden = parse_widths("model.disc_hidden", model_disc_hidden);
  mc.relnet_hidden = parse_widths("model.relnet_hidden", model_relnet_hidden);
  mc.validate();
  return mc;
}

TrainConfig ExperimentConfig::train_config() const {
  TrainConfig tc;
  tc.beta = train_beta;
  tc.lr = train_lr;
  tc.batch_mae = train_batch_mae;
  tc.batch_rel = train_batch_rel;
  tc.warmup_epochs = train_warmup_epochs;
  tc.full_epochs = train_full_epochs;
  tc.rel_aux_weight = train_rel_aux_weight;
  tc.rel_sample_codes = train_rel_sample_codes;
  tc.prior_refresh_every = train_prior_refresh_every;
  tc.checkpoint_every = train_checkpoint_every;
  tc.triple_count = train_triples;
  tc.heldout_triples = train_heldout_triples;
  tc.seed = seed;
  tc.adam_beta1 = train_adam_beta1;
  tc.adam_beta2 = train_adam_beta2;
  tc.adam_eps = train_adam_eps;
  tc.validate();
  return tc;
}

}  // namespace modrel
