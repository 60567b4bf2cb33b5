#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "models.hpp"
#include "trainer.hpp"

namespace modrel {

// Flat dotted-key experiment configuration. Every field has a default;
// unknown keys are rejected by name. Files are `key = value` lines with `#`
// comments.
struct ExperimentConfig {
  uint64_t seed = 0;
  std::string out_dir = "out";

  std::string dataset_factors = "shape:3:categorical,x:4:ordinal,y:4:ordinal,scale:2:ordinal";
  std::string dataset_nuisance;
  int dataset_height = 16;
  int dataset_width = 16;
  int dataset_channels = 1;
  int64_t dataset_tau = 96;
  int dataset_min_per_value = 2;
  int64_t dataset_max_bytes = 512ll << 20;

  int model_partition_dim = 8;
  std::string model_encoder_hidden = "256,256";
  std::string model_decoder_hidden = "256,256";
  std::string model_disc_hidden = "256,256,256";
  std::string model_relnet_hidden = "256,256,256";

  double train_beta = 0.1;
  double train_lr = 1e-4;
  int train_batch_mae = 1024;
  int train_batch_rel = 128;
  int train_warmup_epochs = 300;
  int train_full_epochs = 700;
  double train_rel_aux_weight = 1.0;
  bool train_rel_sample_codes = true;
  int train_prior_refresh_every = 1;
  int train_checkpoint_every = 0;
  int64_t train_triples = 4096;
  int64_t train_heldout_triples = 512;
  double train_adam_beta1 = 0.9;
  double train_adam_beta2 = 0.999;
  double train_adam_eps = 1e-8;

  int64_t eval_n_trials = 10000;

  void set(const std::string& key, const std::string& value);  // ConfigError on unknown key/bad value
  std::string get(const std::string& key) const;
  static std::vector<std::string> key_names();

  // Sorted `key = value` lines; parsing this text reproduces the config
  // exactly.
  std::string canonical_text() const;
  // FNV-1a over the canonical text, 16 hex digits.
  std::string digest() const;

  static ExperimentConfig parse_text(const std::string& text);
  static ExperimentConfig load(const std::string& path);

  // Derived objects. validate() runs inside each.
  FactorSpec factor_spec() const;
  ModelConfig model_config() const;  // relation_count/partitions filled from the spec
  TrainConfig train_config() const;
};

uint64_t fnv1a64(const std::string& text);

}  // namespace modrel
