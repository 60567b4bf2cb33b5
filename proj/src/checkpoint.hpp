#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "models.hpp"
#include "prior.hpp"
#include "trainer.hpp"

namespace modrel {

constexpr int kCheckpointVersion = 1;

// Single-file checkpoint: a text manifest (array name, dtype, shape, byte
// offset into the payload) followed by a little-endian binary payload.
// Tensors are float32; counters and rng state are 64-bit integers. Writing a
// checkpoint also rounds the trainer's in-memory state through float32, so
// training continued in-process matches training resumed from the file bit
// for bit.
struct CheckpointArray {
  std::string dtype;  // f32 | i64 | u64
  std::vector<int> dims;
  std::vector<unsigned char> bytes;

  int64_t element_count() const;
  std::vector<double> as_f64() const;   // from f32 payload
  int64_t as_i64() const;
  uint64_t as_u64() const;
};

struct CheckpointData {
  int version = kCheckpointVersion;
  std::string config_digest;
  int epoch = 0;
  Stage stage = Stage::Warmup;
  bool has_priors = false;
  std::map<std::string, CheckpointArray> arrays;
};

// Serializes the trainer's state and quantizes it in place (see above).
void save_checkpoint(const std::string& path, Trainer& trainer, const std::string& config_digest);

// Parses the manifest and payload. Throws VersionError for a newer format
// version, IoError for anything unreadable.
CheckpointData read_checkpoint(const std::string& path);

// Restores parameters, optimizer state, priors, rng, and epoch position.
void restore_trainer(Trainer& trainer, const CheckpointData& data);

// Model-and-priors view for evaluation (no trainer needed).
struct EvalState {
  Models models;
  MixtureSet priors;
  bool has_priors = false;
  int epoch = 0;
  Stage stage = Stage::Warmup;
};
EvalState load_eval_state(const CheckpointData& data, const ModelConfig& mcfg,
                          const std::vector<int>& partition_cards,
                          const std::vector<std::string>& partition_names);

}  // namespace modrel
