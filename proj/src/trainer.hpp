#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "losses.hpp"
#include "metrics.hpp"
#include "models.hpp"
#include "prior.hpp"
#include "rng.hpp"

namespace modrel {

struct TrainConfig {
  double beta = 0.1;
  double lr = 1e-4;
  int batch_mae = 1024;
  int batch_rel = 128;
  int warmup_epochs = 300;
  int full_epochs = 700;
  double rel_aux_weight = 1.0;
  bool rel_sample_codes = true;   // train the relation net on component samples instead of encodings
  int prior_refresh_every = 1;    // full-stage epochs between re-estimations; 0 = fixed at transition
  int checkpoint_every = 0;       // epochs between periodic checkpoints; 0 = final only
  int64_t triple_count = 4096;
  int64_t heldout_triples = 512;
  uint64_t seed = 0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  int total_epochs() const { return warmup_epochs + full_epochs; }
  void validate() const;
  AdamConfig adam() const { return {lr, adam_beta1, adam_beta2, adam_eps}; }
};

enum class Stage { Warmup, Full };

struct EpochStats {
  int epoch = 0;  // 1-based across both stages
  Stage stage = Stage::Warmup;
  double recon = 0.0;
  double disc = 0.0;
  double gen = 0.0;
  double rel = std::numeric_limits<double>::quiet_NaN();
  double rel_acc = std::numeric_limits<double>::quiet_NaN();
  double seconds = 0.0;
};

struct TrainLog {
  std::vector<EpochStats> rows;
};

void write_train_log_csv(const TrainLog& log, std::ostream& os);
TrainLog parse_train_log_csv(std::istream& is);  // throws ConfigError with the line number

struct ScheduleHooks {
  // invoked once, right after priors are estimated at the warmup->full
  // transition: (encoded supervised codes, labels row-major, priors)
  std::function<void(const Tensor&, const std::vector<int>&, const MixtureSet&)> on_transition;
  // invoked after each completed epoch (checkpointing lives here)
  std::function<void(int epoch)> after_epoch;
};

// Owns the models, priors, and the single training rng.
//
// An epoch covers max(batch, N) samples: datasets smaller than the batch
// size are passed over repeatedly (reshuffled each pass) until the batch
// volume is reached, so the optimization step count per epoch is resolution
// independent.
//
// All randomness is consumed in a fixed documented order so a restored
// checkpoint replays the remaining epochs exactly:
//   per mae pass: Fisher-Yates shuffle of record order (j = below(i+1) for
//   i = N-1..1), then per batch the prior draws in row-major order (uniform:
//   one uniform(-1,1) per coordinate; mixture: below(V) then d normals per
//   partition);
//   per rel pass: Fisher-Yates shuffle of triple order, then (only with
//   rel_sample_codes) per row component samples for z_in then z_target.
class Trainer {
 public:
  Trainer(Models models, const Dataset& ds, std::vector<int64_t> supervised,
          std::vector<Relation> relations, TrainConfig cfg);

  // One autoencoder epoch: per batch one discriminator step then one
  // encoder/decoder step on reconstruction + beta * prior matching.
  EpochStats mae_epoch(bool uniform_prior);

  // One relation-net epoch over the training triples; touches only relnet.
  EpochStats rel_epoch();

  // Encode the supervised subset (ascending record index) and estimate the
  // per-partition mixtures.
  void transition(const ScheduleHooks& hooks = {});

  // Classification accuracy of the relation net on held-out triples.
  double heldout_accuracy();

  // Remaining epochs of the two-stage schedule; returns rows for the epochs
  // it ran.
  TrainLog run(const ScheduleHooks& hooks = {});

  Models& models() { return models_; }
  const Models& models() const { return models_; }
  const MixtureSet& priors() const;
  bool priors_ready() const { return priors_ready_; }
  int epochs_done() const { return epochs_done_; }
  Stage stage() const;
  Rng& train_rng() { return rng_; }
  const TrainConfig& config() const { return cfg_; }
  const Dataset& dataset() const { return *ds_; }
  const std::vector<Relation>& relations() const { return relations_; }
  const std::vector<int64_t>& supervised() const { return supervised_; }

  // Restore training position from checkpoint state.
  void restore(int epochs_done, bool priors_ready, MixtureSet priors, uint64_t rng_state);

  // Round every parameter, optimizer moment, and prior array through float32
  // so the in-memory state equals what a checkpoint write preserves.
  void quantize_state();

  // Encode every record (row-major batch of the whole dataset).
  Tensor encode_all();

 private:
  EpochStats run_epoch(int epoch, const ScheduleHooks& hooks);
  Tensor gather_images(const std::vector<int64_t>& indices) const;
  Tensor sample_prior_batch(int n, bool uniform);
  void estimate_priors_now();

  Models models_;
  const Dataset* ds_;
  std::vector<int64_t> supervised_;
  std::vector<Relation> relations_;
  TrainConfig cfg_;
  Rng rng_;

  std::vector<int> partition_of_factor_;  // -1 for nuisance factors
  std::vector<int> cards_;                // per partition
  std::vector<std::string> names_;        // per partition
  std::vector<int> labels_;               // N x partitions, relevant values
  std::vector<Triple> triples_;
  std::vector<Triple> heldout_;

  MixtureSet priors_;
  bool priors_ready_ = false;
  int epochs_done_ = 0;
};

// Whole-schedule convenience wrapper.
struct ScheduleResult {
  Models models;
  MixtureSet priors;
  TrainLog log;
};
ScheduleResult run_schedule(const TrainConfig& cfg, const ModelConfig& mcfg, const Dataset& ds,
                            const std::vector<int64_t>& supervised, const ScheduleHooks& hooks = {});

// Relations re-addressed to latent partitions (affected_factor becomes the
// partition index); relations on nuisance factors are rejected.
std::vector<Relation> to_partition_relations(const FactorSpec& spec,
                                             const std::vector<Relation>& relations);

}  // namespace modrel
