#include "trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "errors.hpp"

namespace modrel {

namespace {

double now_seconds() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

float to_f32(double v) { return static_cast<float>(v); }

void quantize_tensor(Tensor& t) {
  for (double& v : t.data) v = static_cast<double>(to_f32(v));
}

void quantize_store(ParamStore& store) {
  for (auto& [name, e] : store.entries()) {
    quantize_tensor(e.value);
    quantize_tensor(e.adam_m);
    quantize_tensor(e.adam_v);
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (beta < 0.0) throw ConfigError("train.beta must be non-negative");
  if (lr < 0.0) throw ConfigError("train.lr must be non-negative");
  if (batch_mae < 1 || batch_rel < 1) throw ConfigError("batch sizes must be at least 1");
  if (warmup_epochs < 1) {
    throw ConfigError("train.warmup_epochs must be at least 1 (priors cannot be estimated on an untrained encoder)");
  }
  if (full_epochs < 1) throw ConfigError("train.full_epochs must be at least 1");
  if (rel_aux_weight < 0.0) throw ConfigError("train.rel_aux_weight must be non-negative");
  if (triple_count < 1) throw ConfigError("train.triple_count must be at least 1");
  if (heldout_triples < 1) throw ConfigError("train.heldout_triples must be at least 1");
  if (prior_refresh_every < 0 || checkpoint_every < 0) {
    throw ConfigError("interval settings must be non-negative");
  }
}

void write_train_log_csv(const TrainLog& log, std::ostream& os) {
  os << "epoch,stage,recon,disc,gen,rel,rel_acc,seconds\n";
  for (const EpochStats& r : log.rows) {
    os << r.epoch << ',' << (r.stage == Stage::Warmup ? "warmup" : "full") << ',' << fmt_double(r.recon)
       << ',' << fmt_double(r.disc) << ',' << fmt_double(r.gen) << ',' << fmt_double(r.rel) << ','
       << fmt_double(r.rel_acc) << ',' << fmt_double(r.seconds) << '\n';
  }
}

TrainLog parse_train_log_csv(std::istream& is) {
  TrainLog log;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (lineno == 1) {
      if (line != "epoch,stage,recon,disc,gen,rel,rel_acc,seconds") {
        throw ConfigError("train log line 1: unexpected header");
      }
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 8) {
      throw ConfigError("train log line " + std::to_string(lineno) + ": expected 8 columns");
    }
    EpochStats r;
    try {
      r.epoch = std::stoi(cells[0]);
      if (cells[1] == "warmup") {
        r.stage = Stage::Warmup;
      } else if (cells[1] == "full") {
        r.stage = Stage::Full;
      } else {
        throw std::invalid_argument("stage");
      }
      r.recon = std::stod(cells[2]);
      r.disc = std::stod(cells[3]);
      r.gen = std::stod(cells[4]);
      r.rel = std::stod(cells[5]);
      r.rel_acc = std::stod(cells[6]);
      r.seconds = std::stod(cells[7]);
    } catch (const std::exception&) {
      throw ConfigError("train log line " + std::to_string(lineno) + ": malformed row");
    }
    log.rows.push_back(r);
  }
  if (log.rows.empty()) throw ConfigError("train log has no data rows");
  return log;
}

std::vector<Relation> to_partition_relations(const FactorSpec& spec,
                                             const std::vector<Relation>& relations) {
  std::vector<int> part_of(static_cast<size_t>(spec.factor_count()), -1);
  int p = 0;
  for (int idx : spec.relevant_indices()) part_of[static_cast<size_t>(idx)] = p++;
  std::vector<Relation> out;
  out.reserve(relations.size());
  for (Relation r : relations) {
    const int part = part_of[static_cast<size_t>(r.affected_factor)];
    if (part < 0) throw InvalidArgument("relation '" + r.name + "' targets a nuisance factor");
    r.affected_factor = part;
    out.push_back(std::move(r));
  }
  return out;
}

Trainer::Trainer(Models models, const Dataset& ds, std::vector<int64_t> supervised,
                 std::vector<Relation> relations, TrainConfig cfg)
    : models_(std::move(models)),
      ds_(&ds),
      supervised_(std::move(supervised)),
      relations_(std::move(relations)),
      cfg_(cfg),
      rng_(derive_seed(cfg.seed, kStreamTrain)) {
  cfg_.validate();
  std::sort(supervised_.begin(), supervised_.end());

  const std::vector<int> relevant = ds.spec.relevant_indices();
  partition_of_factor_.assign(static_cast<size_t>(ds.spec.factor_count()), -1);
  for (size_t p = 0; p < relevant.size(); ++p) {
    const int idx = relevant[p];
    partition_of_factor_[static_cast<size_t>(idx)] = static_cast<int>(p);
    cards_.push_back(ds.spec.factors[static_cast<size_t>(idx)].cardinality);
    names_.push_back(ds.spec.factors[static_cast<size_t>(idx)].name);
  }
  if (models_.cfg.partitions != static_cast<int>(relevant.size())) {
    throw ConfigError("model partitions must match the number of non-nuisance factors");
  }
  if (models_.cfg.input_dim() != ds.image_size()) {
    throw ConfigError("model input dimensions must match the dataset resolution");
  }
  if (models_.cfg.relation_count != static_cast<int>(relations_.size())) {
    throw ConfigError("model relation_count must match the relation set");
  }

  labels_.resize(static_cast<size_t>(ds.count) * relevant.size());
  for (int64_t r = 0; r < ds.count; ++r) {
    const std::vector<int> values = ds.values(r);
    for (size_t p = 0; p < relevant.size(); ++p) {
      labels_[static_cast<size_t>(r) * relevant.size() + p] = values[static_cast<size_t>(relevant[p])];
    }
  }

  triples_ = make_triples(ds, relations_, cfg_.triple_count, derive_seed(cfg_.seed, kStreamTriples));
  heldout_ = make_triples(ds, relations_, cfg_.heldout_triples, derive_seed(cfg_.seed, kStreamHeldout));
}

const MixtureSet& Trainer::priors() const {
  if (!priors_ready_) throw PriorsMissingError();
  return priors_;
}

Stage Trainer::stage() const {
  return epochs_done_ < cfg_.warmup_epochs ? Stage::Warmup : Stage::Full;
}

Tensor Trainer::gather_images(const std::vector<int64_t>& indices) const {
  const int w = static_cast<int>(ds_->image_size());
  Tensor out({static_cast<int>(indices.size()), w});
  for (size_t r = 0; r < indices.size(); ++r) {
    const float* src = ds_->image(indices[r]);
    double* dst = out.data.data() + r * static_cast<size_t>(w);
    for (int i = 0; i < w; ++i) dst[i] = static_cast<double>(src[i]);
  }
  return out;
}

Tensor Trainer::encode_all() {
  std::vector<int64_t> all(static_cast<size_t>(ds_->count));
  std::iota(all.begin(), all.end(), 0);
  return models_.encode(gather_images(all));
}

Tensor Trainer::sample_prior_batch(int n, bool uniform) {
  const int gd = models_.cfg.latent_dim();
  const int d = models_.cfg.partition_dim;
  Tensor out({n, gd});
  if (uniform) {
    for (double& v : out.data) v = rng_.uniform(-1.0, 1.0);
    return out;
  }
  const MixtureSet& pri = priors();
  for (int r = 0; r < n; ++r) {
    double* row = out.data.data() + static_cast<size_t>(r) * gd;
    for (int p = 0; p < pri.partition_count(); ++p) {
      const Mixture& mix = pri.partitions[static_cast<size_t>(p)];
      const int v = rng_.below(mix.components);
      const std::vector<double> block = sample_component(mix, v, rng_);
      std::copy(block.begin(), block.end(), row + static_cast<size_t>(p) * d);
    }
  }
  return out;
}

EpochStats Trainer::mae_epoch(bool uniform_prior) {
  const int64_t n = ds_->count;
  const int64_t batch = std::min<int64_t>(cfg_.batch_mae, n);
  // an epoch always covers the configured batch volume: datasets smaller
  // than batch_mae are passed over repeatedly, reshuffled each pass
  const int64_t target = std::max<int64_t>(cfg_.batch_mae, n);

  std::vector<int64_t> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  auto reshuffle = [&] {
    for (int64_t i = n - 1; i > 0; --i) {
      std::swap(order[static_cast<size_t>(i)],
                order[static_cast<size_t>(rng_.below(static_cast<int>(i + 1)))]);
    }
  };

  EpochStats stats;
  const AdamConfig adam = cfg_.adam();
  int64_t processed = 0;
  int64_t n_batches = 0;
  int64_t cursor = n;  // forces a shuffle before the first batch
  for (int64_t b = 0; processed < target; ++b) {
    if (cursor >= n) {
      reshuffle();
      cursor = 0;
    }
    const int64_t lo = cursor;
    const int64_t hi = std::min(n, lo + batch);
    cursor = hi;
    processed += hi - lo;
    ++n_batches;
    std::vector<int64_t> idx(order.begin() + lo, order.begin() + hi);
    const Tensor x = gather_images(idx);
    const int m = static_cast<int>(idx.size());

    const Tensor z_prior = sample_prior_batch(m, uniform_prior);
    try {
      const Tensor z_post = models_.encode(x);

      // discriminator step: prior samples real, posterior codes fake
      {
        Graph g;
        Graph::Var loss = disc_loss_from_outputs(g, models_.discriminate_g(g, g.input(z_prior)),
                                                 models_.discriminate_g(g, g.input(z_post)));
        stats.disc += g.backward(loss);
        adam_step(models_.disc, g.collect_grads(models_.disc), adam);
      }
      // encoder/decoder step: reconstruction + beta * prior matching
      {
        Graph g;
        Graph::Var z = models_.encode_g(g, g.input(x));
        Graph::Var xhat = models_.decode_g(g, z);
        Graph::Var recon = bernoulli_nll_g(g, xhat, x);
        Graph::Var gen = gen_loss_from_output(g, models_.discriminate_g(g, z));
        Graph::Var loss = g.add(recon, g.mul_scalar(gen, cfg_.beta));
        g.backward(loss);
        stats.recon += g.value(recon).data[0];
        stats.gen += g.value(gen).data[0];
        adam_step(models_.encoder, g.collect_grads(models_.encoder), adam);
        adam_step(models_.decoder, g.collect_grads(models_.decoder), adam);
      }
    } catch (const NumericError& e) {
      throw Error(kStatusNumeric, std::string(e.what()) + " [batch " + std::to_string(b) + "]");
    }
  }
  stats.recon /= static_cast<double>(n_batches);
  stats.disc /= static_cast<double>(n_batches);
  stats.gen /= static_cast<double>(n_batches);
  return stats;
}

void Trainer::estimate_priors_now() {
  const Tensor codes = models_.encode(gather_images(supervised_));
  std::vector<int> sub_labels(supervised_.size() * cards_.size());
  for (size_t r = 0; r < supervised_.size(); ++r) {
    for (size_t p = 0; p < cards_.size(); ++p) {
      sub_labels[r * cards_.size() + p] =
          labels_[static_cast<size_t>(supervised_[r]) * cards_.size() + p];
    }
  }
  priors_ = estimate_mixture_set(codes, sub_labels, cards_, names_, models_.cfg.partition_dim);
  priors_ready_ = true;
}

void Trainer::transition(const ScheduleHooks& hooks) {
  const Tensor codes = models_.encode(gather_images(supervised_));
  std::vector<int> sub_labels(supervised_.size() * cards_.size());
  for (size_t r = 0; r < supervised_.size(); ++r) {
    for (size_t p = 0; p < cards_.size(); ++p) {
      sub_labels[r * cards_.size() + p] =
          labels_[static_cast<size_t>(supervised_[r]) * cards_.size() + p];
    }
  }
  priors_ = estimate_mixture_set(codes, sub_labels, cards_, names_, models_.cfg.partition_dim);
  priors_ready_ = true;
  if (hooks.on_transition) hooks.on_transition(codes, sub_labels, priors_);
}

EpochStats Trainer::rel_epoch() {
  const MixtureSet& pri = priors();
  const Tensor codes = encode_all();
  const int gd = models_.cfg.latent_dim();
  const int d = models_.cfg.partition_dim;
  const int parts = pri.partition_count();

  const int64_t t_count = static_cast<int64_t>(triples_.size());
  const int64_t batch = std::min<int64_t>(cfg_.batch_rel, t_count);
  const int64_t target = std::max<int64_t>(cfg_.batch_rel, t_count);
  std::vector<int64_t> order(static_cast<size_t>(t_count));
  std::iota(order.begin(), order.end(), 0);
  auto reshuffle = [&] {
    for (int64_t i = t_count - 1; i > 0; --i) {
      std::swap(order[static_cast<size_t>(i)],
                order[static_cast<size_t>(rng_.below(static_cast<int>(i + 1)))]);
    }
  };

  EpochStats stats;
  stats.rel = 0.0;
  const AdamConfig adam = cfg_.adam();
  int64_t processed = 0;
  int64_t n_batches = 0;
  int64_t cursor = t_count;
  for (int64_t b = 0; processed < target; ++b) {
    if (cursor >= t_count) {
      reshuffle();
      cursor = 0;
    }
    const int64_t lo = cursor;
    const int64_t hi = std::min(t_count, lo + batch);
    cursor = hi;
    processed += hi - lo;
    ++n_batches;
    std::vector<const Triple*> rows;
    rows.reserve(static_cast<size_t>(hi - lo));
    for (int64_t i = lo; i < hi; ++i) rows.push_back(&triples_[static_cast<size_t>(order[static_cast<size_t>(i)])]);
    std::stable_sort(rows.begin(), rows.end(), [&](const Triple* a, const Triple* b2) {
      return partition_of_factor_[static_cast<size_t>(relations_[static_cast<size_t>(a->rel_id)].affected_factor)] <
             partition_of_factor_[static_cast<size_t>(relations_[static_cast<size_t>(b2->rel_id)].affected_factor)];
    });

    const int m = static_cast<int>(rows.size());
    Tensor z_in({m, gd}), z_tgt({m, gd});
    RelBatchInfo info;
    info.affected.resize(static_cast<size_t>(m));
    info.target_component.resize(static_cast<size_t>(m));
    std::vector<int> rel_ids(static_cast<size_t>(m));
    for (int r = 0; r < m; ++r) {
      const Triple& t = *rows[static_cast<size_t>(r)];
      const Relation& rel = relations_[static_cast<size_t>(t.rel_id)];
      const int part = partition_of_factor_[static_cast<size_t>(rel.affected_factor)];
      rel_ids[static_cast<size_t>(r)] = t.rel_id;
      info.affected[static_cast<size_t>(r)] = part;
      info.target_component[static_cast<size_t>(r)] =
          labels_[static_cast<size_t>(t.out_index) * static_cast<size_t>(parts) + part];
      double* zi = z_in.data.data() + static_cast<size_t>(r) * gd;
      double* zt = z_tgt.data.data() + static_cast<size_t>(r) * gd;
      if (cfg_.rel_sample_codes) {
        for (int p = 0; p < parts; ++p) {
          const Mixture& mix = pri.partitions[static_cast<size_t>(p)];
          const int vin = labels_[static_cast<size_t>(t.in_index) * parts + p];
          const std::vector<double> block = sample_component(mix, vin, rng_);
          std::copy(block.begin(), block.end(), zi + static_cast<size_t>(p) * d);
        }
        for (int p = 0; p < parts; ++p) {
          const Mixture& mix = pri.partitions[static_cast<size_t>(p)];
          const int vout = labels_[static_cast<size_t>(t.out_index) * parts + p];
          const std::vector<double> block = sample_component(mix, vout, rng_);
          std::copy(block.begin(), block.end(), zt + static_cast<size_t>(p) * d);
        }
      } else {
        const double* ci = codes.data.data() + static_cast<size_t>(t.in_index) * gd;
        const double* co = codes.data.data() + static_cast<size_t>(t.out_index) * gd;
        std::copy(ci, ci + gd, zi);
        std::copy(co, co + gd, zt);
      }
    }

    try {
      Graph g;
      Graph::Var z_pred = models_.relnet_g(g, g.input(models_.with_relation_onehot(z_in, rel_ids)));
      Graph::Var loss = relational_loss_g(g, z_pred, info, pri, z_tgt, cfg_.rel_aux_weight);
      stats.rel += g.backward(loss);
      adam_step(models_.relnet, g.collect_grads(models_.relnet), adam);
    } catch (const NumericError& e) {
      throw Error(kStatusNumeric, std::string(e.what()) + " [batch " + std::to_string(b) + "]");
    }
  }
  stats.rel = n_batches > 0 ? stats.rel / static_cast<double>(n_batches) : 0.0;
  return stats;
}

double Trainer::heldout_accuracy() {
  const MixtureSet& pri = priors();
  const Tensor codes = encode_all();
  const int gd = models_.cfg.latent_dim();
  const int d = models_.cfg.partition_dim;
  const int parts = pri.partition_count();
  const int m = static_cast<int>(heldout_.size());

  Tensor z_in({m, gd});
  std::vector<int> rel_ids(static_cast<size_t>(m));
  for (int r = 0; r < m; ++r) {
    const Triple& t = heldout_[static_cast<size_t>(r)];
    rel_ids[static_cast<size_t>(r)] = t.rel_id;
    const double* ci = codes.data.data() + static_cast<size_t>(t.in_index) * gd;
    std::copy(ci, ci + gd, z_in.data.data() + static_cast<size_t>(r) * gd);
  }
  const Tensor z_out = models_.relnet_apply(z_in, rel_ids);

  int64_t hits = 0;
  for (int r = 0; r < m; ++r) {
    const Triple& t = heldout_[static_cast<size_t>(r)];
    const Relation& rel = relations_[static_cast<size_t>(t.rel_id)];
    const int aff = partition_of_factor_[static_cast<size_t>(rel.affected_factor)];
    bool ok = true;
    for (int p = 0; p < parts && ok; ++p) {
      const Mixture& mix = pri.partitions[static_cast<size_t>(p)];
      const std::span<const double> out_block{z_out.data.data() + static_cast<size_t>(r) * gd + p * d,
                                              static_cast<size_t>(d)};
      const int got = classify_partition(mix, out_block);
      if (p == aff) {
        ok = got == labels_[static_cast<size_t>(t.out_index) * parts + p];
      } else {
        const std::span<const double> in_block{z_in.data.data() + static_cast<size_t>(r) * gd + p * d,
                                               static_cast<size_t>(d)};
        ok = got == classify_partition(mix, in_block);
      }
    }
    if (ok) ++hits;
  }
  return m > 0 ? static_cast<double>(hits) / m : 0.0;
}

EpochStats Trainer::run_epoch(int epoch, const ScheduleHooks& hooks) {
  const double t0 = now_seconds();
  EpochStats stats;
  if (epoch <= cfg_.warmup_epochs) {
    stats = mae_epoch(true);
    stats.stage = Stage::Warmup;
  } else {
    if (!priors_ready_) transition(hooks);
    const int full_idx = epoch - cfg_.warmup_epochs - 1;  // 0-based within the full stage
    if (cfg_.prior_refresh_every > 0 && full_idx > 0 && full_idx % cfg_.prior_refresh_every == 0) {
      estimate_priors_now();
    }
    stats = mae_epoch(false);
    const EpochStats rel = rel_epoch();
    stats.rel = rel.rel;
    stats.rel_acc = heldout_accuracy();
    stats.stage = Stage::Full;
  }
  stats.epoch = epoch;
  stats.seconds = now_seconds() - t0;
  return stats;
}

TrainLog Trainer::run(const ScheduleHooks& hooks) {
  TrainLog log;
  while (epochs_done_ < cfg_.total_epochs()) {
    const int epoch = epochs_done_ + 1;
    EpochStats stats;
    try {
      stats = run_epoch(epoch, hooks);
    } catch (const Error& e) {
      if (e.code() == kStatusNumeric) {
        throw Error(kStatusNumeric, std::string(e.what()) + " [epoch " + std::to_string(epoch) + "]");
      }
      throw;
    }
    log.rows.push_back(stats);
    epochs_done_ = epoch;
    if (hooks.after_epoch) hooks.after_epoch(epoch);
  }
  return log;
}

void Trainer::restore(int epochs_done, bool priors_ready, MixtureSet priors, uint64_t rng_state) {
  if (epochs_done < 0 || epochs_done > cfg_.total_epochs()) {
    throw InvalidArgument("checkpoint epoch outside the configured schedule");
  }
  epochs_done_ = epochs_done;
  priors_ready_ = priors_ready;
  priors_ = std::move(priors);
  rng_.set_state(rng_state);
}

void Trainer::quantize_state() {
  quantize_store(models_.encoder);
  quantize_store(models_.decoder);
  quantize_store(models_.disc);
  quantize_store(models_.relnet);
  if (priors_ready_) {
    for (Mixture& m : priors_.partitions) {
      for (double& v : m.mu) v = static_cast<double>(to_f32(v));
      for (double& v : m.var) v = static_cast<double>(to_f32(v));
    }
  }
}

ScheduleResult run_schedule(const TrainConfig& cfg, const ModelConfig& mcfg, const Dataset& ds,
                            const std::vector<int64_t>& supervised, const ScheduleHooks& hooks) {
  Models models = Models::create(mcfg, derive_seed(cfg.seed, kStreamInit));
  Trainer trainer(std::move(models), ds, supervised, standard_relations(ds.spec), cfg);
  ScheduleResult out;
  out.log = trainer.run(hooks);
  out.models = std::move(trainer.models());
  out.priors = trainer.priors();
  return out;
}

}  // namespace modrel
