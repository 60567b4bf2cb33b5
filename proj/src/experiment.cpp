#include "experiment.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "checkpoint.hpp"
#include "errors.hpp"
#include "metrics.hpp"

namespace modrel {

namespace fs = std::filesystem;

OutDirLock::OutDirLock(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  const std::string path = dir + "/.lock";
  fd_ = ::open(path.c_str(), O_CREAT | O_RDWR, 0644);
  if (fd_ < 0) throw IoError("cannot open lock file " + path);
  if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
    ::close(fd_);
    fd_ = -1;
    throw IoError("another process is writing to " + dir + " (lock file " + path + " is held)");
  }
}

OutDirLock::~OutDirLock() {
  if (fd_ >= 0) {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
}

int64_t gen_data_run(const ExperimentConfig& cfg, const std::string& out_dir) {
  const FactorSpec spec = cfg.factor_spec();
  OutDirLock lock(out_dir);
  Dataset ds = generate_dataset(spec, cfg.dataset_height, cfg.dataset_width, cfg.dataset_channels,
                                cfg.seed, cfg.dataset_max_bytes);
  save_dataset(ds, out_dir);
  return ds.count;
}

namespace {

Trainer build_trainer(const ExperimentConfig& cfg, const Dataset& ds) {
  const TrainConfig tcfg = cfg.train_config();
  const ModelConfig mcfg = cfg.model_config();
  std::vector<int64_t> supervised =
      split_supervised(ds, cfg.dataset_tau, cfg.seed, cfg.dataset_min_per_value);
  Models models = Models::create(mcfg, derive_seed(cfg.seed, kStreamInit));
  return Trainer(std::move(models), ds, std::move(supervised), standard_relations(ds.spec), tcfg);
}

void check_dataset_matches(const ExperimentConfig& cfg, const Dataset& ds) {
  if (ds.spec.to_string() != cfg.factor_spec().to_string() || ds.height != cfg.dataset_height ||
      ds.width != cfg.dataset_width || ds.channels != cfg.dataset_channels) {
    throw ConfigError("dataset on disk does not match the configuration; rerun gen-data");
  }
}

}  // namespace

TrainSummary train_run(const ExperimentConfig& cfg, const std::string& out_dir,
                       const std::string& resume_checkpoint) {
  OutDirLock lock(out_dir);
  const Dataset ds = load_dataset(out_dir);
  check_dataset_matches(cfg, ds);
  const std::string digest = cfg.digest();

  Trainer trainer = build_trainer(cfg, ds);
  if (!resume_checkpoint.empty()) {
    const CheckpointData data = read_checkpoint(resume_checkpoint);
    if (data.config_digest != digest) {
      throw ConfigError("checkpoint config digest " + data.config_digest +
                        " does not match this configuration (" + digest + ")");
    }
    restore_trainer(trainer, data);
  }

  const int every = cfg.train_checkpoint_every;
  ScheduleHooks hooks;
  hooks.after_epoch = [&](int epoch) {
    if (every > 0 && epoch % every == 0 && epoch < trainer.config().total_epochs()) {
      save_checkpoint(out_dir + "/ckpt_epoch" + std::to_string(epoch) + ".ckpt", trainer, digest);
    }
  };

  const TrainLog log = trainer.run(hooks);

  TrainSummary summary;
  summary.epochs_run = static_cast<int>(log.rows.size());
  summary.final_checkpoint = out_dir + "/final.ckpt";
  summary.log_path = out_dir + "/train_log.csv";
  if (!log.rows.empty()) summary.final_rel_acc = log.rows.back().rel_acc;

  save_checkpoint(summary.final_checkpoint, trainer, digest);
  std::ofstream csv(summary.log_path, std::ios::trunc);
  if (!csv) throw IoError("cannot write " + summary.log_path);
  write_train_log_csv(log, csv);
  return summary;
}

std::string eval_run(const ExperimentConfig& cfg, const std::string& checkpoint_path,
                     const std::string& report_path) {
  const CheckpointData data = read_checkpoint(checkpoint_path);
  const std::string digest = cfg.digest();
  if (data.config_digest != digest) {
    throw ConfigError("checkpoint config digest " + data.config_digest +
                      " does not match this configuration (" + digest + ")");
  }
  if (!data.has_priors) {
    throw PriorsMissingError("priors not estimated: checkpoint at epoch " +
                             std::to_string(data.epoch) + " is warmup-only");
  }

  const FactorSpec spec = cfg.factor_spec();
  const ModelConfig mcfg = cfg.model_config();
  const std::vector<int> relevant = spec.relevant_indices();
  std::vector<int> cards;
  std::vector<std::string> names;
  for (int idx : relevant) {
    cards.push_back(spec.factors[static_cast<size_t>(idx)].cardinality);
    names.push_back(spec.factors[static_cast<size_t>(idx)].name);
  }
  EvalState state = load_eval_state(data, mcfg, cards, names);

  // relational accuracy from prior samples through the relation net
  const std::vector<Relation> relations = standard_relations(spec);
  const std::vector<Relation> latent_relations = to_partition_relations(spec, relations);
  Models& models = state.models;
  Relator model_relator = [&](const std::vector<double>& z_in, const Relation& rel,
                              const std::vector<int>&) {
    Tensor z({1, mcfg.latent_dim()}, std::vector<double>(z_in));
    Tensor out = models.relnet_apply(z, {rel.id});
    return out.data;
  };
  Rng eval_rng(derive_seed(cfg.seed, kStreamEval));
  const double rel_acc = relational_accuracy(model_relator, state.priors, latent_relations,
                                             static_cast<int>(cfg.eval_n_trials), eval_rng);

  // converted discrete codes over the full combination grid
  const Dataset ds = generate_dataset(spec, cfg.dataset_height, cfg.dataset_width,
                                      cfg.dataset_channels, cfg.seed, cfg.dataset_max_bytes);
  const int gd = mcfg.latent_dim();
  const int parts = mcfg.partitions;
  Tensor images({static_cast<int>(ds.count), static_cast<int>(ds.image_size())});
  for (int64_t r = 0; r < ds.count; ++r) {
    const float* src = ds.image(r);
    for (int64_t i = 0; i < ds.image_size(); ++i) {
      images.data[static_cast<size_t>(r * ds.image_size() + i)] = static_cast<double>(src[i]);
    }
  }
  const Tensor codes_z = models.encode(images);
  IntMatrix codes(parts, ds.count);
  IntMatrix factors(parts, ds.count);
  for (int64_t r = 0; r < ds.count; ++r) {
    const std::vector<int> conv = to_factor_values(
        state.priors, {codes_z.data.data() + static_cast<size_t>(r) * gd, static_cast<size_t>(gd)});
    const std::vector<int> truth = ds.values(r);
    for (int p = 0; p < parts; ++p) {
      codes.at(p, r) = conv[static_cast<size_t>(p)];
      factors.at(p, r) = truth[static_cast<size_t>(relevant[static_cast<size_t>(p)])];
    }
  }
  const double mig = mig_score(codes, factors);
  const double sap = sap_score(codes, factors);
  const DciResult dci = dci_scores(codes, factors);

  nlohmann::ordered_json report;
  report["rel_accuracy"] = rel_acc;
  report["dci"] = {{"d", dci.disentanglement}, {"c", dci.completeness}, {"i", dci.informativeness}};
  report["mig"] = mig;
  report["sap"] = sap;
  report["n_trials"] = cfg.eval_n_trials;
  report["seed"] = cfg.seed;
  report["config_digest"] = digest;
  const std::string text = report.dump(2) + "\n";

  if (!report_path.empty()) {
    const fs::path parent = fs::path(report_path).parent_path();
    if (!parent.empty()) {
      std::error_code ec;
      fs::create_directories(parent, ec);
    }
    std::ofstream f(report_path, std::ios::trunc);
    if (!f) throw IoError("cannot write " + report_path);
    f << text;
  }
  return text;
}

void report_run(const ExperimentConfig& cfg, const std::string& log_csv, const std::string& out_dir) {
  std::ifstream f(log_csv);
  if (!f) throw IoError("cannot read training log " + log_csv);
  const TrainLog log = parse_train_log_csv(f);

  OutDirLock lock(out_dir);
  const FactorSpec spec = cfg.factor_spec();
  double final_acc = std::numeric_limits<double>::quiet_NaN();
  for (const EpochStats& r : log.rows) {
    if (!std::isnan(r.rel_acc)) final_acc = r.rel_acc;
  }

  {
    std::ofstream sum(out_dir + "/summary.txt", std::ios::trunc);
    if (!sum) throw IoError("cannot write " + out_dir + "/summary.txt");
    char acc_buf[32];
    std::snprintf(acc_buf, sizeof(acc_buf), "%.4f", final_acc);
    sum << "variant\tcombinations\taccuracy\ttau\n";
    sum << spec.to_string() << "@" << cfg.dataset_width << "x" << cfg.dataset_height << "\t"
        << spec.combination_count() << "\t" << acc_buf << "\t" << cfg.dataset_tau << "\n";
  }
  {
    std::ofstream curves(out_dir + "/curves.csv", std::ios::trunc);
    if (!curves) throw IoError("cannot write " + out_dir + "/curves.csv");
    curves << "epoch,recon,disc,gen,rel,rel_acc\n";
    char buf[200];
    for (const EpochStats& r : log.rows) {
      std::snprintf(buf, sizeof(buf), "%d,%.12g,%.12g,%.12g,%.12g,%.12g\n", r.epoch, r.recon, r.disc,
                    r.gen, r.rel, r.rel_acc);
      curves << buf;
    }
  }
}

}  // namespace modrel
