#pragma once

#include <cstdint>
#include <string>

#include "config.hpp"
#include "trainer.hpp"

namespace modrel {

// Exclusive writer lock on an output directory (flock on <dir>/.lock, held
// for the object's lifetime).
class OutDirLock {
 public:
  explicit OutDirLock(const std::string& dir);
  ~OutDirLock();
  OutDirLock(const OutDirLock&) = delete;
  OutDirLock& operator=(const OutDirLock&) = delete;

 private:
  int fd_ = -1;
};

// gen-data: renders the full combination grid and writes
// <out>/manifest.txt, images.f32, factors.i32. Returns the record count.
int64_t gen_data_run(const ExperimentConfig& cfg, const std::string& out_dir);

struct TrainSummary {
  int epochs_run = 0;
  std::string final_checkpoint;
  std::string log_path;
  double final_rel_acc = std::numeric_limits<double>::quiet_NaN();
};

// train: loads the dataset from <out>, runs (or resumes) the two-stage
// schedule, writes periodic checkpoints, <out>/final.ckpt and
// <out>/train_log.csv.
TrainSummary train_run(const ExperimentConfig& cfg, const std::string& out_dir,
                       const std::string& resume_checkpoint = "");

// eval: loads a checkpoint, measures relational accuracy and the
// disentanglement scores on converted codes, and returns the JSON report
// (also written to report_path unless empty).
std::string eval_run(const ExperimentConfig& cfg, const std::string& checkpoint_path,
                     const std::string& report_path);

// report: renders <out>/summary.txt and <out>/curves.csv from a training log.
void report_run(const ExperimentConfig& cfg, const std::string& log_csv, const std::string& out_dir);

}  // namespace modrel
