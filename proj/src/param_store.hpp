#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "tensor.hpp"

namespace modrel {

// Name -> gradient tensor. std::map keeps iteration order deterministic.
using GradMap = std::map<std::string, Tensor>;

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Named parameter arrays with a gradient accumulator and Adam moments per
// entry. The step counter is shared by all entries and advances once per
// optimizer step.
class ParamStore {
 public:
  struct Entry {
    Tensor value;
    Tensor grad;
    Tensor adam_m;
    Tensor adam_v;
  };

  void add(const std::string& name, Tensor init);
  bool has(const std::string& name) const { return entries_.count(name) != 0; }
  Entry& entry(const std::string& name);
  const Entry& entry(const std::string& name) const;
  Tensor& value(const std::string& name) { return entry(name).value; }
  const Tensor& value(const std::string& name) const { return entry(name).value; }

  const std::map<std::string, Entry>& entries() const { return entries_; }
  std::map<std::string, Entry>& entries() { return entries_; }
  size_t size() const { return entries_.size(); }
  int64_t step() const { return step_; }
  void set_step(int64_t t) { step_ = t; }

  int64_t param_count() const;

  void zero_grads();
  // Adds `grads` into the per-entry accumulators. Gradient names must match
  // existing entries with identical shapes.
  void accumulate_grads(const GradMap& grads);
  GradMap grads() const;

 private:
  std::map<std::string, Entry> entries_;
  int64_t step_ = 0;
};

// One bias-corrected Adam update over every entry. `grads` must contain a
// tensor for every entry of the store, shape-aligned.
void adam_step(ParamStore& store, const GradMap& grads, const AdamConfig& cfg);

}  // namespace modrel
