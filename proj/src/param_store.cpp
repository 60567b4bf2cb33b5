#include "param_store.hpp"

#include <cmath>

#include "errors.hpp"

namespace modrel {

void ParamStore::add(const std::string& name, Tensor init) {
  if (has(name)) throw InvalidArgument("parameter '" + name + "' already exists");
  Entry e;
  e.grad = Tensor::zeros(init.shape);
  e.adam_m = Tensor::zeros(init.shape);
  e.adam_v = Tensor::zeros(init.shape);
  e.value = std::move(init);
  entries_.emplace(name, std::move(e));
}

ParamStore::Entry& ParamStore::entry(const std::string& name) {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw InvalidArgument("unknown parameter '" + name + "'");
  return it->second;
}

const ParamStore::Entry& ParamStore::entry(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw InvalidArgument("unknown parameter '" + name + "'");
  return it->second;
}

int64_t ParamStore::param_count() const {
  int64_t n = 0;
  for (const auto& [name, e] : entries_) n += e.value.size();
  return n;
}

void ParamStore::zero_grads() {
  for (auto& [name, e] : entries_) e.grad.fill(0.0);
}

void ParamStore::accumulate_grads(const GradMap& grads) {
  for (const auto& [name, g] : grads) {
    Entry& e = entry(name);
    if (!g.same_shape(e.value)) {
      throw InvalidArgument("gradient shape " + shape_str(g.shape) + " does not match parameter '" +
                            name + "' " + shape_str(e.value.shape));
    }
    for (size_t i = 0; i < g.data.size(); ++i) e.grad.data[i] += g.data[i];
  }
}

GradMap ParamStore::grads() const {
  GradMap out;
  for (const auto& [name, e] : entries_) out.emplace(name, e.grad);
  return out;
}

void adam_step(ParamStore& store, const GradMap& grads, const AdamConfig& cfg) {
  for (const auto& [name, e] : store.entries()) {
    auto it = grads.find(name);
    if (it == grads.end()) throw InvalidArgument("missing gradient for parameter '" + name + "'");
    if (!it->second.same_shape(e.value)) {
      throw InvalidArgument("gradient shape " + shape_str(it->second.shape) +
                            " does not match parameter '" + name + "' " + shape_str(e.value.shape));
    }
  }
  const int64_t t = store.step() + 1;
  store.set_step(t);
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  for (auto& [name, e] : store.entries()) {
    const Tensor& g = grads.at(name);
    double* w = e.value.data.data();
    double* m = e.adam_m.data.data();
    double* v = e.adam_v.data.data();
    const double* gd = g.data.data();
    const size_t n = g.data.size();
    for (size_t i = 0; i < n; ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * gd[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * gd[i] * gd[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      w[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
}

}  // namespace modrel
