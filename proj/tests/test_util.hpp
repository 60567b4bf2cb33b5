#pragma once

#include <cmath>
#include <functional>

#include "graph.hpp"
#include "param_store.hpp"

namespace modrel::testutil {

inline double eval_loss(const std::function<Graph::Var(Graph&)>& build) {
  Graph g;
  return g.value(build(g)).data[0];
}

// Central finite differences over every coordinate of every store entry.
inline GradMap numeric_gradient(ParamStore& store, const std::function<Graph::Var(Graph&)>& build,
                                double h = 1e-5) {
  GradMap out;
  for (auto& [name, e] : store.entries()) {
    Tensor g = Tensor::zeros(e.value.shape);
    for (size_t i = 0; i < e.value.data.size(); ++i) {
      const double orig = e.value.data[i];
      e.value.data[i] = orig + h;
      const double fp = eval_loss(build);
      e.value.data[i] = orig - h;
      const double fm = eval_loss(build);
      e.value.data[i] = orig;
      g.data[i] = (fp - fm) / (2.0 * h);
    }
    out.emplace(name, std::move(g));
  }
  return out;
}

// max over coordinates of |a-b| / max(|a|, |b|, floor); floor guards the
// near-zero coordinates where central differences are pure roundoff.
inline double max_rel_err(const GradMap& a, const GradMap& b, double floor_ = 1e-3) {
  double worst = 0.0;
  for (const auto& [name, ga] : a) {
    const Tensor& gb = b.at(name);
    for (size_t i = 0; i < ga.data.size(); ++i) {
      const double denom = std::max({std::fabs(ga.data[i]), std::fabs(gb.data[i]), floor_});
      worst = std::max(worst, std::fabs(ga.data[i] - gb.data[i]) / denom);
    }
  }
  return worst;
}

}  // namespace modrel::testutil
