#include "prior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "errors.hpp"

namespace modrel {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;
}

double component_log_density(const Mixture& mix, int v, std::span<const double> z) {
  if (v < 0 || v >= mix.components) throw InvalidArgument("component index out of range");
  if (static_cast<int>(z.size()) != mix.dim) throw InvalidArgument("partition width mismatch");
  const std::span<const double> mu = mix.mean(v);
  const std::span<const double> var = mix.variance(v);
  double acc = 0.0;
  for (int i = 0; i < mix.dim; ++i) {
    const double d = z[static_cast<size_t>(i)] - mu[static_cast<size_t>(i)];
    const double s2 = var[static_cast<size_t>(i)];
    acc += kLog2Pi + std::log(s2) + d * d / s2;
  }
  return -0.5 * acc;
}

double mixture_log_density(const Mixture& mix, std::span<const double> z) {
  double best = -std::numeric_limits<double>::infinity();
  std::vector<double> comp(static_cast<size_t>(mix.components));
  for (int v = 0; v < mix.components; ++v) {
    comp[static_cast<size_t>(v)] = component_log_density(mix, v, z);
    best = std::max(best, comp[static_cast<size_t>(v)]);
  }
  double acc = 0.0;
  for (double c : comp) acc += std::exp(c - best);
  return best + std::log(acc) - std::log(static_cast<double>(mix.components));
}

int classify_partition(const Mixture& mix, std::span<const double> z) {
  int arg = 0;
  double best = component_log_density(mix, 0, z);
  for (int v = 1; v < mix.components; ++v) {
    const double c = component_log_density(mix, v, z);
    if (c > best) {
      best = c;
      arg = v;
    }
  }
  return arg;
}

std::vector<double> sample_component(const Mixture& mix, int v, Rng& rng) {
  if (v < 0 || v >= mix.components) throw InvalidArgument("component index out of range");
  std::vector<double> z(static_cast<size_t>(mix.dim));
  const std::span<const double> mu = mix.mean(v);
  const std::span<const double> var = mix.variance(v);
  for (int i = 0; i < mix.dim; ++i) {
    z[static_cast<size_t>(i)] =
        mu[static_cast<size_t>(i)] + std::sqrt(var[static_cast<size_t>(i)]) * rng.normal();
  }
  return z;
}

Mixture estimate_mixture(const Tensor& codes, const std::vector<int>& labels, int n_factors,
                         int factor, int cardinality, int dim, const std::string& factor_name) {
  if (codes.shape.size() != 2) throw InvalidArgument("codes must be a matrix");
  const int n = codes.shape[0];
  if (static_cast<int>(labels.size()) != n * n_factors) throw InvalidArgument("label table size mismatch");
  if (!codes.all_finite()) throw NumericError("estimate_mixture", "codes");
  const int offset = factor * dim;

  Mixture mix;
  mix.components = cardinality;
  mix.dim = dim;
  mix.mu.assign(static_cast<size_t>(cardinality) * dim, 0.0);
  mix.var.assign(static_cast<size_t>(cardinality) * dim, 0.0);
  std::vector<int64_t> counts(static_cast<size_t>(cardinality), 0);

  // two passes in sample order: mean, then population variance
  for (int r = 0; r < n; ++r) {
    const int v = labels[static_cast<size_t>(r) * n_factors + factor];
    if (v < 0 || v >= cardinality) throw InvalidArgument("label value out of range");
    ++counts[static_cast<size_t>(v)];
    const double* row = codes.data.data() + static_cast<size_t>(r) * codes.shape[1] + offset;
    double* m = mix.mu.data() + static_cast<size_t>(v) * dim;
    for (int i = 0; i < dim; ++i) m[i] += row[i];
  }
  for (int v = 0; v < cardinality; ++v) {
    if (counts[static_cast<size_t>(v)] == 0) throw EstimationError(factor_name, v);
    double* m = mix.mu.data() + static_cast<size_t>(v) * dim;
    for (int i = 0; i < dim; ++i) m[i] /= static_cast<double>(counts[static_cast<size_t>(v)]);
  }
  for (int r = 0; r < n; ++r) {
    const int v = labels[static_cast<size_t>(r) * n_factors + factor];
    const double* row = codes.data.data() + static_cast<size_t>(r) * codes.shape[1] + offset;
    const double* m = mix.mu.data() + static_cast<size_t>(v) * dim;
    double* s = mix.var.data() + static_cast<size_t>(v) * dim;
    for (int i = 0; i < dim; ++i) {
      const double d = row[i] - m[i];
      s[i] += d * d;
    }
  }
  for (int v = 0; v < cardinality; ++v) {
    double* s = mix.var.data() + static_cast<size_t>(v) * dim;
    for (int i = 0; i < dim; ++i) {
      s[i] = std::max(s[i] / static_cast<double>(counts[static_cast<size_t>(v)]), kVarFloor);
    }
  }
  return mix;
}

MixtureSet estimate_mixture_set(const Tensor& codes, const std::vector<int>& labels,
                                const std::vector<int>& cardinalities,
                                const std::vector<std::string>& names, int dim) {
  MixtureSet set;
  set.dim = dim;
  set.factor_names = names;
  const int g_count = static_cast<int>(cardinalities.size());
  if (codes.shape.size() != 2 || codes.shape[1] != g_count * dim) {
    throw InvalidArgument("code width does not match partition layout");
  }
  for (int g = 0; g < g_count; ++g) {
    set.partitions.push_back(estimate_mixture(codes, labels, g_count, g,
                                              cardinalities[static_cast<size_t>(g)], dim,
                                              names[static_cast<size_t>(g)]));
  }
  return set;
}

std::vector<double> sample_uniform_warmup(int partitions, int dim, Rng& rng) {
  std::vector<double> z(static_cast<size_t>(partitions) * dim);
  for (double& v : z) v = rng.uniform(-1.0, 1.0);
  return z;
}

}  // namespace modrel
