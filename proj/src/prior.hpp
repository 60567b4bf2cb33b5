#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rng.hpp"
#include "tensor.hpp"

namespace modrel {

// Elementwise variance floor; keeps single-sample components from collapsing
// to zero variance.
constexpr double kVarFloor = 1e-4;

// Equal-weight diagonal-Gaussian mixture for one latent partition. One
// component per factor value.
struct Mixture {
  int components = 0;  // V
  int dim = 0;         // d
  std::vector<double> mu;   // V*d
  std::vector<double> var;  // V*d, floored at kVarFloor

  std::span<const double> mean(int v) const {
    return {mu.data() + static_cast<size_t>(v) * dim, static_cast<size_t>(dim)};
  }
  std::span<const double> variance(int v) const {
    return {var.data() + static_cast<size_t>(v) * dim, static_cast<size_t>(dim)};
  }
};

// One mixture per relevant factor, in partition order.
struct MixtureSet {
  int dim = 0;  // d per partition
  std::vector<Mixture> partitions;
  std::vector<std::string> factor_names;

  int partition_count() const { return static_cast<int>(partitions.size()); }
  int latent_dim() const { return partition_count() * dim; }
};

// Log density of z under component v (diagonal Gaussian).
double component_log_density(const Mixture& mix, int v, std::span<const double> z);

// Log of the equal-weight mixture density, log-sum-exp stabilized.
double mixture_log_density(const Mixture& mix, std::span<const double> z);

// Maximum-likelihood component; ties broken toward the smaller index.
int classify_partition(const Mixture& mix, std::span<const double> z);

// Draw from component v.
std::vector<double> sample_component(const Mixture& mix, int v, Rng& rng);

// Per-component empirical mean and population variance of the partition-g
// block of `codes`, computed in sample order (two passes). Throws
// EstimationError naming (factor, value) when a component has no samples.
//
// codes: n x (G*d); labels: n x G (relevant-factor values per sample).
Mixture estimate_mixture(const Tensor& codes, const std::vector<int>& labels, int n_factors,
                         int factor, int cardinality, int dim, const std::string& factor_name);

MixtureSet estimate_mixture_set(const Tensor& codes, const std::vector<int>& labels,
                                const std::vector<int>& cardinalities,
                                const std::vector<std::string>& names, int dim);

// Warmup prior: every coordinate i.i.d. Uniform(-1, 1).
std::vector<double> sample_uniform_warmup(int partitions, int dim, Rng& rng);

}  // namespace modrel
