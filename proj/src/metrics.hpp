#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "prior.hpp"
#include "rng.hpp"

namespace modrel {

// Rows are variables (code dimensions or factors), columns are samples.
struct IntMatrix {
  int rows = 0;
  int64_t cols = 0;
  std::vector<int> v;

  IntMatrix() = default;
  IntMatrix(int r, int64_t c) : rows(r), cols(c), v(static_cast<size_t>(r * c), 0) {}
  int& at(int r, int64_t c) { return v[static_cast<size_t>(r * cols + c)]; }
  int at(int r, int64_t c) const { return v[static_cast<size_t>(r * cols + c)]; }
  std::span<const int> row(int r) const {
    return {v.data() + static_cast<size_t>(r) * cols, static_cast<size_t>(cols)};
  }
};

// Plug-in estimators over empirical joint counts, in nats.
double discrete_entropy(std::span<const int> a);
double discrete_mutual_information(std::span<const int> a, std::span<const int> b);

struct DciResult {
  double disentanglement = 0.0;
  double completeness = 0.0;
  double informativeness = 0.0;
};

// Mutual-information-gap score: mean over factors of the normalized gap
// between the two most informative code dimensions.
double mig_score(const IntMatrix& codes, const IntMatrix& factors);

// Separated-attribute score on the normalized-MI matrix: mean over factors of
// (top - second) down each column.
double sap_score(const IntMatrix& codes, const IntMatrix& factors);

// Importance matrix R[d][k] = I(c_d; v_k) / H(v_k); disentanglement and
// completeness weight rows/columns by their mass share; informativeness is
// the best single-dimension majority-vote prediction accuracy per factor.
DciResult dci_scores(const IntMatrix& codes, const IntMatrix& factors);

// Per-partition maximum-likelihood component of a latent code.
std::vector<int> to_factor_values(const MixtureSet& priors, std::span<const double> z);

// Relation editor under test: maps (latent code, relation, combination the
// code was drawn from) to an edited code. Model-backed relators ignore the
// drawn combination; synthetic calibration relators may use it.
using Relator =
    std::function<std::vector<double>(const std::vector<double>& z_in, const Relation& rel,
                                      const std::vector<int>& drawn)>;

// Fraction of trials where the relator moves the affected partition to the
// mapped component while every other partition keeps its classification.
// Trials draw a combination uniformly, sample each partition from its
// component, and draw a relation uniformly.
//
// Relation::affected_factor must index the priors' partitions here.
double relational_accuracy(const Relator& relator, const MixtureSet& priors,
                           const std::vector<Relation>& relations, int n_trials, Rng& rng);

}  // namespace modrel
