#pragma once

#include <vector>

#include "graph.hpp"
#include "prior.hpp"
#include "tensor.hpp"

namespace modrel {

// Sigmoid outputs are clamped here before any log.
constexpr double kProbClamp = 1e-7;

// Mean Bernoulli negative log-likelihood over every element of the batch.
Graph::Var bernoulli_nll_g(Graph& g, Graph::Var xhat, const Tensor& x);
double reconstruction_loss(const Tensor& x, const Tensor& xhat);

// Prior samples are the "real" class.
// disc_loss = -mean log d(z_prior) - mean log(1 - d(z_post))
// gen_loss  = -mean log d(z_post)            (non-saturating)
Graph::Var disc_loss_from_outputs(Graph& g, Graph::Var d_prior, Graph::Var d_post);
Graph::Var gen_loss_from_output(Graph& g, Graph::Var d_post);

// Per-row relational targets. Rows must be grouped so equal `affected`
// values are contiguous (sort each batch before building the graph).
struct RelBatchInfo {
  std::vector<int> affected;          // latent partition hit by the relation
  std::vector<int> target_component;  // component the partition should land in
};

// Minimization form of the relational objective: negative log density of the
// predicted code (affected partition scored against its target component,
// the rest against their full mixtures), averaged over the batch, plus
// aux_weight * MSE against the target codes.
Graph::Var relational_loss_g(Graph& g, Graph::Var z_pred, const RelBatchInfo& info,
                             const MixtureSet& priors, const Tensor& z_target, double aux_weight);

double relational_loss(const Tensor& z_pred, const RelBatchInfo& info, const MixtureSet& priors,
                       const Tensor& z_target, double aux_weight);

}  // namespace modrel
