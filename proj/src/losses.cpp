#include "losses.hpp"

#include <algorithm>
#include <cmath>

#include "errors.hpp"

namespace modrel {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;
}

Graph::Var bernoulli_nll_g(Graph& g, Graph::Var xhat, const Tensor& x) {
  const Tensor& pred = g.value(xhat);
  if (!pred.same_shape(x)) throw InvalidArgument("reconstruction shapes differ");
  for (double v : x.data) {
    if (v < 0.0 || v > 1.0) throw InvalidArgument("targets must lie in [0,1]");
  }
  Graph::Var p = g.clamp_(xhat, kProbClamp, 1.0 - kProbClamp);
  Graph::Var xv = g.input(x);
  Graph::Var pos = g.mul(xv, g.log_(p));
  Graph::Var neg = g.mul(g.sub_from_scalar(1.0, xv), g.log_(g.sub_from_scalar(1.0, p)));
  return g.mul_scalar(g.mean(g.add(pos, neg)), -1.0);
}

double reconstruction_loss(const Tensor& x, const Tensor& xhat) {
  Graph g;
  return g.value(bernoulli_nll_g(g, g.input(xhat), x)).data[0];
}

Graph::Var disc_loss_from_outputs(Graph& g, Graph::Var d_prior, Graph::Var d_post) {
  Graph::Var pr = g.clamp_(d_prior, kProbClamp, 1.0 - kProbClamp);
  Graph::Var po = g.clamp_(d_post, kProbClamp, 1.0 - kProbClamp);
  Graph::Var real_term = g.mean(g.log_(pr));
  Graph::Var fake_term = g.mean(g.log_(g.sub_from_scalar(1.0, po)));
  return g.mul_scalar(g.add(real_term, fake_term), -1.0);
}

Graph::Var gen_loss_from_output(Graph& g, Graph::Var d_post) {
  Graph::Var po = g.clamp_(d_post, kProbClamp, 1.0 - kProbClamp);
  return g.mul_scalar(g.mean(g.log_(po)), -1.0);
}

Graph::Var relational_loss_g(Graph& g, Graph::Var z_pred, const RelBatchInfo& info,
                             const MixtureSet& priors, const Tensor& z_target, double aux_weight) {
  const int n = g.value(z_pred).rows();
  const int cols = g.value(z_pred).cols();
  const int d = priors.dim;
  const int parts = priors.partition_count();
  if (cols != parts * d) throw InvalidArgument("latent width does not match the prior layout");
  if (static_cast<int>(info.affected.size()) != n || static_cast<int>(info.target_component.size()) != n) {
    throw InvalidArgument("relational batch info size mismatch");
  }

  // contiguous row ranges sharing one affected partition
  struct Group {
    int r0, r1, affected;
  };
  std::vector<Group> groups;
  for (int r = 0; r < n;) {
    int r1 = r;
    while (r1 < n && info.affected[static_cast<size_t>(r1)] == info.affected[static_cast<size_t>(r)]) ++r1;
    groups.push_back({r, r1, info.affected[static_cast<size_t>(r)]});
    r = r1;
  }
  for (size_t a = 0; a < groups.size(); ++a) {
    for (size_t b = a + 1; b < groups.size(); ++b) {
      if (groups[a].affected == groups[b].affected) {
        throw InvalidArgument("relational batch rows must be grouped by affected partition");
      }
    }
  }

  Graph::Var total_logp;  // sum over rows and partitions of log density
  bool have_total = false;
  auto add_total = [&](Graph::Var v) {
    total_logp = have_total ? g.add(total_logp, v) : v;
    have_total = true;
  };

  for (const Group& grp : groups) {
    const int m = grp.r1 - grp.r0;
    Graph::Var rows = g.slice_rows(z_pred, grp.r0, m);
    for (int part = 0; part < parts; ++part) {
      const Mixture& mix = priors.partitions[static_cast<size_t>(part)];
      Graph::Var block = g.slice_cols(rows, part * d, d);
      if (part == grp.affected) {
        // score against the per-row target component
        Tensor mu({m, d}), var({m, d});
        double logdet = 0.0;
        for (int r = 0; r < m; ++r) {
          const int v = info.target_component[static_cast<size_t>(grp.r0 + r)];
          if (v < 0 || v >= mix.components) throw InvalidArgument("target component out of range");
          for (int i = 0; i < d; ++i) {
            const double s2 = mix.var[static_cast<size_t>(v * d + i)];
            mu.data[static_cast<size_t>(r) * d + i] = mix.mu[static_cast<size_t>(v * d + i)];
            var.data[static_cast<size_t>(r) * d + i] = s2;
            logdet += kLog2Pi + std::log(s2);
          }
        }
        Graph::Var diff = g.sub(block, g.input(mu));
        Graph::Var quad = g.sum(g.div_(g.mul(diff, diff), g.input(var)));
        add_total(g.mul_scalar(g.add_scalar(quad, logdet), -0.5));
      } else {
        // full mixture, log-sum-exp with a detached per-row shift
        std::vector<Graph::Var> comp(static_cast<size_t>(mix.components));
        for (int v = 0; v < mix.components; ++v) {
          Tensor mu({m, d}), var({m, d});
          double logdet = 0.0;
          for (int i = 0; i < d; ++i) logdet += kLog2Pi + std::log(mix.var[static_cast<size_t>(v * d + i)]);
          for (int r = 0; r < m; ++r) {
            for (int i = 0; i < d; ++i) {
              mu.data[static_cast<size_t>(r) * d + i] = mix.mu[static_cast<size_t>(v * d + i)];
              var.data[static_cast<size_t>(r) * d + i] = mix.var[static_cast<size_t>(v * d + i)];
            }
          }
          Graph::Var diff = g.sub(block, g.input(mu));
          Graph::Var quad = g.sum_rows(g.div_(g.mul(diff, diff), g.input(var)));
          comp[static_cast<size_t>(v)] = g.add_scalar(g.mul_scalar(quad, -0.5), -0.5 * logdet);
        }
        Tensor shift({m});
        for (int r = 0; r < m; ++r) {
          double best = g.value(comp[0]).data[static_cast<size_t>(r)];
          for (int v = 1; v < mix.components; ++v) {
            best = std::max(best, g.value(comp[static_cast<size_t>(v)]).data[static_cast<size_t>(r)]);
          }
          shift.data[static_cast<size_t>(r)] = best;
        }
        Graph::Var shift_v = g.input(shift);
        Graph::Var acc = g.exp_(g.sub(comp[0], shift_v));
        for (int v = 1; v < mix.components; ++v) {
          acc = g.add(acc, g.exp_(g.sub(comp[static_cast<size_t>(v)], shift_v)));
        }
        Graph::Var lse = g.add(g.log_(acc), shift_v);
        add_total(g.sum(g.add_scalar(lse, -std::log(static_cast<double>(mix.components)))));
      }
    }
  }

  Graph::Var loss = g.mul_scalar(total_logp, -1.0 / static_cast<double>(n));
  if (aux_weight != 0.0) {
    if (z_target.shape != std::vector<int>{n, cols}) throw InvalidArgument("target code shape mismatch");
    Graph::Var diff = g.sub(z_pred, g.input(z_target));
    loss = g.add(loss, g.mul_scalar(g.mean(g.mul(diff, diff)), aux_weight));
  }
  return loss;
}

double relational_loss(const Tensor& z_pred, const RelBatchInfo& info, const MixtureSet& priors,
                       const Tensor& z_target, double aux_weight) {
  Graph g;
  return g.value(relational_loss_g(g, g.input(z_pred), info, priors, z_target, aux_weight)).data[0];
}

}  // namespace modrel
