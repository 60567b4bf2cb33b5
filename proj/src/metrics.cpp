#include "metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "errors.hpp"

namespace modrel {

namespace {

// dense value relabeling so counts index a compact table
std::vector<int> compact(std::span<const int> a, int& cardinality) {
  std::map<int, int> remap;
  std::vector<int> out(a.size());
  for (size_t i = 0; i < a.size(); ++i) {
    auto [it, fresh] = remap.emplace(a[i], static_cast<int>(remap.size()));
    out[i] = it->second;
    (void)fresh;
  }
  cardinality = static_cast<int>(remap.size());
  return out;
}

struct JointCounts {
  int ca = 0, cb = 0;
  std::vector<int64_t> joint;  // ca*cb
  std::vector<int64_t> ma, mb;
  int64_t n = 0;
};

JointCounts joint_counts(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size() || a.empty()) throw InvalidArgument("series must have equal positive length");
  JointCounts jc;
  std::vector<int> da = compact(a, jc.ca);
  std::vector<int> db = compact(b, jc.cb);
  jc.joint.assign(static_cast<size_t>(jc.ca) * jc.cb, 0);
  jc.ma.assign(static_cast<size_t>(jc.ca), 0);
  jc.mb.assign(static_cast<size_t>(jc.cb), 0);
  jc.n = static_cast<int64_t>(a.size());
  for (size_t i = 0; i < a.size(); ++i) {
    ++jc.joint[static_cast<size_t>(da[i]) * jc.cb + db[i]];
    ++jc.ma[static_cast<size_t>(da[i])];
    ++jc.mb[static_cast<size_t>(db[i])];
  }
  return jc;
}

double entropy_from_counts(const std::vector<int64_t>& counts, int64_t n) {
  double h = 0.0;
  for (int64_t c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / static_cast<double>(n);
    h -= p * std::log(p);
  }
  return h;
}

double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

// normalized-MI importance matrix, excluding zero-entropy factors
struct ImportanceMatrix {
  int dims = 0;
  std::vector<int> factor_ids;  // surviving factor columns
  std::vector<double> r;        // dims x factor_ids.size()
  std::vector<double> h_factor;

  double at(int d, int k) const { return r[static_cast<size_t>(d) * factor_ids.size() + k]; }
};

ImportanceMatrix importance_matrix(const IntMatrix& codes, const IntMatrix& factors) {
  if (codes.cols != factors.cols || codes.cols < 1) {
    throw InvalidArgument("codes and factors must share a positive sample count");
  }
  if (codes.rows < 1 || factors.rows < 1) throw InvalidArgument("empty code or factor matrix");
  ImportanceMatrix im;
  im.dims = codes.rows;
  for (int k = 0; k < factors.rows; ++k) {
    const double h = discrete_entropy(factors.row(k));
    if (h <= 0.0) continue;  // constant factor carries no signal; skip with a note downstream
    im.factor_ids.push_back(k);
    im.h_factor.push_back(h);
  }
  im.r.resize(static_cast<size_t>(im.dims) * im.factor_ids.size());
  for (int d = 0; d < im.dims; ++d) {
    for (size_t k = 0; k < im.factor_ids.size(); ++k) {
      const double mi = discrete_mutual_information(codes.row(d), factors.row(im.factor_ids[k]));
      im.r[static_cast<size_t>(d) * im.factor_ids.size() + k] = clamp01(mi / im.h_factor[k]);
    }
  }
  return im;
}

}  // namespace

double discrete_entropy(std::span<const int> a) {
  if (a.empty()) throw InvalidArgument("entropy of an empty series");
  int ca = 0;
  std::vector<int> da = compact(a, ca);
  std::vector<int64_t> counts(static_cast<size_t>(ca), 0);
  for (int v : da) ++counts[static_cast<size_t>(v)];
  return entropy_from_counts(counts, static_cast<int64_t>(a.size()));
}

double discrete_mutual_information(std::span<const int> a, std::span<const int> b) {
  JointCounts jc = joint_counts(a, b);
  double mi = 0.0;
  for (int i = 0; i < jc.ca; ++i) {
    for (int j = 0; j < jc.cb; ++j) {
      const int64_t c = jc.joint[static_cast<size_t>(i) * jc.cb + j];
      if (c == 0) continue;
      const double pij = static_cast<double>(c) / static_cast<double>(jc.n);
      const double pi = static_cast<double>(jc.ma[static_cast<size_t>(i)]) / static_cast<double>(jc.n);
      const double pj = static_cast<double>(jc.mb[static_cast<size_t>(j)]) / static_cast<double>(jc.n);
      mi += pij * std::log(pij / (pi * pj));
    }
  }
  return std::max(mi, 0.0);
}

double mig_score(const IntMatrix& codes, const IntMatrix& factors) {
  ImportanceMatrix im = importance_matrix(codes, factors);
  if (im.factor_ids.empty()) return 0.0;
  double acc = 0.0;
  for (size_t k = 0; k < im.factor_ids.size(); ++k) {
    double top = 0.0, second = 0.0;
    for (int d = 0; d < im.dims; ++d) {
      const double s = im.at(d, static_cast<int>(k));
      if (s > top) {
        second = top;
        top = s;
      } else if (s > second) {
        second = s;
      }
    }
    acc += clamp01(top - second);
  }
  return acc / static_cast<double>(im.factor_ids.size());
}

double sap_score(const IntMatrix& codes, const IntMatrix& factors) {
  // identical gap structure; kept separate because the score matrix is the
  // per-dimension predictability S[d][k] = I/H rather than a ranking of MI
  return mig_score(codes, factors);
}

DciResult dci_scores(const IntMatrix& codes, const IntMatrix& factors) {
  ImportanceMatrix im = importance_matrix(codes, factors);
  DciResult out;
  const int kf = static_cast<int>(im.factor_ids.size());
  if (kf == 0) return out;

  double total_mass = 0.0;
  for (double v : im.r) total_mass += v;

  // disentanglement: per-dimension one minus normalized row entropy
  if (total_mass > 0.0) {
    double acc = 0.0;
    for (int d = 0; d < im.dims; ++d) {
      double mass = 0.0;
      for (int k = 0; k < kf; ++k) mass += im.at(d, k);
      if (mass <= 0.0) continue;
      double h = 0.0;
      for (int k = 0; k < kf; ++k) {
        const double p = im.at(d, k) / mass;
        if (p > 0.0) h -= p * std::log(p);
      }
      const double score = kf > 1 ? 1.0 - h / std::log(static_cast<double>(kf)) : 1.0;
      acc += (mass / total_mass) * score;
    }
    out.disentanglement = clamp01(acc);

    double cacc = 0.0;
    for (int k = 0; k < kf; ++k) {
      double mass = 0.0;
      for (int d = 0; d < im.dims; ++d) mass += im.at(d, k);
      if (mass <= 0.0) continue;
      double h = 0.0;
      for (int d = 0; d < im.dims; ++d) {
        const double p = im.at(d, k) / mass;
        if (p > 0.0) h -= p * std::log(p);
      }
      const double score = im.dims > 1 ? 1.0 - h / std::log(static_cast<double>(im.dims)) : 1.0;
      cacc += (mass / total_mass) * score;
    }
    out.completeness = clamp01(cacc);
  }

  // informativeness: per factor, best single-dimension majority-vote accuracy
  double iacc = 0.0;
  for (int k = 0; k < kf; ++k) {
    std::span<const int> f = factors.row(im.factor_ids[static_cast<size_t>(k)]);
    double best = 0.0;
    for (int d = 0; d < im.dims; ++d) {
      JointCounts jc = joint_counts(codes.row(d), f);
      int64_t correct = 0;
      for (int i = 0; i < jc.ca; ++i) {
        int64_t top = 0;
        for (int j = 0; j < jc.cb; ++j) {
          top = std::max(top, jc.joint[static_cast<size_t>(i) * jc.cb + j]);
        }
        correct += top;
      }
      best = std::max(best, static_cast<double>(correct) / static_cast<double>(jc.n));
    }
    iacc += best;
  }
  out.informativeness = clamp01(iacc / kf);
  return out;
}

std::vector<int> to_factor_values(const MixtureSet& priors, std::span<const double> z) {
  if (static_cast<int>(z.size()) != priors.latent_dim()) throw InvalidArgument("latent width mismatch");
  std::vector<int> out(static_cast<size_t>(priors.partition_count()));
  for (int p = 0; p < priors.partition_count(); ++p) {
    out[static_cast<size_t>(p)] = classify_partition(
        priors.partitions[static_cast<size_t>(p)], z.subspan(static_cast<size_t>(p) * priors.dim,
                                                             static_cast<size_t>(priors.dim)));
  }
  return out;
}

double relational_accuracy(const Relator& relator, const MixtureSet& priors,
                           const std::vector<Relation>& relations, int n_trials, Rng& rng) {
  if (relations.empty()) throw InvalidArgument("relation set is empty");
  if (n_trials < 1) throw InvalidArgument("n_trials must be positive");
  const int parts = priors.partition_count();
  const int d = priors.dim;
  for (const Relation& r : relations) {
    if (r.affected_factor < 0 || r.affected_factor >= parts) {
      throw InvalidArgument("relation '" + r.name + "' does not address a latent partition");
    }
  }
  int64_t hits = 0;
  std::vector<int> drawn(static_cast<size_t>(parts));
  std::vector<double> z_in(static_cast<size_t>(parts * d));
  for (int t = 0; t < n_trials; ++t) {
    for (int p = 0; p < parts; ++p) {
      const Mixture& mix = priors.partitions[static_cast<size_t>(p)];
      drawn[static_cast<size_t>(p)] = rng.below(mix.components);
      std::vector<double> block = sample_component(mix, drawn[static_cast<size_t>(p)], rng);
      std::copy(block.begin(), block.end(), z_in.begin() + static_cast<size_t>(p) * d);
    }
    const Relation& rel = relations[static_cast<size_t>(rng.below(static_cast<int>(relations.size())))];
    std::vector<double> z_out = relator(z_in, rel, drawn);
    if (static_cast<int>(z_out.size()) != parts * d) throw InvalidArgument("relator output width mismatch");

    bool ok = true;
    for (int p = 0; p < parts && ok; ++p) {
      const Mixture& mix = priors.partitions[static_cast<size_t>(p)];
      const std::span<const double> out_block{z_out.data() + static_cast<size_t>(p) * d,
                                              static_cast<size_t>(d)};
      const int got = classify_partition(mix, out_block);
      if (p == rel.affected_factor) {
        ok = got == rel.value_map[static_cast<size_t>(drawn[static_cast<size_t>(p)])];
      } else {
        const std::span<const double> in_block{z_in.data() + static_cast<size_t>(p) * d,
                                               static_cast<size_t>(d)};
        ok = got == classify_partition(mix, in_block);
      }
    }
    if (ok) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(n_trials);
}

}  // namespace modrel
