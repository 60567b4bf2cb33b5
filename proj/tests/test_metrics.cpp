#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "errors.hpp"
#include "metrics.hpp"

using namespace modrel;

namespace {

// full grid over `cards`, one sample per combination; exact uniform marginals
IntMatrix factor_grid(const std::vector<int>& cards) {
  int64_t n = 1;
  for (int c : cards) n *= c;
  IntMatrix m(static_cast<int>(cards.size()), n);
  for (int64_t s = 0; s < n; ++s) {
    int64_t rem = s;
    for (int k = static_cast<int>(cards.size()) - 1; k >= 0; --k) {
      m.at(k, s) = static_cast<int>(rem % cards[static_cast<size_t>(k)]);
      rem /= cards[static_cast<size_t>(k)];
    }
  }
  return m;
}

MixtureSet separated_priors(const std::vector<int>& cards, int dim, double sigma2, double spacing_sigmas) {
  MixtureSet set;
  set.dim = dim;
  const double spacing = spacing_sigmas * std::sqrt(sigma2);
  for (size_t p = 0; p < cards.size(); ++p) {
    Mixture m;
    m.components = cards[p];
    m.dim = dim;
    m.mu.assign(static_cast<size_t>(m.components) * dim, 0.0);
    m.var.assign(static_cast<size_t>(m.components) * dim, sigma2);
    for (int v = 0; v < m.components; ++v) m.mu[static_cast<size_t>(v) * dim] = v * spacing;
    set.partitions.push_back(std::move(m));
    set.factor_names.push_back("f" + std::to_string(p));
  }
  return set;
}

std::vector<Relation> cycle_relations(const std::vector<int>& cards) {
  std::vector<Relation> rels;
  for (size_t p = 0; p < cards.size(); ++p) {
    Relation r;
    r.id = static_cast<int>(p);
    r.name = "r" + std::to_string(p);
    r.affected_factor = static_cast<int>(p);
    r.value_map.resize(static_cast<size_t>(cards[p]));
    for (int v = 0; v < cards[p]; ++v) r.value_map[static_cast<size_t>(v)] = (v + 1) % cards[p];
    rels.push_back(std::move(r));
  }
  return rels;
}

// independent slow-path mutual information used by oracles below
double mi_oracle(std::span<const int> a, std::span<const int> b) {
  std::map<int, double> pa, pb;
  std::map<std::pair<int, int>, double> pab;
  const double inv = 1.0 / static_cast<double>(a.size());
  for (size_t i = 0; i < a.size(); ++i) {
    pa[a[i]] += inv;
    pb[b[i]] += inv;
    pab[{a[i], b[i]}] += inv;
  }
  double mi = 0.0;
  for (const auto& [key, p] : pab) mi += p * std::log(p / (pa[key.first] * pb[key.second]));
  return mi;
}

}  // namespace

TEST_CASE("identical uniform series carry log-cardinality information") {
  IntMatrix grid = factor_grid({4, 3});
  CHECK(std::fabs(discrete_mutual_information(grid.row(0), grid.row(0)) - std::log(4.0)) < 1e-6);
  CHECK(std::fabs(discrete_entropy(grid.row(0)) - std::log(4.0)) < 1e-12);
}

TEST_CASE("constant series carry zero information") {
  std::vector<int> a(100, 7), b(100);
  for (size_t i = 0; i < b.size(); ++i) b[i] = static_cast<int>(i % 5);
  CHECK(discrete_mutual_information(a, b) == 0.0);
  CHECK(discrete_entropy(a) == 0.0);
}

TEST_CASE("mutual information matches the direct summation oracle") {
  Rng rng(17);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<int> a(200), b(200);
    for (size_t i = 0; i < a.size(); ++i) {
      a[i] = rng.below(3);
      b[i] = (rng.next_double() < 0.6) ? a[i] % 4 : rng.below(4);
    }
    CHECK(std::fabs(discrete_mutual_information(a, b) - mi_oracle(a, b)) < 1e-12);
  }
}

TEST_CASE("mutual information is invariant to relabeling values") {
  Rng rng(23);
  std::vector<int> a(300), b(300);
  for (size_t i = 0; i < a.size(); ++i) {
    a[i] = rng.below(4);
    b[i] = rng.below(3);
  }
  std::vector<int> relabeled(a.size());
  const int perm[4] = {2, 0, 3, 1};
  for (size_t i = 0; i < a.size(); ++i) relabeled[i] = perm[a[i]] * 10 + 5;
  CHECK(discrete_mutual_information(a, b) ==
        doctest::Approx(discrete_mutual_information(relabeled, b)).epsilon(1e-12));
}

TEST_CASE("perfect one-to-one codes score 1.0 on all metrics") {
  IntMatrix factors = factor_grid({4, 3, 5});
  IntMatrix codes = factors;
  CHECK(mig_score(codes, factors) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(sap_score(codes, factors) == doctest::Approx(1.0).epsilon(1e-9));
  DciResult dci = dci_scores(codes, factors);
  CHECK(dci.disentanglement == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(dci.completeness == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(dci.informativeness == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("constant codes score zero") {
  IntMatrix factors = factor_grid({3, 3});
  IntMatrix codes(2, factors.cols);  // all zeros
  CHECK(mig_score(codes, factors) == 0.0);
  CHECK(sap_score(codes, factors) == 0.0);
  CHECK(dci_scores(codes, factors).disentanglement == 0.0);
}

TEST_CASE("a duplicated informative dimension kills that factor's gap") {
  IntMatrix factors = factor_grid({4, 3});
  IntMatrix codes(3, factors.cols);
  for (int64_t s = 0; s < factors.cols; ++s) {
    codes.at(0, s) = factors.at(0, s);
    codes.at(1, s) = factors.at(0, s);  // duplicate of the factor-0 code
    codes.at(2, s) = factors.at(1, s);
  }
  // factor 0 sees two equally informative dimensions -> zero gap; factor 1
  // keeps its full gap
  CHECK(mig_score(codes, factors) == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(sap_score(codes, factors) == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("uniformly informative code dimensions have zero disentanglement") {
  IntMatrix factors = factor_grid({2, 2});
  IntMatrix codes(2, factors.cols);
  for (int64_t s = 0; s < factors.cols; ++s) {
    const int joint = factors.at(0, s) * 2 + factors.at(1, s);
    codes.at(0, s) = joint;
    codes.at(1, s) = 3 - joint;
  }
  DciResult dci = dci_scores(codes, factors);
  CHECK(dci.disentanglement == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(dci.informativeness == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("dci matches an independent re-implementation") {
  Rng rng(37);
  const int64_t n = 400;
  IntMatrix factors(3, n), codes(4, n);
  for (int64_t s = 0; s < n; ++s) {
    factors.at(0, s) = rng.below(3);
    factors.at(1, s) = rng.below(4);
    factors.at(2, s) = rng.below(2);
    codes.at(0, s) = rng.next_double() < 0.8 ? factors.at(0, s) : rng.below(3);
    codes.at(1, s) = rng.next_double() < 0.7 ? factors.at(1, s) : rng.below(4);
    codes.at(2, s) = rng.below(5);
    codes.at(3, s) = factors.at(2, s);
  }
  DciResult got = dci_scores(codes, factors);

  // oracle: explicit probability-map implementation of the same formulas
  const int D = codes.rows, K = factors.rows;
  std::vector<double> R(static_cast<size_t>(D) * K);
  for (int d = 0; d < D; ++d) {
    for (int k = 0; k < K; ++k) {
      double h = 0.0;
      std::map<int, int> counts;
      for (int64_t s = 0; s < n; ++s) ++counts[factors.at(k, s)];
      for (const auto& [v, c] : counts) {
        const double p = static_cast<double>(c) / static_cast<double>(n);
        h -= p * std::log(p);
      }
      R[static_cast<size_t>(d) * K + k] = mi_oracle(codes.row(d), factors.row(k)) / h;
    }
  }
  double total = 0.0;
  for (double v : R) total += v;
  double dis = 0.0, comp = 0.0;
  for (int d = 0; d < D; ++d) {
    double mass = 0.0, h = 0.0;
    for (int k = 0; k < K; ++k) mass += R[static_cast<size_t>(d) * K + k];
    for (int k = 0; k < K; ++k) {
      const double p = R[static_cast<size_t>(d) * K + k] / mass;
      if (p > 0) h -= p * std::log(p);
    }
    dis += mass / total * (1.0 - h / std::log(static_cast<double>(K)));
  }
  for (int k = 0; k < K; ++k) {
    double mass = 0.0, h = 0.0;
    for (int d = 0; d < D; ++d) mass += R[static_cast<size_t>(d) * K + k];
    for (int d = 0; d < D; ++d) {
      const double p = R[static_cast<size_t>(d) * K + k] / mass;
      if (p > 0) h -= p * std::log(p);
    }
    comp += mass / total * (1.0 - h / std::log(static_cast<double>(D)));
  }
  double info = 0.0;
  for (int k = 0; k < K; ++k) {
    double best = 0.0;
    for (int d = 0; d < D; ++d) {
      std::map<int, std::map<int, int>> table;
      for (int64_t s = 0; s < n; ++s) ++table[codes.at(d, s)][factors.at(k, s)];
      int64_t correct = 0;
      for (const auto& [cv, row] : table) {
        int64_t top = 0;
        for (const auto& [fv, c] : row) top = std::max<int64_t>(top, c);
        correct += top;
      }
      best = std::max(best, static_cast<double>(correct) / static_cast<double>(n));
    }
    info += best;
  }
  CHECK(std::fabs(got.disentanglement - dis) < 1e-12);
  CHECK(std::fabs(got.completeness - comp) < 1e-12);
  CHECK(std::fabs(got.informativeness - info / K) < 1e-12);
}

TEST_CASE("scores are invariant to permuting dimensions and factors") {
  Rng rng(41);
  const int64_t n = 300;
  IntMatrix factors(3, n), codes(3, n);
  for (int64_t s = 0; s < n; ++s) {
    for (int k = 0; k < 3; ++k) factors.at(k, s) = rng.below(3);
    for (int d = 0; d < 3; ++d) {
      codes.at(d, s) = rng.next_double() < 0.5 ? factors.at((d + 1) % 3, s) : rng.below(3);
    }
  }
  IntMatrix codes_p(3, n), factors_p(3, n);
  const int cperm[3] = {2, 0, 1}, fperm[3] = {1, 2, 0};
  for (int64_t s = 0; s < n; ++s) {
    for (int d = 0; d < 3; ++d) codes_p.at(d, s) = codes.at(cperm[d], s);
    for (int k = 0; k < 3; ++k) factors_p.at(k, s) = factors.at(fperm[k], s);
  }
  CHECK(mig_score(codes, factors) == doctest::Approx(mig_score(codes_p, factors_p)).epsilon(1e-12));
  CHECK(sap_score(codes, factors) == doctest::Approx(sap_score(codes_p, factors_p)).epsilon(1e-12));
  DciResult a = dci_scores(codes, factors);
  DciResult b = dci_scores(codes_p, factors_p);
  CHECK(a.disentanglement == doctest::Approx(b.disentanglement).epsilon(1e-12));
  CHECK(a.completeness == doctest::Approx(b.completeness).epsilon(1e-12));
  CHECK(a.informativeness == doctest::Approx(b.informativeness).epsilon(1e-12));
}

TEST_CASE("zero-entropy factors are excluded rather than poisoning the mean") {
  IntMatrix factors(2, 60);
  IntMatrix codes(2, 60);
  for (int64_t s = 0; s < 60; ++s) {
    factors.at(0, s) = static_cast<int>(s % 3);
    factors.at(1, s) = 9;  // constant
    codes.at(0, s) = factors.at(0, s);
    codes.at(1, s) = 0;
  }
  // the constant factor drops out; the informative one scores a full gap
  CHECK(mig_score(codes, factors) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("conversion classifies each partition independently") {
  MixtureSet priors = separated_priors({3, 4, 2}, 3, 0.01, 20.0);
  Rng rng(51);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<int> expect(3);
    std::vector<double> z;
    for (int p = 0; p < 3; ++p) {
      expect[static_cast<size_t>(p)] = rng.below(priors.partitions[static_cast<size_t>(p)].components);
      auto block = sample_component(priors.partitions[static_cast<size_t>(p)],
                                    expect[static_cast<size_t>(p)], rng);
      z.insert(z.end(), block.begin(), block.end());
    }
    CHECK(to_factor_values(priors, z) == expect);
    CHECK(to_factor_values(priors, z) == to_factor_values(priors, z));
  }
}

TEST_CASE("oracle relator reaches accuracy one on separated priors") {
  MixtureSet priors = separated_priors({3, 4, 2}, 4, 0.04, 6.0);
  std::vector<Relation> rels = cycle_relations({3, 4, 2});
  Relator oracle = [&](const std::vector<double>& z_in, const Relation& rel,
                       const std::vector<int>& drawn) {
    std::vector<double> out = z_in;
    const Mixture& mix = priors.partitions[static_cast<size_t>(rel.affected_factor)];
    const int target = rel.value_map[static_cast<size_t>(drawn[static_cast<size_t>(rel.affected_factor)])];
    auto mu = mix.mean(target);
    std::copy(mu.begin(), mu.end(), out.begin() + static_cast<size_t>(rel.affected_factor) * priors.dim);
    return out;
  };
  Rng rng(61);
  CHECK(relational_accuracy(oracle, priors, rels, 5000, rng) == 1.0);
}

TEST_CASE("identity relator scores zero under non-identity relations") {
  MixtureSet priors = separated_priors({3, 4, 2}, 4, 0.01, 30.0);
  std::vector<Relation> rels = cycle_relations({3, 4, 2});
  Relator identity = [](const std::vector<double>& z_in, const Relation&, const std::vector<int>&) {
    return z_in;
  };
  Rng rng(62);
  CHECK(relational_accuracy(identity, priors, rels, 5000, rng) == 0.0);
}

TEST_CASE("prior-marginal noise lands at the analytic chance level") {
  const std::vector<int> cards{3, 4, 2};
  MixtureSet priors = separated_priors(cards, 4, 0.01, 30.0);
  std::vector<Relation> rels = cycle_relations(cards);
  Rng noise_rng(63);
  Relator noise = [&](const std::vector<double>&, const Relation&, const std::vector<int>&) {
    std::vector<double> out;
    for (size_t p = 0; p < cards.size(); ++p) {
      const Mixture& mix = priors.partitions[p];
      auto block = sample_component(mix, noise_rng.below(mix.components), noise_rng);
      out.insert(out.end(), block.begin(), block.end());
    }
    return out;
  };
  Rng rng(64);
  const int n = 10000;
  const double acc = relational_accuracy(noise, priors, rels, n, rng);
  double chance = 1.0;
  for (int c : cards) chance /= c;
  const double se = std::sqrt(chance * (1 - chance) / n);
  CHECK(std::fabs(acc - chance) <= 3.0 * se);
}
