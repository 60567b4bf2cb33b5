#include <doctest.h>

#include <cmath>
#include <vector>

#include "errors.hpp"
#include "prior.hpp"
#include "rng.hpp"

using namespace modrel;

namespace {

Mixture make_mixture(int components, int dim, const std::vector<double>& mu,
                     const std::vector<double>& var) {
  Mixture m;
  m.components = components;
  m.dim = dim;
  m.mu = mu;
  m.var = var;
  return m;
}

// long-double direct summation, independent of the log-sum-exp path
double brute_force_log_density(const Mixture& m, const std::vector<double>& z) {
  long double total = 0.0L;
  for (int v = 0; v < m.components; ++v) {
    long double logp = 0.0L;
    for (int i = 0; i < m.dim; ++i) {
      const long double d = z[static_cast<size_t>(i)] - m.mu[static_cast<size_t>(v * m.dim + i)];
      const long double s2 = m.var[static_cast<size_t>(v * m.dim + i)];
      logp += -0.5L * (std::log(2.0L * 3.14159265358979323846L * s2) + d * d / s2);
    }
    total += std::exp(logp) / m.components;
  }
  return static_cast<double>(std::log(total));
}

}  // namespace

TEST_CASE("standard normal log density at the mean") {
  Mixture m = make_mixture(1, 1, {0.0}, {1.0});
  CHECK(mixture_log_density(m, std::vector<double>{0.0}) ==
        doctest::Approx(-0.9189385332046727).epsilon(1e-12));
}

TEST_CASE("duplicated components leave the density unchanged") {
  Mixture one = make_mixture(1, 2, {0.3, -0.2}, {0.5, 0.8});
  Mixture two = make_mixture(2, 2, {0.3, -0.2, 0.3, -0.2}, {0.5, 0.8, 0.5, 0.8});
  std::vector<double> z{0.1, 0.4};
  CHECK(mixture_log_density(one, z) == doctest::Approx(mixture_log_density(two, z)).epsilon(1e-12));
}

TEST_CASE("mixture log density matches direct summation") {
  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    const int V = 3, d = 4;
    std::vector<double> mu(V * d), var(V * d);
    for (double& v : mu) v = rng.uniform(-2, 2);
    for (double& v : var) v = rng.uniform(0.05, 1.5);
    Mixture m = make_mixture(V, d, mu, var);
    std::vector<double> z(d);
    for (double& v : z) v = rng.uniform(-3, 3);
    CHECK(std::fabs(mixture_log_density(m, z) - brute_force_log_density(m, z)) < 1e-9);
  }
}

TEST_CASE("estimation from one sample per component floors the variance") {
  // codes: 2 samples, 1 factor, d=2
  Tensor codes({2, 2}, {0.5, -0.5, 2.0, 1.0});
  std::vector<int> labels{0, 1};
  Mixture m = estimate_mixture(codes, labels, 1, 0, 2, 2, "x");
  CHECK(m.mu == std::vector<double>{0.5, -0.5, 2.0, 1.0});
  for (double v : m.var) CHECK(v == kVarFloor);
}

TEST_CASE("two-point estimation gives the population variance") {
  Tensor codes({2, 2}, {0.0, 0.0, 2.0, 0.0});
  std::vector<int> labels{0, 0};
  Mixture m = estimate_mixture(codes, labels, 1, 0, 1, 2, "x");
  CHECK(m.mu[0] == doctest::Approx(1.0));
  CHECK(m.mu[1] == 0.0);
  CHECK(m.var[0] == doctest::Approx(1.0));  // population variance ((1)^2+(1)^2)/2
  CHECK(m.var[1] == kVarFloor);
}

TEST_CASE("estimation matches an independent two-pass oracle") {
  Rng rng(77);
  const int n = 150, V = 3, d = 5, G = 2, factor = 1;
  Tensor codes({n, G * d});
  for (double& v : codes.data) v = rng.uniform(-4, 4);
  std::vector<int> labels(n * G);
  for (int r = 0; r < n; ++r) {
    labels[static_cast<size_t>(r) * G] = rng.below(2);
    labels[static_cast<size_t>(r) * G + 1] = r % V;  // every value covered
  }
  Mixture m = estimate_mixture(codes, labels, G, factor, V, d, "y");

  for (int v = 0; v < V; ++v) {
    for (int i = 0; i < d; ++i) {
      double sum = 0.0;
      int cnt = 0;
      for (int r = 0; r < n; ++r) {
        if (labels[static_cast<size_t>(r) * G + factor] != v) continue;
        sum += codes.data[static_cast<size_t>(r) * (G * d) + factor * d + i];
        ++cnt;
      }
      const double mean = sum / cnt;
      double sq = 0.0;
      for (int r = 0; r < n; ++r) {
        if (labels[static_cast<size_t>(r) * G + factor] != v) continue;
        const double dd = codes.data[static_cast<size_t>(r) * (G * d) + factor * d + i] - mean;
        sq += dd * dd;
      }
      const double var = std::max(sq / cnt, kVarFloor);
      CHECK(std::fabs(m.mu[static_cast<size_t>(v * d + i)] - mean) < 1e-10);
      CHECK(std::fabs(m.var[static_cast<size_t>(v * d + i)] - var) < 1e-10);
    }
  }
}

TEST_CASE("estimation is permutation-invariant in the sample list") {
  Rng rng(5);
  const int n = 40, d = 3;
  Tensor codes({n, d});
  for (double& v : codes.data) v = rng.uniform(-1, 1);
  std::vector<int> labels(n);
  for (int r = 0; r < n; ++r) labels[static_cast<size_t>(r)] = r % 2;

  Tensor rev({n, d});
  std::vector<int> rlabels(n);
  for (int r = 0; r < n; ++r) {
    rlabels[static_cast<size_t>(r)] = labels[static_cast<size_t>(n - 1 - r)];
    for (int i = 0; i < d; ++i) {
      rev.data[static_cast<size_t>(r) * d + i] = codes.data[static_cast<size_t>(n - 1 - r) * d + i];
    }
  }
  Mixture a = estimate_mixture(codes, labels, 1, 0, 2, d, "x");
  Mixture b = estimate_mixture(rev, rlabels, 1, 0, 2, d, "x");
  for (size_t i = 0; i < a.mu.size(); ++i) {
    CHECK(a.mu[i] == doctest::Approx(b.mu[i]).epsilon(1e-12));
    CHECK(a.var[i] == doctest::Approx(b.var[i]).epsilon(1e-12));
  }
}

TEST_CASE("missing component value raises an estimation error naming it") {
  Tensor codes({2, 2}, {0.0, 0.0, 1.0, 1.0});
  std::vector<int> labels{0, 0};
  try {
    estimate_mixture(codes, labels, 1, 0, 3, 2, "scale");
    FAIL("expected EstimationError");
  } catch (const EstimationError& e) {
    CHECK(e.factor() == "scale");
    CHECK(e.value() == 1);
  }
}

TEST_CASE("classification picks the maximum-likelihood component") {
  Mixture m = make_mixture(3, 2, {-5, 0, 0, 0, 5, 0}, {0.01, 0.01, 0.01, 0.01, 0.01, 0.01});
  CHECK(classify_partition(m, std::vector<double>{-5.0, 0.0}) == 0);
  CHECK(classify_partition(m, std::vector<double>{0.1, 0.0}) == 1);
  CHECK(classify_partition(m, std::vector<double>{4.9, 0.1}) == 2);
}

TEST_CASE("classification ties break toward the smaller index") {
  Mixture m = make_mixture(2, 1, {-1.0, 1.0}, {0.5, 0.5});
  CHECK(classify_partition(m, std::vector<double>{0.0}) == 0);
}

TEST_CASE("classification agrees with per-component density comparison") {
  Rng rng(13);
  for (int trial = 0; trial < 60; ++trial) {
    const int V = 4, d = 3;
    std::vector<double> mu(V * d), var(V * d);
    for (double& v : mu) v = rng.uniform(-2, 2);
    for (double& v : var) v = rng.uniform(0.05, 2.0);
    Mixture m = make_mixture(V, d, mu, var);
    std::vector<double> z(d);
    for (double& v : z) v = rng.uniform(-3, 3);
    int best = 0;
    double best_ld = component_log_density(m, 0, z);
    for (int v = 1; v < V; ++v) {
      const double ld = component_log_density(m, v, z);
      if (ld > best_ld) {
        best_ld = ld;
        best = v;
      }
    }
    CHECK(classify_partition(m, z) == best);
  }
}

TEST_CASE("component samples concentrate at the floored variance") {
  Mixture m = make_mixture(2, 3, {1, 2, 3, -1, -2, -3}, std::vector<double>(6, kVarFloor));
  Rng rng(99);
  const double tol = 6.0 * std::sqrt(kVarFloor);
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> z = sample_component(m, 1, rng);
    CHECK(std::fabs(z[0] + 1) <= tol);
    CHECK(std::fabs(z[1] + 2) <= tol);
    CHECK(std::fabs(z[2] + 3) <= tol);
  }
}

TEST_CASE("sample mean approaches the component mean") {
  Mixture m = make_mixture(1, 2, {0.7, -0.4}, {0.25, 1.0});
  Rng rng(1234);
  const int n = 100000;
  double s0 = 0, s1 = 0;
  for (int i = 0; i < n; ++i) {
    std::vector<double> z = sample_component(m, 0, rng);
    s0 += z[0];
    s1 += z[1];
  }
  CHECK(std::fabs(s0 / n - 0.7) <= 4.0 * std::sqrt(0.25 / n));
  CHECK(std::fabs(s1 / n + 0.4) <= 4.0 * std::sqrt(1.0 / n));
}

TEST_CASE("identical rng states give identical samples") {
  Mixture m = make_mixture(1, 4, {0, 0, 0, 0}, {1, 1, 1, 1});
  Rng a(5), b(5);
  CHECK(sample_component(m, 0, a) == sample_component(m, 0, b));
}

TEST_CASE("uniform warmup prior has the right support and moments") {
  Rng rng(2);
  const int n = 100000;
  double sum = 0, sq = 0;
  for (int i = 0; i < n / 8; ++i) {
    std::vector<double> z = sample_uniform_warmup(2, 4, rng);
    for (double v : z) {
      CHECK(v > -1.0);
      CHECK(v < 1.0);
      sum += v;
      sq += v * v;
    }
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  CHECK(std::fabs(mean) < 0.02);
  CHECK(std::fabs(var - 1.0 / 3.0) < 0.02);
}

TEST_CASE("density integrates to one over a bounding box at d=2") {
  Mixture m = make_mixture(2, 2, {-1, 0, 1.5, 0.5}, {0.09, 0.16, 0.09, 0.16});
  Rng rng(8);
  const double lo = -4, hi = 4, area = (hi - lo) * (hi - lo);
  const int n = 400000;
  double acc = 0;
  for (int i = 0; i < n; ++i) {
    std::vector<double> z{rng.uniform(lo, hi), rng.uniform(lo, hi)};
    acc += std::exp(mixture_log_density(m, z));
  }
  CHECK(acc / n * area >= 0.99);
  CHECK(acc / n * area <= 1.01);
}

TEST_CASE("classification recovers the component at each mean when separated") {
  Rng rng(55);
  const int V = 4, d = 3;
  std::vector<double> mu(V * d), var(V * d, 0.01);
  for (int v = 0; v < V; ++v) {
    for (int i = 0; i < d; ++i) mu[static_cast<size_t>(v * d + i)] = v * 10.0;
  }
  Mixture m = make_mixture(V, d, mu, var);
  for (int v = 0; v < V; ++v) {
    std::vector<double> z(m.mean(v).begin(), m.mean(v).end());
    CHECK(classify_partition(m, z) == v);
  }
}
