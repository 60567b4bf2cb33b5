#include <doctest.h>

#include <cmath>

#include "errors.hpp"
#include "mlp.hpp"

using namespace modrel;

TEST_CASE("identity-initialized linear layer passes input through") {
  ParamStore ps;
  Tensor eye({3, 3});
  for (int i = 0; i < 3; ++i) eye.data[static_cast<size_t>(i) * 3 + i] = 1.0;
  ps.add("net.0.weight", eye);
  ps.add("net.0.bias", Tensor::zeros({3}));
  MlpSpec spec{3, {{3, Act::Linear}}};
  Tensor x({2, 3}, {1, 2, 3, -1, 0, 4});
  Graph g;
  Graph::Var y = mlp_forward(g, ps, "net", spec, g.input(x));
  CHECK(g.value(y).data == x.data);
}

TEST_CASE("zero weights and biases give zero output") {
  ParamStore ps;
  ps.add("net.0.weight", Tensor::zeros({4, 2}));
  ps.add("net.0.bias", Tensor::zeros({2}));
  MlpSpec spec{4, {{2, Act::Linear}}};
  Tensor x({3, 4}, {1, 2, 3, 4, 5, 6, 7, 8, -1, -2, -3, -4});
  Graph g;
  Graph::Var y = mlp_forward(g, ps, "net", spec, g.input(x));
  for (double v : g.value(y).data) CHECK(v == 0.0);
}

TEST_CASE("small fixed net matches a hand-computed product") {
  // 2 -> 3 (linear) -> 1 (linear), all weights fixed by hand.
  ParamStore ps;
  ps.add("net.0.weight", Tensor({2, 3}, {0.1, 0.2, 0.3, 0.4, 0.5, 0.6}));
  ps.add("net.0.bias", Tensor({3}, {0.01, 0.02, 0.03}));
  ps.add("net.1.weight", Tensor({3, 1}, {1.0, -1.0, 2.0}));
  ps.add("net.1.bias", Tensor({1}, {0.5}));
  MlpSpec spec{2, {{3, Act::Linear}, {1, Act::Linear}}};
  Tensor x({1, 2}, {2.0, -1.0});
  // h = x W1 + b1 = (0.1*2-0.4+0.01, 0.2*2-0.5+0.02, 0.3*2-0.6+0.03)
  const double h0 = 0.2 - 0.4 + 0.01, h1 = 0.4 - 0.5 + 0.02, h2 = 0.6 - 0.6 + 0.03;
  const double expected = h0 * 1.0 + h1 * -1.0 + h2 * 2.0 + 0.5;
  Graph g;
  Graph::Var y = mlp_forward(g, ps, "net", spec, g.input(x));
  CHECK(std::fabs(g.value(y).data[0] - expected) < 1e-12);
}

TEST_CASE("init produces the parameter count implied by the spec") {
  MlpSpec spec{7, {{5, Act::Tanh}, {4, Act::Tanh}, {2, Act::Linear}}};
  ParamStore ps;
  Rng rng(3);
  init_mlp(ps, "net", spec, rng);
  CHECK(ps.param_count() == mlp_param_count(spec));
  CHECK(mlp_param_count(spec) == 7 * 5 + 5 + 5 * 4 + 4 + 4 * 2 + 2);
  // bounds: |w| <= sqrt(6/(fan_in+fan_out)), biases zero
  const double bound0 = std::sqrt(6.0 / 12.0);
  for (double v : ps.value("net.0.weight").data) CHECK(std::fabs(v) <= bound0);
  for (double v : ps.value("net.0.bias").data) CHECK(v == 0.0);
}

TEST_CASE("init is deterministic in the seed") {
  MlpSpec spec{3, {{4, Act::Tanh}, {1, Act::Linear}}};
  ParamStore a, b;
  Rng ra(42), rb(42);
  init_mlp(a, "n", spec, ra);
  init_mlp(b, "n", spec, rb);
  CHECK(a.value("n.0.weight").data == b.value("n.0.weight").data);
}

TEST_CASE("width mismatch is rejected") {
  ParamStore ps;
  Rng rng(1);
  MlpSpec spec{3, {{2, Act::Tanh}}};
  init_mlp(ps, "net", spec, rng);
  Graph g;
  CHECK_THROWS_AS(mlp_forward(g, ps, "net", spec, g.input(Tensor({2, 4}))), InvalidArgument);
}
