#include "mlp.hpp"

#include <cmath>

#include "errors.hpp"

namespace modrel {

void init_mlp(ParamStore& store, const std::string& prefix, const MlpSpec& spec, Rng& rng) {
  if (spec.in_width <= 0 || spec.layers.empty()) throw InvalidArgument("mlp spec must be non-empty");
  int fan_in = spec.in_width;
  for (size_t i = 0; i < spec.layers.size(); ++i) {
    const int fan_out = spec.layers[i].width;
    if (fan_out <= 0) throw InvalidArgument("mlp layer width must be positive");
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Tensor w({fan_in, fan_out});
    for (double& v : w.data) v = rng.uniform(-bound, bound);
    const std::string base = prefix + "." + std::to_string(i);
    store.add(base + ".weight", std::move(w));
    store.add(base + ".bias", Tensor::zeros({fan_out}));
    fan_in = fan_out;
  }
}

Graph::Var mlp_forward(Graph& g, ParamStore& store, const std::string& prefix, const MlpSpec& spec,
                       Graph::Var input) {
  if (spec.layers.empty()) throw InvalidArgument("mlp spec must be non-empty");
  const Tensor& x = g.value(input);
  if (x.shape.size() != 2 || x.shape[1] != spec.in_width) {
    throw InvalidArgument("mlp input width mismatch: got " + shape_str(x.shape) + ", expected (n," +
                          std::to_string(spec.in_width) + ")");
  }
  Graph::Var h = input;
  for (size_t i = 0; i < spec.layers.size(); ++i) {
    const std::string base = prefix + "." + std::to_string(i);
    Graph::Var w = g.param(store, base + ".weight");
    Graph::Var b = g.param(store, base + ".bias");
    h = g.affine(h, w, b);
    switch (spec.layers[i].act) {
      case Act::Linear: break;
      case Act::Tanh: h = g.tanh_(h); break;
      case Act::Relu: h = g.relu(h); break;
      case Act::Sigmoid: h = g.sigmoid(h); break;
      case Act::Softmax: h = g.softmax_rows(h); break;
    }
  }
  return h;
}

int64_t mlp_param_count(const MlpSpec& spec) {
  int64_t n = 0;
  int fan_in = spec.in_width;
  for (const LayerSpec& l : spec.layers) {
    n += static_cast<int64_t>(fan_in) * l.width + l.width;
    fan_in = l.width;
  }
  return n;
}

}  // namespace modrel
