#pragma once

#include <string>
#include <vector>

#include "graph.hpp"
#include "param_store.hpp"
#include "rng.hpp"

namespace modrel {

enum class Act { Linear, Tanh, Relu, Sigmoid, Softmax };

struct LayerSpec {
  int width = 0;
  Act act = Act::Linear;
};

struct MlpSpec {
  int in_width = 0;
  std::vector<LayerSpec> layers;

  int out_width() const { return layers.empty() ? in_width : layers.back().width; }
};

// Builds `{prefix}.{i}.weight` / `{prefix}.{i}.bias` entries. Weights are
// uniform in +-sqrt(6/(fan_in+fan_out)) drawn row-major from `rng`, biases
// zero.
void init_mlp(ParamStore& store, const std::string& prefix, const MlpSpec& spec, Rng& rng);

// Forward pass on the tape. Input must be (n, in_width).
Graph::Var mlp_forward(Graph& g, ParamStore& store, const std::string& prefix, const MlpSpec& spec,
                       Graph::Var input);

// Total parameter count implied by the layer spec.
int64_t mlp_param_count(const MlpSpec& spec);

}  // namespace modrel
