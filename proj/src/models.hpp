#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "graph.hpp"
#include "mlp.hpp"
#include "param_store.hpp"
#include "rng.hpp"

namespace modrel {

struct ModelConfig {
  int height = 16;
  int width = 16;
  int channels = 1;
  int partitions = 4;      // G
  int partition_dim = 8;   // d
  int relation_count = 0;  // R
  std::vector<int> encoder_hidden{256, 256};
  std::vector<int> decoder_hidden{256, 256};
  std::vector<int> disc_hidden{256, 256, 256};
  std::vector<int> relnet_hidden{256, 256, 256};

  int input_dim() const { return height * width * channels; }
  int latent_dim() const { return partitions * partition_dim; }
  void validate() const;
};

// The four networks. Each lives in its own ParamStore so optimizer steps and
// step counters stay per-network; names follow {network}.{layer}.{weight|bias}.
//
// encoder : input -> G*d, tanh hidden, linear head
// decoder : G*d -> input, tanh hidden, sigmoid head
// disc    : G*d -> 1, tanh hidden, sigmoid head
// relnet  : G*d + R -> G*d, tanh hidden, linear head
struct Models {
  ModelConfig cfg;
  MlpSpec enc_spec, dec_spec, disc_spec, rel_spec;
  ParamStore encoder, decoder, disc, relnet;

  static Models create(const ModelConfig& cfg, uint64_t init_seed);

  // Tape-side forwards.
  Graph::Var encode_g(Graph& g, Graph::Var x);
  Graph::Var decode_g(Graph& g, Graph::Var z);
  Graph::Var discriminate_g(Graph& g, Graph::Var z);
  Graph::Var relnet_g(Graph& g, Graph::Var z_and_onehot);

  // Plain forwards (no gradients kept).
  Tensor encode(const Tensor& x);              // (n, input) -> (n, G*d)
  Tensor decode(const Tensor& z);              // (n, G*d) -> (n, input)
  Tensor discriminate(const Tensor& z);        // (n, G*d) -> (n, 1)
  Tensor relnet_apply(const Tensor& z, const std::vector<int>& relation_ids);

  // z rows concatenated with one-hot relation codes.
  Tensor with_relation_onehot(const Tensor& z, const std::vector<int>& relation_ids) const;

  int64_t param_count() const;
};

}  // namespace modrel
