#include "models.hpp"

#include "errors.hpp"

namespace modrel {

namespace {

MlpSpec make_spec(int in, const std::vector<int>& hidden, int out, Act head) {
  MlpSpec spec;
  spec.in_width = in;
  for (int w : hidden) spec.layers.push_back({w, Act::Tanh});
  spec.layers.push_back({out, head});
  return spec;
}

}  // namespace

void ModelConfig::validate() const {
  if (height < 1 || width < 1 || (channels != 1 && channels != 3)) {
    throw ConfigError("bad model input dimensions");
  }
  if (partitions < 1 || partition_dim < 1) throw ConfigError("partitions and partition_dim must be positive");
  if (relation_count < 0) throw ConfigError("relation_count must be non-negative");
  if (encoder_hidden.empty() || decoder_hidden.empty() || disc_hidden.empty() || relnet_hidden.empty()) {
    throw ConfigError("hidden layer lists must be non-empty");
  }
}

Models Models::create(const ModelConfig& cfg, uint64_t init_seed) {
  cfg.validate();
  Models m;
  m.cfg = cfg;
  m.enc_spec = make_spec(cfg.input_dim(), cfg.encoder_hidden, cfg.latent_dim(), Act::Linear);
  m.dec_spec = make_spec(cfg.latent_dim(), cfg.decoder_hidden, cfg.input_dim(), Act::Sigmoid);
  m.disc_spec = make_spec(cfg.latent_dim(), cfg.disc_hidden, 1, Act::Sigmoid);
  m.rel_spec = make_spec(cfg.latent_dim() + cfg.relation_count, cfg.relnet_hidden, cfg.latent_dim(),
                         Act::Linear);
  Rng rng(init_seed);
  init_mlp(m.encoder, "encoder", m.enc_spec, rng);
  init_mlp(m.decoder, "decoder", m.dec_spec, rng);
  init_mlp(m.disc, "disc", m.disc_spec, rng);
  init_mlp(m.relnet, "relnet", m.rel_spec, rng);
  // construction-time audit of the layer-spec parameter count
  const int64_t expect = mlp_param_count(m.enc_spec) + mlp_param_count(m.dec_spec) +
                         mlp_param_count(m.disc_spec) + mlp_param_count(m.rel_spec);
  if (m.param_count() != expect) throw InvalidArgument("parameter count mismatch at construction");
  return m;
}

Graph::Var Models::encode_g(Graph& g, Graph::Var x) { return mlp_forward(g, encoder, "encoder", enc_spec, x); }
Graph::Var Models::decode_g(Graph& g, Graph::Var z) { return mlp_forward(g, decoder, "decoder", dec_spec, z); }
Graph::Var Models::discriminate_g(Graph& g, Graph::Var z) { return mlp_forward(g, disc, "disc", disc_spec, z); }
Graph::Var Models::relnet_g(Graph& g, Graph::Var zr) { return mlp_forward(g, relnet, "relnet", rel_spec, zr); }

Tensor Models::encode(const Tensor& x) {
  Graph g;
  return g.value(encode_g(g, g.input(x)));
}

Tensor Models::decode(const Tensor& z) {
  Graph g;
  return g.value(decode_g(g, g.input(z)));
}

Tensor Models::discriminate(const Tensor& z) {
  Graph g;
  return g.value(discriminate_g(g, g.input(z)));
}

Tensor Models::with_relation_onehot(const Tensor& z, const std::vector<int>& relation_ids) const {
  if (z.shape.size() != 2 || z.shape[1] != cfg.latent_dim()) {
    throw InvalidArgument("latent width mismatch: got " + shape_str(z.shape));
  }
  const int n = z.shape[0];
  if (static_cast<int>(relation_ids.size()) != n) throw InvalidArgument("relation id count mismatch");
  const int r = cfg.relation_count;
  Tensor out({n, cfg.latent_dim() + r});
  for (int row = 0; row < n; ++row) {
    const int rel = relation_ids[static_cast<size_t>(row)];
    if (rel < 0 || rel >= r) throw InvalidArgument("unknown relation id " + std::to_string(rel));
    double* o = out.data.data() + static_cast<size_t>(row) * (cfg.latent_dim() + r);
    const double* zi = z.data.data() + static_cast<size_t>(row) * cfg.latent_dim();
    for (int c = 0; c < cfg.latent_dim(); ++c) o[c] = zi[c];
    o[cfg.latent_dim() + rel] = 1.0;
  }
  return out;
}

Tensor Models::relnet_apply(const Tensor& z, const std::vector<int>& relation_ids) {
  Graph g;
  return g.value(relnet_g(g, g.input(with_relation_onehot(z, relation_ids))));
}

int64_t Models::param_count() const {
  return encoder.param_count() + decoder.param_count() + disc.param_count() + relnet.param_count();
}

}  // namespace modrel
