#include "checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "errors.hpp"

namespace modrel {

namespace {

const char* kMagic = "modrel-checkpoint";

void append_f32(std::vector<unsigned char>& out, const std::vector<double>& values) {
  for (double v : values) {
    const float f = static_cast<float>(v);
    unsigned char b[4];
    std::memcpy(b, &f, 4);
    out.insert(out.end(), b, b + 4);
  }
}

void append_u64(std::vector<unsigned char>& out, uint64_t v) {
  unsigned char b[8];
  std::memcpy(b, &v, 8);
  out.insert(out.end(), b, b + 8);
}

CheckpointArray f32_array(const std::vector<double>& values, std::vector<int> dims) {
  CheckpointArray a;
  a.dtype = "f32";
  a.dims = std::move(dims);
  append_f32(a.bytes, values);
  return a;
}

CheckpointArray scalar_i64(int64_t v) {
  CheckpointArray a;
  a.dtype = "i64";
  a.dims = {1};
  append_u64(a.bytes, static_cast<uint64_t>(v));
  return a;
}

CheckpointArray scalar_u64(uint64_t v) {
  CheckpointArray a;
  a.dtype = "u64";
  a.dims = {1};
  append_u64(a.bytes, v);
  return a;
}

void pack_store(std::map<std::string, CheckpointArray>& arrays, const ParamStore& store,
                const std::string& store_name) {
  for (const auto& [name, e] : store.entries()) {
    arrays["param." + name] = f32_array(e.value.data, e.value.shape);
    arrays["adam_m." + name] = f32_array(e.adam_m.data, e.adam_m.shape);
    arrays["adam_v." + name] = f32_array(e.adam_v.data, e.adam_v.shape);
  }
  arrays["adam_t." + store_name] = scalar_i64(store.step());
}

const CheckpointArray& need(const CheckpointData& data, const std::string& name) {
  auto it = data.arrays.find(name);
  if (it == data.arrays.end()) throw IoError("checkpoint is missing array '" + name + "'");
  return it->second;
}

void unpack_store(const CheckpointData& data, ParamStore& store, const std::string& store_name) {
  for (auto& [name, e] : store.entries()) {
    const CheckpointArray& v = need(data, "param." + name);
    const CheckpointArray& m = need(data, "adam_m." + name);
    const CheckpointArray& vv = need(data, "adam_v." + name);
    if (v.dims != e.value.shape) throw IoError("checkpoint shape mismatch for '" + name + "'");
    e.value.data = v.as_f64();
    e.adam_m.data = m.as_f64();
    e.adam_v.data = vv.as_f64();
  }
  store.set_step(need(data, "adam_t." + store_name).as_i64());
}

}  // namespace

int64_t CheckpointArray::element_count() const {
  int64_t n = 1;
  for (int d : dims) n *= d;
  return n;
}

std::vector<double> CheckpointArray::as_f64() const {
  if (dtype != "f32") throw IoError("checkpoint array is not f32");
  const int64_t n = element_count();
  if (static_cast<int64_t>(bytes.size()) != n * 4) throw IoError("checkpoint array payload truncated");
  std::vector<double> out(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) {
    float f;
    std::memcpy(&f, bytes.data() + i * 4, 4);
    out[static_cast<size_t>(i)] = static_cast<double>(f);
  }
  return out;
}

int64_t CheckpointArray::as_i64() const {
  if (dtype != "i64" || bytes.size() != 8) throw IoError("checkpoint array is not a scalar i64");
  int64_t v;
  std::memcpy(&v, bytes.data(), 8);
  return v;
}

uint64_t CheckpointArray::as_u64() const {
  if (dtype != "u64" || bytes.size() != 8) throw IoError("checkpoint array is not a scalar u64");
  uint64_t v;
  std::memcpy(&v, bytes.data(), 8);
  return v;
}

void save_checkpoint(const std::string& path, Trainer& trainer, const std::string& config_digest) {
  CheckpointData data;
  data.config_digest = config_digest;
  data.epoch = trainer.epochs_done();
  data.stage = trainer.stage();
  data.has_priors = trainer.priors_ready();

  Models& m = trainer.models();
  pack_store(data.arrays, m.encoder, "encoder");
  pack_store(data.arrays, m.decoder, "decoder");
  pack_store(data.arrays, m.disc, "disc");
  pack_store(data.arrays, m.relnet, "relnet");
  if (data.has_priors) {
    const MixtureSet& pri = trainer.priors();
    for (int p = 0; p < pri.partition_count(); ++p) {
      const Mixture& mix = pri.partitions[static_cast<size_t>(p)];
      data.arrays["prior.mu." + std::to_string(p)] = f32_array(mix.mu, {mix.components, mix.dim});
      data.arrays["prior.var." + std::to_string(p)] = f32_array(mix.var, {mix.components, mix.dim});
    }
  }
  data.arrays["rng.train"] = scalar_u64(trainer.train_rng().state());

  // manifest + payload
  std::string manifest;
  manifest += std::string(kMagic) + " v" + std::to_string(kCheckpointVersion) + "\n";
  manifest += "config_digest " + config_digest + "\n";
  manifest += "epoch " + std::to_string(data.epoch) + "\n";
  manifest += std::string("stage ") + (data.stage == Stage::Warmup ? "warmup" : "full") + "\n";
  manifest += std::string("priors ") + (data.has_priors ? "1" : "0") + "\n";
  int64_t offset = 0;
  for (const auto& [name, a] : data.arrays) {
    manifest += "array " + name + " " + a.dtype + " " + std::to_string(a.dims.size());
    for (int d : a.dims) manifest += " " + std::to_string(d);
    manifest += " " + std::to_string(offset) + "\n";
    offset += static_cast<int64_t>(a.bytes.size());
  }
  manifest += "payload " + std::to_string(offset) + "\n";

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write checkpoint " + path);
  f << manifest;
  for (const auto& [name, a] : data.arrays) {
    f.write(reinterpret_cast<const char*>(a.bytes.data()), static_cast<std::streamsize>(a.bytes.size()));
  }
  if (!f) throw IoError("failed writing checkpoint " + path);
  f.close();

  // keep the in-memory state equal to what was just persisted
  trainer.quantize_state();
}

CheckpointData read_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot read checkpoint " + path);
  CheckpointData data;
  std::string line;
  if (!std::getline(f, line)) throw IoError("empty checkpoint " + path);
  {
    std::stringstream ss(line);
    std::string magic, ver;
    ss >> magic >> ver;
    if (magic != kMagic || ver.size() < 2 || ver[0] != 'v') {
      throw IoError(path + " is not a checkpoint file");
    }
    int version = 0;
    try {
      version = std::stoi(ver.substr(1));
    } catch (...) {
      throw IoError(path + " has a malformed version");
    }
    if (version > kCheckpointVersion) {
      throw VersionError("checkpoint format v" + std::to_string(version) +
                         " is newer than this build supports (v" +
                         std::to_string(kCheckpointVersion) + ")");
    }
    data.version = version;
  }
  struct Pending {
    std::string name;
    int64_t offset;
  };
  std::vector<Pending> pending;
  int64_t payload_bytes = -1;
  while (std::getline(f, line)) {
    std::stringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag == "config_digest") {
      ss >> data.config_digest;
    } else if (tag == "epoch") {
      ss >> data.epoch;
    } else if (tag == "stage") {
      std::string s;
      ss >> s;
      data.stage = s == "full" ? Stage::Full : Stage::Warmup;
    } else if (tag == "priors") {
      int p = 0;
      ss >> p;
      data.has_priors = p != 0;
    } else if (tag == "array") {
      std::string name, dtype;
      size_t rank = 0;
      ss >> name >> dtype >> rank;
      CheckpointArray a;
      a.dtype = dtype;
      for (size_t i = 0; i < rank; ++i) {
        int d = 0;
        ss >> d;
        a.dims.push_back(d);
      }
      int64_t off = 0;
      ss >> off;
      if (!ss) throw IoError("malformed array line in " + path);
      data.arrays.emplace(name, std::move(a));
      pending.push_back({name, off});
    } else if (tag == "payload") {
      ss >> payload_bytes;
      break;
    } else {
      throw IoError("unrecognized manifest line in " + path + ": " + line);
    }
  }
  if (payload_bytes < 0) throw IoError("checkpoint manifest in " + path + " has no payload marker");
  std::vector<unsigned char> payload(static_cast<size_t>(payload_bytes));
  f.read(reinterpret_cast<char*>(payload.data()), payload_bytes);
  if (f.gcount() != payload_bytes) throw IoError("checkpoint payload truncated in " + path);
  for (const Pending& p : pending) {
    CheckpointArray& a = data.arrays.at(p.name);
    const int64_t width = a.dtype == "f32" ? 4 : 8;
    const int64_t bytes = a.element_count() * width;
    if (p.offset < 0 || p.offset + bytes > payload_bytes) {
      throw IoError("checkpoint array '" + p.name + "' is out of bounds");
    }
    a.bytes.assign(payload.begin() + p.offset, payload.begin() + p.offset + bytes);
  }
  return data;
}

void restore_trainer(Trainer& trainer, const CheckpointData& data) {
  Models& m = trainer.models();
  unpack_store(data, m.encoder, "encoder");
  unpack_store(data, m.decoder, "decoder");
  unpack_store(data, m.disc, "disc");
  unpack_store(data, m.relnet, "relnet");

  MixtureSet priors;
  if (data.has_priors) {
    priors.dim = m.cfg.partition_dim;
    for (int p = 0; p < m.cfg.partitions; ++p) {
      const CheckpointArray& mu = need(data, "prior.mu." + std::to_string(p));
      const CheckpointArray& var = need(data, "prior.var." + std::to_string(p));
      Mixture mix;
      if (mu.dims.size() != 2 || mu.dims[1] != m.cfg.partition_dim) {
        throw IoError("checkpoint prior shape mismatch for partition " + std::to_string(p));
      }
      mix.components = mu.dims[0];
      mix.dim = mu.dims[1];
      mix.mu = mu.as_f64();
      mix.var = var.as_f64();
      priors.partitions.push_back(std::move(mix));
      priors.factor_names.push_back("p" + std::to_string(p));
    }
  }
  trainer.restore(data.epoch, data.has_priors, std::move(priors), need(data, "rng.train").as_u64());
}

EvalState load_eval_state(const CheckpointData& data, const ModelConfig& mcfg,
                          const std::vector<int>& partition_cards,
                          const std::vector<std::string>& partition_names) {
  EvalState out{Models::create(mcfg, 0), {}, data.has_priors, data.epoch, data.stage};
  unpack_store(data, out.models.encoder, "encoder");
  unpack_store(data, out.models.decoder, "decoder");
  unpack_store(data, out.models.disc, "disc");
  unpack_store(data, out.models.relnet, "relnet");
  if (data.has_priors) {
    out.priors.dim = mcfg.partition_dim;
    for (int p = 0; p < mcfg.partitions; ++p) {
      const CheckpointArray& mu = need(data, "prior.mu." + std::to_string(p));
      const CheckpointArray& var = need(data, "prior.var." + std::to_string(p));
      Mixture mix;
      mix.components = mu.dims.empty() ? 0 : mu.dims[0];
      mix.dim = mcfg.partition_dim;
      if (mix.components != partition_cards[static_cast<size_t>(p)]) {
        throw IoError("checkpoint prior cardinality mismatch for partition " + std::to_string(p));
      }
      mix.mu = mu.as_f64();
      mix.var = var.as_f64();
      out.priors.partitions.push_back(std::move(mix));
      out.priors.factor_names.push_back(partition_names[static_cast<size_t>(p)]);
    }
  }
  return out;
}

}  // namespace modrel
