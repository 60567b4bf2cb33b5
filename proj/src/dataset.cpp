#include "dataset.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "errors.hpp"

static_assert(std::endian::native == std::endian::little, "little-endian host required");

namespace modrel {

namespace {

const std::set<std::string> kKnownRoles = {"shape", "x", "y", "scale", "orient", "hue"};
constexpr int kSupersample = 8;
constexpr int64_t kDefaultMaxBytes = 512ll << 20;

std::vector<std::string> split_csv(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  std::stringstream ss(text);
  while (std::getline(ss, cur, ',')) {
    // trim
    size_t a = cur.find_first_not_of(" \t");
    size_t b = cur.find_last_not_of(" \t");
    if (a == std::string::npos) continue;
    out.push_back(cur.substr(a, b - a + 1));
  }
  return out;
}

struct Rgb {
  double r, g, b;
};

Rgb hue_to_rgb(double h) {
  // h in [0,1); full saturation and value
  const double x = 1.0 - std::fabs(std::fmod(h * 6.0, 2.0) - 1.0);
  switch (static_cast<int>(h * 6.0) % 6) {
    case 0: return {1, x, 0};
    case 1: return {x, 1, 0};
    case 2: return {0, 1, x};
    case 3: return {0, x, 1};
    case 4: return {x, 0, 1};
    default: return {1, 0, x};
  }
}

}  // namespace

void FactorSpec::validate() const {
  if (factors.empty()) throw ConfigError("factor spec must name at least one factor");
  std::set<std::string> seen;
  int relevant = 0;
  for (const Factor& f : factors) {
    if (!seen.insert(f.name).second) throw ConfigError("duplicate factor name '" + f.name + "'");
    if (!kKnownRoles.count(f.name)) {
      throw ConfigError("unknown factor name '" + f.name + "' (known: shape, x, y, scale, orient, hue)");
    }
    if (f.cardinality < 2) throw ConfigError("factor '" + f.name + "' must have at least 2 values");
    if (f.name == "shape" && f.cardinality > 3) {
      throw ConfigError("factor 'shape' supports at most 3 values (square, disk, triangle)");
    }
    if (f.name == "scale" && f.cardinality > 3) throw ConfigError("factor 'scale' supports at most 3 values");
    if (!f.nuisance) ++relevant;
  }
  if (relevant < 1) throw ConfigError("at least one non-nuisance factor is required");
}

std::vector<int> FactorSpec::relevant_indices() const {
  std::vector<int> out;
  for (int i = 0; i < factor_count(); ++i) {
    if (!factors[static_cast<size_t>(i)].nuisance) out.push_back(i);
  }
  return out;
}

int64_t FactorSpec::combination_count() const {
  int64_t n = 1;
  for (const Factor& f : factors) n *= f.cardinality;
  return n;
}

int FactorSpec::index_of(const std::string& name) const {
  for (int i = 0; i < factor_count(); ++i) {
    if (factors[static_cast<size_t>(i)].name == name) return i;
  }
  return -1;
}

int64_t FactorSpec::rank(const std::vector<int>& values) const {
  if (static_cast<int>(values.size()) != factor_count()) throw InvalidArgument("value count mismatch");
  int64_t r = 0;
  for (int i = 0; i < factor_count(); ++i) {
    const int v = values[static_cast<size_t>(i)];
    const int card = factors[static_cast<size_t>(i)].cardinality;
    if (v < 0 || v >= card) throw InvalidArgument("factor value out of range");
    r = r * card + v;
  }
  return r;
}

std::vector<int> FactorSpec::unrank(int64_t index) const {
  std::vector<int> values(static_cast<size_t>(factor_count()));
  for (int i = factor_count() - 1; i >= 0; --i) {
    const int card = factors[static_cast<size_t>(i)].cardinality;
    values[static_cast<size_t>(i)] = static_cast<int>(index % card);
    index /= card;
  }
  return values;
}

std::string FactorSpec::to_string() const {
  std::string out;
  for (size_t i = 0; i < factors.size(); ++i) {
    if (i) out += ",";
    out += factors[i].name + ":" + std::to_string(factors[i].cardinality) + ":" +
           (factors[i].kind == FactorKind::Categorical ? "categorical" : "ordinal");
  }
  return out;
}

FactorSpec FactorSpec::parse(const std::string& text, const std::string& nuisance_csv) {
  FactorSpec spec;
  for (const std::string& item : split_csv(text)) {
    std::vector<std::string> parts;
    std::stringstream ss(item);
    std::string p;
    while (std::getline(ss, p, ':')) parts.push_back(p);
    if (parts.size() < 2 || parts.size() > 3) {
      throw ConfigError("bad factor entry '" + item + "', expected name:cardinality[:kind]");
    }
    Factor f;
    f.name = parts[0];
    try {
      f.cardinality = std::stoi(parts[1]);
    } catch (...) {
      throw ConfigError("bad cardinality in factor entry '" + item + "'");
    }
    if (parts.size() == 3) {
      if (parts[2] == "categorical") {
        f.kind = FactorKind::Categorical;
      } else if (parts[2] == "ordinal") {
        f.kind = FactorKind::Ordinal;
      } else {
        throw ConfigError("bad factor kind '" + parts[2] + "'");
      }
    } else {
      f.kind = (f.name == "shape" || f.name == "hue") ? FactorKind::Categorical : FactorKind::Ordinal;
    }
    spec.factors.push_back(std::move(f));
  }
  for (const std::string& n : split_csv(nuisance_csv)) {
    const int idx = spec.index_of(n);
    if (idx < 0) throw ConfigError("nuisance entry '" + n + "' names no factor");
    spec.factors[static_cast<size_t>(idx)].nuisance = true;
  }
  spec.validate();
  return spec;
}

std::vector<Relation> standard_relations(const FactorSpec& spec) {
  std::vector<Relation> rels;
  for (int idx : spec.relevant_indices()) {
    const Factor& f = spec.factors[static_cast<size_t>(idx)];
    const int v = f.cardinality;
    auto cycle = [v](int direction) {
      std::vector<int> map(static_cast<size_t>(v));
      for (int i = 0; i < v; ++i) map[static_cast<size_t>(i)] = ((i + direction) % v + v) % v;
      return map;
    };
    if (f.kind == FactorKind::Ordinal) {
      rels.push_back({static_cast<int>(rels.size()), f.name + "+1", idx, cycle(+1)});
      rels.push_back({static_cast<int>(rels.size()), f.name + "-1", idx, cycle(-1)});
    } else {
      rels.push_back({static_cast<int>(rels.size()), f.name + "-next", idx, cycle(+1)});
    }
  }
  return rels;
}

std::vector<int> apply_relation(const std::vector<int>& values, const Relation& rel) {
  std::vector<int> out = values;
  const size_t a = static_cast<size_t>(rel.affected_factor);
  if (a >= out.size()) throw InvalidArgument("relation affects a factor outside the spec");
  const int v = out[a];
  if (v < 0 || v >= static_cast<int>(rel.value_map.size())) {
    throw InvalidArgument("factor value outside the relation's value map");
  }
  out[a] = rel.value_map[static_cast<size_t>(v)];
  return out;
}

std::vector<int> Dataset::values(int64_t i) const {
  const int k = spec.factor_count();
  std::vector<int> out(static_cast<size_t>(k));
  for (int j = 0; j < k; ++j) out[static_cast<size_t>(j)] = factor_values[static_cast<size_t>(i * k + j)];
  return out;
}

double shape_half_extent(int scale_index, int resolution) {
  const double unit = static_cast<double>(resolution) / 16.0;
  return (2.0 + scale_index) * unit;
}

std::vector<float> render_sample(const FactorSpec& spec, const std::vector<int>& values, int height,
                                 int width, int channels) {
  if (height < 8 || width < 8) throw ConfigError("resolution must be at least 8x8");
  if (channels != 1 && channels != 3) throw ConfigError("channels must be 1 or 3");
  if (static_cast<int>(values.size()) != spec.factor_count()) {
    throw InvalidArgument("value count does not match factor spec");
  }

  auto value_of = [&](const char* name, int fallback) {
    const int idx = spec.index_of(name);
    if (idx < 0) return std::pair<int, int>(fallback, 1);
    const int v = values[static_cast<size_t>(idx)];
    const int card = spec.factors[static_cast<size_t>(idx)].cardinality;
    if (v < 0 || v >= card) throw InvalidArgument(std::string("value for '") + name + "' out of range");
    return std::pair<int, int>(v, card);
  };

  const auto [shape_v, shape_card] = value_of("shape", 1);  // default disk
  const auto [x_v, x_card] = value_of("x", 0);
  const auto [y_v, y_card] = value_of("y", 0);
  const auto [scale_v, scale_card] = value_of("scale", 0);
  const auto [orient_v, orient_card] = value_of("orient", 0);
  const auto [hue_v, hue_card] = value_of("hue", 0);
  (void)shape_card;
  (void)scale_card;
  if (spec.index_of("hue") >= 0 && channels != 3) {
    throw ConfigError("factor 'hue' requires 3-channel images");
  }

  const int res = std::min(height, width);
  const double unit = static_cast<double>(res) / 16.0;
  const double margin = 4.0 * unit;
  const double cx = spec.index_of("x") >= 0 && x_card > 1
                        ? margin + x_v * (width - 2.0 * margin) / (x_card - 1)
                        : width / 2.0;
  const double cy = spec.index_of("y") >= 0 && y_card > 1
                        ? margin + y_v * (height - 2.0 * margin) / (y_card - 1)
                        : height / 2.0;

  // silhouette areas are deliberately unequal per shape so shape identity is
  // visible in coarse pixel statistics at small resolutions
  const double half = shape_half_extent(scale_v, res);
  const double disk_r = half * 1.3;
  const double tri_r = half * 1.5;
  const double angle = orient_card > 1 && spec.index_of("orient") >= 0
                           ? static_cast<double>(orient_v) * (M_PI / 2.0) / static_cast<double>(orient_card)
                           : 0.0;
  const double ca = std::cos(-angle), sa = std::sin(-angle);

  // canonical triangle vertices, apex up (image y grows downward)
  const double tv[3][2] = {{0.0, -tri_r},
                           {tri_r * std::cos(M_PI / 6.0), tri_r * 0.5},
                           {-tri_r * std::cos(M_PI / 6.0), tri_r * 0.5}};

  auto inside = [&](double px, double py) -> bool {
    double dx = px - cx, dy = py - cy;
    const double rx = dx * ca - dy * sa;
    const double ry = dx * sa + dy * ca;
    switch (shape_v) {
      case 0:  // square
        return std::fabs(rx) <= half && std::fabs(ry) <= half;
      case 1:  // disk
        return rx * rx + ry * ry <= disk_r * disk_r;
      default: {  // triangle, three half-plane tests
        for (int i = 0; i < 3; ++i) {
          const double ax = tv[i][0], ay = tv[i][1];
          const double bx = tv[(i + 1) % 3][0], by = tv[(i + 1) % 3][1];
          const double cross = (bx - ax) * (ry - ay) - (by - ay) * (rx - ax);
          if (cross < 0.0) return false;
        }
        return true;
      }
    }
  };

  Rgb fg{1.0, 1.0, 1.0};
  if (spec.index_of("hue") >= 0) fg = hue_to_rgb(static_cast<double>(hue_v) / hue_card);

  std::vector<float> img(static_cast<size_t>(height) * width * channels, 0.0f);
  const double inv_ss = 1.0 / (kSupersample * kSupersample);
  for (int py = 0; py < height; ++py) {
    for (int px = 0; px < width; ++px) {
      int hits = 0;
      for (int sy = 0; sy < kSupersample; ++sy) {
        const double yy = py + (sy + 0.5) / kSupersample;
        for (int sx = 0; sx < kSupersample; ++sx) {
          const double xx = px + (sx + 0.5) / kSupersample;
          if (inside(xx, yy)) ++hits;
        }
      }
      const double cov = hits * inv_ss;
      const size_t base = (static_cast<size_t>(py) * width + px) * channels;
      if (channels == 1) {
        img[base] = static_cast<float>(cov);
      } else {
        img[base] = static_cast<float>(cov * fg.r);
        img[base + 1] = static_cast<float>(cov * fg.g);
        img[base + 2] = static_cast<float>(cov * fg.b);
      }
    }
  }
  return img;
}

Dataset generate_dataset(const FactorSpec& spec, int height, int width, int channels, uint64_t seed,
                         int64_t max_bytes) {
  spec.validate();
  if (max_bytes <= 0) max_bytes = kDefaultMaxBytes;
  Dataset ds;
  ds.spec = spec;
  ds.height = height;
  ds.width = width;
  ds.channels = channels;
  ds.seed = seed;
  ds.count = spec.combination_count();
  const int64_t bytes = ds.count * ds.image_size() * static_cast<int64_t>(sizeof(float));
  if (bytes > max_bytes) {
    throw ConfigError("dataset of " + std::to_string(ds.count) + " combinations needs " +
                      std::to_string(bytes) + " bytes, over the cap of " + std::to_string(max_bytes));
  }
  ds.images.reserve(static_cast<size_t>(ds.count * ds.image_size()));
  ds.factor_values.reserve(static_cast<size_t>(ds.count * spec.factor_count()));
  for (int64_t i = 0; i < ds.count; ++i) {
    const std::vector<int> values = spec.unrank(i);
    const std::vector<float> img = render_sample(spec, values, height, width, channels);
    ds.images.insert(ds.images.end(), img.begin(), img.end());
    for (int v : values) ds.factor_values.push_back(static_cast<int32_t>(v));
  }
  return ds;
}

std::vector<int64_t> split_supervised(const Dataset& ds, int64_t tau, uint64_t seed, int min_per_value) {
  const FactorSpec& spec = ds.spec;
  if (tau < 1 || tau > ds.count) throw ConfigError("tau must be in [1, dataset size]");
  for (const Factor& f : spec.factors) {
    if (tau < static_cast<int64_t>(min_per_value) * f.cardinality) {
      throw ConfigError("stratification infeasible: tau=" + std::to_string(tau) + " cannot give factor '" +
                        f.name + "' " + std::to_string(min_per_value) + " samples per value");
    }
  }
  const int k = spec.factor_count();
  std::vector<int64_t> caps(static_cast<size_t>(k)), floors(static_cast<size_t>(k));
  for (int g = 0; g < k; ++g) {
    const int64_t v = spec.factors[static_cast<size_t>(g)].cardinality;
    caps[static_cast<size_t>(g)] = (tau + v - 1) / v;
    floors[static_cast<size_t>(g)] = std::max<int64_t>(tau / v, min_per_value);
  }

  for (int attempt = 0; attempt < 64; ++attempt) {
    Rng rng(derive_seed(seed, kStreamSplit * 1000 + static_cast<uint64_t>(attempt)));
    std::vector<int64_t> order(static_cast<size_t>(ds.count));
    std::iota(order.begin(), order.end(), 0);
    for (int64_t i = ds.count - 1; i > 0; --i) {
      std::swap(order[static_cast<size_t>(i)], order[static_cast<size_t>(rng.below(static_cast<int>(i + 1)))]);
    }
    std::vector<std::vector<int64_t>> counts(static_cast<size_t>(k));
    for (int g = 0; g < k; ++g) {
      counts[static_cast<size_t>(g)].assign(static_cast<size_t>(spec.factors[static_cast<size_t>(g)].cardinality), 0);
    }
    std::vector<int64_t> chosen;
    chosen.reserve(static_cast<size_t>(tau));
    for (int64_t idx : order) {
      if (static_cast<int64_t>(chosen.size()) == tau) break;
      const std::vector<int> values = ds.values(idx);
      bool ok = true;
      for (int g = 0; g < k && ok; ++g) {
        if (counts[static_cast<size_t>(g)][static_cast<size_t>(values[static_cast<size_t>(g)])] >=
            caps[static_cast<size_t>(g)]) {
          ok = false;
        }
      }
      if (!ok) continue;
      chosen.push_back(idx);
      for (int g = 0; g < k; ++g) {
        ++counts[static_cast<size_t>(g)][static_cast<size_t>(values[static_cast<size_t>(g)])];
      }
    }
    if (static_cast<int64_t>(chosen.size()) != tau) continue;
    bool balanced = true;
    for (int g = 0; g < k && balanced; ++g) {
      for (int64_t c : counts[static_cast<size_t>(g)]) {
        if (c < floors[static_cast<size_t>(g)]) {
          balanced = false;
          break;
        }
      }
    }
    if (!balanced) continue;
    std::sort(chosen.begin(), chosen.end());
    return chosen;
  }
  throw ConfigError("stratification infeasible for tau=" + std::to_string(tau) +
                    " after 64 attempts; pick a tau closer to a multiple of the cardinalities");
}

std::vector<Triple> make_triples(const Dataset& ds, const std::vector<Relation>& relations,
                                 int64_t count, uint64_t seed) {
  if (relations.empty()) throw InvalidArgument("relation set is empty");
  Rng rng(seed);
  std::vector<Triple> out;
  out.reserve(static_cast<size_t>(count));
  const int k = ds.spec.factor_count();
  for (int64_t i = 0; i < count; ++i) {
    Triple t;
    t.in_index = rng.below(static_cast<int>(ds.count));
    t.rel_id = rng.below(static_cast<int>(relations.size()));
    std::vector<int> target = apply_relation(ds.values(t.in_index), relations[static_cast<size_t>(t.rel_id)]);
    for (int g = 0; g < k; ++g) {
      const Factor& f = ds.spec.factors[static_cast<size_t>(g)];
      if (f.nuisance) target[static_cast<size_t>(g)] = rng.below(f.cardinality);
    }
    t.out_index = ds.spec.rank(target);
    out.push_back(t);
  }
  return out;
}

void save_dataset(const Dataset& ds, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  std::string nuisance;
  for (const Factor& f : ds.spec.factors) {
    if (f.nuisance) {
      if (!nuisance.empty()) nuisance += ",";
      nuisance += f.name;
    }
  }
  {
    std::ofstream m(dir + "/manifest.txt", std::ios::trunc);
    if (!m) throw IoError("cannot write " + dir + "/manifest.txt");
    m << "format = modrel-dataset v1\n";
    m << "spec = " << ds.spec.to_string() << "\n";
    m << "nuisance = " << nuisance << "\n";
    m << "height = " << ds.height << "\n";
    m << "width = " << ds.width << "\n";
    m << "channels = " << ds.channels << "\n";
    m << "seed = " << ds.seed << "\n";
    m << "count = " << ds.count << "\n";
  }
  {
    std::ofstream f(dir + "/images.f32", std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write " + dir + "/images.f32");
    f.write(reinterpret_cast<const char*>(ds.images.data()),
            static_cast<std::streamsize>(ds.images.size() * sizeof(float)));
  }
  {
    std::ofstream f(dir + "/factors.i32", std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write " + dir + "/factors.i32");
    f.write(reinterpret_cast<const char*>(ds.factor_values.data()),
            static_cast<std::streamsize>(ds.factor_values.size() * sizeof(int32_t)));
  }
}

Dataset load_dataset(const std::string& dir) {
  std::ifstream m(dir + "/manifest.txt");
  if (!m) throw IoError("cannot read " + dir + "/manifest.txt (run gen-data first)");
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(m, line)) {
    const size_t eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string key = line.substr(0, eq);
    std::string val = line.substr(eq + 1);
    auto trim = [](std::string& s) {
      const size_t a = s.find_first_not_of(" \t");
      const size_t b = s.find_last_not_of(" \t\r");
      s = a == std::string::npos ? "" : s.substr(a, b - a + 1);
    };
    trim(key);
    trim(val);
    kv[key] = val;
  }
  if (kv["format"] != "modrel-dataset v1") throw IoError("unrecognized dataset manifest in " + dir);
  Dataset ds;
  ds.spec = FactorSpec::parse(kv["spec"], kv["nuisance"]);
  try {
    ds.height = std::stoi(kv.at("height"));
    ds.width = std::stoi(kv.at("width"));
    ds.channels = std::stoi(kv.at("channels"));
    ds.seed = std::stoull(kv.at("seed"));
    ds.count = std::stoll(kv.at("count"));
  } catch (...) {
    throw IoError("malformed dataset manifest in " + dir);
  }
  auto read_blob = [&](const std::string& path, size_t elem, size_t expect) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot read " + path);
    f.seekg(0, std::ios::end);
    const size_t bytes = static_cast<size_t>(f.tellg());
    if (bytes != elem * expect) {
      throw IoError(path + " has " + std::to_string(bytes) + " bytes, expected " +
                    std::to_string(elem * expect));
    }
    f.seekg(0);
    std::vector<char> buf(bytes);
    f.read(buf.data(), static_cast<std::streamsize>(bytes));
    return buf;
  };
  const size_t n_img = static_cast<size_t>(ds.count * ds.image_size());
  const size_t n_fac = static_cast<size_t>(ds.count) * ds.spec.factor_count();
  std::vector<char> ib = read_blob(dir + "/images.f32", sizeof(float), n_img);
  std::vector<char> fb = read_blob(dir + "/factors.i32", sizeof(int32_t), n_fac);
  ds.images.resize(n_img);
  std::memcpy(ds.images.data(), ib.data(), ib.size());
  ds.factor_values.resize(n_fac);
  std::memcpy(ds.factor_values.data(), fb.data(), fb.size());
  return ds;
}

}  // namespace modrel
