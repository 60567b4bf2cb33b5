#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rng.hpp"

namespace modrel {

enum class FactorKind { Categorical, Ordinal };

struct Factor {
  std::string name;
  int cardinality = 0;
  FactorKind kind = FactorKind::Ordinal;
  bool nuisance = false;
};

// Schema of the generative factors. Factor names double as renderer roles:
// shape, x, y, scale, orient, hue.
struct FactorSpec {
  std::vector<Factor> factors;

  void validate() const;
  int factor_count() const { return static_cast<int>(factors.size()); }
  // Non-nuisance factors, in declaration order. These own latent partitions.
  std::vector<int> relevant_indices() const;
  int relevant_count() const { return static_cast<int>(relevant_indices().size()); }
  int64_t combination_count() const;
  int index_of(const std::string& name) const;  // -1 if absent

  // Lexicographic rank of a full value assignment (first factor most
  // significant) and its inverse.
  int64_t rank(const std::vector<int>& values) const;
  std::vector<int> unrank(int64_t index) const;

  std::string to_string() const;                       // e.g. shape:3:categorical,x:4:ordinal
  static FactorSpec parse(const std::string& text, const std::string& nuisance_csv);
};

struct Relation {
  int id = 0;
  std::string name;
  int affected_factor = 0;          // index into FactorSpec::factors
  std::vector<int> value_map;       // permutation over the factor's values
};

// One relation set covering every relevant factor: ordinal factors get a
// cyclic increment and decrement, categorical factors one fixed cycle.
std::vector<Relation> standard_relations(const FactorSpec& spec);

std::vector<int> apply_relation(const std::vector<int>& values, const Relation& rel);

struct Dataset {
  FactorSpec spec;
  int height = 0, width = 0, channels = 1;
  uint64_t seed = 0;
  int64_t count = 0;
  std::vector<float> images;         // count * H * W * C, row-major
  std::vector<int32_t> factor_values;  // count * factor_count

  int64_t image_size() const { return static_cast<int64_t>(height) * width * channels; }
  const float* image(int64_t i) const { return images.data() + i * image_size(); }
  std::vector<int> values(int64_t i) const;
};

// Pixel side table for the scale factor; square side in pixels at 16x16.
double shape_half_extent(int scale_index, int resolution);

// Pure rasterizer: coverage-antialiased shape on a black background,
// H*W*C floats in [0,1].
std::vector<float> render_sample(const FactorSpec& spec, const std::vector<int>& values, int height,
                                 int width, int channels);

// Enumerates every factor combination in lexicographic order. `max_bytes`
// caps the image buffer (0 means the 512 MiB default).
Dataset generate_dataset(const FactorSpec& spec, int height, int width, int channels, uint64_t seed,
                         int64_t max_bytes = 0);

// Stratified uniform draw of `tau` record indices without replacement.
// Every value of every factor appears at least `min_per_value` times and at
// most ceil(tau / V) + slack times.
std::vector<int64_t> split_supervised(const Dataset& ds, int64_t tau, uint64_t seed,
                                      int min_per_value = 2);

struct Triple {
  int64_t in_index = 0;
  int rel_id = 0;
  int64_t out_index = 0;
};

// Relation triples: uniform source record, uniform relation, target record
// with the mapped value on the affected factor and nuisance values redrawn
// freely.
std::vector<Triple> make_triples(const Dataset& ds, const std::vector<Relation>& relations,
                                 int64_t count, uint64_t seed);

// On-disk layout: manifest.txt (dotted keys) + images.f32 (little-endian
// float32) + factors.i32 (little-endian int32).
void save_dataset(const Dataset& ds, const std::string& dir);
Dataset load_dataset(const std::string& dir);

}  // namespace modrel
