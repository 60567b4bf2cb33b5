#pragma once

#include <cmath>
#include <cstdint>

namespace modrel {

// splitmix64 finalizer.
inline uint64_t mix64(uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Sub-seed derivation: every random stream in the toolkit is keyed off the
// single experiment seed with a distinct stream id, so runs are reproducible
// and streams never alias.
inline uint64_t derive_seed(uint64_t seed, uint64_t stream) {
  return mix64(seed + 0x9E3779B97F4A7C15ull * (stream + 1));
}

// Stream ids used across the project.
enum SeedStream : uint64_t {
  kStreamSplit = 1,
  kStreamTriples = 2,
  kStreamHeldout = 3,
  kStreamInit = 4,
  kStreamTrain = 5,
  kStreamEval = 6,
};

// Deterministic splitmix64 generator. The whole state is one u64, which makes
// checkpointing it trivial.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t state() const { return state_; }
  void set_state(uint64_t s) { state_ = s; }

  uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ull;
    return mix64(state_);
  }

  // [0, 1)
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // Uniform integer in [0, n). n must be positive.
  int below(int n) {
    int r = static_cast<int>(next_double() * static_cast<double>(n));
    return r >= n ? n - 1 : r;
  }

  // Standard normal via Box-Muller. Two uniforms per draw, nothing cached, so
  // the serialized state fully determines the stream.
  double normal() {
    double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;  // (0, 1]
    double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
  }

 private:
  uint64_t state_;
};

}  // namespace modrel
