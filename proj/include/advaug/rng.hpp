#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace advaug {

// Seeded generator with portable draws. The std distributions are
// implementation-defined, so bounded integers and normals are derived
// here from the raw mt19937_64 stream to keep runs bit-identical across
// standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform01();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform on {0, ..., n-1}; n > 0. Rejection sampling, no modulo bias.
  std::size_t index(std::size_t n);

  double normal();

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace advaug
