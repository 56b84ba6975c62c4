#pragma once

#include <cstdint>
#include <random>

namespace qppo {

// Deterministic random source. The engine (mt19937_64) has a fully
// standardized output sequence; the distribution transforms are hand-rolled
// because std:: distributions are implementation-defined, which would break
// byte-identical logs across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller, one cached value.
  double normal();

  // Uniform integer in [0, n).
  int uniform_int(int n);

 private:
  std::mt19937_64 engine_;
  bool has_cached_ = false;
  double cached_ = 0.0;
};

// Stable seed derivation for named sub-streams of one master seed
// (environment resets, parameter init, action sampling, ...).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

}  // namespace qppo
