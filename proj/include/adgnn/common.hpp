#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>

namespace adgnn {

using Index = std::int64_t;

// Error taxonomy mirrors the CLI exit codes: config/usage -> 1,
// data -> 2, numeric -> 3. Contract violations (bad shapes) use
// std::invalid_argument and are bugs in the caller.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Deterministic random source. All transforms are hand-rolled on top of
// the standard mt19937_64 sequence so that streams are reproducible
// independent of the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). Rejection sampling, unbiased.
  Index uniform_index(Index n) {
    if (n <= 0) throw std::invalid_argument("uniform_index: n must be positive");
    const std::uint64_t un = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % un;
    std::uint64_t r;
    do {
      r = gen_();
    } while (r >= limit);
    return static_cast<Index>(r % un);
  }

  // Standard normal via Box-Muller; caches the second variate.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Row-parallel work helper. Results must not depend on the thread count:
// callers split work into independent items whose internal accumulation
// order is fixed, so any partition of [0, n) gives identical bits.
// Thread count comes from ADGNN_THREADS (default: hardware concurrency).
int thread_count();
void parallel_for(Index n, const std::function<void(Index, Index)>& body);

// Formats a double with 17 significant digits (lossless round trip).
std::string format_real(double v);

}  // namespace adgnn
