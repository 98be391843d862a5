#ifndef REPLICOAL_RNG_HPP
#define REPLICOAL_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>

namespace replicoal {

/// Per-run random stream. Each (master seed, stream index) pair gets an
/// independent mt19937_64 seeded through std::seed_seq, so ensembles are
/// reproducible regardless of how runs are spread over threads.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                      0x9e3779b9u};
    engine_.seed(seq);
  }

  /// Uniform on (0, 1).
  double uniform_open() {
    for (;;) {
      const double u = std::generate_canonical<double, 64>(engine_);
      if (u > 0.0) return u;
    }
  }

  /// Uniform on [0, 1).
  double uniform() { return std::generate_canonical<double, 64>(engine_); }

  double exponential(double rate) { return -std::log(uniform_open()) / rate; }

  double normal() { return normal_(engine_); }

  std::int64_t poisson(double mean) {
    if (mean <= 0.0) return 0;
    std::poisson_distribution<std::int64_t> d(mean);
    return d(engine_);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace replicoal

#endif  // REPLICOAL_RNG_HPP
