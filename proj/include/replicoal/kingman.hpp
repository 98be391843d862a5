#ifndef REPLICOAL_KINGMAN_HPP
#define REPLICOAL_KINGMAN_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "replicoal/model.hpp"
#include "replicoal/trajectory.hpp"

namespace replicoal {

/// Single-type block counter: from n blocks it jumps to n - 1 at rate
/// rate_c * n (n - 1) / 2.
class KingmanChain {
 public:
  KingmanChain(double rate_c, Count n0);

  double rate_c() const { return rate_c_; }
  Count n0() const { return n0_; }
  double holding_rate(Count n) const { return 0.5 * rate_c_ * static_cast<double>(n) * static_cast<double>(n - 1); }

 private:
  double rate_c_;
  Count n0_;
};

struct DeathPath {
  Count n0 = 1;
  /// jump_times[j] is the time at which the level drops to n0 - j - 1.
  std::vector<double> jump_times;
  double end_time = 0.0;
  StopReason reason = StopReason::absorbed;

  Count final_level() const { return n0 - static_cast<Count>(jump_times.size()); }
  /// beta_m, the first time the chain sits at level m.
  std::optional<double> beta(Count m) const;
  /// Level holding at time t (right-continuous).
  Count level_at(double t) const;
};

DeathPath simulate_kingman(const KingmanChain& chain, StopCriterion stop, std::uint64_t seed,
                           std::uint64_t stream = 0);

/// E[beta_m] = sum_{j=m+1}^{n0} 2 / (c j (j-1)).
double expected_beta(const KingmanChain& chain, Count m);
/// The n0 -> infinity limit 2 / (c m).
double expected_beta_from_infinity(double rate_c, Count m);

struct ComingDownEstimate {
  double eps = 0.0;
  std::vector<double> values;  // eps * nu(eps), one per run
  double mean = 0.0;
  double std_error = 0.0;
};

/// Monte Carlo estimates of eps * nu(eps) from nu(0) = n0 (>= 1e6), one
/// entry per eps; every run serves all eps values.
std::vector<ComingDownEstimate> coming_down_constant(const KingmanChain& chain, std::span<const double> eps_list,
                                                     std::size_t n_runs, std::uint64_t seed, unsigned threads = 1);

}  // namespace replicoal

#endif  // REPLICOAL_KINGMAN_HPP
