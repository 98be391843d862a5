#include "replicoal/kingman.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

#include "replicoal/parallel.hpp"
#include "replicoal/rng.hpp"
#include "replicoal/stats.hpp"

namespace replicoal {

KingmanChain::KingmanChain(double rate_c, Count n0) : rate_c_(rate_c), n0_(n0) {
  if (!(rate_c > 0.0)) throw std::invalid_argument("Kingman rate must be positive");
  if (n0 < 1) throw std::invalid_argument("Kingman chain needs n0 >= 1");
}

std::optional<double> DeathPath::beta(Count m) const {
  if (m < 1 || m > n0) return std::nullopt;
  const Count idx = n0 - m;
  if (idx == 0) return 0.0;
  if (idx > static_cast<Count>(jump_times.size())) return std::nullopt;
  return jump_times[static_cast<std::size_t>(idx - 1)];
}

Count DeathPath::level_at(double t) const {
  const auto passed = std::upper_bound(jump_times.begin(), jump_times.end(), t) - jump_times.begin();
  return n0 - static_cast<Count>(passed);
}

DeathPath simulate_kingman(const KingmanChain& chain, StopCriterion stop, std::uint64_t seed, std::uint64_t stream) {
  Rng rng(seed, stream);
  DeathPath path;
  path.n0 = chain.n0();
  const double horizon = stop.kind == StopCriterion::Kind::max_time ? stop.value : std::numeric_limits<double>::infinity();
  const double clock_cap =
      stop.kind == StopCriterion::Kind::max_clock ? stop.value : std::numeric_limits<double>::infinity();
  const Count level = stop.kind == StopCriterion::Kind::hit_sigma ? stop.level() : 1;
  Count n = chain.n0();
  double t = 0.0;
  double clock = 0.0;
  path.reason = stop.kind == StopCriterion::Kind::hit_sigma ? StopReason::hit_sigma : StopReason::absorbed;
  while (n > level && n > 1) {
    const double dt = rng.exponential(chain.holding_rate(n));
    if (t + dt > horizon) {
      t = horizon;
      path.reason = StopReason::max_time;
      break;
    }
    if (clock + static_cast<double>(n) * dt > clock_cap) {
      t += (clock_cap - clock) / static_cast<double>(n);
      path.reason = StopReason::max_clock;
      break;
    }
    t += dt;
    clock += static_cast<double>(n) * dt;
    path.jump_times.push_back(t);
    --n;
  }
  if (n == 1 && horizon < std::numeric_limits<double>::infinity()) {
    t = std::max(t, horizon);
    path.reason = StopReason::max_time;
  }
  path.end_time = t;
  return path;
}

double expected_beta(const KingmanChain& chain, Count m) {
  if (m < 1 || m >= chain.n0()) throw std::invalid_argument("expected_beta needs 1 <= m < n0");
  // Telescoping: 2/(j(j-1)) = 2/(j-1) - 2/j.
  return 2.0 / chain.rate_c() * (1.0 / static_cast<double>(m) - 1.0 / static_cast<double>(chain.n0()));
}

double expected_beta_from_infinity(double rate_c, Count m) {
  if (!(rate_c > 0.0)) throw std::invalid_argument("Kingman rate must be positive");
  if (m < 1) throw std::invalid_argument("level must be >= 1");
  return 2.0 / (rate_c * static_cast<double>(m));
}

std::vector<ComingDownEstimate> coming_down_constant(const KingmanChain& chain, std::span<const double> eps_list,
                                                     std::size_t n_runs, std::uint64_t seed, unsigned threads) {
  if (chain.n0() < 1'000'000) throw std::invalid_argument("coming-down estimates need n0 >= 1e6");
  if (n_runs == 0) throw std::invalid_argument("n_runs must be positive");
  std::vector<double> sorted(eps_list.begin(), eps_list.end());
  for (double e : sorted) {
    if (!(e > 0.0)) throw std::invalid_argument("eps values must be positive");
  }
  std::sort(sorted.begin(), sorted.end());

  auto one_run = [&](std::size_t run) {
    Rng rng(seed, run);
    std::vector<Count> levels(sorted.size(), 1);
    std::size_t next = 0;
    Count n = chain.n0();
    double t = 0.0;
    while (n > 1 && next < sorted.size()) {
      const double dt = rng.exponential(chain.holding_rate(n));
      while (next < sorted.size() && t + dt > sorted[next]) levels[next++] = n;
      t += dt;
      --n;
    }
    return levels;
  };
  const auto runs = run_indexed(n_runs, threads, one_run);

  std::vector<ComingDownEstimate> out;
  for (double eps : eps_list) {
    const auto pos = static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), eps) - sorted.begin());
    ComingDownEstimate est;
    est.eps = eps;
    Moments mom;
    for (const auto& levels : runs) {
      const double v = eps * static_cast<double>(levels[pos]);
      est.values.push_back(v);
      mom.add(v);
    }
    est.mean = mom.mean;
    est.std_error = mom.std_error();
    out.push_back(std::move(est));
  }
  return out;
}

}  // namespace replicoal
