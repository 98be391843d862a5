#include "replicoal/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "replicoal/rng.hpp"

namespace replicoal {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<double> simplex_of(std::span<const Count> n, Count sigma) {
  std::vector<double> r(n.size());
  for (std::size_t i = 0; i < n.size(); ++i) r[i] = static_cast<double>(n[i]) / static_cast<double>(sigma);
  return r;
}

void check_state(const RateMatrix& rates, const BlockState& n0) {
  if (n0.k() != rates.k()) throw std::invalid_argument("initial state dimension does not match rate matrix");
  if (rates.k() > std::numeric_limits<std::uint16_t>::max()) throw std::invalid_argument("too many types");
}

/// Gillespie loop appending to `out`. Continues from (n, t, clock); the
/// caller owns any coarse prefix already in `out`.
void run_exact(const RateMatrix& rates, std::vector<Count> n, double t, double clock, const StopCriterion& stop,
               Rng& rng, const ExactOptions& options, Trajectory& out) {
  const std::size_t k = rates.k();
  Count sigma = std::accumulate(n.begin(), n.end(), Count{0});
  std::vector<double> a(k * k);
  const std::size_t stride = std::max<std::size_t>(options.snapshot_stride, 1);
  bool thinned = sigma > options.record_below;

  auto snapshot = [&] { out.coarse.push_back(Snapshot{t, clock, static_cast<double>(sigma), simplex_of(n, sigma)}); };
  auto begin_log = [&] {
    out.exact_start = BlockState(n);
    out.exact_t0 = t;
    out.exact_clock0 = clock;
  };
  if (thinned) {
    snapshot();
  } else {
    begin_log();
  }

  const double horizon = stop.kind == StopCriterion::Kind::max_time ? stop.value : kInf;
  const double clock_cap = stop.kind == StopCriterion::Kind::max_clock ? stop.value : kInf;
  const Count level = stop.kind == StopCriterion::Kind::hit_sigma ? stop.level() : 0;
  std::size_t since_snapshot = 0;

  for (;;) {
    if (sigma <= level) {
      out.reason = StopReason::hit_sigma;
      break;
    }
    if (sigma == 1) {
      // Absorbed; the state is frozen, so time-based criteria end at their cap.
      if (horizon < kInf) {
        if (horizon > t) {
          clock += horizon - t;
          t = horizon;
        }
        out.reason = StopReason::max_time;
      } else if (clock_cap < kInf) {
        if (clock_cap > clock) {
          t += clock_cap - clock;
          clock = clock_cap;
        }
        out.reason = StopReason::max_clock;
      } else {
        out.reason = StopReason::absorbed;
      }
      break;
    }
    const double lambda = channel_rates<Count>(rates, n, a);
    const double s = static_cast<double>(sigma);
    const double dt = rng.exponential(lambda);
    if (t + dt > horizon) {
      clock += s * (horizon - t);
      t = horizon;
      out.reason = StopReason::max_time;
      break;
    }
    if (clock + s * dt > clock_cap) {
      t += (clock_cap - clock) / s;
      clock = clock_cap;
      out.reason = StopReason::max_clock;
      break;
    }
    t += dt;
    clock += s * dt;

    const double target = rng.uniform() * lambda;
    std::size_t chosen = a.size();
    double cumulative = 0.0;
    for (std::size_t c = 0; c < a.size(); ++c) {
      if (a[c] <= 0.0) continue;
      chosen = c;
      cumulative += a[c];
      if (cumulative > target) break;
    }
    const auto survivor = static_cast<std::uint16_t>(chosen / k);
    const auto victim = static_cast<std::uint16_t>(chosen % k);
    --n[victim];
    --sigma;

    if (thinned) {
      if (sigma <= options.record_below) {
        snapshot();
        begin_log();
        thinned = false;
      } else if (++since_snapshot % stride == 0) {
        snapshot();
      }
    } else {
      out.events.push_back(Event{t, survivor, victim});
    }
  }
  if (thinned) {
    snapshot();
    begin_log();
  }
  out.end_time = t;
  out.end_clock = clock;
}

Trajectory empty_trajectory(std::size_t k) {
  Trajectory traj;
  traj.k = k;
  return traj;
}

// --- fluid -------------------------------------------------------------

struct FluidLimits {
  double level = 0.0;  // stop when sigma reaches this value
  double time = kInf;
  double clock = kInf;
};

/// State layout: [log sigma, t, r_0 .. r_{k-1}], derivative in the clock.
class FluidFlow {
 public:
  explicit FluidFlow(const PayoffMatrix& payoff)
      : a_(payoff.matrix()), k_(payoff.k()), ar_(k_), g_(k_), k1_(k_ + 2), k2_(k_ + 2), k3_(k_ + 2), k4_(k_ + 2),
        tmp_(k_ + 2) {}

  void derivative(std::span<const double> y, std::span<double> dy) {
    const double sigma = std::exp(y[0]);
    if (!(sigma > 1.0 + 1e-9)) throw NumericalError("fluid path reached sigma <= 1");
    std::span<const double> r = y.subspan(2);
    double gbar = 0.0;
    for (std::size_t i = 0; i < k_; ++i) {
      double ar = 0.0;
      for (std::size_t j = 0; j < k_; ++j) ar += a_(i, j) * r[j];
      g_[i] = r[i] * (a_(i, i) / sigma - ar);
      gbar += g_[i];
    }
    if (!(gbar > 0.0)) {
      throw NumericalError("fluid merger rate is not positive; the payoff matrix does not describe mergers");
    }
    dy[0] = -gbar;
    dy[1] = 1.0 / sigma;
    const double factor = sigma / (sigma - 1.0);
    for (std::size_t i = 0; i < k_; ++i) dy[2 + i] = factor * (r[i] * gbar - g_[i]);
  }

  std::vector<double> step(std::span<const double> y, double h) {
    const std::size_t n = k_ + 2;
    derivative(y, k1_);
    for (std::size_t i = 0; i < n; ++i) tmp_[i] = y[i] + 0.5 * h * k1_[i];
    derivative(tmp_, k2_);
    for (std::size_t i = 0; i < n; ++i) tmp_[i] = y[i] + 0.5 * h * k2_[i];
    derivative(tmp_, k3_);
    for (std::size_t i = 0; i < n; ++i) tmp_[i] = y[i] + h * k3_[i];
    derivative(tmp_, k4_);
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = y[i] + h / 6.0 * (k1_[i] + 2.0 * k2_[i] + 2.0 * k3_[i] + k4_[i]);
    double sum = 0.0;
    for (std::size_t i = 2; i < n; ++i) {
      if (out[i] < 0.0) {
        if (out[i] < -1e-12) throw NumericalError("fluid simplex coordinate went negative; reduce the step");
        out[i] = 0.0;
      }
      sum += out[i];
    }
    for (std::size_t i = 2; i < n; ++i) out[i] /= sum;
    return out;
  }

 private:
  const Eigen::MatrixXd& a_;
  std::size_t k_;
  std::vector<double> ar_, g_, k1_, k2_, k3_, k4_, tmp_;
};

Snapshot snapshot_of(std::span<const double> y, double clock) {
  return Snapshot{y[1], clock, std::exp(y[0]), std::vector<double>(y.begin() + 2, y.end())};
}

FluidPath run_fluid(const PayoffMatrix& payoff, const FluidState& f0, const FluidLimits& limits,
                    const FluidOptions& options) {
  if (f0.r.size() != payoff.k()) throw std::invalid_argument("fluid state dimension does not match payoff matrix");
  if (!(f0.sigma > 1.0)) throw std::invalid_argument("fluid sigma must exceed 1");
  if (!(options.step > 0.0)) throw std::invalid_argument("fluid step must be positive");
  if (!(limits.level > 1.0) && limits.time == kInf && limits.clock == kInf) {
    throw std::invalid_argument("fluid paths need a hit_sigma (>= 2), max_time or max_clock criterion");
  }

  FluidPath path;
  if (f0.sigma < 1e3) {
    path.warnings.push_back("fluid start sigma " + std::to_string(f0.sigma) +
                            " is below 1e3; stochastic effects are not negligible");
  }
  FluidFlow flow(payoff);
  std::vector<double> y(payoff.k() + 2);
  y[0] = std::log(f0.sigma);
  y[1] = 0.0;
  std::copy(f0.r.coords().begin(), f0.r.coords().end(), y.begin() + 2);
  double clock = 0.0;
  path.points.push_back(snapshot_of(y, clock));

  if (limits.level > 1.0 && f0.sigma <= limits.level) {
    path.reason = StopReason::hit_sigma;
    return path;
  }
  const double log_level = limits.level > 1.0 ? std::log(limits.level) : -kInf;
  const std::size_t record_every = std::max<std::size_t>(options.record_every, 1);

  // Shrinks the final step so that `overshoot(y)` crosses zero exactly.
  auto land = [&](const std::vector<double>& from, double h_hi, auto&& excess) {
    double lo = 0.0, hi = h_hi;
    for (int it = 0; it < 80; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (excess(flow.step(from, mid)) > 0.0) {
        hi = mid;
      } else {
        lo = mid;
      }
    }
    return hi;
  };

  for (std::size_t steps = 1;; ++steps) {
    double h = options.step;
    bool clock_limited = false;
    if (clock + h >= limits.clock) {
      h = limits.clock - clock;
      clock_limited = true;
    }
    if (h <= 0.0) {
      path.reason = StopReason::max_clock;
      break;
    }
    std::vector<double> next = flow.step(y, h);
    if (next[0] < log_level) {
      const double hl = land(y, h, [&](const std::vector<double>& z) { return log_level - z[0]; });
      y = flow.step(y, hl);
      y[0] = log_level;
      clock += hl;
      path.points.push_back(snapshot_of(y, clock));
      path.points.back().sigma = limits.level;
      path.reason = StopReason::hit_sigma;
      break;
    }
    if (next[1] > limits.time) {
      const double ht = land(y, h, [&](const std::vector<double>& z) { return z[1] - limits.time; });
      y = flow.step(y, ht);
      y[1] = limits.time;
      clock += ht;
      path.points.push_back(snapshot_of(y, clock));
      path.reason = StopReason::max_time;
      break;
    }
    y = std::move(next);
    clock += h;
    if (clock_limited) {
      clock = limits.clock;
      path.points.push_back(snapshot_of(y, clock));
      path.reason = StopReason::max_clock;
      break;
    }
    if (steps % record_every == 0) path.points.push_back(snapshot_of(y, clock));
  }
  return path;
}

FluidLimits limits_from(const StopCriterion& stop) {
  FluidLimits limits;
  switch (stop.kind) {
    case StopCriterion::Kind::hit_sigma:
      if (stop.level() < 2) throw std::invalid_argument("fluid paths cannot reach sigma = 1");
      limits.level = stop.value;
      break;
    case StopCriterion::Kind::max_time:
      limits.time = stop.value;
      break;
    case StopCriterion::Kind::max_clock:
      limits.clock = stop.value;
      break;
    case StopCriterion::Kind::absorb:
      throw std::invalid_argument("fluid paths cannot reach sigma = 1; use hit_sigma");
  }
  return limits;
}

/// Criterion for the exact phase after a coarse prefix ending at (t, clock).
bool prefix_met_stop(const StopCriterion& stop, double t, double clock, double sigma) {
  switch (stop.kind) {
    case StopCriterion::Kind::hit_sigma:
      return sigma <= stop.value;
    case StopCriterion::Kind::max_time:
      return t >= stop.value;
    case StopCriterion::Kind::max_clock:
      return clock >= stop.value;
    case StopCriterion::Kind::absorb:
      return false;
  }
  return false;
}

StopReason reason_of(const StopCriterion& stop) {
  switch (stop.kind) {
    case StopCriterion::Kind::hit_sigma:
      return StopReason::hit_sigma;
    case StopCriterion::Kind::max_time:
      return StopReason::max_time;
    case StopCriterion::Kind::max_clock:
      return StopReason::max_clock;
    case StopCriterion::Kind::absorb:
      return StopReason::absorbed;
  }
  return StopReason::absorbed;
}

/// Ends a trajectory inside its coarse prefix.
void close_in_prefix(Trajectory& traj, const StopCriterion& stop) {
  const Snapshot& last = traj.coarse.back();
  traj.exact_start = round_to_state(std::max<Count>(std::llround(last.sigma), 1), last.r);
  traj.exact_t0 = last.time;
  traj.exact_clock0 = last.clock;
  traj.end_time = last.time;
  traj.end_clock = last.clock;
  traj.reason = reason_of(stop);
}

}  // namespace

Trajectory simulate_exact(const RateMatrix& rates, const BlockState& n0, StopCriterion stop, std::uint64_t seed,
                          std::uint64_t stream, const ExactOptions& options) {
  check_state(rates, n0);
  Rng rng(seed, stream);
  Trajectory traj = empty_trajectory(rates.k());
  run_exact(rates, n0.counts(), 0.0, 0.0, stop, rng, options, traj);
  return traj;
}

Trajectory simulate_tau_leap(const RateMatrix& rates, const BlockState& n0, StopCriterion stop, std::uint64_t seed,
                             std::uint64_t stream, const TauLeapOptions& options) {
  check_state(rates, n0);
  if (!(options.eps > 0.0 && options.eps <= 0.1)) throw std::invalid_argument("tau-leap eps must lie in (0, 0.1]");
  if (options.sigma_floor < 2) throw std::invalid_argument("tau-leap sigma_floor must be >= 2");

  const std::size_t k = rates.k();
  Rng rng(seed, stream);
  Trajectory traj = empty_trajectory(k);
  std::vector<Count> n = n0.counts();
  Count sigma = n0.sigma();
  double t = 0.0;
  double clock = 0.0;

  const Count floor_level = std::max(options.sigma_floor, stop.kind == StopCriterion::Kind::hit_sigma ? stop.level() : 0);
  // Close to the floor a leap's Poisson spread is comparable to the
  // remaining distance; the last few events go to the exact solver.
  const auto margin = static_cast<Count>(std::ceil(10.0 / options.eps));
  const double horizon = stop.kind == StopCriterion::Kind::max_time ? stop.value : kInf;
  const double clock_cap = stop.kind == StopCriterion::Kind::max_clock ? stop.value : kInf;

  if (sigma > floor_level + margin) {
    traj.coarse.push_back(Snapshot{t, clock, static_cast<double>(sigma), simplex_of(n, sigma)});
    std::vector<double> a(k * k), a_mid(k * k), mean(k), half(k);
    std::vector<Count> fired(k * k), removed(k);
    while (sigma > floor_level + margin) {
      const double lambda = channel_rates<Count>(rates, n, a);
      std::fill(mean.begin(), mean.end(), 0.0);
      for (std::size_t c = 0; c < a.size(); ++c) mean[c % k] += a[c];

      double tau = kInf;
      for (std::size_t j = 0; j < k; ++j) {
        if (mean[j] <= 0.0) continue;
        const double allowed = std::max(options.eps * static_cast<double>(n[j]), 1.0);
        // Mean and variance of the per-type decrement coincide (unit jumps).
        tau = std::min({tau, allowed / mean[j], allowed * allowed / mean[j]});
      }
      // d lambda / dt along the mean flow.
      double dlambda = 0.0;
      for (std::size_t j = 0; j < k; ++j) {
        double g = rates(j, j) * (static_cast<double>(n[j]) - 0.5);
        for (std::size_t i = 0; i < k; ++i) {
          if (i != j) g += (rates(i, j) + rates(j, i)) * static_cast<double>(n[i]);
        }
        dlambda -= g * mean[j];
      }
      if (dlambda != 0.0) tau = std::min(tau, options.eps * lambda / std::abs(dlambda));
      tau = std::min(tau, 0.5 * static_cast<double>(sigma - floor_level) / lambda);

      bool time_capped = false;
      if (t + tau >= horizon) {
        tau = horizon - t;
        time_capped = true;
      }
      if (clock + static_cast<double>(sigma) * tau >= clock_cap) {
        tau = (clock_cap - clock) / static_cast<double>(sigma);
        time_capped = true;
      }

      bool accepted = false;
      Count total_removed = 0;
      for (int halving = 0; halving <= options.max_halvings; ++halving) {
        // Midpoint leap: rates are taken at the state predicted half a leap
        // ahead, which removes the first-order bias of frozen rates.
        for (std::size_t j = 0; j < k; ++j) half[j] = std::max(static_cast<double>(n[j]) - 0.5 * tau * mean[j], 0.0);
        channel_rates<double>(rates, half, a_mid);
        std::fill(removed.begin(), removed.end(), 0);
        total_removed = 0;
        for (std::size_t c = 0; c < a.size(); ++c) {
          fired[c] = rng.poisson(a_mid[c] * tau);
          removed[c % k] += fired[c];
          total_removed += fired[c];
        }
        bool ok = sigma - total_removed >= floor_level;
        for (std::size_t j = 0; ok && j < k; ++j) ok = removed[j] <= n[j];
        for (std::size_t c = 0; ok && c < a.size(); ++c) {
          if (fired[c] > 0) ok = n[c / k] - removed[c / k] >= 1;
        }
        if (ok) {
          accepted = true;
          break;
        }
        tau *= 0.5;
        time_capped = false;
      }
      if (!accepted) {
        throw NumericalError("tau-leap overshoot persists after " + std::to_string(options.max_halvings) +
                             " halvings at sigma = " + std::to_string(sigma));
      }
      const double sigma_before = static_cast<double>(sigma);
      for (std::size_t j = 0; j < k; ++j) n[j] -= removed[j];
      sigma -= total_removed;
      t += tau;
      clock += 0.5 * tau * (sigma_before + static_cast<double>(sigma));
      if (time_capped && horizon < kInf && t >= horizon) t = horizon;
      if (time_capped && clock_cap < kInf) clock = std::min(clock, clock_cap);
      traj.coarse.push_back(Snapshot{t, clock, static_cast<double>(sigma), simplex_of(n, sigma)});
      if (time_capped) {
        close_in_prefix(traj, stop);
        return traj;
      }
    }
  }
  run_exact(rates, std::move(n), t, clock, stop, rng, options.exact, traj);
  return traj;
}

FluidState FluidPath::final_state() const {
  const Snapshot& last = points.back();
  return FluidState{last.sigma, SimplexPoint(last.r, 1e-9)};
}

FluidPath simulate_fluid(const PayoffMatrix& payoff, const FluidState& f0, StopCriterion stop,
                         const FluidOptions& options) {
  return run_fluid(payoff, f0, limits_from(stop), options);
}

FluidPath simulate_fluid(const RateMatrix& rates, const FluidState& f0, StopCriterion stop,
                         const FluidOptions& options) {
  return simulate_fluid(payoff_from_rates(rates), f0, stop, options);
}

Trajectory fluid_trajectory(const FluidPath& path) {
  if (path.points.empty()) throw std::invalid_argument("empty fluid path");
  Trajectory traj = empty_trajectory(path.points.front().r.size());
  traj.coarse = path.points;
  const Snapshot& last = traj.coarse.back();
  traj.exact_start = round_to_state(std::max<Count>(std::llround(last.sigma), 1), last.r);
  traj.exact_t0 = last.time;
  traj.exact_clock0 = last.clock;
  traj.end_time = last.time;
  traj.end_clock = last.clock;
  traj.reason = path.reason;
  return traj;
}

Trajectory simulate_hybrid(const RateMatrix& rates, const FluidState& f0, StopCriterion stop, std::uint64_t seed,
                           std::uint64_t stream, const HybridOptions& options) {
  if (options.switch_sigma < 2) throw std::invalid_argument("switch_sigma must be >= 2");
  if (f0.r.size() != rates.k()) throw std::invalid_argument("fluid state dimension does not match rate matrix");
  const auto switch_level = static_cast<double>(options.switch_sigma);
  if (f0.sigma <= switch_level || options.upper == UpperMethod::tau_leap) {
    const Count sigma0 = std::llround(f0.sigma);
    return simulate_hybrid(rates, round_to_state(sigma0, f0.r.coords()), stop, seed, stream, options);
  }

  FluidLimits limits;
  limits.level = switch_level;
  if (stop.kind == StopCriterion::Kind::hit_sigma) limits.level = std::max(limits.level, stop.value);
  if (stop.kind == StopCriterion::Kind::max_time) limits.time = stop.value;
  if (stop.kind == StopCriterion::Kind::max_clock) limits.clock = stop.value;
  FluidPath fluid = run_fluid(payoff_from_rates(rates), f0, limits, options.fluid);

  Trajectory traj = empty_trajectory(rates.k());
  traj.coarse = std::move(fluid.points);
  const Snapshot& last = traj.coarse.back();
  if (prefix_met_stop(stop, last.time, last.clock, last.sigma)) {
    close_in_prefix(traj, stop);
    return traj;
  }
  const BlockState start = round_to_state(options.switch_sigma, last.r);
  Rng rng(seed, stream);
  run_exact(rates, start.counts(), last.time, last.clock, stop, rng, options.exact, traj);
  return traj;
}

Trajectory simulate_hybrid(const RateMatrix& rates, const BlockState& n0, StopCriterion stop, std::uint64_t seed,
                           std::uint64_t stream, const HybridOptions& options) {
  if (options.switch_sigma < 2) throw std::invalid_argument("switch_sigma must be >= 2");
  check_state(rates, n0);
  if (n0.sigma() <= options.switch_sigma) return simulate_exact(rates, n0, stop, seed, stream, options.exact);
  if (options.upper == UpperMethod::tau_leap) {
    TauLeapOptions tau = options.tau;
    tau.sigma_floor = options.switch_sigma;
    tau.exact = options.exact;
    return simulate_tau_leap(rates, n0, stop, seed, stream, tau);
  }
  return simulate_hybrid(rates, FluidState{static_cast<double>(n0.sigma()), SimplexPoint(n0.simplex(), 1e-9)},
                         stop, seed, stream, options);
}

}  // namespace replicoal
