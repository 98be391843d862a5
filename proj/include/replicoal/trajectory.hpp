#ifndef REPLICOAL_TRAJECTORY_HPP
#define REPLICOAL_TRAJECTORY_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "replicoal/model.hpp"

namespace replicoal {

struct StopCriterion {
  enum class Kind { hit_sigma, max_time, absorb, max_clock };

  Kind kind = Kind::absorb;
  double value = 0.0;

  /// First time sigma == m (gamma_m).
  static StopCriterion hit_sigma(Count m);
  /// Wall-clock horizon t.
  static StopCriterion max_time(double t);
  /// gamma_1: run until a single block remains.
  static StopCriterion absorb();
  /// Run until the integrated block count int_0^t sigma(u) du reaches s.
  static StopCriterion max_clock(double s);

  /// Target level for hit_sigma / absorb, 1 otherwise.
  Count level() const;
};

enum class StopReason { hit_sigma, max_time, absorbed, max_clock };

/// One merger of the exact chain at `time`.
struct Event {
  double time = 0.0;
  std::uint16_t survivor = 0;
  std::uint16_t victim = 0;
};

/// Coarse-grained path point (fluid step, leap boundary or thinned exact
/// snapshot). `clock` is int_0^time sigma(u) du.
struct Snapshot {
  double time = 0.0;
  double clock = 0.0;
  double sigma = 0.0;
  std::vector<double> r;
};

/// Piecewise path of the block process: an optional coarse-grained prefix
/// followed by an exact event log starting from `exact_start` at
/// `exact_t0`. Right-continuous; sigma is non-increasing.
struct Trajectory {
  std::size_t k = 0;
  std::vector<Snapshot> coarse;
  BlockState exact_start{std::vector<Count>{1}};
  double exact_t0 = 0.0;
  double exact_clock0 = 0.0;
  std::vector<Event> events;
  double end_time = 0.0;
  double end_clock = 0.0;
  StopReason reason = StopReason::absorbed;

  double initial_sigma() const;
  std::vector<double> initial_r() const;
  Count final_sigma() const { return exact_start.sigma() - static_cast<Count>(events.size()); }
  BlockState final_state() const;
  bool absorbed() const { return final_sigma() == 1; }
};

/// One stretch of a trajectory. Exact holding intervals have constant
/// sigma and r and carry the integer counts; coarse stretches interpolate
/// linearly between two snapshots.
struct Piece {
  double t0 = 0.0, t1 = 0.0;
  double clock0 = 0.0, clock1 = 0.0;
  double sigma0 = 0.0, sigma1 = 0.0;
  std::span<const double> r0, r1;
  std::span<const Count> counts;  // non-empty only for exact holding intervals

  bool exact() const { return !counts.empty(); }
};

/// Calls `visit(const Piece&)` for each stretch in time order, skipping
/// zero-length stretches. `visit` returns false to stop early.
template <typename Visitor>
void for_each_piece(const Trajectory& traj, Visitor&& visit) {
  for (std::size_t j = 1; j < traj.coarse.size(); ++j) {
    const Snapshot& a = traj.coarse[j - 1];
    const Snapshot& b = traj.coarse[j];
    if (!(b.time > a.time)) continue;
    Piece p{a.time, b.time, a.clock, b.clock, a.sigma, b.sigma, a.r, b.r, {}};
    if (!visit(static_cast<const Piece&>(p))) return;
  }
  std::vector<Count> n = traj.exact_start.counts();
  Count sigma = traj.exact_start.sigma();
  std::vector<double> r(traj.k);
  double t = traj.exact_t0;
  double clock = traj.exact_clock0;
  auto emit = [&](double t1) {
    if (!(t1 > t)) return true;
    const double s = static_cast<double>(sigma);
    for (std::size_t i = 0; i < traj.k; ++i) r[i] = static_cast<double>(n[i]) / s;
    const double c1 = clock + s * (t1 - t);
    Piece p{t, t1, clock, c1, s, s, r, r, n};
    clock = c1;
    t = t1;
    return visit(static_cast<const Piece&>(p));
  };
  for (const Event& e : traj.events) {
    if (!emit(e.time)) return;
    --n[e.victim];
    --sigma;
  }
  emit(traj.end_time);
}

/// gamma_m = first time sigma equals m; nullopt if the path never gets there.
std::optional<double> hitting_time(const Trajectory& traj, Count m);

/// r(gamma_m); nullopt if the path never reaches level m.
std::optional<std::vector<double>> simplex_at_level(const Trajectory& traj, Count m);

/// Largest-remainder rounding of sigma * r to integer counts summing to
/// sigma; ties go to the lowest type index.
BlockState round_to_state(Count sigma, std::span<const double> r);

}  // namespace replicoal

#endif  // REPLICOAL_TRAJECTORY_HPP
