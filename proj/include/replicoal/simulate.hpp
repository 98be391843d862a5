#ifndef REPLICOAL_SIMULATE_HPP
#define REPLICOAL_SIMULATE_HPP

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "replicoal/model.hpp"
#include "replicoal/replicator.hpp"
#include "replicoal/trajectory.hpp"

namespace replicoal {

struct ExactOptions {
  /// Every event is logged once sigma <= record_below; above it only a
  /// snapshot every `snapshot_stride` events is kept.
  Count record_below = 10'000;
  std::size_t snapshot_stride = 64;

  static ExactOptions record_all() { return {std::numeric_limits<Count>::max(), 64}; }
};

/// Gillespie direct method. Seed and stream select an independent RNG stream.
Trajectory simulate_exact(const RateMatrix& rates, const BlockState& n0, StopCriterion stop,
                          std::uint64_t seed, std::uint64_t stream = 0, const ExactOptions& options = {});

struct TauLeapOptions {
  double eps = 0.03;
  Count sigma_floor = 10'000;
  int max_halvings = 20;
  ExactOptions exact = {};
};

/// Poisson tau-leaping above `sigma_floor`, exact simulation below it.
/// Leap boundaries become coarse snapshots of the returned trajectory.
Trajectory simulate_tau_leap(const RateMatrix& rates, const BlockState& n0, StopCriterion stop,
                             std::uint64_t seed, std::uint64_t stream = 0, const TauLeapOptions& options = {});

/// Continuum relaxation of a block state.
struct FluidState {
  double sigma = 0.0;
  SimplexPoint r = SimplexPoint::uniform(1);
};

struct FluidOptions {
  /// RK4 step in integrated-block-count units (d clock = sigma dt).
  double step = 1e-3;
  std::size_t record_every = 1;
};

struct FluidPath {
  std::vector<Snapshot> points;
  StopReason reason = StopReason::hit_sigma;
  std::vector<std::string> warnings;

  FluidState final_state() const;
};

/// Deterministic flow: d sigma/dt = -lambda(sigma r), and r follows the
/// compensator drift of the exact chain. Integrated in the clock variable
/// so that sigma(0) up to ~1e15 costs a few thousand steps per decade.
/// The `absorb` criterion is rejected (sigma only tends to 1).
FluidPath simulate_fluid(const PayoffMatrix& payoff, const FluidState& f0, StopCriterion stop,
                         const FluidOptions& options = {});
FluidPath simulate_fluid(const RateMatrix& rates, const FluidState& f0, StopCriterion stop,
                         const FluidOptions& options = {});

/// The fluid path as a trajectory made of coarse stretches only.
Trajectory fluid_trajectory(const FluidPath& path);

enum class UpperMethod { fluid, tau_leap };

struct HybridOptions {
  Count switch_sigma = 10'000;
  UpperMethod upper = UpperMethod::fluid;
  FluidOptions fluid = {};
  TauLeapOptions tau = {};
  ExactOptions exact = {};
};

/// Fluid (or tau-leap) above `switch_sigma`, exact below; the fluid state
/// is rounded to integer counts at the switch.
Trajectory simulate_hybrid(const RateMatrix& rates, const FluidState& f0, StopCriterion stop,
                           std::uint64_t seed, std::uint64_t stream = 0, const HybridOptions& options = {});
Trajectory simulate_hybrid(const RateMatrix& rates, const BlockState& n0, StopCriterion stop,
                           std::uint64_t seed, std::uint64_t stream = 0, const HybridOptions& options = {});

}  // namespace replicoal

#endif  // REPLICOAL_SIMULATE_HPP
