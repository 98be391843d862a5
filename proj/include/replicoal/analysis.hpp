#ifndef REPLICOAL_ANALYSIS_HPP
#define REPLICOAL_ANALYSIS_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "replicoal/model.hpp"
#include "replicoal/replicator.hpp"
#include "replicoal/simulate.hpp"
#include "replicoal/trajectory.hpp"

namespace replicoal {

/// Piecewise-linear map t -> int_0^t sigma(u) du, given by its values at
/// the breakpoints. Strictly increasing since sigma >= 1.
class ClockFunction {
 public:
  ClockFunction(std::vector<double> breakpoints, std::vector<double> values);

  /// Clock at wall time t, for t in [start, end].
  double operator()(double t) const;
  /// Right inverse tau(s) = inf{t : clock(t) > s}, for s in [0, mass].
  double inverse(double s) const;

  double mass() const { return values_.back(); }
  double start_time() const { return breakpoints_.front(); }
  double end_time() const { return breakpoints_.back(); }
  std::size_t segments() const { return breakpoints_.size() - 1; }
  double slope(std::size_t segment) const;
  const std::vector<double>& breakpoints() const { return breakpoints_; }
  const std::vector<double>& values() const { return values_; }

 private:
  std::vector<double> breakpoints_;
  std::vector<double> values_;
};

ClockFunction clock(const Trajectory& traj);

/// R(t) = r(tau(t)) on a grid of clock values.
struct TimeChange {
  std::vector<double> grid;
  std::vector<double> tau;               // NaN where out of range
  std::vector<std::vector<double>> r;    // empty where out of range
  std::vector<bool> in_range;
  std::size_t out_of_range = 0;
};

/// Grid points at or beyond the clock mass are flagged, not extrapolated.
TimeChange time_change(const Trajectory& traj, std::span<const double> grid);

/// State (sigma, r) holding at wall time t (right-continuous; coarse
/// stretches are interpolated).
struct PathPoint {
  double sigma = 0.0;
  std::vector<double> r;
};
PathPoint state_at(const Trajectory& traj, double t);

/// Compensator density of y = (r, 1/sigma) at (sigma, r); k + 1 entries,
/// zero once sigma <= 1.
std::vector<double> compensator_density(const RateMatrix& rates, double sigma, std::span<const double> r);

/// alpha(t): integral of the density over [0, t ^ gamma_1]. Exact on
/// holding intervals, trapezoidal on coarse stretches.
std::vector<double> compensator(const Trajectory& traj, const RateMatrix& rates, double t);
/// Integral of the density over [t0, t1], computed directly.
std::vector<double> compensator_between(const Trajectory& traj, const RateMatrix& rates, double t0, double t1);

/// m(t) = y(t) - y(0) - alpha(t) at each wall time of `grid`.
std::vector<std::vector<double>> martingale_residual(const Trajectory& traj, const RateMatrix& rates,
                                                     std::span<const double> grid);

/// Pathwise integrals entering second-moment bounds for m, each over
/// [0, t ^ gamma_1] in wall time.
struct SecondMomentTerms {
  std::vector<double> bracket;    // predictable quadratic variation <m>(t)
  std::vector<double> literal;    // int sigma / (sigma - 1)^2 du
  std::vector<double> clock_form; // int sigma^2 / (sigma - 1)^2 du  (= int sigma/(sigma-1)^2 ds in clock units)
};
SecondMomentTerms second_moment_terms(const Trajectory& traj, const RateMatrix& rates, std::span<const double> grid);

// --- ensembles --------------------------------------------------------

struct EnsembleOptions {
  HybridOptions hybrid = {};
  double ode_step = 1e-3;
  unsigned threads = 1;
};

struct EnsembleSummary {
  std::vector<double> grid;
  bool tau_time = true;
  std::vector<std::vector<double>> mean_abs_err;  // [grid][type]
  std::vector<std::vector<double>> std_error;     // [grid][type]
  std::size_t n_runs = 0;                         // runs that entered the averages
  std::size_t n_excluded = 0;                     // runs whose clock mass fell short of the grid

  double sup_mean_abs_err(std::size_t type) const;
};

/// Clock grid (points equally spaced, excluding 0) up to the clock value at
/// which the fluid path from (sigma0, r0) reaches sigma_min.
std::vector<double> admissible_tau_grid(const RateMatrix& rates, double sigma0, const SimplexPoint& r0, double sigma_min,
                                        std::size_t points);

/// Runs n_runs hybrid simulations from (sigma0, r0), time-changes them and
/// compares R(t) with the replicator solution from r0 on the same clock grid.
EnsembleSummary ensemble_vs_ode(const RateMatrix& rates, double sigma0, const SimplexPoint& r0, std::size_t n_runs,
                                std::span<const double> grid, std::uint64_t seed, const EnsembleOptions& options = {});

struct BottleneckSummary {
  Count m = 0;
  std::vector<double> mean_abs_err;  // per type, |r_i(gamma_m) - x*_i|
  std::vector<double> std_error;
  std::size_t n_runs = 0;
};

/// Ensemble of |r_i(gamma_m) - x*_i| for each level in `levels` (all read
/// from the same runs).
std::vector<BottleneckSummary> bottleneck_stat(const RateMatrix& rates, double sigma0, const SimplexPoint& r0,
                                               std::span<const Count> levels, std::size_t n_runs, std::uint64_t seed,
                                               const EnsembleOptions& options = {});
BottleneckSummary bottleneck_stat(const RateMatrix& rates, double sigma0, const SimplexPoint& r0, Count m,
                                  std::size_t n_runs, std::uint64_t seed, const EnsembleOptions& options = {});

enum class GridClock { wall, tau };

struct MartingaleSummary {
  std::vector<double> grid;
  GridClock clock = GridClock::wall;
  std::vector<std::vector<double>> mean;       // [grid][component], k + 1 components
  std::vector<std::vector<double>> std_error;
  std::vector<double> mean_sq_norm, sq_norm_std_error;  // E |m|^2
  std::vector<double> mean_bracket;                     // E <m>
  std::vector<double> mean_literal, literal_std_error;  // E int sigma/(sigma-1)^2 du
  std::vector<double> mean_clock_form, clock_form_std_error;
  double bound_constant = 0.0;                          // 4 * max C
  std::size_t n_runs = 0;
};

/// Exact runs from n0; m is evaluated at the grid times (wall) or at
/// tau(grid) (tau).
MartingaleSummary martingale_ensemble(const RateMatrix& rates, const BlockState& n0, std::span<const double> grid,
                                      GridClock grid_clock, std::size_t n_runs, std::uint64_t seed,
                                      unsigned threads = 1);

}  // namespace replicoal

#endif  // REPLICOAL_ANALYSIS_HPP
