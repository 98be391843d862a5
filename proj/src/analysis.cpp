#include "replicoal/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "replicoal/parallel.hpp"
#include "replicoal/stats.hpp"

namespace replicoal {

// --- clock ------------------------------------------------------------

ClockFunction::ClockFunction(std::vector<double> breakpoints, std::vector<double> values)
    : breakpoints_(std::move(breakpoints)), values_(std::move(values)) {
  if (breakpoints_.empty() || breakpoints_.size() != values_.size()) {
    throw std::invalid_argument("clock needs matching, non-empty breakpoints and values");
  }
  for (std::size_t j = 1; j < breakpoints_.size(); ++j) {
    if (!(breakpoints_[j] > breakpoints_[j - 1]) || !(values_[j] > values_[j - 1])) {
      throw std::invalid_argument("clock must be strictly increasing");
    }
  }
}

double ClockFunction::slope(std::size_t segment) const {
  return (values_.at(segment + 1) - values_[segment]) / (breakpoints_[segment + 1] - breakpoints_[segment]);
}

double ClockFunction::operator()(double t) const {
  if (t < start_time() || t > end_time()) throw std::out_of_range("clock evaluated outside the trajectory");
  const auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t);
  if (it == breakpoints_.end()) return values_.back();
  const auto j = static_cast<std::size_t>(it - breakpoints_.begin()) - 1;
  return values_[j] + slope(j) * (t - breakpoints_[j]);
}

double ClockFunction::inverse(double s) const {
  if (s < values_.front() || s > mass()) throw std::out_of_range("clock value outside [0, mass]");
  const auto it = std::upper_bound(values_.begin(), values_.end(), s);
  if (it == values_.end()) return end_time();
  const auto j = static_cast<std::size_t>(it - values_.begin()) - 1;
  return breakpoints_[j] + (s - values_[j]) / slope(j);
}

ClockFunction clock(const Trajectory& traj) {
  std::vector<double> b, v;
  for_each_piece(traj, [&](const Piece& p) {
    if (b.empty()) {
      b.push_back(p.t0);
      v.push_back(p.clock0);
    }
    b.push_back(p.t1);
    v.push_back(p.clock1);
    return true;
  });
  if (b.empty()) {
    b.push_back(traj.coarse.empty() ? traj.exact_t0 : traj.coarse.front().time);
    v.push_back(traj.coarse.empty() ? traj.exact_clock0 : traj.coarse.front().clock);
  }
  return ClockFunction(std::move(b), std::move(v));
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// State at the end of the trajectory.
PathPoint final_point(const Trajectory& traj) {
  const bool ended_in_prefix = !traj.coarse.empty() && traj.events.empty() && traj.exact_t0 >= traj.end_time &&
                               traj.coarse.back().time >= traj.end_time;
  if (ended_in_prefix) return PathPoint{traj.coarse.back().sigma, traj.coarse.back().r};
  const BlockState n = traj.final_state();
  return PathPoint{static_cast<double>(n.sigma()), n.simplex()};
}

PathPoint initial_point(const Trajectory& traj) { return PathPoint{traj.initial_sigma(), traj.initial_r()}; }

PathPoint interpolate(const Piece& p, double t) {
  PathPoint out;
  if (p.exact()) {
    out.sigma = p.sigma0;
    out.r.assign(p.r0.begin(), p.r0.end());
    return out;
  }
  const double w = std::clamp((t - p.t0) / (p.t1 - p.t0), 0.0, 1.0);
  out.sigma = p.sigma0 + w * (p.sigma1 - p.sigma0);
  out.r.resize(p.r0.size());
  for (std::size_t i = 0; i < out.r.size(); ++i) out.r[i] = p.r0[i] + w * (p.r1[i] - p.r0[i]);
  return out;
}

/// Walks the trajectory once. For each query time q (sorted ascending,
/// >= from) calls at(index, state at q, integral of density over [from, q]).
/// `density(sigma, r, out)` writes `dim` values. Queries past the end see
/// the final state and the full integral.
template <typename Density, typename At>
void sweep(const Trajectory& traj, double from, std::span<const double> queries, std::size_t dim, Density&& density,
           At&& at) {
  std::vector<double> acc(dim, 0.0), partial(dim), da(dim), db(dim);
  std::size_t qi = 0;

  // Adds the integral over [a, b] within piece p to `out`.
  auto integrate = [&](const Piece& p, double a, double b, std::vector<double>& out) {
    if (!(b > a)) return;
    if (p.exact()) {
      density(p.sigma0, p.r0, std::span<double>(da));
      for (std::size_t c = 0; c < dim; ++c) out[c] += da[c] * (b - a);
      return;
    }
    const PathPoint pa = interpolate(p, a);
    const PathPoint pb = interpolate(p, b);
    density(pa.sigma, std::span<const double>(pa.r), std::span<double>(da));
    density(pb.sigma, std::span<const double>(pb.r), std::span<double>(db));
    for (std::size_t c = 0; c < dim; ++c) out[c] += 0.5 * (da[c] + db[c]) * (b - a);
  };

  bool first = true;
  for_each_piece(traj, [&](const Piece& p) {
    if (first) {
      // Queries before the first piece (e.g. exactly at the start).
      while (qi < queries.size() && queries[qi] <= p.t0) {
        at(qi, interpolate(p, p.t0), std::span<const double>(acc));
        ++qi;
      }
      first = false;
    }
    while (qi < queries.size() && queries[qi] < p.t1) {
      partial = acc;
      integrate(p, std::max(p.t0, from), queries[qi], partial);
      at(qi, interpolate(p, queries[qi]), std::span<const double>(partial));
      ++qi;
    }
    integrate(p, std::max(p.t0, from), p.t1, acc);
    return true;
  });
  if (qi < queries.size()) {
    const PathPoint last = first ? initial_point(traj) : final_point(traj);
    for (; qi < queries.size(); ++qi) at(qi, last, std::span<const double>(acc));
  }
}

void check_sorted(std::span<const double> grid) {
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] >= 0.0)) throw std::invalid_argument("grid times must be nonnegative");
    if (i > 0 && grid[i] < grid[i - 1]) throw std::invalid_argument("grid must be sorted ascending");
  }
}

void check_within(const Trajectory& traj, double t) {
  if (t > traj.end_time * (1.0 + 1e-12) && !traj.absorbed()) {
    throw std::out_of_range("time " + std::to_string(t) + " lies beyond the trajectory end " +
                            std::to_string(traj.end_time));
  }
}

/// Compensator density with reusable buffers.
class CompensatorDensity {
 public:
  explicit CompensatorDensity(const RateMatrix& rates) : rates_(rates), n_(rates.k()), lam_(rates.k()) {}

  void operator()(double sigma, std::span<const double> r, std::span<double> out) {
    const std::size_t k = rates_.k();
    if (!(sigma > 1.0)) {
      std::fill(out.begin(), out.end(), 0.0);
      return;
    }
    for (std::size_t i = 0; i < k; ++i) n_[i] = sigma * r[i];
    const double total = removal_rates<double>(rates_, n_, lam_);
    // Victim i moves r by (r - e_i)/(sigma - 1) and 1/sigma by 1/(sigma(sigma - 1)).
    for (std::size_t i = 0; i < k; ++i) out[i] = (r[i] * total - lam_[i]) / (sigma - 1.0);
    out[k] = total / (sigma * (sigma - 1.0));
  }

  /// sum_i lambda_i |jump_i|^2.
  double bracket(double sigma, std::span<const double> r) {
    const std::size_t k = rates_.k();
    if (!(sigma > 1.0)) return 0.0;
    for (std::size_t i = 0; i < k; ++i) n_[i] = sigma * r[i];
    removal_rates<double>(rates_, n_, lam_);
    double rr = 0.0;
    for (std::size_t j = 0; j < k; ++j) rr += r[j] * r[j];
    const double s1 = sigma - 1.0;
    const double inv_jump = 1.0 / (sigma * s1);
    double out = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      // |r - e_i|^2 = |r|^2 - 2 r_i + 1
      const double dr2 = (rr - 2.0 * r[i] + 1.0) / (s1 * s1);
      out += lam_[i] * (dr2 + inv_jump * inv_jump);
    }
    return out;
  }

 private:
  const RateMatrix& rates_;
  std::vector<double> n_, lam_;
};

std::vector<double> y_of(const PathPoint& p) {
  std::vector<double> y = p.r;
  y.push_back(1.0 / p.sigma);
  return y;
}

}  // namespace

PathPoint state_at(const Trajectory& traj, double t) {
  check_within(traj, t);
  PathPoint out;
  const double q[1] = {t};
  sweep(traj, 0.0, q, 0, [](double, std::span<const double>, std::span<double>) {},
        [&](std::size_t, const PathPoint& p, std::span<const double>) { out = p; });
  return out;
}

TimeChange time_change(const Trajectory& traj, std::span<const double> grid) {
  check_sorted(grid);
  const ClockFunction c = clock(traj);
  TimeChange out;
  out.grid.assign(grid.begin(), grid.end());
  out.tau.assign(grid.size(), kNaN);
  out.r.assign(grid.size(), {});
  out.in_range.assign(grid.size(), false);
  std::vector<double> taus;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    if (grid[g] < c.mass()) {
      out.in_range[g] = true;
      out.tau[g] = c.inverse(grid[g] + c.values().front());
      taus.push_back(out.tau[g]);
    } else {
      ++out.out_of_range;
    }
  }
  // In-range points form a prefix of the sorted grid.
  sweep(traj, 0.0, taus, 0, [](double, std::span<const double>, std::span<double>) {},
        [&](std::size_t i, const PathPoint& p, std::span<const double>) { out.r[i] = p.r; });
  return out;
}

std::vector<double> compensator_density(const RateMatrix& rates, double sigma, std::span<const double> r) {
  if (r.size() != rates.k()) throw std::invalid_argument("dimension mismatch between state and rate matrix");
  std::vector<double> out(rates.k() + 1);
  CompensatorDensity d(rates);
  d(sigma, r, out);
  return out;
}

std::vector<double> compensator_between(const Trajectory& traj, const RateMatrix& rates, double t0, double t1) {
  if (traj.k != rates.k()) throw std::invalid_argument("dimension mismatch between trajectory and rate matrix");
  if (!(t0 >= 0.0) || t1 < t0) throw std::invalid_argument("compensator needs 0 <= t0 <= t1");
  check_within(traj, t1);
  CompensatorDensity d(rates);
  std::vector<double> out(rates.k() + 1, 0.0);
  const double q[1] = {t1};
  sweep(traj, t0, q, rates.k() + 1, d,
        [&](std::size_t, const PathPoint&, std::span<const double> v) { out.assign(v.begin(), v.end()); });
  return out;
}

std::vector<double> compensator(const Trajectory& traj, const RateMatrix& rates, double t) {
  return compensator_between(traj, rates, 0.0, t);
}

std::vector<std::vector<double>> martingale_residual(const Trajectory& traj, const RateMatrix& rates,
                                                     std::span<const double> grid) {
  if (traj.k != rates.k()) throw std::invalid_argument("dimension mismatch between trajectory and rate matrix");
  check_sorted(grid);
  if (!grid.empty()) check_within(traj, grid.back());
  const std::vector<double> y0 = y_of(initial_point(traj));
  CompensatorDensity d(rates);
  std::vector<std::vector<double>> out(grid.size());
  sweep(traj, 0.0, grid, rates.k() + 1, d, [&](std::size_t i, const PathPoint& p, std::span<const double> alpha) {
    std::vector<double> m = y_of(p);
    for (std::size_t c = 0; c < m.size(); ++c) m[c] -= y0[c] + alpha[c];
    out[i] = std::move(m);
  });
  return out;
}

SecondMomentTerms second_moment_terms(const Trajectory& traj, const RateMatrix& rates, std::span<const double> grid) {
  if (traj.k != rates.k()) throw std::invalid_argument("dimension mismatch between trajectory and rate matrix");
  check_sorted(grid);
  if (!grid.empty()) check_within(traj, grid.back());
  CompensatorDensity d(rates);
  auto density = [&](double sigma, std::span<const double> r, std::span<double> out) {
    if (!(sigma > 1.0)) {
      std::fill(out.begin(), out.end(), 0.0);
      return;
    }
    const double s1 = sigma - 1.0;
    out[0] = d.bracket(sigma, r);
    out[1] = sigma / (s1 * s1);
    out[2] = sigma * sigma / (s1 * s1);
  };
  SecondMomentTerms terms;
  terms.bracket.resize(grid.size());
  terms.literal.resize(grid.size());
  terms.clock_form.resize(grid.size());
  sweep(traj, 0.0, grid, 3, density, [&](std::size_t i, const PathPoint&, std::span<const double> v) {
    terms.bracket[i] = v[0];
    terms.literal[i] = v[1];
    terms.clock_form[i] = v[2];
  });
  return terms;
}

// --- ensembles ----------------------------------------------------------

double EnsembleSummary::sup_mean_abs_err(std::size_t type) const {
  double s = 0.0;
  for (const auto& row : mean_abs_err) s = std::max(s, row.at(type));
  return s;
}

std::vector<double> admissible_tau_grid(const RateMatrix& rates, double sigma0, const SimplexPoint& r0, double sigma_min,
                                        std::size_t points) {
  if (points == 0) throw std::invalid_argument("grid needs at least one point");
  if (!(sigma_min >= 2.0) || !(sigma0 > sigma_min)) {
    throw std::invalid_argument("admissible grid needs sigma0 > sigma_min >= 2");
  }
  FluidOptions fo;
  fo.record_every = 1000;
  const FluidPath path = simulate_fluid(rates, FluidState{sigma0, r0},
                                        StopCriterion{StopCriterion::Kind::hit_sigma, sigma_min}, fo);
  const double s_max = path.points.back().clock;
  std::vector<double> grid(points);
  for (std::size_t j = 0; j < points; ++j) grid[j] = s_max * static_cast<double>(j + 1) / static_cast<double>(points);
  return grid;
}

EnsembleSummary ensemble_vs_ode(const RateMatrix& rates, double sigma0, const SimplexPoint& r0, std::size_t n_runs,
                                std::span<const double> grid, std::uint64_t seed, const EnsembleOptions& options) {
  const std::size_t k = rates.k();
  if (r0.size() != k) throw std::invalid_argument("r0 dimension does not match rate matrix");
  if (!r0.interior()) throw std::invalid_argument("r0 must lie in the open simplex");
  if (n_runs == 0) throw std::invalid_argument("n_runs must be positive");
  if (grid.empty()) throw std::invalid_argument("grid must not be empty");
  check_sorted(grid);

  const std::vector<SimplexPoint> ode = integrate_on_grid(payoff_from_rates(rates), r0, grid, options.ode_step);
  // Run slightly past the last grid value so that it lies strictly inside the clock mass.
  const StopCriterion stop = StopCriterion::max_clock(grid.back() + 1e-9 * std::max(1.0, grid.back()));

  struct RunResult {
    bool used = false;
    std::vector<double> err;  // [grid * k]
  };
  const auto runs = run_indexed(n_runs, options.threads, [&](std::size_t run) {
    const Trajectory traj = simulate_hybrid(rates, FluidState{sigma0, r0}, stop, seed, run, options.hybrid);
    const TimeChange tc = time_change(traj, grid);
    RunResult res;
    if (tc.out_of_range > 0) return res;
    res.used = true;
    res.err.resize(grid.size() * k);
    for (std::size_t g = 0; g < grid.size(); ++g) {
      for (std::size_t i = 0; i < k; ++i) res.err[g * k + i] = std::abs(tc.r[g][i] - ode[g][i]);
    }
    return res;
  });

  std::vector<Moments> mom(grid.size() * k);
  EnsembleSummary out;
  out.grid.assign(grid.begin(), grid.end());
  for (const auto& res : runs) {
    if (!res.used) {
      ++out.n_excluded;
      continue;
    }
    ++out.n_runs;
    for (std::size_t c = 0; c < mom.size(); ++c) mom[c].add(res.err[c]);
  }
  out.mean_abs_err.assign(grid.size(), std::vector<double>(k));
  out.std_error.assign(grid.size(), std::vector<double>(k));
  for (std::size_t g = 0; g < grid.size(); ++g) {
    for (std::size_t i = 0; i < k; ++i) {
      out.mean_abs_err[g][i] = mom[g * k + i].mean;
      out.std_error[g][i] = mom[g * k + i].std_error();
    }
  }
  return out;
}

std::vector<BottleneckSummary> bottleneck_stat(const RateMatrix& rates, double sigma0, const SimplexPoint& r0,
                                               std::span<const Count> levels, std::size_t n_runs, std::uint64_t seed,
                                               const EnsembleOptions& options) {
  const std::size_t k = rates.k();
  if (r0.size() != k) throw std::invalid_argument("r0 dimension does not match rate matrix");
  if (n_runs == 0) throw std::invalid_argument("n_runs must be positive");
  if (levels.empty()) throw std::invalid_argument("no levels requested");
  for (Count m : levels) {
    if (m < 2) throw std::invalid_argument("bottleneck level must be >= 2");
    if (static_cast<double>(m) > sigma0) throw std::invalid_argument("bottleneck level exceeds sigma0");
  }
  const EssResult ess = ess_fixed_point(payoff_from_rates(rates));
  const Count lowest = *std::min_element(levels.begin(), levels.end());
  HybridOptions hybrid = options.hybrid;
  // gamma_m readouts below the switch need the exact event log.
  hybrid.exact.record_below = std::max(hybrid.exact.record_below, hybrid.switch_sigma);

  const auto runs = run_indexed(n_runs, options.threads, [&](std::size_t run) {
    const Trajectory traj =
        simulate_hybrid(rates, FluidState{sigma0, r0}, StopCriterion::hit_sigma(lowest), seed, run, hybrid);
    std::vector<double> err(levels.size() * k);
    for (std::size_t l = 0; l < levels.size(); ++l) {
      const auto r = simplex_at_level(traj, levels[l]);
      if (!r) throw NumericalError("trajectory did not reach level " + std::to_string(levels[l]));
      for (std::size_t i = 0; i < k; ++i) err[l * k + i] = std::abs((*r)[i] - ess.x_star[i]);
    }
    return err;
  });

  std::vector<BottleneckSummary> out(levels.size());
  for (std::size_t l = 0; l < levels.size(); ++l) {
    std::vector<Moments> mom(k);
    for (const auto& err : runs) {
      for (std::size_t i = 0; i < k; ++i) mom[i].add(err[l * k + i]);
    }
    out[l].m = levels[l];
    out[l].n_runs = n_runs;
    for (std::size_t i = 0; i < k; ++i) {
      out[l].mean_abs_err.push_back(mom[i].mean);
      out[l].std_error.push_back(mom[i].std_error());
    }
  }
  return out;
}

BottleneckSummary bottleneck_stat(const RateMatrix& rates, double sigma0, const SimplexPoint& r0, Count m,
                                  std::size_t n_runs, std::uint64_t seed, const EnsembleOptions& options) {
  const Count levels[1] = {m};
  return bottleneck_stat(rates, sigma0, r0, levels, n_runs, seed, options).front();
}

MartingaleSummary martingale_ensemble(const RateMatrix& rates, const BlockState& n0, std::span<const double> grid,
                                      GridClock grid_clock, std::size_t n_runs, std::uint64_t seed, unsigned threads) {
  const std::size_t k = rates.k();
  const std::size_t dim = k + 1;
  if (n_runs == 0) throw std::invalid_argument("n_runs must be positive");
  if (grid.empty()) throw std::invalid_argument("grid must not be empty");
  check_sorted(grid);
  const StopCriterion stop =
      grid_clock == GridClock::wall ? StopCriterion::max_time(grid.back()) : StopCriterion::max_clock(grid.back());

  struct RunResult {
    std::vector<double> m;        // [grid * dim]
    std::vector<double> sq, bracket, literal, clock_form;
  };
  const auto runs = run_indexed(n_runs, threads, [&](std::size_t run) {
    const Trajectory traj = simulate_exact(rates, n0, stop, seed, run, ExactOptions::record_all());
    std::vector<double> times(grid.begin(), grid.end());
    if (grid_clock == GridClock::tau) {
      const ClockFunction c = clock(traj);
      for (double& t : times) t = c.inverse(std::min(t, c.mass()));
    }
    const auto m = martingale_residual(traj, rates, times);
    const SecondMomentTerms terms = second_moment_terms(traj, rates, times);
    RunResult res;
    res.m.resize(grid.size() * dim);
    res.sq.resize(grid.size());
    for (std::size_t g = 0; g < grid.size(); ++g) {
      double sq = 0.0;
      for (std::size_t c = 0; c < dim; ++c) {
        res.m[g * dim + c] = m[g][c];
        sq += m[g][c] * m[g][c];
      }
      res.sq[g] = sq;
    }
    res.bracket = terms.bracket;
    res.literal = terms.literal;
    res.clock_form = terms.clock_form;
    return res;
  });

  MartingaleSummary out;
  out.grid.assign(grid.begin(), grid.end());
  out.clock = grid_clock;
  out.n_runs = n_runs;
  out.bound_constant = 4.0 * rates.max_entry();
  std::vector<Moments> mm(grid.size() * dim), sq(grid.size()), br(grid.size()), lit(grid.size()), cf(grid.size());
  for (const auto& res : runs) {
    for (std::size_t c = 0; c < mm.size(); ++c) mm[c].add(res.m[c]);
    for (std::size_t g = 0; g < grid.size(); ++g) {
      sq[g].add(res.sq[g]);
      br[g].add(res.bracket[g]);
      lit[g].add(res.literal[g]);
      cf[g].add(res.clock_form[g]);
    }
  }
  out.mean.assign(grid.size(), std::vector<double>(dim));
  out.std_error.assign(grid.size(), std::vector<double>(dim));
  for (std::size_t g = 0; g < grid.size(); ++g) {
    for (std::size_t c = 0; c < dim; ++c) {
      out.mean[g][c] = mm[g * dim + c].mean;
      out.std_error[g][c] = mm[g * dim + c].std_error();
    }
    out.mean_sq_norm.push_back(sq[g].mean);
    out.sq_norm_std_error.push_back(sq[g].std_error());
    out.mean_bracket.push_back(br[g].mean);
    out.mean_literal.push_back(lit[g].mean);
    out.literal_std_error.push_back(lit[g].std_error());
    out.mean_clock_form.push_back(cf[g].mean);
    out.clock_form_std_error.push_back(cf[g].std_error());
  }
  return out;
}

}  // namespace replicoal
