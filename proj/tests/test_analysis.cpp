#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "replicoal/analysis.hpp"
#include "replicoal/model.hpp"
#include "replicoal/replicator.hpp"
#include "replicoal/simulate.hpp"

using namespace replicoal;

namespace {

const RateMatrix kCirculant = RateMatrix::from_rows({{2, 0.02, 0.1}, {0.1, 2, 0.02}, {0.02, 0.1, 2}});

// Exact trajectory built by hand from a start state and (time, survivor, victim) events.
Trajectory hand_path(std::vector<Count> n0, std::vector<Event> events, double end_time, StopReason reason) {
  Trajectory t;
  t.k = n0.size();
  t.exact_start = BlockState(n0);
  t.events = std::move(events);
  t.end_time = end_time;
  Count sigma = t.exact_start.sigma();
  double last = 0.0;
  for (const Event& e : t.events) {
    t.end_clock += static_cast<double>(sigma) * (e.time - last);
    last = e.time;
    --sigma;
  }
  t.end_clock += static_cast<double>(sigma) * (end_time - last);
  t.reason = reason;
  return t;
}

// Generator oracle: sum over channels of rate * (y(after) - y(before)),
// with y = (n / sigma, 1 / sigma).
std::vector<double> generator_drift(const RateMatrix& c, const BlockState& n) {
  const std::size_t k = n.k();
  std::vector<double> out(k + 1, 0.0);
  const double s = static_cast<double>(n.sigma());
  for (const MergeChannel& ch : channels(k)) {
    const double rate = channel_rate(c, n, ch);
    if (rate == 0.0) continue;
    const BlockState m = apply_channel(n, ch);
    const double sm = static_cast<double>(m.sigma());
    for (std::size_t i = 0; i < k; ++i) out[i] += rate * (static_cast<double>(m[i]) / sm - static_cast<double>(n[i]) / s);
    out[k] += rate * (1.0 / sm - 1.0 / s);
  }
  return out;
}

// Density in payoff form: (sigma/(sigma-1)) sum_i (sigma (r - e_i); 1) r_i [diag(A)/sigma - A r]_i.
std::vector<double> payoff_form_density(const PayoffMatrix& a, double sigma, const std::vector<double>& r) {
  const std::size_t k = r.size();
  std::vector<double> out(k + 1, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    double ar = 0.0;
    for (std::size_t j = 0; j < k; ++j) ar += a(i, j) * r[j];
    const double w = sigma / (sigma - 1.0) * r[i] * (a(i, i) / sigma - ar);
    for (std::size_t j = 0; j < k; ++j) out[j] += w * sigma * (r[j] - (i == j ? 1.0 : 0.0));
    out[k] += w;
  }
  return out;
}

}  // namespace

TEST_CASE("clock of a constant-sigma stretch is a line") {
  const Trajectory t = hand_path({4, 3}, {}, 2.0, StopReason::max_time);
  const ClockFunction c = clock(t);
  CHECK(c(0.0) == 0.0);
  CHECK(c(0.5) == doctest::Approx(3.5));
  CHECK(c.mass() == doctest::Approx(14.0));
  CHECK(c.segments() == 1);
  CHECK(c.slope(0) == doctest::Approx(7.0));

  const std::vector<double> grid{0.0, 1.4, 7.0};
  const TimeChange tc = time_change(t, grid);
  CHECK(tc.tau[1] == doctest::Approx(0.2));
  for (std::size_t g = 0; g < grid.size(); ++g) {
    CHECK(tc.in_range[g]);
    CHECK(tc.r[g][0] == doctest::Approx(4.0 / 7.0));
  }
}

TEST_CASE("two-segment clock inversion") {
  // sigma = 3 on [0, 0.5), then 2: clock(1) = 2.5, tau(1) = 1/3.
  const Trajectory t = hand_path({3}, {{0.5, 0, 0}}, 2.0, StopReason::max_time);
  const ClockFunction c = clock(t);
  CHECK(c(1.0) == doctest::Approx(2.5));
  CHECK(c.inverse(1.0) == doctest::Approx(1.0 / 3.0));
  CHECK(c.inverse(1.5) == doctest::Approx(0.5));
  CHECK(c.inverse(2.5) == doctest::Approx(1.0));
  const double one[1] = {1.0};
  CHECK(time_change(t, one).tau[0] == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("grid values past the clock mass are flagged") {
  const Trajectory t = hand_path({3}, {{0.5, 0, 0}}, 2.0, StopReason::max_time);
  const std::vector<double> grid{1.0, 4.5, 9.0};
  const TimeChange tc = time_change(t, grid);
  CHECK(tc.in_range[0]);
  CHECK_FALSE(tc.in_range[1]);
  CHECK_FALSE(tc.in_range[2]);
  CHECK(tc.out_of_range == 2);
  CHECK(std::isnan(tc.tau[2]));
  CHECK(tc.r[2].empty());
}

TEST_CASE("clock and its inverse agree on simulated paths") {
  const Trajectory t = simulate_exact(kCirculant, BlockState({400, 300, 300}), StopCriterion::absorb(), 2, 0,
                                      ExactOptions::record_all());
  const ClockFunction c = clock(t);
  CHECK(c(0.0) == 0.0);
  CHECK(c.mass() == doctest::Approx(t.end_clock).epsilon(1e-12));
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    const double time = u(gen) * t.end_time;
    CHECK(std::abs(c.inverse(c(time)) - time) < 1e-12 * std::max(1.0, t.end_time));
    const double s = u(gen) * c.mass();
    CHECK(std::abs(c(c.inverse(s)) - s) < 1e-12 * c.mass());
  }
}

TEST_CASE("time change at zero is the start frequency") {
  const Trajectory t = simulate_exact(kCirculant, BlockState({50, 30, 20}), StopCriterion::absorb(), 5);
  const double zero[1] = {0.0};
  const TimeChange tc = time_change(t, zero);
  CHECK(tc.r[0] == std::vector<double>{0.5, 0.3, 0.2});
}

TEST_CASE("state lookup is right-continuous") {
  const Trajectory t = hand_path({2, 1}, {{0.5, 0, 1}}, 1.0, StopReason::max_time);
  CHECK(state_at(t, 0.49).sigma == 3.0);
  const PathPoint at = state_at(t, 0.5);
  CHECK(at.sigma == 2.0);
  CHECK(at.r == std::vector<double>{1.0, 0.0});
}

TEST_CASE("compensator density equals the generator drift") {
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> u(0.1, 2.0);
  std::uniform_int_distribution<Count> cnt(0, 40);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = 1 + trial % 4;
    std::vector<std::vector<double>> rows(k, std::vector<double>(k));
    for (auto& row : rows)
      for (auto& x : row) x = u(gen);
    const RateMatrix c = RateMatrix::from_rows(rows);
    std::vector<Count> n(k);
    for (auto& v : n) v = cnt(gen);
    n[0] += 2;
    const BlockState state(n);
    const auto r = state.simplex();
    const auto got = compensator_density(c, static_cast<double>(state.sigma()), r);
    const auto oracle = generator_drift(c, state);
    const auto a_form = payoff_form_density(payoff_from_rates(c), static_cast<double>(state.sigma()), r);
    for (std::size_t i = 0; i <= k; ++i) {
      const double scale = std::max(1.0, std::abs(oracle[i]));
      CHECK(std::abs(got[i] - oracle[i]) < 1e-10 * scale);
      CHECK(std::abs(a_form[i] - oracle[i]) < 1e-10 * scale);
    }
  }
  CHECK(compensator_density(kCirculant, 1.0, std::vector<double>{1.0, 0.0, 0.0}) == std::vector<double>(4, 0.0));
}

TEST_CASE("single-segment compensator by hand") {
  // n = (2, 1), C all ones. Rate 3 to (1, 1) and rate 2 to (2, 0):
  // drift = 3 (-1/6, 1/6, 1/6) + 2 (1/3, -1/3, 1/6) = (1/6, -1/6, 5/6).
  const RateMatrix c = RateMatrix::from_rows({{1, 1}, {1, 1}});
  const double h = 0.37;
  const Trajectory t = hand_path({2, 1}, {}, h, StopReason::max_time);
  const auto alpha = compensator(t, c, h);
  CHECK(alpha[0] == doctest::Approx(h / 6.0));
  CHECK(alpha[1] == doctest::Approx(-h / 6.0));
  CHECK(alpha[2] == doctest::Approx(5.0 * h / 6.0));
  CHECK(compensator(t, c, 0.0) == std::vector<double>(3, 0.0));
}

TEST_CASE("compensator stops at absorption") {
  const RateMatrix c = RateMatrix::from_rows({{1.0}});
  // sigma 2 on [0, 1), absorbed at 1; the integral stops at gamma_1.
  const Trajectory t = hand_path({2}, {{1.0, 0, 0}}, 1.0, StopReason::absorbed);
  const auto a1 = compensator(t, c, 1.0);
  const auto a5 = compensator(t, c, 5.0);
  CHECK(a1[1] == doctest::Approx(0.5));  // lambda = 1, jump in 1/sigma = 1/2
  CHECK(a5 == a1);
}

TEST_CASE("compensator is additive over adjacent intervals") {
  HybridOptions opts;
  opts.switch_sigma = 2'000;
  for (std::uint64_t run = 0; run < 5; ++run) {
    const Trajectory t = simulate_hybrid(kCirculant, FluidState{1e6, SimplexPoint({0.6, 0.3, 0.1})},
                                         StopCriterion::hit_sigma(20), 4, run, opts);
    const double t_end = t.end_time;
    for (double f : {0.001, 0.2, 0.7}) {
      const double mid = f * t_end;
      const auto whole = compensator(t, kCirculant, t_end);
      const auto left = compensator(t, kCirculant, mid);
      const auto right = compensator_between(t, kCirculant, mid, t_end);
      for (std::size_t i = 0; i < whole.size(); ++i) {
        CHECK(std::abs(left[i] + right[i] - whole[i]) < 1e-12 * std::max(1.0, std::abs(whole[i])));
      }
    }
  }
}

TEST_CASE("martingale residual vanishes at zero and along the fluid path") {
  const Trajectory ex = simulate_exact(kCirculant, BlockState({30, 20, 10}), StopCriterion::absorb(), 1);
  const double zero[1] = {0.0};
  const auto at_zero = martingale_residual(ex, kCirculant, zero);
  for (double v : at_zero[0]) CHECK(v == 0.0);

  const FluidPath path = simulate_fluid(kCirculant, FluidState{1e6, SimplexPoint({0.7, 0.2, 0.1})},
                                        StopCriterion::hit_sigma(100));
  const Trajectory fl = fluid_trajectory(path);
  std::vector<double> grid;
  for (int j = 1; j <= 20; ++j) grid.push_back(fl.end_time * j / 20.0);
  double worst = 0.0;
  for (const auto& m : martingale_residual(fl, kCirculant, grid))
    for (std::size_t i = 0; i < 3; ++i) worst = std::max(worst, std::abs(m[i]));
  CHECK(worst < 1e-6);
}

TEST_CASE("martingale mean is zero and its variance matches the bracket") {
  const std::vector<double> grid{0.002, 0.005, 0.01, 0.05, 0.2};
  const MartingaleSummary s = martingale_ensemble(kCirculant, BlockState({120, 50, 30}), grid, GridClock::wall,
                                                  4'000, 17, 1);
  CHECK(s.n_runs == 4'000);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    for (std::size_t c = 0; c < 4; ++c) CHECK(std::abs(s.mean[g][c]) < 4 * s.std_error[g][c] + 1e-15);
    // E |m|^2 = E <m>; the bracket is computed from the same density.
    CHECK(std::abs(s.mean_sq_norm[g] - s.mean_bracket[g]) < 4 * s.sq_norm_std_error[g]);
  }
}

TEST_CASE("second-moment integrals are ordered and start at zero") {
  const Trajectory t = simulate_exact(kCirculant, BlockState({60, 30, 10}), StopCriterion::absorb(), 3, 0,
                                      ExactOptions::record_all());
  const std::vector<double> grid{0.0, 0.01, 0.1, 1.0};
  const auto terms = second_moment_terms(t, kCirculant, grid);
  CHECK(terms.bracket[0] == 0.0);
  CHECK(terms.literal[0] == 0.0);
  for (std::size_t g = 1; g < grid.size(); ++g) {
    CHECK(terms.bracket[g] >= terms.bracket[g - 1]);
    CHECK(terms.literal[g] > terms.literal[g - 1]);
    CHECK(terms.clock_form[g] >= terms.literal[g]);
  }
}

TEST_CASE("ensemble statistic at the fixed point is small") {
  const SimplexPoint xs = ess_fixed_point(payoff_from_rates(kCirculant)).x_star;
  const auto grid = admissible_tau_grid(kCirculant, 1e5, xs, 1e3, 8);
  const EnsembleSummary s = ensemble_vs_ode(kCirculant, 1e5, xs, 50, grid, 3);
  CHECK(s.n_runs == 50);
  CHECK(s.n_excluded == 0);
  for (std::size_t i = 0; i < 3; ++i) CHECK(s.sup_mean_abs_err(i) < 0.02);
}

TEST_CASE("ensemble statistic on a tiny system is computed but not small") {
  const SimplexPoint r0({0.6, 0.3, 0.1});
  const auto grid = admissible_tau_grid(kCirculant, 100, r0, 10, 5);
  const EnsembleSummary s = ensemble_vs_ode(kCirculant, 100, r0, 1, grid, 8);
  CHECK(s.n_runs + s.n_excluded == 1);
  if (s.n_runs == 1) {
    double sup = 0.0;
    for (std::size_t i = 0; i < 3; ++i) sup = std::max(sup, s.sup_mean_abs_err(i));
    CHECK(std::isfinite(sup));
    CHECK(sup > 1e-3);
    CHECK(sup < 1.0);
  }
}

TEST_CASE("admissible grid ends where the fluid path reaches sigma_min") {
  const SimplexPoint r0({0.6, 0.3, 0.1});
  const auto grid = admissible_tau_grid(kCirculant, 1e6, r0, 1e3, 10);
  REQUIRE(grid.size() == 10);
  const FluidPath path = simulate_fluid(kCirculant, FluidState{1e6, r0}, StopCriterion::hit_sigma(1'000));
  CHECK(grid.back() == doctest::Approx(path.points.back().clock).epsilon(1e-9));
  CHECK(grid.front() == doctest::Approx(grid.back() / 10.0));
}

TEST_CASE("bottleneck statistic at the start level is the start distance") {
  const SimplexPoint r0({0.5, 0.3, 0.2});
  const SimplexPoint xs = ess_fixed_point(payoff_from_rates(kCirculant)).x_star;
  const BottleneckSummary b = bottleneck_stat(kCirculant, 1'000, r0, 1'000, 5, 1);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(b.mean_abs_err[i] == doctest::Approx(std::abs(r0[i] - xs[i])).epsilon(1e-12));
    CHECK(b.std_error[i] == doctest::Approx(0.0));
  }
}

TEST_CASE("bottleneck statistic is smallest when starting at x*") {
  const SimplexPoint xs = ess_fixed_point(payoff_from_rates(kCirculant)).x_star;
  const SimplexPoint edge({0.98, 0.01, 0.01});
  const BottleneckSummary at = bottleneck_stat(kCirculant, 1e5, xs, 1'000, 200, 6);
  const BottleneckSummary off = bottleneck_stat(kCirculant, 1e5, edge, 1'000, 200, 6);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(at.mean_abs_err[i] < off.mean_abs_err[i] + 2 * std::hypot(at.std_error[i], off.std_error[i]));
  }
}
