#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "replicoal/model.hpp"
#include "replicoal/replicator.hpp"
#include "replicoal/simulate.hpp"
#include "replicoal/stats.hpp"
#include "replicoal/trajectory.hpp"

using namespace replicoal;

namespace {

const RateMatrix kCirculant = RateMatrix::from_rows({{2, 0.02, 0.1}, {0.1, 2, 0.02}, {0.02, 0.1, 2}});

bool same_events(const Trajectory& a, const Trajectory& b) {
  if (a.events.size() != b.events.size() || a.end_time != b.end_time) return false;
  for (std::size_t i = 0; i < a.events.size(); ++i) {
    if (a.events[i].time != b.events[i].time || a.events[i].survivor != b.events[i].survivor ||
        a.events[i].victim != b.events[i].victim)
      return false;
  }
  return true;
}

// Two-sample Kolmogorov-Smirnov statistic.
double ks_distance(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
  }
  return d;
}

}  // namespace

TEST_CASE("a single block is already absorbed") {
  const RateMatrix c = RateMatrix::from_rows({{1, 1}, {1, 1}});
  const Trajectory t = simulate_exact(c, BlockState({0, 1}), StopCriterion::absorb(), 1);
  CHECK(t.events.empty());
  CHECK(t.end_time == 0.0);
  CHECK(t.absorbed());
  CHECK(hitting_time(t, 1) == 0.0);
}

TEST_CASE("exact trajectories are skip-free and respect the rate envelopes") {
  const RateMatrix c = RateMatrix::from_rows({{1.5, 0.4, 0.2}, {0.3, 0.8, 1.1}, {0.9, 0.2, 2.0}});
  for (std::uint64_t run = 0; run < 20; ++run) {
    const Trajectory t = simulate_exact(c, BlockState({40, 25, 35}), StopCriterion::absorb(), 5, run,
                                        ExactOptions::record_all());
    REQUIRE(t.events.size() == 99);
    std::vector<Count> n = t.exact_start.counts();
    double prev = 0.0;
    for (const Event& e : t.events) {
      CHECK(e.time > prev);
      prev = e.time;
      const BlockState state(n);
      const double lambda = total_rate(state, c);
      CHECK(lambda <= kingman_upper_envelope(c, state.sigma()) * (1 + 1e-12));
      CHECK(lambda >= kingman_lower_envelope(c, state.sigma()) - 1e-9);
      CHECK(channel_rate(c, state, {e.survivor, e.victim}) > 0.0);
      const Count before = state.sigma();
      n = apply_channel(state, {e.survivor, e.victim}).counts();
      CHECK(BlockState(n).sigma() == before - 1);
    }
    CHECK(t.final_sigma() == 1);
  }
}

TEST_CASE("next-state law from (2, 1)") {
  // Channels: (1,1) rate 1 and (2,1) rate 2 lead to (1,1); (1,2) rate 2
  // leads to (2,0). Total 5.
  const RateMatrix c = RateMatrix::from_rows({{1, 1}, {1, 1}});
  const std::size_t runs = 100'000;
  std::size_t to_11 = 0, to_20 = 0;
  for (std::size_t run = 0; run < runs; ++run) {
    const Trajectory t = simulate_exact(c, BlockState({2, 1}), StopCriterion::hit_sigma(2), 42, run);
    const BlockState s = t.final_state();
    if (s == BlockState({1, 1})) ++to_11;
    if (s == BlockState({2, 0})) ++to_20;
  }
  CHECK(to_11 + to_20 == runs);
  const double p = static_cast<double>(to_11) / runs;
  const double se = std::sqrt(0.6 * 0.4 / runs);
  CHECK(std::abs(p - 0.6) < 4 * se);
}

TEST_CASE("single-type absorption time matches the Kingman sum") {
  const double c = 1.5;
  const Count n0 = 20;
  double expected = 0.0;
  for (Count j = 2; j <= n0; ++j) expected += 2.0 / (c * j * (j - 1));
  Moments m;
  for (std::uint64_t run = 0; run < 10'000; ++run) {
    m.add(simulate_exact(RateMatrix::from_rows({{c}}), BlockState({n0}), StopCriterion::absorb(), 9, run).end_time);
  }
  CHECK(std::abs(m.mean - expected) < 3 * m.std_error());
}

TEST_CASE("hitting times") {
  const Trajectory t = simulate_exact(kCirculant, BlockState({10, 10, 10}), StopCriterion::absorb(), 3);
  CHECK(hitting_time(t, 30) == 0.0);
  CHECK_FALSE(hitting_time(t, 31).has_value());
  CHECK(hitting_time(t, 29) == t.events.front().time);
  CHECK(hitting_time(t, 1) == t.events.back().time);
  const auto r = simplex_at_level(t, 30);
  REQUIRE(r.has_value());
  for (double v : *r) CHECK(v == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("stop criteria") {
  const BlockState n0({300, 200, 100});
  const Trajectory hit = simulate_exact(kCirculant, n0, StopCriterion::hit_sigma(50), 1);
  CHECK(hit.final_sigma() == 50);
  CHECK(hit.reason == StopReason::hit_sigma);
  CHECK(hit.end_time == hit.events.back().time);

  const Trajectory capped = simulate_exact(kCirculant, n0, StopCriterion::max_time(0.01), 1);
  CHECK(capped.reason == StopReason::max_time);
  CHECK(capped.end_time == 0.01);
  CHECK(capped.events.back().time <= 0.01);
  // Same stream: the capped run is a prefix of the full one.
  const Trajectory full = simulate_exact(kCirculant, n0, StopCriterion::absorb(), 1);
  for (std::size_t i = 0; i < capped.events.size(); ++i) CHECK(capped.events[i].time == full.events[i].time);

  const Trajectory clocked = simulate_exact(kCirculant, n0, StopCriterion::max_clock(2.0), 1);
  CHECK(clocked.reason == StopReason::max_clock);
  CHECK(clocked.end_clock == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("runs are reproducible and streams differ") {
  const BlockState n0({500, 300, 200});
  const Trajectory a = simulate_exact(kCirculant, n0, StopCriterion::absorb(), 77, 4);
  const Trajectory b = simulate_exact(kCirculant, n0, StopCriterion::absorb(), 77, 4);
  const Trajectory c = simulate_exact(kCirculant, n0, StopCriterion::absorb(), 77, 5);
  CHECK(same_events(a, b));
  CHECK_FALSE(same_events(a, c));
}

TEST_CASE("thinned recording above record_below") {
  ExactOptions opts;
  opts.record_below = 1'000;
  opts.snapshot_stride = 100;
  const Trajectory t = simulate_exact(kCirculant, BlockState({3'000, 2'000, 1'000}), StopCriterion::hit_sigma(10), 8, 0, opts);
  CHECK(t.exact_start.sigma() <= 1'000);
  CHECK(t.final_sigma() == 10);
  CHECK(t.coarse.size() >= 2);
  for (std::size_t i = 1; i < t.coarse.size(); ++i) {
    CHECK(t.coarse[i].sigma < t.coarse[i - 1].sigma);
    CHECK(t.coarse[i].time > t.coarse[i - 1].time);
    CHECK(t.coarse[i].clock > t.coarse[i - 1].clock);
  }
  CHECK(t.coarse.back().time == t.exact_t0);
}

TEST_CASE("largest-remainder rounding") {
  CHECK(round_to_state(10, std::vector<double>{0.25, 0.25, 0.5}) == BlockState({3, 2, 5}));
  CHECK(round_to_state(3, std::vector<double>{1.0 / 3, 1.0 / 3, 1.0 / 3}) == BlockState({1, 1, 1}));
  CHECK(round_to_state(7, std::vector<double>{0.5, 0.5}) == BlockState({4, 3}));
  CHECK(round_to_state(1000, std::vector<double>{0.1234, 0.5432, 0.3334}).sigma() == 1000);
}

TEST_CASE("tau-leap with a floor above the start is the exact chain") {
  TauLeapOptions opts;
  opts.sigma_floor = 5'000;
  const BlockState n0({2'000, 1'000, 500});
  const Trajectory leap = simulate_tau_leap(kCirculant, n0, StopCriterion::hit_sigma(10), 12, 3, opts);
  const Trajectory exact = simulate_exact(kCirculant, n0, StopCriterion::hit_sigma(10), 12, 3);
  CHECK(same_events(leap, exact));
}

TEST_CASE("tau-leap hands over to the exact solver at the floor") {
  TauLeapOptions opts;
  opts.sigma_floor = 2'000;
  const Trajectory t =
      simulate_tau_leap(kCirculant, BlockState({60'000, 30'000, 10'000}), StopCriterion::hit_sigma(100), 4, 0, opts);
  CHECK(t.final_sigma() == 100);
  // The last ceil(10 / eps) blocks above the floor are also run exactly.
  CHECK(t.exact_start.sigma() <= 2'000 + static_cast<Count>(std::ceil(10.0 / opts.eps)));
  CHECK(t.coarse.size() > 2);
  for (std::size_t i = 1; i < t.coarse.size(); ++i) CHECK(t.coarse[i].sigma <= t.coarse[i - 1].sigma);
}

TEST_CASE("tau-leap sigma law converges as eps shrinks") {
  const BlockState n0({50'000, 30'000, 20'000});
  const auto stop = StopCriterion::max_time(5e-4);
  auto sample = [&](double eps) {
    TauLeapOptions opts;
    opts.eps = eps;
    opts.sigma_floor = 500;
    std::vector<double> sig;
    for (std::uint64_t run = 0; run < 4'000; ++run) {
      const Trajectory t = simulate_tau_leap(kCirculant, n0, stop, 21, run, opts);
      sig.push_back(static_cast<double>(t.final_sigma()));
    }
    return sig;
  };
  CHECK(ks_distance(sample(0.05), sample(0.01)) < 0.05);
}

TEST_CASE("tau-leap agrees with exact at a low level") {
  const BlockState n0({6'000, 3'000, 1'000});
  TauLeapOptions opts;
  opts.sigma_floor = 1'000;
  std::vector<Moments> leap(3), exact(3);
  for (std::uint64_t run = 0; run < 500; ++run) {
    const auto a = simplex_at_level(simulate_tau_leap(kCirculant, n0, StopCriterion::hit_sigma(100), 2, run, opts), 100);
    const auto b = simplex_at_level(simulate_exact(kCirculant, n0, StopCriterion::hit_sigma(100), 3, run), 100);
    for (std::size_t i = 0; i < 3; ++i) {
      leap[i].add((*a)[i]);
      exact[i].add((*b)[i]);
    }
  }
  for (std::size_t i = 0; i < 3; ++i) {
    const double se = std::hypot(leap[i].std_error(), exact[i].std_error());
    CHECK(std::abs(leap[i].mean - exact[i].mean) < 3 * se);
  }
}

TEST_CASE("single-type fluid path matches the closed form") {
  // d sigma/dt = -(c/2)(sigma^2 - sigma) solves to
  // sigma(t) = 1 / (1 - q exp(-c t / 2)), q = 1 - 1/sigma0.
  const double c = 1.3;
  const double sigma0 = 1e6;
  const FluidPath path = simulate_fluid(RateMatrix::from_rows({{c}}), FluidState{sigma0, SimplexPoint({1.0})},
                                        StopCriterion::hit_sigma(5));
  const double q = 1.0 - 1.0 / sigma0;
  double worst = 0.0;
  for (const Snapshot& s : path.points) {
    CHECK(s.r[0] == 1.0);
    const double exact = 1.0 / (1.0 - q * std::exp(-0.5 * c * s.time));
    worst = std::max(worst, std::abs(s.sigma - exact) / exact);
  }
  CHECK(worst < 1e-6);
  CHECK(path.final_state().sigma == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("fluid path started at x* stays there") {
  const auto xs = ess_fixed_point(payoff_from_rates(kCirculant)).x_star;
  const FluidPath path = simulate_fluid(kCirculant, FluidState{1e12, xs}, StopCriterion::hit_sigma(1'000));
  for (const Snapshot& s : path.points) CHECK(l1_distance(s.r, xs.coords()) < 1e-3);
}

TEST_CASE("time-changed fluid path follows the replicator equation") {
  const PayoffMatrix a = payoff_from_rates(kCirculant);
  for (const auto& r0 : std::vector<std::vector<double>>{{0.8, 0.1, 0.1}, {0.1, 0.1, 0.8}, {0.2, 0.5, 0.3}}) {
    const SimplexPoint x0(r0);
    const FluidPath path = simulate_fluid(kCirculant, FluidState{1e15, x0}, StopCriterion::hit_sigma(1'000'000));
    std::vector<double> clocks;
    for (const Snapshot& s : path.points) clocks.push_back(s.clock);
    const auto ode = integrate_on_grid(a, x0, clocks, 1e-3);
    double worst = 0.0;
    for (std::size_t i = 0; i < clocks.size(); ++i) worst = std::max(worst, l1_distance(path.points[i].r, ode[i].coords()));
    CHECK(worst < 1e-2);
  }
}

TEST_CASE("fluid rejects absorption and warns at small sigma") {
  CHECK_THROWS(simulate_fluid(kCirculant, FluidState{1e6, SimplexPoint::uniform(3)}, StopCriterion::absorb()));
  const FluidPath small = simulate_fluid(kCirculant, FluidState{500, SimplexPoint::uniform(3)}, StopCriterion::hit_sigma(10));
  CHECK_FALSE(small.warnings.empty());
}

TEST_CASE("hybrid with the switch above the start is the exact chain") {
  HybridOptions opts;
  opts.switch_sigma = 10'000;
  const BlockState n0({3'000, 2'000, 1'000});
  const Trajectory h = simulate_hybrid(kCirculant, n0, StopCriterion::hit_sigma(2), 8, 1, opts);
  const Trajectory e = simulate_exact(kCirculant, n0, StopCriterion::hit_sigma(2), 8, 1);
  CHECK(same_events(h, e));
}

TEST_CASE("hybrid switches to integer counts at the switch level") {
  HybridOptions opts;
  opts.switch_sigma = 5'000;
  const Trajectory t = simulate_hybrid(kCirculant, FluidState{1e9, SimplexPoint({0.5, 0.3, 0.2})},
                                       StopCriterion::hit_sigma(10), 6, 0, opts);
  CHECK(t.exact_start.sigma() == 5'000);
  CHECK(t.coarse.front().sigma == doctest::Approx(1e9).epsilon(1e-12));
  CHECK(t.coarse.back().sigma == doctest::Approx(5'000.0).epsilon(1e-9));
  CHECK(t.exact_t0 == t.coarse.back().time);
  CHECK(t.final_sigma() == 10);
  for (std::size_t i = 0; i < 3; ++i)
    CHECK(static_cast<double>(t.exact_start[i]) == doctest::Approx(5'000.0 * t.coarse.back().r[i]).epsilon(1e-3));
}

TEST_CASE("hybrid and exact agree on mean r at a low level") {
  const BlockState n0({6'000, 3'000, 1'000});
  HybridOptions opts;
  opts.switch_sigma = 1'000;
  std::vector<Moments> hyb(3), exact(3);
  for (std::uint64_t run = 0; run < 300; ++run) {
    const auto a = simplex_at_level(simulate_hybrid(kCirculant, n0, StopCriterion::hit_sigma(100), 2, run, opts), 100);
    const auto b = simplex_at_level(simulate_exact(kCirculant, n0, StopCriterion::hit_sigma(100), 3, run), 100);
    for (std::size_t i = 0; i < 3; ++i) {
      hyb[i].add((*a)[i]);
      exact[i].add((*b)[i]);
    }
  }
  for (std::size_t i = 0; i < 3; ++i) {
    const double se = std::hypot(hyb[i].std_error(), exact[i].std_error());
    CHECK(std::abs(hyb[i].mean - exact[i].mean) < 3 * se);
  }
}
