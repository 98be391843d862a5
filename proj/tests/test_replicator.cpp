#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "replicoal/model.hpp"
#include "replicoal/replicator.hpp"

using namespace replicoal;

namespace {

// Positive C with a dominant diagonal: the symmetric part of A is negative
// definite on the tangent space, so x* is an ESS.
RateMatrix dominant_rates(std::mt19937_64& gen, std::size_t k) {
  std::uniform_real_distribution<double> diag(1.5, 3.0);
  std::uniform_real_distribution<double> off(0.01, 0.2);
  std::vector<std::vector<double>> rows(k, std::vector<double>(k));
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) rows[i][j] = i == j ? diag(gen) : off(gen);
  return RateMatrix::from_rows(rows);
}

SimplexPoint random_interior(std::mt19937_64& gen, std::size_t k) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> x(k);
  double s = 0.0;
  for (auto& v : x) s += (v = e(gen) + 1e-3);
  for (auto& v : x) v /= s;
  return SimplexPoint(x, 1e-9);
}

double linf(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

// ||x(T) - x*||_1 with T doubled until below target.
double converge(const PayoffMatrix& a, const SimplexPoint& x0, const SimplexPoint& xs, double target, double& horizon) {
  horizon = 10.0;
  for (;;) {
    const auto path = integrate(a, x0, horizon, 1e-2, 1'000'000);
    const double d = l1_distance(path.points.back().coords(), xs.coords());
    if (d < target || horizon > 1e4) return d;
    horizon *= 2.0;
  }
}

}  // namespace

TEST_CASE("rest points of the replicator field") {
  const PayoffMatrix a = payoff_from_rates(RateMatrix::from_rows({{2, 1, 0.5}, {0.3, 1.5, 1}, {1, 0.2, 2.5}}));
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(linf(replicator_rhs(a, SimplexPoint::vertex(3, i).coords())) == 0.0);
  }
  const PayoffMatrix sym = PayoffMatrix::from_rows({{-1, -2}, {-2, -1}});
  CHECK(linf(replicator_rhs(sym, std::vector<double>{0.5, 0.5})) < 1e-15);
}

TEST_CASE("field is tangent to the simplex") {
  std::mt19937_64 gen(7);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = 2 + trial % 5;
    const PayoffMatrix a = payoff_from_rates(dominant_rates(gen, k));
    const auto f = replicator_rhs(a, random_interior(gen, k).coords());
    double s = 0.0;
    for (double v : f) s += v;
    CHECK(std::abs(s) < 1e-12);
  }
}

TEST_CASE("fixed point of symmetric and trivial instances") {
  const auto one = ess_fixed_point(payoff_from_rates(RateMatrix::from_rows({{3.0}})));
  CHECK(one.x_star[0] == 1.0);

  for (std::size_t k = 2; k <= 6; ++k) {
    std::vector<std::vector<double>> rows(k, std::vector<double>(k, 0.7));
    const auto res = ess_fixed_point(payoff_from_rates(RateMatrix::from_rows(rows)));
    for (std::size_t i = 0; i < k; ++i) CHECK(res.x_star[i] == doctest::Approx(1.0 / k).epsilon(1e-12));
    CHECK(res.residual < 1e-10);
  }

  // Circulant payoff with positive entries (direct mode).
  const auto circ = ess_fixed_point(PayoffMatrix::from_rows({{1, 1, 0}, {0, 1, 1}, {1, 0, 1}}), EssMode::relaxed);
  for (std::size_t i = 0; i < 3; ++i) CHECK(circ.x_star[i] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(circ.interior);
}

TEST_CASE("fixed point satisfies A x* = c 1") {
  std::mt19937_64 gen(13);
  std::uniform_real_distribution<double> u(0.1, 2.0);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t k = 2 + trial % 5;
    std::vector<std::vector<double>> rows(k, std::vector<double>(k));
    for (auto& row : rows)
      for (auto& x : row) x = u(gen);
    const PayoffMatrix a = payoff_from_rates(RateMatrix::from_rows(rows));
    EssResult res = [&] {
      try {
        return ess_fixed_point(a);
      } catch (const NumericalError&) {
        return ess_fixed_point(a, EssMode::relaxed);
      }
    }();
    CHECK(res.residual < 1e-10);
    if (!res.interior) continue;  // stored point is clamped; residual refers to the raw solve
    Eigen::VectorXd x(k);
    for (std::size_t i = 0; i < k; ++i) x(i) = res.x_star[i];
    const Eigen::VectorXd ax = a.matrix() * x;
    for (std::size_t i = 0; i < k; ++i) CHECK(std::abs(ax(i) - res.c) < 1e-10);
    CHECK(linf(replicator_rhs(a, res.x_star.coords())) < 1e-10);
  }
}

TEST_CASE("strict mode rejects boundary fixed points and singular matrices") {
  // Type 1 is killed fastest by everyone; x* falls outside the simplex.
  const PayoffMatrix a = payoff_from_rates(RateMatrix::from_rows({{1, 0.1}, {5, 1}}));
  CHECK_THROWS_AS(ess_fixed_point(a), NumericalError);
  const auto relaxed = ess_fixed_point(a, EssMode::relaxed);
  CHECK_FALSE(relaxed.interior);
  CHECK_THROWS_AS(ess_fixed_point(PayoffMatrix::from_rows({{1, 1}, {1, 1}})), NumericalError);
}

TEST_CASE("ESS check on a diagonally dominant class") {
  std::mt19937_64 gen(19);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t k = 2 + trial % 5;
    const PayoffMatrix a = payoff_from_rates(dominant_rates(gen, k));
    const auto res = ess_fixed_point(a);
    CHECK(res.interior);
    const auto rep = verify_ess(a, res.x_star, 1e-2, 2'000, static_cast<std::uint64_t>(trial));
    CHECK(rep.pass);
    CHECK(rep.min_gap > 0.0);
  }
}

TEST_CASE("ESS fails for C with all entries equal") {
  // x* is uniform and interior, but u^T A u = |u|^2 / 2 > 0 on the tangent
  // space, so nearby points beat x*.
  const PayoffMatrix a = payoff_from_rates(RateMatrix::from_rows({{1, 1, 1}, {1, 1, 1}, {1, 1, 1}}));
  const auto res = ess_fixed_point(a);
  CHECK(res.interior);
  const auto rep = verify_ess(a, res.x_star, 1e-2, 2'000, 1);
  CHECK_FALSE(rep.pass);
  CHECK(rep.min_gap < 0.0);
}

TEST_CASE("ESS fails at a vertex") {
  const PayoffMatrix a = payoff_from_rates(RateMatrix::from_rows({{2, 0.1, 0.2}, {0.15, 2.2, 0.1}, {0.05, 0.1, 1.8}}));
  const auto rep = verify_ess(a, SimplexPoint::vertex(3, 0), 1e-2, 2'000, 3);
  CHECK_FALSE(rep.pass);
}

TEST_CASE("ESS gap matches its quadratic expansion") {
  const PayoffMatrix a = payoff_from_rates(RateMatrix::from_rows({{2, 0.3, 0.1}, {0.2, 1.5, 0.4}, {0.1, 0.2, 2.5}}));
  const auto xs = ess_fixed_point(a).x_star;
  const Eigen::Vector3d u = Eigen::Vector3d(1.0, -0.5, -0.5).normalized();
  Eigen::Vector3d x0(xs[0], xs[1], xs[2]);
  for (double eps : {1e-1, 1e-2, 1e-3}) {
    const Eigen::Vector3d x = x0 + eps * u;
    const double gap = x0.dot(a.matrix() * x) - x.dot(a.matrix() * x);
    const double expansion = -eps * u.dot(a.matrix() * x0) - eps * eps * u.dot(a.matrix() * u);
    CHECK(gap == doctest::Approx(expansion).epsilon(1e-9));
    CHECK(gap > 0.0);
  }
}

TEST_CASE("integration from the fixed point is constant") {
  const PayoffMatrix a = payoff_from_rates(RateMatrix::from_rows({{2, 0.3, 0.1}, {0.2, 1.5, 0.4}, {0.1, 0.2, 2.5}}));
  const auto xs = ess_fixed_point(a).x_star;
  const auto path = integrate(a, xs, 5.0, 1e-2, 10);
  for (const auto& p : path.points) CHECK(l1_distance(p.coords(), xs.coords()) < 1e-12);
  CHECK(path.times.back() == 5.0);
}

TEST_CASE("circulant instance converges to the barycentre") {
  const PayoffMatrix a = payoff_from_rates(RateMatrix::from_rows({{2, 0.02, 0.1}, {0.1, 2, 0.02}, {0.02, 0.1, 2}}));
  const SimplexPoint x0({0.8, 0.1, 0.1});
  double horizon = 0.0;
  const double d = converge(a, x0, SimplexPoint::uniform(3), 1e-6, horizon);
  CHECK(d < 1e-6);
  const auto coarse = integrate(a, x0, horizon, 1e-2, 1'000'000).points.back();
  const auto fine = integrate(a, x0, horizon, 5e-3, 1'000'000).points.back();
  CHECK(l1_distance(coarse.coords(), fine.coords()) < 1e-8);
}

TEST_CASE("paths stay on the simplex and satisfy the integral form") {
  std::mt19937_64 gen(29);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t k = 2 + trial % 4;
    const PayoffMatrix a = payoff_from_rates(dominant_rates(gen, k));
    const auto x0 = random_interior(gen, k);
    const auto path = integrate(a, x0, 5.0, 1e-3, 1);
    std::vector<double> integral(k, 0.0);
    auto prev = replicator_rhs(a, path.points.front().coords());
    for (std::size_t s = 1; s < path.points.size(); ++s) {
      const auto& p = path.points[s];
      double sum = 0.0;
      for (double v : p.coords()) {
        CHECK(v >= 0.0);
        sum += v;
      }
      CHECK(std::abs(sum - 1.0) < 1e-9);
      const auto cur = replicator_rhs(a, p.coords());
      const double h = path.times[s] - path.times[s - 1];
      for (std::size_t i = 0; i < k; ++i) integral[i] += 0.5 * h * (prev[i] + cur[i]);
      prev = cur;
    }
    double err = 0.0;
    for (std::size_t i = 0; i < k; ++i) err += std::abs(path.points.back()[i] - x0[i] - integral[i]);
    CHECK(err < 1e-6);
  }
}

TEST_CASE("ESS start points converge with adaptive horizon") {
  std::mt19937_64 gen(31);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t k = 2 + trial % 4;
    const PayoffMatrix a = payoff_from_rates(dominant_rates(gen, k));
    const auto xs = ess_fixed_point(a).x_star;
    double horizon = 0.0;
    CHECK(converge(a, random_interior(gen, k), xs, 1e-6, horizon) < 1e-6);
  }
}

TEST_CASE("grid integration matches full paths") {
  const PayoffMatrix a = payoff_from_rates(RateMatrix::from_rows({{2, 0.3}, {0.2, 1.5}}));
  const SimplexPoint x0({0.9, 0.1});
  const std::vector<double> grid{0.0, 0.5, 1.25, 3.0};
  const auto pts = integrate_on_grid(a, x0, grid, 1e-3);
  REQUIRE(pts.size() == grid.size());
  CHECK(l1_distance(pts[0].coords(), x0.coords()) == 0.0);
  const auto full = integrate(a, x0, 3.0, 1e-3, 1'000'000).points.back();
  CHECK(l1_distance(pts.back().coords(), full.coords()) < 1e-10);
}

TEST_CASE("simplex point validation") {
  CHECK_THROWS(SimplexPoint({0.5, 0.6}));
  CHECK_THROWS(SimplexPoint({1.1, -0.1}));
  CHECK(SimplexPoint::uniform(4).interior());
  CHECK_FALSE(SimplexPoint::vertex(4, 2).interior());
}
