#include "replicoal/replicator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "replicoal/rng.hpp"

namespace replicoal {

SimplexPoint::SimplexPoint(std::vector<double> coords, double tolerance) : coords_(std::move(coords)) {
  if (coords_.empty()) throw std::invalid_argument("simplex point needs at least one coordinate");
  double sum = 0.0;
  for (double c : coords_) {
    if (!(c >= 0.0)) throw std::invalid_argument("simplex coordinates must be nonnegative");
    sum += c;
  }
  if (std::abs(sum - 1.0) > tolerance) {
    throw std::invalid_argument("simplex coordinates sum to " + std::to_string(sum) + ", not 1");
  }
}

SimplexPoint SimplexPoint::uniform(std::size_t k) {
  return SimplexPoint(std::vector<double>(k, 1.0 / static_cast<double>(k)));
}

SimplexPoint SimplexPoint::vertex(std::size_t k, std::size_t i) {
  std::vector<double> v(k, 0.0);
  v.at(i) = 1.0;
  return SimplexPoint(std::move(v));
}

bool SimplexPoint::interior() const {
  return std::all_of(coords_.begin(), coords_.end(), [](double c) { return c > 0.0; });
}

double l1_distance(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d += std::abs(a[i] - b[i]);
  return d;
}

namespace {

void rhs_into(const Eigen::MatrixXd& a, std::span<const double> x, std::span<double> out) {
  const auto k = x.size();
  double mean_fitness = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    double f = 0.0;
    for (std::size_t j = 0; j < k; ++j) f += a(i, j) * x[j];
    out[i] = f;
    mean_fitness += x[i] * f;
  }
  for (std::size_t i = 0; i < k; ++i) out[i] = x[i] * (out[i] - mean_fitness);
}

void check_dim(const PayoffMatrix& payoff, std::size_t k) {
  if (payoff.k() != k) throw std::invalid_argument("dimension mismatch between payoff matrix and point");
}

/// One RK4 step in place, followed by renormalisation.
class Rk4Stepper {
 public:
  explicit Rk4Stepper(const PayoffMatrix& payoff)
      : a_(payoff.matrix()), k_(payoff.k()), k1_(k_), k2_(k_), k3_(k_), k4_(k_), tmp_(k_) {}

  void step(std::vector<double>& x, double h) {
    rhs_into(a_, x, k1_);
    for (std::size_t i = 0; i < k_; ++i) tmp_[i] = x[i] + 0.5 * h * k1_[i];
    rhs_into(a_, tmp_, k2_);
    for (std::size_t i = 0; i < k_; ++i) tmp_[i] = x[i] + 0.5 * h * k2_[i];
    rhs_into(a_, tmp_, k3_);
    for (std::size_t i = 0; i < k_; ++i) tmp_[i] = x[i] + h * k3_[i];
    rhs_into(a_, tmp_, k4_);
    double sum = 0.0;
    for (std::size_t i = 0; i < k_; ++i) {
      double v = x[i] + h / 6.0 * (k1_[i] + 2.0 * k2_[i] + 2.0 * k3_[i] + k4_[i]);
      if (v < 0.0) {
        if (v < -1e-12) throw NumericalError("replicator integration left the simplex (coordinate " +
                                             std::to_string(v) + "); reduce the step");
        v = 0.0;
      }
      x[i] = v;
      sum += v;
    }
    for (double& v : x) v /= sum;
  }

 private:
  const Eigen::MatrixXd& a_;
  std::size_t k_;
  std::vector<double> k1_, k2_, k3_, k4_, tmp_;
};

}  // namespace

std::vector<double> replicator_rhs(const PayoffMatrix& payoff, std::span<const double> x) {
  check_dim(payoff, x.size());
  std::vector<double> out(x.size());
  rhs_into(payoff.matrix(), x, out);
  return out;
}

EssResult ess_fixed_point(const PayoffMatrix& payoff, EssMode mode) {
  const auto k = payoff.k();
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(payoff.matrix());
  if (!lu.isInvertible()) throw NumericalError("payoff matrix is singular; no unique fixed point");
  const Eigen::VectorXd y = lu.solve(Eigen::VectorXd::Ones(k));
  const double total = y.sum();
  if (total == 0.0 || !std::isfinite(total)) throw NumericalError("1^T A^-1 1 vanishes; fixed point undefined");
  const double c = 1.0 / total;
  std::vector<double> x(k);
  for (std::size_t i = 0; i < k; ++i) x[i] = y(i) * c;

  const bool interior = std::all_of(x.begin(), x.end(), [](double v) { return v > 0.0; });
  if (!interior) {
    if (mode == EssMode::strict) {
      std::string msg = "fixed point is not in the open simplex: (";
      for (std::size_t i = 0; i < k; ++i) msg += (i ? ", " : "") + std::to_string(x[i]);
      throw NumericalError(msg + ")");
    }
  }
  Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(k));
  const double residual = (payoff.matrix() * xv - Eigen::VectorXd::Constant(k, c)).lpNorm<Eigen::Infinity>();

  // A boundary point is still reported in relaxed mode; clamp only for the
  // SimplexPoint container, the raw solve is what `residual` measures.
  std::vector<double> stored = x;
  if (!interior) {
    for (double& v : stored) v = std::max(v, 0.0);
    const double s = std::accumulate(stored.begin(), stored.end(), 0.0);
    for (double& v : stored) v /= s;
  }
  return EssResult{SimplexPoint(std::move(stored), 1e-9), c, residual, interior};
}

EssReport verify_ess(const PayoffMatrix& payoff, const SimplexPoint& x_star, double radius,
                     std::size_t samples, std::uint64_t seed) {
  const auto k = x_star.size();
  check_dim(payoff, k);
  if (!(radius > 0.0)) throw std::invalid_argument("radius must be positive");

  EssReport report;
  report.radius_used = radius;
  report.min_gap = std::numeric_limits<double>::infinity();
  if (k == 1) {
    report.pass = true;  // the 1-simplex is a single point
    return report;
  }

  Rng rng(seed);
  const Eigen::MatrixXd& a = payoff.matrix();
  std::vector<double> u(k), x(k);
  for (std::size_t s = 0; s < samples; ++s) {
    double cap = 0.0;
    for (int attempt = 0; attempt < 10000 && cap <= 0.0; ++attempt) {
      double mean = 0.0;
      for (auto& v : u) {
        v = rng.normal();
        mean += v;
      }
      mean /= static_cast<double>(k);
      double norm = 0.0;
      for (auto& v : u) {
        v -= mean;
        norm += v * v;
      }
      norm = std::sqrt(norm);
      if (norm == 0.0) continue;
      for (auto& v : u) v /= norm;
      cap = radius;
      for (std::size_t i = 0; i < k; ++i) {
        if (u[i] < 0.0) cap = std::min(cap, x_star[i] / -u[i]);
      }
    }
    if (cap <= 0.0) throw NumericalError("ESS sampling cannot stay inside the simplex around x*");
    if (cap < radius) {
      report.radius_shrunk = true;
      report.radius_used = std::min(report.radius_used, cap);
    }
    const double eps = cap * (1.0 - rng.uniform());  // (0, cap]
    for (std::size_t i = 0; i < k; ++i) x[i] = x_star[i] + eps * u[i];
    // (x*)^T A x - x^T A x = (x* - x)^T A x = -eps u^T A x
    double uax = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      double ax = 0.0;
      for (std::size_t j = 0; j < k; ++j) ax += a(i, j) * x[j];
      uax += u[i] * ax;
    }
    report.min_gap = std::min(report.min_gap, -eps * uax);
    ++report.samples;
  }
  report.pass = report.min_gap > 0.0;
  return report;
}

OdePath integrate(const PayoffMatrix& payoff, const SimplexPoint& x0, double horizon, double step,
                  std::size_t record_every) {
  check_dim(payoff, x0.size());
  if (!(step > 0.0)) throw std::invalid_argument("integration step must be positive");
  if (!(horizon >= 0.0)) throw std::invalid_argument("integration horizon must be nonnegative");
  if (record_every == 0) record_every = 1;

  OdePath path;
  std::vector<double> x = x0.coords();
  path.times.push_back(0.0);
  path.points.push_back(x0);

  Rk4Stepper stepper(payoff);
  const auto n_steps = static_cast<std::size_t>(std::ceil(horizon / step - 1e-9));
  double t = 0.0;
  for (std::size_t s = 1; s <= n_steps; ++s) {
    const double h = (s == n_steps) ? horizon - t : step;
    stepper.step(x, h);
    t = (s == n_steps) ? horizon : t + h;
    if (s % record_every == 0 || s == n_steps) {
      path.times.push_back(t);
      path.points.emplace_back(x, 1e-9);
    }
  }
  return path;
}

std::vector<SimplexPoint> integrate_on_grid(const PayoffMatrix& payoff, const SimplexPoint& x0,
                                            std::span<const double> grid, double step) {
  check_dim(payoff, x0.size());
  if (!(step > 0.0)) throw std::invalid_argument("integration step must be positive");
  std::vector<SimplexPoint> out;
  out.reserve(grid.size());
  std::vector<double> x = x0.coords();
  Rk4Stepper stepper(payoff);
  double t = 0.0;
  for (double target : grid) {
    if (target < t) throw std::invalid_argument("integration grid must be sorted and nonnegative");
    const double span = target - t;
    if (span > 0.0) {
      const auto n = static_cast<std::size_t>(std::ceil(span / step));
      const double h = span / static_cast<double>(n);
      for (std::size_t s = 0; s < n; ++s) stepper.step(x, h);
    }
    t = target;
    out.emplace_back(x, 1e-9);
  }
  return out;
}

}  // namespace replicoal
