#ifndef REPLICOAL_REPLICATOR_HPP
#define REPLICOAL_REPLICATOR_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "replicoal/model.hpp"

namespace replicoal {

/// Probability vector on k types.
class SimplexPoint {
 public:
  /// Throws if any coordinate is negative or the sum is off by more than `tolerance`.
  explicit SimplexPoint(std::vector<double> coords, double tolerance = 1e-12);

  static SimplexPoint uniform(std::size_t k);
  static SimplexPoint vertex(std::size_t k, std::size_t i);

  std::size_t size() const { return coords_.size(); }
  double operator[](std::size_t i) const { return coords_[i]; }
  const std::vector<double>& coords() const { return coords_; }
  bool interior() const;

 private:
  std::vector<double> coords_;
};

double l1_distance(std::span<const double> a, std::span<const double> b);

/// Right-hand side of the A-replicator equation: x_i ([A x]_i - x^T A x).
std::vector<double> replicator_rhs(const PayoffMatrix& payoff, std::span<const double> x);

struct EssResult {
  SimplexPoint x_star;
  double c = 0.0;         // A x* = c 1
  double residual = 0.0;  // |A x* - c 1|_inf
  bool interior = false;
};

enum class EssMode {
  strict,  // boundary x* is an error
  relaxed  // direct-A mode: boundary x* is reported via EssResult::interior
};

/// x* = A^-1 1 / (1^T A^-1 1). Throws NumericalError if A is singular, or
/// (strict mode) if some coordinate of x* is not positive.
EssResult ess_fixed_point(const PayoffMatrix& payoff, EssMode mode = EssMode::strict);

struct EssReport {
  bool pass = false;
  double min_gap = 0.0;  // min over samples of (x*)^T A x - x^T A x
  double radius_used = 0.0;
  bool radius_shrunk = false;
  std::size_t samples = 0;
};

/// Samples x = x* + eps u with u a uniform unit direction tangent to the
/// simplex and eps ~ U(0, radius], and checks the ESS inequality at each.
EssReport verify_ess(const PayoffMatrix& payoff, const SimplexPoint& x_star, double radius,
                     std::size_t samples, std::uint64_t seed);

struct OdePath {
  std::vector<double> times;
  std::vector<SimplexPoint> points;
};

/// Fixed-step RK4 of the A-replicator equation, renormalised onto the
/// simplex after each step. Records every `record_every`-th step plus the
/// endpoint T.
OdePath integrate(const PayoffMatrix& payoff, const SimplexPoint& x0, double horizon, double step,
                  std::size_t record_every = 1);

/// Integrates and returns x at each (sorted, nonnegative) time in `grid`.
std::vector<SimplexPoint> integrate_on_grid(const PayoffMatrix& payoff, const SimplexPoint& x0,
                                            std::span<const double> grid, double step);

}  // namespace replicoal

#endif  // REPLICOAL_REPLICATOR_HPP
