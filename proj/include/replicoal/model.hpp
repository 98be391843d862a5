#ifndef REPLICOAL_MODEL_HPP
#define REPLICOAL_MODEL_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace replicoal {

using Count = std::int64_t;

/// Raised when a numerical procedure cannot produce a meaningful answer
/// (singular payoff matrix, state budget exceeded, leap overshoot, ...).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// k x k merger-rate matrix. Entry (i, j) is the rate at which one given
/// block of type i absorbs one given block of type j; (i, i) is the
/// within-type pairwise rate. All entries are strictly positive.
class RateMatrix {
 public:
  explicit RateMatrix(Eigen::MatrixXd entries);
  static RateMatrix from_rows(const std::vector<std::vector<double>>& rows);
  static RateMatrix from_row_major(std::size_t k, std::span<const double> entries);

  std::size_t k() const { return static_cast<std::size_t>(entries_.rows()); }
  double operator()(std::size_t i, std::size_t j) const { return entries_(i, j); }
  const Eigen::MatrixXd& matrix() const { return entries_; }

  double min_entry() const { return entries_.minCoeff(); }
  double max_entry() const { return entries_.maxCoeff(); }
  double max_diagonal() const { return entries_.diagonal().maxCoeff(); }
  /// Largest merger rate of an unordered block pair: C_ii for a same-type
  /// pair, C_ij + C_ji for a mixed pair.
  double max_pair_rate() const;

 private:
  Eigen::MatrixXd entries_;
};

/// Payoff matrix of the replicator equation. Either derived from a
/// RateMatrix (all entries negative) or supplied directly.
class PayoffMatrix {
 public:
  explicit PayoffMatrix(Eigen::MatrixXd entries);
  static PayoffMatrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t k() const { return static_cast<std::size_t>(entries_.rows()); }
  double operator()(std::size_t i, std::size_t j) const { return entries_(i, j); }
  const Eigen::MatrixXd& matrix() const { return entries_; }
  bool all_negative() const { return (entries_.array() < 0.0).all(); }

 private:
  Eigen::MatrixXd entries_;
};

/// Type-count vector n with sigma = |n|_1 >= 1.
class BlockState {
 public:
  explicit BlockState(std::vector<Count> counts);

  std::size_t k() const { return counts_.size(); }
  Count sigma() const { return sigma_; }
  Count operator[](std::size_t i) const { return counts_[i]; }
  const std::vector<Count>& counts() const { return counts_; }

  /// Polar (simplex) part r = n / sigma.
  std::vector<double> simplex() const;

  friend bool operator==(const BlockState&, const BlockState&) = default;
  friend auto operator<=>(const BlockState& a, const BlockState& b) { return a.counts_ <=> b.counts_; }

 private:
  std::vector<Count> counts_;
  Count sigma_ = 0;
};

/// A merger in which one `survivor`-type block absorbs one `victim`-type
/// block. survivor == victim is a within-type merger.
struct MergeChannel {
  std::size_t survivor = 0;
  std::size_t victim = 0;

  friend bool operator==(const MergeChannel&, const MergeChannel&) = default;
};

/// Channels in survivor-major order; index = survivor * k + victim.
std::vector<MergeChannel> channels(std::size_t k);

PayoffMatrix payoff_from_rates(const RateMatrix& rates);

double channel_rate(const RateMatrix& rates, const BlockState& n, MergeChannel ch);

/// Total merger rate lambda(n) as the sum over all k^2 channels.
double total_rate(const BlockState& n, const RateMatrix& rates);

/// lambda(n) evaluated through the payoff matrix:
/// sum_i (n_i A_ii - n_i [A n]_i). Independent of the channel sum.
double total_rate_payoff_form(const BlockState& n, const PayoffMatrix& payoff);

BlockState apply_channel(const BlockState& n, MergeChannel ch);

/// Lower and upper Kingman-type envelopes of lambda at block count sigma.
double kingman_lower_envelope(const RateMatrix& rates, Count sigma);
double kingman_upper_envelope(const RateMatrix& rates, Count sigma);

// Hot-path kernels over raw count vectors; real-valued counts are allowed
// for the fluid relaxation.

/// Writes the k^2 channel rates (survivor-major) into `out`; returns their sum.
template <typename T>
double channel_rates(const RateMatrix& rates, std::span<const T> n, std::span<double> out) {
  const std::size_t k = rates.k();
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double ni = static_cast<double>(n[i]);
    for (std::size_t j = 0; j < k; ++j) {
      double r;
      if (i == j) {
        r = 0.5 * rates(i, i) * ni * (ni - 1.0);
      } else {
        r = rates(i, j) * ni * static_cast<double>(n[j]);
      }
      if (r < 0.0) r = 0.0;
      out[i * k + j] = r;
      total += r;
    }
  }
  return total;
}

/// Per-type removal rates: out[j] = total rate of channels whose victim is j.
template <typename T>
double removal_rates(const RateMatrix& rates, std::span<const T> n, std::span<double> out) {
  const std::size_t k = rates.k();
  double total = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    const double nj = static_cast<double>(n[j]);
    double acc = 0.5 * rates(j, j) * (nj - 1.0);
    for (std::size_t i = 0; i < k; ++i) {
      if (i != j) acc += rates(i, j) * static_cast<double>(n[i]);
    }
    double r = nj * acc;
    if (r < 0.0) r = 0.0;
    out[j] = r;
    total += r;
  }
  return total;
}

}  // namespace replicoal

#endif  // REPLICOAL_MODEL_HPP
