#include "replicoal/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace replicoal {

namespace {

Eigen::MatrixXd matrix_from_rows(const std::vector<std::vector<double>>& rows) {
  const auto k = rows.size();
  Eigen::MatrixXd m(k, k);
  for (std::size_t i = 0; i < k; ++i) {
    if (rows[i].size() != k) {
      throw std::invalid_argument("matrix row " + std::to_string(i) + " has " +
                                  std::to_string(rows[i].size()) + " entries, expected " +
                                  std::to_string(k));
    }
    for (std::size_t j = 0; j < k; ++j) m(i, j) = rows[i][j];
  }
  return m;
}

void check_square(const Eigen::MatrixXd& m, const char* what) {
  if (m.rows() < 1 || m.rows() != m.cols()) {
    throw std::invalid_argument(std::string(what) + " must be a non-empty square matrix");
  }
  if (!m.allFinite()) throw std::invalid_argument(std::string(what) + " has non-finite entries");
}

}  // namespace

RateMatrix::RateMatrix(Eigen::MatrixXd entries) : entries_(std::move(entries)) {
  check_square(entries_, "rate matrix");
  if ((entries_.array() <= 0.0).any()) {
    throw std::invalid_argument("rate matrix entries must be strictly positive");
  }
}

RateMatrix RateMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
  return RateMatrix(matrix_from_rows(rows));
}

RateMatrix RateMatrix::from_row_major(std::size_t k, std::span<const double> entries) {
  if (entries.size() != k * k) {
    throw std::invalid_argument("expected " + std::to_string(k * k) + " rate entries, got " +
                                std::to_string(entries.size()));
  }
  Eigen::MatrixXd m(k, k);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) m(i, j) = entries[i * k + j];
  return RateMatrix(std::move(m));
}

double RateMatrix::max_pair_rate() const {
  double best = max_diagonal();
  for (Eigen::Index i = 0; i < entries_.rows(); ++i)
    for (Eigen::Index j = i + 1; j < entries_.cols(); ++j) best = std::max(best, entries_(i, j) + entries_(j, i));
  return best;
}

PayoffMatrix::PayoffMatrix(Eigen::MatrixXd entries) : entries_(std::move(entries)) {
  check_square(entries_, "payoff matrix");
}

PayoffMatrix PayoffMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
  return PayoffMatrix(matrix_from_rows(rows));
}

BlockState::BlockState(std::vector<Count> counts) : counts_(std::move(counts)) {
  if (counts_.empty()) throw std::invalid_argument("block state needs at least one type");
  for (Count c : counts_) {
    if (c < 0) throw std::invalid_argument("block counts must be nonnegative");
    sigma_ += c;
  }
  if (sigma_ < 1) throw std::invalid_argument("block state must contain at least one block");
}

std::vector<double> BlockState::simplex() const {
  std::vector<double> r(counts_.size());
  const double s = static_cast<double>(sigma_);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = static_cast<double>(counts_[i]) / s;
  return r;
}

std::vector<MergeChannel> channels(std::size_t k) {
  std::vector<MergeChannel> out;
  out.reserve(k * k);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) out.push_back({i, j});
  return out;
}

PayoffMatrix payoff_from_rates(const RateMatrix& rates) {
  const auto k = rates.k();
  Eigen::MatrixXd a(k, k);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      a(i, j) = (i == j) ? -0.5 * rates(i, i) : -rates(j, i);
    }
  }
  return PayoffMatrix(std::move(a));
}

double channel_rate(const RateMatrix& rates, const BlockState& n, MergeChannel ch) {
  const auto k = rates.k();
  if (n.k() != k) throw std::invalid_argument("state dimension does not match rate matrix");
  if (ch.survivor >= k || ch.victim >= k) throw std::out_of_range("merge channel type index out of range");
  const double ni = static_cast<double>(n[ch.survivor]);
  if (ch.survivor == ch.victim) return 0.5 * rates(ch.survivor, ch.survivor) * ni * std::max(ni - 1.0, 0.0);
  return rates(ch.survivor, ch.victim) * ni * static_cast<double>(n[ch.victim]);
}

double total_rate(const BlockState& n, const RateMatrix& rates) {
  if (n.k() != rates.k()) throw std::invalid_argument("state dimension does not match rate matrix");
  std::vector<double> buf(rates.k() * rates.k());
  return channel_rates<Count>(rates, n.counts(), buf);
}

double total_rate_payoff_form(const BlockState& n, const PayoffMatrix& payoff) {
  const auto k = payoff.k();
  if (n.k() != k) throw std::invalid_argument("state dimension does not match payoff matrix");
  Eigen::VectorXd v(k);
  for (std::size_t i = 0; i < k; ++i) v(i) = static_cast<double>(n[i]);
  const Eigen::VectorXd an = payoff.matrix() * v;
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) total += v(i) * payoff(i, i) - v(i) * an(i);
  return total;
}

BlockState apply_channel(const BlockState& n, MergeChannel ch) {
  if (ch.survivor >= n.k() || ch.victim >= n.k()) throw std::out_of_range("merge channel type index out of range");
  const bool feasible = (ch.survivor == ch.victim) ? n[ch.victim] >= 2
                                                   : n[ch.survivor] >= 1 && n[ch.victim] >= 1;
  if (!feasible) throw std::invalid_argument("merge channel infeasible: required blocks absent");
  auto counts = n.counts();
  --counts[ch.victim];
  return BlockState(std::move(counts));
}

double kingman_lower_envelope(const RateMatrix& rates, Count sigma) {
  const double s = static_cast<double>(sigma);
  const double lo = rates.min_entry();
  return lo * 0.5 * s * (s - 1.0) - 0.5 * (rates.max_diagonal() - lo) * s;
}

double kingman_upper_envelope(const RateMatrix& rates, Count sigma) {
  const double s = static_cast<double>(sigma);
  return rates.max_pair_rate() * 0.5 * s * (s - 1.0);
}

}  // namespace replicoal
