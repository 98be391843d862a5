#include "replicoal/dual.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace replicoal {

double LevelDistribution::total() const {
  double s = 0.0;
  for (const auto& [n, p] : probs) s += p;
  return s;
}

double LevelDistribution::operator()(const StateKey& n) const {
  const auto it = probs.find(n);
  return it == probs.end() ? 0.0 : it->second;
}

const LevelDistribution& HittingLaws::at(Count level) const {
  if (level > top() || level < bottom()) throw std::out_of_range("level " + std::to_string(level) + " not computed");
  return levels[static_cast<std::size_t>(top() - level)];
}

double holding_rate(const RateMatrix& rates, const StateKey& n) {
  std::vector<double> lam(rates.k());
  return removal_rates<Count>(rates, n, lam);
}

double transition_rate(const RateMatrix& rates, const StateKey& from, std::size_t victim) {
  std::vector<double> lam(rates.k());
  removal_rates<Count>(rates, from, lam);
  return lam.at(victim);
}

HittingLaws hitting_laws(const RateMatrix& rates, const BlockState& eta, Count m, const DualOptions& options) {
  if (eta.k() != rates.k()) throw std::invalid_argument("initial state dimension does not match rate matrix");
  if (m < 1 || m >= eta.sigma()) throw std::invalid_argument("hitting law needs 1 <= m < sigma(eta)");
  const std::size_t k = rates.k();
  HittingLaws laws;
  laws.start = eta.counts();
  LevelDistribution top;
  top.level = eta.sigma();
  top.probs[eta.counts()] = 1.0;
  laws.levels.push_back(std::move(top));

  std::vector<double> lam(k);
  for (Count level = eta.sigma(); level > m; --level) {
    const LevelDistribution& cur = laws.levels.back();
    LevelDistribution next;
    next.level = level - 1;
    for (const auto& [n, p] : cur.probs) {
      const double q = removal_rates<Count>(rates, n, lam);
      if (!(q > 0.0)) continue;
      StateKey child = n;
      for (std::size_t j = 0; j < k; ++j) {
        if (lam[j] <= 0.0) continue;
        --child[j];
        next.probs[child] += p * lam[j] / q;
        ++child[j];
      }
      if (next.probs.size() > options.max_states_per_level) {
        throw NumericalError("hitting-law state budget exceeded at level " + std::to_string(level - 1) + " (" +
                             std::to_string(options.max_states_per_level) + " states)");
      }
    }
    laws.levels.push_back(std::move(next));
  }
  return laws;
}

LevelDistribution exact_hitting_law(const RateMatrix& rates, const BlockState& eta, Count m,
                                    const DualOptions& options) {
  HittingLaws laws = hitting_laws(rates, eta, m, options);
  return std::move(laws.levels.back());
}

double HFunction::operator()(const StateKey& n) const {
  const auto it = values.find(n);
  return it == values.end() ? 0.0 : it->second;
}

HFunction h_from_law(const HittingLaws& laws, const RateMatrix& rates) {
  HFunction h;
  std::vector<double> lam(rates.k());
  for (const auto& level : laws.levels) {
    if (level.level < 2) continue;
    for (const auto& [n, p] : level.probs) {
      if (!(p > 0.0)) continue;
      h.values[n] = p / removal_rates<Count>(rates, n, lam);
    }
  }
  return h;
}

namespace {

/// sum over parents n' = n + e_j of h(n') q_{n', n}.
double inflow(const HFunction& h, const RateMatrix& rates, const StateKey& n, std::vector<double>& lam) {
  double s = 0.0;
  StateKey parent = n;
  for (std::size_t j = 0; j < n.size(); ++j) {
    ++parent[j];
    const double hp = h(parent);
    if (hp > 0.0) {
      removal_rates<Count>(rates, parent, lam);
      s += hp * lam[j];
    }
    --parent[j];
  }
  return s;
}

}  // namespace

double otherhand_residual(const HittingLaws& laws, const HFunction& h, const RateMatrix& rates) {
  std::vector<double> lam(rates.k());
  double worst = 0.0;
  for (const auto& level : laws.levels) {
    if (level.level >= laws.top() || level.level < 2) continue;
    for (const auto& [n, p] : level.probs) {
      const double hn = h(n);
      if (!(hn > 0.0)) continue;
      const double q = removal_rates<Count>(rates, n, lam);
      const double rhs = inflow(h, rates, n, lam) / q;
      worst = std::max(worst, std::abs(hn - rhs) / hn);
    }
  }
  return worst;
}

DualRates dual_rates(const HFunction& h, const RateMatrix& rates) {
  DualRates out;
  std::vector<double> lam(rates.k());
  for (const auto& [n, hn] : h.values) {
    if (!(hn > 0.0)) continue;
    StateKey parent = n;
    for (std::size_t j = 0; j < n.size(); ++j) {
      ++parent[j];
      const double hp = h(parent);
      if (hp > 0.0) {
        removal_rates<Count>(rates, parent, lam);
        out[{n, parent}] = hp / hn * lam[j];
      }
      --parent[j];
    }
  }
  return out;
}

QIdentityReport verify_q_identity(const RateMatrix& rates, const BlockState& eta, Count m,
                                  const DualOptions& options) {
  const HittingLaws laws = hitting_laws(rates, eta, m, options);
  const HFunction h = h_from_law(laws, rates);
  const DualRates qhat = dual_rates(h, rates);

  std::map<StateKey, double> qhat_total;
  for (const auto& [edge, rate] : qhat) qhat_total[edge.first] += rate;

  QIdentityReport report;
  report.lowest_level = std::max<Count>(m, 2);
  report.highest_level = eta.sigma() - 1;
  std::vector<double> lam(rates.k());
  for (const auto& level : laws.levels) {
    if (level.level < report.lowest_level || level.level > report.highest_level) continue;
    for (const auto& [n, p] : level.probs) {
      if (!(p > 0.0)) continue;
      const double q = removal_rates<Count>(rates, n, lam);
      const auto it = qhat_total.find(n);
      const double qh = it == qhat_total.end() ? 0.0 : it->second;
      report.max_relative_error = std::max(report.max_relative_error, std::abs(q - qh) / q);
      ++report.states_checked;
    }
  }
  return report;
}

}  // namespace replicoal
