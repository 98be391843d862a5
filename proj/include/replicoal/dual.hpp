#ifndef REPLICOAL_DUAL_HPP
#define REPLICOAL_DUAL_HPP

#include <cstddef>
#include <map>
#include <utility>
#include <vector>

#include "replicoal/model.hpp"

namespace replicoal {

/// Count vector used as a map key; std::map orders states within a level
/// lexicographically.
using StateKey = std::vector<Count>;

struct LevelDistribution {
  Count level = 0;
  std::map<StateKey, double> probs;

  double total() const;
  double operator()(const StateKey& n) const;
};

struct DualOptions {
  std::size_t max_states_per_level = 100'000;
};

/// Laws of n(gamma_l) for every level l from sigma(eta) down to m.
struct HittingLaws {
  StateKey start;
  std::vector<LevelDistribution> levels;  // levels[0] is the start level

  Count top() const { return levels.front().level; }
  Count bottom() const { return levels.back().level; }
  const LevelDistribution& at(Count level) const;
};

/// Forward recursion over the embedded jump chain from eta; each jump
/// lowers sigma by one, so mass moves level by level.
HittingLaws hitting_laws(const RateMatrix& rates, const BlockState& eta, Count m, const DualOptions& options = {});
LevelDistribution exact_hitting_law(const RateMatrix& rates, const BlockState& eta, Count m,
                                    const DualOptions& options = {});

/// Holding rate q_n (total merger rate) and q_{n, n - e_j}.
double holding_rate(const RateMatrix& rates, const StateKey& n);
double transition_rate(const RateMatrix& rates, const StateKey& from, std::size_t victim);

/// h(n) = mu_{|n|}(n) / q_n on states of level >= 2 with positive mass.
struct HFunction {
  std::map<StateKey, double> values;

  double operator()(const StateKey& n) const;
};

HFunction h_from_law(const HittingLaws& laws, const RateMatrix& rates);

/// max over states below the start level (and >= 2) of
/// |h(n) - sum_{n'} h(n') q_{n', n} / q_n| / h(n).
double otherhand_residual(const HittingLaws& laws, const HFunction& h, const RateMatrix& rates);

/// qhat_{n, n'} = h(n') q_{n', n} / h(n) for n' = n + e_j, both in the
/// support of h.
using DualRates = std::map<std::pair<StateKey, StateKey>, double>;
DualRates dual_rates(const HFunction& h, const RateMatrix& rates);

struct QIdentityReport {
  double max_relative_error = 0.0;
  std::size_t states_checked = 0;
  Count lowest_level = 0;
  Count highest_level = 0;
};

/// Compares q_n with qhat_n = sum_{n'} qhat_{n, n'} on every state with
/// positive mass in levels max(m, 2) .. sigma(eta) - 1.
QIdentityReport verify_q_identity(const RateMatrix& rates, const BlockState& eta, Count m,
                                  const DualOptions& options = {});

}  // namespace replicoal

#endif  // REPLICOAL_DUAL_HPP
