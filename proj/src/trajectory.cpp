#include "replicoal/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace replicoal {

StopCriterion StopCriterion::hit_sigma(Count m) {
  if (m < 1) throw std::invalid_argument("hit_sigma level must be >= 1");
  return {Kind::hit_sigma, static_cast<double>(m)};
}

StopCriterion StopCriterion::max_time(double t) {
  if (!(t >= 0.0)) throw std::invalid_argument("max_time must be >= 0");
  return {Kind::max_time, t};
}

StopCriterion StopCriterion::absorb() { return {Kind::absorb, 1.0}; }

StopCriterion StopCriterion::max_clock(double s) {
  if (!(s >= 0.0)) throw std::invalid_argument("max_clock must be >= 0");
  return {Kind::max_clock, s};
}

Count StopCriterion::level() const {
  return kind == Kind::hit_sigma ? static_cast<Count>(value) : 1;
}

double Trajectory::initial_sigma() const {
  return coarse.empty() ? static_cast<double>(exact_start.sigma()) : coarse.front().sigma;
}

std::vector<double> Trajectory::initial_r() const {
  return coarse.empty() ? exact_start.simplex() : coarse.front().r;
}

BlockState Trajectory::final_state() const {
  std::vector<Count> n = exact_start.counts();
  for (const Event& e : events) --n[e.victim];
  return BlockState(std::move(n));
}

namespace {

/// Index of the first coarse snapshot with sigma <= m, or npos.
std::size_t first_coarse_at_or_below(const Trajectory& traj, double m) {
  for (std::size_t j = 0; j < traj.coarse.size(); ++j) {
    if (traj.coarse[j].sigma <= m) return j;
  }
  return traj.coarse.size();
}

double interpolation_weight(double sa, double sb, double m) {
  return (sa == sb) ? 1.0 : std::clamp((sa - m) / (sa - sb), 0.0, 1.0);
}

}  // namespace

std::optional<double> hitting_time(const Trajectory& traj, Count m) {
  if (m < 1) throw std::invalid_argument("hitting level must be >= 1");
  const double dm = static_cast<double>(m);
  if (dm > traj.initial_sigma()) return std::nullopt;
  if (!traj.coarse.empty() && m > traj.exact_start.sigma()) {
    const auto j = first_coarse_at_or_below(traj, dm);
    if (j == traj.coarse.size()) return std::nullopt;
    if (j == 0) return traj.coarse[0].time;
    const Snapshot& a = traj.coarse[j - 1];
    const Snapshot& b = traj.coarse[j];
    const double w = interpolation_weight(a.sigma, b.sigma, dm);
    return a.time + w * (b.time - a.time);
  }
  const Count idx = traj.exact_start.sigma() - m;
  if (idx == 0) return traj.exact_t0;
  if (idx <= static_cast<Count>(traj.events.size())) return traj.events[static_cast<std::size_t>(idx - 1)].time;
  return std::nullopt;
}

std::optional<std::vector<double>> simplex_at_level(const Trajectory& traj, Count m) {
  if (m < 1) throw std::invalid_argument("hitting level must be >= 1");
  const double dm = static_cast<double>(m);
  if (dm > traj.initial_sigma()) return std::nullopt;
  if (!traj.coarse.empty() && m > traj.exact_start.sigma()) {
    const auto j = first_coarse_at_or_below(traj, dm);
    if (j == traj.coarse.size()) return std::nullopt;
    if (j == 0) return traj.coarse[0].r;
    const Snapshot& a = traj.coarse[j - 1];
    const Snapshot& b = traj.coarse[j];
    const double w = interpolation_weight(a.sigma, b.sigma, dm);
    std::vector<double> r(traj.k);
    for (std::size_t i = 0; i < traj.k; ++i) r[i] = a.r[i] + w * (b.r[i] - a.r[i]);
    return r;
  }
  const Count idx = traj.exact_start.sigma() - m;
  if (idx > static_cast<Count>(traj.events.size())) return std::nullopt;
  std::vector<Count> n = traj.exact_start.counts();
  for (Count e = 0; e < idx; ++e) --n[traj.events[static_cast<std::size_t>(e)].victim];
  return BlockState(std::move(n)).simplex();
}

BlockState round_to_state(Count sigma, std::span<const double> r) {
  if (sigma < 1) throw std::invalid_argument("cannot round to a state with fewer than one block");
  const auto k = r.size();
  std::vector<Count> n(k);
  std::vector<double> remainder(k);
  Count assigned = 0;
  for (std::size_t i = 0; i < k; ++i) {
    if (!(r[i] >= 0.0)) throw std::invalid_argument("simplex coordinates must be nonnegative");
    const double exact = static_cast<double>(sigma) * r[i];
    n[i] = static_cast<Count>(std::floor(exact));
    remainder[i] = exact - static_cast<double>(n[i]);
    assigned += n[i];
  }
  // r may not sum to exactly 1 in floating point; trim any excess first.
  while (assigned > sigma) {
    auto it = std::max_element(n.begin(), n.end());
    --*it;
    --assigned;
  }
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t pos = 0; assigned < sigma; pos = (pos + 1) % k) {
    ++n[order[pos]];
    ++assigned;
  }
  return BlockState(std::move(n));
}

}  // namespace replicoal
