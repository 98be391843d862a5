#ifndef REPLICOAL_APP_CONFIG_HPP
#define REPLICOAL_APP_CONFIG_HPP

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "replicoal/model.hpp"
#include "replicoal/simulate.hpp"
#include "replicoal/trajectory.hpp"

namespace replicoal::app {

/// Invalid or missing configuration; what() starts with the offending key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& key, const std::string& message) : std::runtime_error(key + ": " + message) {}
};

struct ModelConfig {
  std::size_t k = 0;
  std::optional<RateMatrix> rates;
  std::optional<PayoffMatrix> payoff_direct;

  PayoffMatrix payoff() const;
  /// Throws ConfigError when the model was given as a payoff matrix.
  const RateMatrix& require_rates(const std::string& command) const;
};

struct RunConfig {
  std::string method = "exact";  // exact | tau_leap | fluid | hybrid
  double sigma0 = 0.0;
  std::optional<std::vector<double>> r0;
  std::optional<std::vector<Count>> n0;
  StopCriterion stop = StopCriterion::absorb();
  std::uint64_t seed = 1;
  std::size_t n_runs = 1;
  Count switch_sigma = 10'000;
  double eps = 0.03;
  double fluid_step = 1e-3;
  Count record_below = 10'000;
  std::size_t snapshot_stride = 64;

  HybridOptions hybrid_options() const;
  TauLeapOptions tau_options() const;
};

struct OdeConfig {
  double horizon = 20.0;
  double step = 1e-3;
  std::size_t record_every = 1;
};

struct EnsembleConfig {
  std::vector<double> grid;  // empty: derive from sigma_min / grid_points
  std::size_t grid_points = 10;
  double sigma_min = 1e3;
};

struct BottleneckConfig {
  std::vector<Count> levels{100, 1000, 10000};
  std::vector<std::vector<double>> r0_list;
};

struct KingmanConfig {
  double rate_c = 1.0;
  Count n0 = 1000;
  std::vector<Count> levels{2, 10, 100};
  std::size_t n_runs = 10'000;
  std::vector<double> eps{1e-2, 1e-3};
  Count n0_large = 10'000'000;
  std::size_t coming_down_runs = 10;
};

struct DualConfig {
  std::vector<Count> eta;
  Count m = 2;
  std::size_t max_states_per_level = 100'000;
  std::size_t mc_runs = 0;
};

struct PlotConfig {
  std::vector<std::vector<double>> r0_list;
  double sigma0 = 1e15;
  double check_sigma = 1e3;
  double check_radius = 0.05;
  int size = 640;
};

struct OutputConfig {
  std::vector<std::string> formats{"csv"};
  std::size_t event_every = 1;
};

struct AppConfig {
  ModelConfig model;
  RunConfig run;
  OdeConfig ode;
  EnsembleConfig ensemble;
  BottleneckConfig bottleneck;
  KingmanConfig kingman;
  DualConfig dual;
  PlotConfig plot;
  OutputConfig output;

  /// Input document with every default made explicit.
  nlohmann::json effective;

  bool wants(const std::string& format) const;
};

/// Parses and validates a configuration document. `seed_override`
/// replaces run.seed (and is recorded in the effective document).
AppConfig parse_config(nlohmann::json doc, std::optional<std::uint64_t> seed_override = std::nullopt);
AppConfig load_config(const std::string& path, std::optional<std::uint64_t> seed_override = std::nullopt);

/// r0 of the run section, or n0 / sigma0 if only counts were given.
SimplexPoint run_r0(const AppConfig& cfg);
/// Integer start state: n0 if given, else sigma0 * r0 rounded.
BlockState run_n0(const AppConfig& cfg);

}  // namespace replicoal::app

#endif  // REPLICOAL_APP_CONFIG_HPP
