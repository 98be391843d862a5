#include "app/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace replicoal::app {

using nlohmann::json;

namespace {

/// View of one object in the document. Reads fill in defaults so that the
/// document ends up describing the effective configuration.
class Section {
 public:
  Section(json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (obj_.is_null()) obj_ = json::object();
    if (!obj_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string key(const std::string& name) const { return path_.empty() ? name : path_ + "." + name; }
  bool has(const std::string& name) const { return obj_.contains(name) && !obj_[name].is_null(); }
  json& raw(const std::string& name) { return obj_[name]; }

  template <typename T>
  T get(const std::string& name, T fallback) {
    if (!has(name)) {
      obj_[name] = fallback;
      return fallback;
    }
    return convert<T>(name);
  }

  template <typename T>
  T required(const std::string& name) {
    if (!has(name)) throw ConfigError(key(name), "missing required value");
    return convert<T>(name);
  }

  template <typename T>
  std::optional<T> optional(const std::string& name) {
    if (!has(name)) return std::nullopt;
    return convert<T>(name);
  }

  Section child(const std::string& name) { return Section(obj_[name], key(name)); }

 private:
  template <typename T>
  T convert(const std::string& name) {
    try {
      return obj_.at(name).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(key(name), std::string("wrong type (") + e.what() + ")");
    }
  }

  json& obj_;
  std::string path_;
};

std::vector<double> flatten_matrix(const json& j, const std::string& key) {
  std::vector<double> flat;
  try {
    if (!j.is_array() || j.empty()) throw ConfigError(key, "expected a non-empty array");
    if (j.front().is_array()) {
      for (const auto& row : j) {
        if (row.size() != j.size()) throw ConfigError(key, "rows must form a square matrix");
        for (const auto& v : row) flat.push_back(v.get<double>());
      }
    } else {
      for (const auto& v : j) flat.push_back(v.get<double>());
    }
  } catch (const json::exception& e) {
    throw ConfigError(key, std::string("expected numbers (") + e.what() + ")");
  }
  return flat;
}

std::size_t infer_k(std::size_t entries, const std::string& key) {
  const auto k = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(entries))));
  if (k * k != entries) throw ConfigError(key, "entry count " + std::to_string(entries) + " is not a square");
  return k;
}

void check_simplex(const std::vector<double>& r, std::size_t k, const std::string& key) {
  if (r.size() != k) throw ConfigError(key, "expected " + std::to_string(k) + " coordinates");
  double sum = 0.0;
  for (double v : r) {
    if (!(v >= 0.0)) throw ConfigError(key, "coordinates must be nonnegative");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError(key, "coordinates must sum to 1");
}

void parse_model(Section s, ModelConfig& m) {
  const bool has_c = s.has("C");
  const bool has_a = s.has("A");
  if (has_c == has_a) throw ConfigError(s.key("C"), "supply exactly one of model.C and model.A");
  const std::string name = has_c ? "C" : "A";
  const std::vector<double> flat = flatten_matrix(s.raw(name), s.key(name));
  const std::size_t k = infer_k(flat.size(), s.key(name));
  const auto k_given = s.get<std::size_t>("k", k);
  if (k_given != k) throw ConfigError(s.key("k"), "does not match the matrix size " + std::to_string(k));
  m.k = k;
  Eigen::MatrixXd mat(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) mat(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = flat[i * k + j];
  }
  if (has_c) {
    try {
      m.rates.emplace(mat);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(s.key("C"), e.what());
    }
  } else {
    if (!mat.allFinite()) throw ConfigError(s.key("A"), "entries must be finite");
    m.payoff_direct.emplace(mat);
  }
}

StopCriterion parse_stop(Section s) {
  const auto kind = s.get<std::string>("kind", "absorb");
  try {
    if (kind == "absorb") return StopCriterion::absorb();
    if (kind == "hit_sigma") return StopCriterion::hit_sigma(s.required<Count>("value"));
    if (kind == "max_time") return StopCriterion::max_time(s.required<double>("value"));
    if (kind == "max_clock") return StopCriterion::max_clock(s.required<double>("value"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(s.key("value"), e.what());
  }
  throw ConfigError(s.key("kind"), "unknown stop kind '" + kind + "' (absorb, hit_sigma, max_time, max_clock)");
}

void parse_run(Section s, RunConfig& r, std::size_t k, std::optional<std::uint64_t> seed_override) {
  r.method = s.get<std::string>("method", r.method);
  static const std::vector<std::string> methods{"exact", "tau_leap", "fluid", "hybrid"};
  if (std::find(methods.begin(), methods.end(), r.method) == methods.end()) {
    throw ConfigError(s.key("method"), "unknown method '" + r.method + "' (exact, tau_leap, fluid, hybrid)");
  }
  r.r0 = s.optional<std::vector<double>>("r0");
  if (r.r0) check_simplex(*r.r0, k, s.key("r0"));
  r.n0 = s.optional<std::vector<Count>>("n0");
  if (r.n0) {
    if (r.n0->size() != k) throw ConfigError(s.key("n0"), "expected " + std::to_string(k) + " counts");
    if (std::any_of(r.n0->begin(), r.n0->end(), [](Count c) { return c < 0; })) {
      throw ConfigError(s.key("n0"), "counts must be nonnegative");
    }
    if (std::accumulate(r.n0->begin(), r.n0->end(), Count{0}) < 1) throw ConfigError(s.key("n0"), "needs sigma >= 1");
  }
  const double default_sigma0 =
      r.n0 ? static_cast<double>(std::accumulate(r.n0->begin(), r.n0->end(), Count{0})) : 1000.0;
  r.sigma0 = s.get<double>("sigma0", default_sigma0);
  if (!(r.sigma0 >= 1.0) || !std::isfinite(r.sigma0)) throw ConfigError(s.key("sigma0"), "must be >= 1");
  r.stop = parse_stop(s.child("stop"));
  if (seed_override) s.raw("seed") = *seed_override;
  r.seed = s.get<std::uint64_t>("seed", r.seed);
  r.n_runs = s.get<std::size_t>("n_runs", r.n_runs);
  if (r.n_runs == 0) throw ConfigError(s.key("n_runs"), "must be >= 1");
  r.switch_sigma = s.get<Count>("switch_sigma", r.switch_sigma);
  if (r.switch_sigma < 2) throw ConfigError(s.key("switch_sigma"), "must be >= 2");
  r.eps = s.get<double>("eps", r.eps);
  if (!(r.eps > 0.0 && r.eps <= 0.1)) throw ConfigError(s.key("eps"), "must lie in (0, 0.1]");
  r.fluid_step = s.get<double>("fluid_step", r.fluid_step);
  if (!(r.fluid_step > 0.0)) throw ConfigError(s.key("fluid_step"), "must be positive");
  r.record_below = s.get<Count>("record_below", r.record_below);
  r.snapshot_stride = s.get<std::size_t>("snapshot_stride", r.snapshot_stride);
  if (r.snapshot_stride == 0) throw ConfigError(s.key("snapshot_stride"), "must be >= 1");
}

}  // namespace

PayoffMatrix ModelConfig::payoff() const { return rates ? payoff_from_rates(*rates) : *payoff_direct; }

const RateMatrix& ModelConfig::require_rates(const std::string& command) const {
  if (!rates) throw ConfigError("model.C", "command '" + command + "' needs a rate matrix, not a payoff matrix");
  return *rates;
}

HybridOptions RunConfig::hybrid_options() const {
  HybridOptions h;
  h.switch_sigma = switch_sigma;
  h.upper = method == "tau_leap" ? UpperMethod::tau_leap : UpperMethod::fluid;
  h.fluid.step = fluid_step;
  h.tau.eps = eps;
  h.exact.record_below = record_below;
  h.exact.snapshot_stride = snapshot_stride;
  return h;
}

TauLeapOptions RunConfig::tau_options() const {
  TauLeapOptions t;
  t.eps = eps;
  t.sigma_floor = switch_sigma;
  t.exact.record_below = record_below;
  t.exact.snapshot_stride = snapshot_stride;
  return t;
}

bool AppConfig::wants(const std::string& format) const {
  return std::find(output.formats.begin(), output.formats.end(), format) != output.formats.end();
}

AppConfig parse_config(json doc, std::optional<std::uint64_t> seed_override) {
  AppConfig cfg;
  Section root(doc, "");
  if (!root.has("model")) throw ConfigError("model", "missing required section");
  parse_model(root.child("model"), cfg.model);
  const std::size_t k = cfg.model.k;
  parse_run(root.child("run"), cfg.run, k, seed_override);

  {
    Section s = root.child("ode");
    cfg.ode.horizon = s.get<double>("horizon", cfg.ode.horizon);
    if (!(cfg.ode.horizon >= 0.0)) throw ConfigError(s.key("horizon"), "must be >= 0");
    cfg.ode.step = s.get<double>("step", cfg.ode.step);
    if (!(cfg.ode.step > 0.0)) throw ConfigError(s.key("step"), "must be positive");
    cfg.ode.record_every = s.get<std::size_t>("record_every", cfg.ode.record_every);
    if (cfg.ode.record_every == 0) throw ConfigError(s.key("record_every"), "must be >= 1");
  }
  {
    Section s = root.child("ensemble");
    cfg.ensemble.grid = s.get<std::vector<double>>("grid", {});
    for (std::size_t i = 0; i < cfg.ensemble.grid.size(); ++i) {
      if (!(cfg.ensemble.grid[i] > 0.0) || (i > 0 && cfg.ensemble.grid[i] < cfg.ensemble.grid[i - 1])) {
        throw ConfigError(s.key("grid"), "must be positive and sorted ascending");
      }
    }
    cfg.ensemble.grid_points = s.get<std::size_t>("grid_points", cfg.ensemble.grid_points);
    if (cfg.ensemble.grid_points == 0) throw ConfigError(s.key("grid_points"), "must be >= 1");
    cfg.ensemble.sigma_min = s.get<double>("sigma_min", cfg.ensemble.sigma_min);
    if (!(cfg.ensemble.sigma_min >= 2.0)) throw ConfigError(s.key("sigma_min"), "must be >= 2");
  }
  {
    Section s = root.child("bottleneck");
    cfg.bottleneck.levels = s.get<std::vector<Count>>("levels", cfg.bottleneck.levels);
    if (cfg.bottleneck.levels.empty()) throw ConfigError(s.key("levels"), "must not be empty");
    for (Count m : cfg.bottleneck.levels) {
      if (m < 2) throw ConfigError(s.key("levels"), "levels must be >= 2");
    }
    cfg.bottleneck.r0_list = s.get<std::vector<std::vector<double>>>("r0_list", {});
    for (const auto& r : cfg.bottleneck.r0_list) check_simplex(r, k, s.key("r0_list"));
  }
  {
    Section s = root.child("kingman");
    cfg.kingman.rate_c = s.get<double>("rate_c", cfg.kingman.rate_c);
    if (!(cfg.kingman.rate_c > 0.0)) throw ConfigError(s.key("rate_c"), "must be positive");
    cfg.kingman.n0 = s.get<Count>("n0", cfg.kingman.n0);
    if (cfg.kingman.n0 < 2) throw ConfigError(s.key("n0"), "must be >= 2");
    cfg.kingman.levels = s.get<std::vector<Count>>("levels", cfg.kingman.levels);
    for (Count m : cfg.kingman.levels) {
      if (m < 1 || m >= cfg.kingman.n0) throw ConfigError(s.key("levels"), "levels must satisfy 1 <= m < n0");
    }
    cfg.kingman.n_runs = s.get<std::size_t>("n_runs", cfg.kingman.n_runs);
    if (cfg.kingman.n_runs < 2) throw ConfigError(s.key("n_runs"), "must be >= 2");
    cfg.kingman.eps = s.get<std::vector<double>>("eps", cfg.kingman.eps);
    for (double e : cfg.kingman.eps) {
      if (!(e > 0.0)) throw ConfigError(s.key("eps"), "values must be positive");
    }
    cfg.kingman.n0_large = s.get<Count>("n0_large", cfg.kingman.n0_large);
    if (cfg.kingman.n0_large < 1'000'000) throw ConfigError(s.key("n0_large"), "must be >= 1e6");
    cfg.kingman.coming_down_runs = s.get<std::size_t>("coming_down_runs", cfg.kingman.coming_down_runs);
    if (cfg.kingman.coming_down_runs < 2) throw ConfigError(s.key("coming_down_runs"), "must be >= 2");
  }
  {
    Section s = root.child("dual");
    cfg.dual.eta = s.get<std::vector<Count>>("eta", {});
    if (!cfg.dual.eta.empty()) {
      if (cfg.dual.eta.size() != k) throw ConfigError(s.key("eta"), "expected " + std::to_string(k) + " counts");
      if (std::any_of(cfg.dual.eta.begin(), cfg.dual.eta.end(), [](Count c) { return c < 0; })) {
        throw ConfigError(s.key("eta"), "counts must be nonnegative");
      }
    }
    cfg.dual.m = s.get<Count>("m", cfg.dual.m);
    if (cfg.dual.m < 1) throw ConfigError(s.key("m"), "must be >= 1");
    cfg.dual.max_states_per_level = s.get<std::size_t>("max_states_per_level", cfg.dual.max_states_per_level);
    cfg.dual.mc_runs = s.get<std::size_t>("mc_runs", cfg.dual.mc_runs);
  }
  {
    Section s = root.child("plot");
    cfg.plot.r0_list = s.get<std::vector<std::vector<double>>>("r0_list", {});
    for (const auto& r : cfg.plot.r0_list) check_simplex(r, k, s.key("r0_list"));
    cfg.plot.sigma0 = s.get<double>("sigma0", cfg.plot.sigma0);
    if (!(cfg.plot.sigma0 >= 2.0) || !std::isfinite(cfg.plot.sigma0)) throw ConfigError(s.key("sigma0"), "must be >= 2");
    cfg.plot.check_sigma = s.get<double>("check_sigma", cfg.plot.check_sigma);
    cfg.plot.check_radius = s.get<double>("check_radius", cfg.plot.check_radius);
    if (!(cfg.plot.check_radius > 0.0)) throw ConfigError(s.key("check_radius"), "must be positive");
    cfg.plot.size = s.get<int>("size", cfg.plot.size);
    if (cfg.plot.size < 100) throw ConfigError(s.key("size"), "must be >= 100");
  }
  {
    Section s = root.child("output");
    cfg.output.formats = s.get<std::vector<std::string>>("formats", cfg.output.formats);
    for (const auto& f : cfg.output.formats) {
      if (f != "csv" && f != "jsonl") throw ConfigError(s.key("formats"), "unknown format '" + f + "' (csv, jsonl)");
    }
    cfg.output.event_every = s.get<std::size_t>("event_every", cfg.output.event_every);
    if (cfg.output.event_every == 0) throw ConfigError(s.key("event_every"), "must be >= 1");
  }
  cfg.effective = std::move(doc);
  return cfg;
}

AppConfig load_config(const std::string& path, std::optional<std::uint64_t> seed_override) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot open '" + path + "'");
  json doc;
  try {
    doc = json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError("--config", std::string("parse error: ") + e.what());
  }
  return parse_config(std::move(doc), seed_override);
}

SimplexPoint run_r0(const AppConfig& cfg) {
  if (cfg.run.r0) return SimplexPoint(*cfg.run.r0, 1e-9);
  if (cfg.run.n0) return SimplexPoint(BlockState(*cfg.run.n0).simplex(), 1e-9);
  throw ConfigError("run.r0", "missing (give run.r0 or run.n0)");
}

BlockState run_n0(const AppConfig& cfg) {
  if (cfg.run.n0) return BlockState(*cfg.run.n0);
  if (cfg.run.r0) {
    if (cfg.run.sigma0 > 9e18) throw ConfigError("run.sigma0", "too large for integer counts");
    return round_to_state(std::llround(cfg.run.sigma0), *cfg.run.r0);
  }
  throw ConfigError("run.n0", "missing (give run.n0 or run.r0 with run.sigma0)");
}

}  // namespace replicoal::app
