#include "app/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "app/config.hpp"
#include "app/output.hpp"
#include "app/svg.hpp"
#include "replicoal/analysis.hpp"
#include "replicoal/dual.hpp"
#include "replicoal/kingman.hpp"
#include "replicoal/parallel.hpp"
#include "replicoal/replicator.hpp"
#include "replicoal/simulate.hpp"
#include "replicoal/stats.hpp"

namespace replicoal::app {

using nlohmann::json;

namespace {

struct Context {
  const AppConfig& cfg;
  const CommonOptions& opts;
  std::ostream& out;

  bool csv() const { return cfg.wants("csv"); }
  bool jsonl() const { return cfg.wants("jsonl"); }
  void say(const std::string& line) const {
    if (!opts.quiet) out << line << '\n';
  }
  void table(const std::string& stem, const Table& t) const {
    for (const auto& p : write_table(opts.out, stem, t, csv(), jsonl())) say("wrote " + p.string());
  }
};

std::string vec_text(std::span<const double> v) {
  std::string s = "(";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_number(v[i]);
  return s + ")";
}

std::vector<std::string> indexed(const std::string& stem, std::size_t k) {
  std::vector<std::string> names;
  for (std::size_t i = 1; i <= k; ++i) names.push_back(stem + "_" + std::to_string(i));
  return names;
}

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

// --- ess / ode ---------------------------------------------------------

int cmd_ess(const Context& ctx) {
  const PayoffMatrix payoff = ctx.cfg.model.payoff();
  const EssResult ess = ess_fixed_point(payoff, EssMode::relaxed);
  json doc;
  doc["x_star"] = ess.x_star.coords();
  doc["c"] = ess.c;
  doc["residual"] = ess.residual;
  doc["interior"] = ess.interior;
  if (ess.interior) {
    const EssReport rep = verify_ess(payoff, ess.x_star, 1e-2, 10'000, ctx.cfg.run.seed);
    doc["stability"] = {{"pass", rep.pass},
                        {"min_gap", rep.min_gap},
                        {"radius_used", rep.radius_used},
                        {"radius_shrunk", rep.radius_shrunk},
                        {"samples", rep.samples}};
  }
  ctx.say("x* = " + vec_text(ess.x_star.coords()));
  ctx.say("c = " + format_number(ess.c));
  ctx.say("residual = " + format_number(ess.residual));
  ctx.say(std::string("interior = ") + (ess.interior ? "true" : "false"));
  if (doc.contains("stability")) {
    ctx.say(std::string("stability check = ") + (doc["stability"]["pass"].get<bool>() ? "pass" : "fail") +
            " (min gap " + format_number(doc["stability"]["min_gap"].get<double>()) + ")");
  }
  write_text(ctx.opts.out / "ess.json", doc.dump(2) + "\n");
  return kOk;
}

int cmd_ode(const Context& ctx) {
  const PayoffMatrix payoff = ctx.cfg.model.payoff();
  const SimplexPoint x0 = run_r0(ctx.cfg);
  const OdePath path = integrate(payoff, x0, ctx.cfg.ode.horizon, ctx.cfg.ode.step, ctx.cfg.ode.record_every);
  Table t;
  t.header = concat({"t"}, indexed("x", payoff.k()));
  for (std::size_t j = 0; j < path.times.size(); ++j) {
    std::vector<Cell> row{path.times[j]};
    for (double v : path.points[j].coords()) row.emplace_back(v);
    t.add(std::move(row));
  }
  ctx.table("ode", t);
  return kOk;
}

// --- simulate ----------------------------------------------------------

Trajectory simulate_one(const AppConfig& cfg, const RateMatrix& rates, std::size_t run) {
  const RunConfig& r = cfg.run;
  if (r.method == "exact") {
    ExactOptions eo;
    eo.record_below = r.record_below;
    eo.snapshot_stride = r.snapshot_stride;
    return simulate_exact(rates, run_n0(cfg), r.stop, r.seed, run, eo);
  }
  if (r.method == "tau_leap") return simulate_tau_leap(rates, run_n0(cfg), r.stop, r.seed, run, r.tau_options());
  if (r.method == "fluid") {
    FluidOptions fo;
    fo.step = r.fluid_step;
    return fluid_trajectory(simulate_fluid(rates, FluidState{r.sigma0, run_r0(cfg)}, r.stop, fo));
  }
  if (r.n0) return simulate_hybrid(rates, run_n0(cfg), r.stop, r.seed, run, r.hybrid_options());
  return simulate_hybrid(rates, FluidState{r.sigma0, run_r0(cfg)}, r.stop, r.seed, run, r.hybrid_options());
}

Table trajectory_table(const Trajectory& traj, std::size_t every) {
  Table t;
  t.header = concat({"t", "sigma"}, indexed("r", traj.k));
  auto add = [&](double time, double sigma, std::span<const double> r) {
    std::vector<Cell> row{time, sigma};
    for (double v : r) row.emplace_back(v);
    t.add(std::move(row));
  };
  for (const auto& s : traj.coarse) add(s.time, s.sigma, s.r);
  const bool ended_in_prefix = !traj.coarse.empty() && traj.events.empty() && traj.exact_t0 >= traj.end_time;
  if (ended_in_prefix) return t;
  std::vector<Count> n = traj.exact_start.counts();
  Count sigma = traj.exact_start.sigma();
  std::vector<double> r(traj.k);
  auto fill_r = [&] {
    for (std::size_t i = 0; i < traj.k; ++i) r[i] = static_cast<double>(n[i]) / static_cast<double>(sigma);
  };
  fill_r();
  if (traj.coarse.empty() || traj.coarse.back().time < traj.exact_t0 ||
      traj.coarse.back().sigma != static_cast<double>(sigma)) {
    add(traj.exact_t0, static_cast<double>(sigma), r);
  }
  double last_time = traj.exact_t0;
  for (std::size_t e = 0; e < traj.events.size(); ++e) {
    --n[traj.events[e].victim];
    --sigma;
    if ((e + 1) % every == 0 || e + 1 == traj.events.size()) {
      fill_r();
      add(traj.events[e].time, static_cast<double>(sigma), r);
      last_time = traj.events[e].time;
    }
  }
  if (traj.end_time > last_time) {
    fill_r();
    add(traj.end_time, static_cast<double>(sigma), r);
  }
  return t;
}

const char* reason_name(StopReason r) {
  switch (r) {
    case StopReason::hit_sigma:
      return "hit_sigma";
    case StopReason::max_time:
      return "max_time";
    case StopReason::absorbed:
      return "absorbed";
    case StopReason::max_clock:
      return "max_clock";
  }
  return "?";
}

int cmd_simulate(const Context& ctx) {
  const RateMatrix& rates = ctx.cfg.model.require_rates("simulate");
  const std::size_t n = ctx.cfg.run.n_runs;
  const auto tables = run_indexed(n, ctx.opts.threads, [&](std::size_t run) {
    const Trajectory traj = simulate_one(ctx.cfg, rates, run);
    char line[200];
    std::snprintf(line, sizeof line, "run %zu: end t = %.10g, sigma = %.10g, stop = %s", run, traj.end_time,
                  traj.events.empty() && !traj.coarse.empty() && traj.exact_t0 >= traj.end_time
                      ? traj.coarse.back().sigma
                      : static_cast<double>(traj.final_sigma()),
                  reason_name(traj.reason));
    return std::make_pair(trajectory_table(traj, ctx.cfg.output.event_every), std::string(line));
  });
  for (std::size_t run = 0; run < n; ++run) {
    char stem[32];
    std::snprintf(stem, sizeof stem, "trajectory_%03zu", run);
    ctx.say(tables[run].second);
    ctx.table(n == 1 ? "trajectory" : stem, tables[run].first);
  }
  return kOk;
}

// --- ensembles ---------------------------------------------------------

EnsembleOptions ensemble_options(const Context& ctx) {
  EnsembleOptions eo;
  eo.hybrid = ctx.cfg.run.hybrid_options();
  eo.ode_step = ctx.cfg.ode.step;
  eo.threads = ctx.opts.threads;
  return eo;
}

int cmd_ensemble(const Context& ctx) {
  const RateMatrix& rates = ctx.cfg.model.require_rates("ensemble");
  const SimplexPoint r0 = run_r0(ctx.cfg);
  if (!r0.interior()) throw ConfigError("run.r0", "ensemble needs an interior starting point");
  std::vector<double> grid = ctx.cfg.ensemble.grid;
  if (grid.empty()) {
    if (!(ctx.cfg.run.sigma0 > ctx.cfg.ensemble.sigma_min)) {
      throw ConfigError("ensemble.sigma_min", "must be below run.sigma0");
    }
    grid = admissible_tau_grid(rates, ctx.cfg.run.sigma0, r0, ctx.cfg.ensemble.sigma_min, ctx.cfg.ensemble.grid_points);
  }
  const EnsembleSummary s =
      ensemble_vs_ode(rates, ctx.cfg.run.sigma0, r0, ctx.cfg.run.n_runs, grid, ctx.cfg.run.seed, ensemble_options(ctx));
  const std::size_t k = rates.k();
  Table t;
  t.header = concat(concat({"t_tau"}, indexed("mean_abs_err", k)), concat(indexed("stderr", k), {"n_runs"}));
  for (std::size_t g = 0; g < s.grid.size(); ++g) {
    std::vector<Cell> row{s.grid[g]};
    for (double v : s.mean_abs_err[g]) row.emplace_back(v);
    for (double v : s.std_error[g]) row.emplace_back(v);
    row.emplace_back(static_cast<std::int64_t>(s.n_runs));
    t.add(std::move(row));
  }
  ctx.say("runs used " + std::to_string(s.n_runs) + ", excluded " + std::to_string(s.n_excluded));
  for (std::size_t i = 0; i < k; ++i) {
    ctx.say("sup mean |R_" + std::to_string(i + 1) + " - x_" + std::to_string(i + 1) +
            "| = " + format_number(s.sup_mean_abs_err(i)));
  }
  ctx.table("ensemble", t);
  return kOk;
}

int cmd_bottleneck(const Context& ctx) {
  const RateMatrix& rates = ctx.cfg.model.require_rates("bottleneck");
  const std::size_t k = rates.k();
  std::vector<std::vector<double>> starts = ctx.cfg.bottleneck.r0_list;
  if (starts.empty()) starts.push_back(run_r0(ctx.cfg).coords());
  for (Count m : ctx.cfg.bottleneck.levels) {
    if (static_cast<double>(m) > ctx.cfg.run.sigma0) throw ConfigError("bottleneck.levels", "levels exceed run.sigma0");
  }
  const EssResult ess = ess_fixed_point(payoff_from_rates(rates));
  ctx.say("x* = " + vec_text(ess.x_star.coords()));
  Table t;
  t.header = concat(concat(concat({"r0_index"}, indexed("r0", k)), {"m"}),
                    concat(concat(indexed("mean_abs_err", k), indexed("stderr", k)), {"n_runs"}));
  for (std::size_t s = 0; s < starts.size(); ++s) {
    const auto stats = bottleneck_stat(rates, ctx.cfg.run.sigma0, SimplexPoint(starts[s], 1e-9),
                                       ctx.cfg.bottleneck.levels, ctx.cfg.run.n_runs, ctx.cfg.run.seed + s,
                                       ensemble_options(ctx));
    for (const auto& b : stats) {
      std::vector<Cell> row{static_cast<std::int64_t>(s)};
      for (double v : starts[s]) row.emplace_back(v);
      row.emplace_back(static_cast<std::int64_t>(b.m));
      for (double v : b.mean_abs_err) row.emplace_back(v);
      for (double v : b.std_error) row.emplace_back(v);
      row.emplace_back(static_cast<std::int64_t>(b.n_runs));
      t.add(std::move(row));
      ctx.say("r0 " + vec_text(starts[s]) + " m = " + std::to_string(b.m) + ": " + vec_text(b.mean_abs_err));
    }
  }
  ctx.table("bottleneck", t);
  return kOk;
}

// --- kingman -----------------------------------------------------------

int cmd_kingman(const Context& ctx) {
  const KingmanConfig& kc = ctx.cfg.kingman;
  const KingmanChain chain(kc.rate_c, kc.n0);
  const Count lowest = *std::min_element(kc.levels.begin(), kc.levels.end());
  const auto betas = run_indexed(kc.n_runs, ctx.opts.threads, [&](std::size_t run) {
    const DeathPath path = simulate_kingman(chain, StopCriterion::hit_sigma(lowest), ctx.cfg.run.seed, run);
    std::vector<double> b;
    for (Count m : kc.levels) b.push_back(*path.beta(m));
    return b;
  });
  Table t;
  t.header = {"quantity", "parameter", "expected", "empirical", "std_error", "n_runs"};
  for (std::size_t l = 0; l < kc.levels.size(); ++l) {
    Moments mom;
    for (const auto& b : betas) mom.add(b[l]);
    const double expected = expected_beta(chain, kc.levels[l]);
    t.add({std::string("beta"), static_cast<double>(kc.levels[l]), expected, mom.mean, mom.std_error(),
           static_cast<std::int64_t>(kc.n_runs)});
    ctx.say("E beta_" + std::to_string(kc.levels[l]) + ": expected " + format_number(expected) + ", empirical " +
            format_number(mom.mean) + " +- " + format_number(mom.std_error()));
  }
  if (!kc.eps.empty()) {
    const KingmanChain big(kc.rate_c, kc.n0_large);
    const auto est = coming_down_constant(big, kc.eps, kc.coming_down_runs, ctx.cfg.run.seed, ctx.opts.threads);
    for (const auto& e : est) {
      t.add({std::string("eps_nu"), e.eps, 2.0 / kc.rate_c, e.mean, e.std_error,
             static_cast<std::int64_t>(kc.coming_down_runs)});
      ctx.say("eps nu(eps) at eps = " + format_number(e.eps) + ": " + format_number(e.mean) + " +- " +
              format_number(e.std_error) + " (limit " + format_number(2.0 / kc.rate_c) + ")");
    }
  }
  ctx.table("kingman", t);
  return kOk;
}

// --- dual --------------------------------------------------------------

int cmd_dual(const Context& ctx) {
  const RateMatrix& rates = ctx.cfg.model.require_rates("dual-check");
  const DualConfig& dc = ctx.cfg.dual;
  if (dc.eta.empty()) throw ConfigError("dual.eta", "missing required value");
  const BlockState eta(dc.eta);
  if (dc.m >= eta.sigma()) throw ConfigError("dual.m", "must be below sigma(eta)");
  DualOptions options;
  options.max_states_per_level = dc.max_states_per_level;
  const HittingLaws laws = hitting_laws(rates, eta, dc.m, options);
  const HFunction h = h_from_law(laws, rates);
  const QIdentityReport q = verify_q_identity(rates, eta, dc.m, options);
  const double residual = otherhand_residual(laws, h, rates);
  double mass_error = 0.0;
  for (const auto& level : laws.levels) mass_error = std::max(mass_error, std::abs(level.total() - 1.0));

  json doc;
  doc["eta"] = dc.eta;
  doc["m"] = dc.m;
  doc["max_relative_error"] = q.max_relative_error;
  doc["states_checked"] = q.states_checked;
  doc["levels_checked"] = {q.lowest_level, q.highest_level};
  doc["otherhand_residual"] = residual;
  doc["level_mass_error"] = mass_error;
  ctx.say("instance: eta = " + json(dc.eta).dump() + ", m = " + std::to_string(dc.m));
  ctx.say("q identity: max relative error " + format_number(q.max_relative_error) + " over " +
          std::to_string(q.states_checked) + " states");
  ctx.say("h consistency residual " + format_number(residual));

  if (dc.mc_runs > 0) {
    const auto finals = run_indexed(dc.mc_runs, ctx.opts.threads, [&](std::size_t run) {
      return simulate_exact(rates, eta, StopCriterion::hit_sigma(dc.m), ctx.cfg.run.seed, run).final_state().counts();
    });
    std::map<StateKey, double> freq;
    for (const auto& n : finals) freq[n] += 1.0 / static_cast<double>(dc.mc_runs);
    const LevelDistribution& exact = laws.at(dc.m);
    double tv = 0.0;
    for (const auto& [n, p] : exact.probs) tv += std::abs(p - (freq.count(n) ? freq[n] : 0.0));
    for (const auto& [n, p] : freq) {
      if (!exact.probs.count(n)) tv += p;
    }
    tv *= 0.5;
    doc["mc_runs"] = dc.mc_runs;
    doc["mc_total_variation"] = tv;
    ctx.say("Monte Carlo law at level " + std::to_string(dc.m) + ": total variation " + format_number(tv));
  }
  Table t;
  t.header = concat({"level"}, concat(indexed("n", rates.k()), {"probability", "h"}));
  for (const auto& level : laws.levels) {
    for (const auto& [n, p] : level.probs) {
      std::vector<Cell> row{static_cast<std::int64_t>(level.level)};
      for (Count c : n) row.emplace_back(static_cast<std::int64_t>(c));
      row.emplace_back(p);
      row.emplace_back(h(n));
      t.add(std::move(row));
    }
  }
  ctx.table("dual_laws", t);
  write_text(ctx.opts.out / "dual.json", doc.dump(2) + "\n");
  return kOk;
}

// --- plot --------------------------------------------------------------

int cmd_plot(const Context& ctx) {
  const RateMatrix& rates = ctx.cfg.model.require_rates("plot");
  if (rates.k() != 3) throw ConfigError("model.k", "plot needs k = 3");
  const PlotConfig& pc = ctx.cfg.plot;
  std::vector<std::vector<double>> starts = pc.r0_list;
  if (starts.empty()) {
    starts = {{0.90, 0.05, 0.05}, {0.05, 0.90, 0.05}, {0.05, 0.05, 0.90},
              {0.45, 0.45, 0.10}, {0.10, 0.45, 0.45}, {0.45, 0.10, 0.45}};
  }
  const EssResult ess = ess_fixed_point(payoff_from_rates(rates));
  HybridOptions ho = ctx.cfg.run.hybrid_options();
  ho.fluid.record_every = std::max<std::size_t>(ho.fluid.record_every, 10);
  ho.exact.record_below = std::max(ho.exact.record_below, ho.switch_sigma);
  StopCriterion stop = ctx.cfg.run.stop;

  struct Result {
    PlotPath path;
    double closest = std::numeric_limits<double>::infinity();
    double closest_sigma = 0.0;
  };
  const auto results = run_indexed(starts.size(), ctx.opts.threads, [&](std::size_t i) {
    const Trajectory traj =
        simulate_hybrid(rates, FluidState{pc.sigma0, SimplexPoint(starts[i], 1e-9)}, stop, ctx.cfg.run.seed, i, ho);
    Result res;
    auto visit = [&](double sigma, std::span<const double> r, bool keep) {
      if (sigma >= pc.check_sigma) {
        const double d = l1_distance(r, ess.x_star.coords());
        if (d < res.closest) {
          res.closest = d;
          res.closest_sigma = sigma;
        }
      }
      if (keep) {
        res.path.sigma.push_back(sigma);
        res.path.r.push_back({r[0], r[1], r[2]});
      }
    };
    for (const auto& s : traj.coarse) visit(s.sigma, s.r, true);
    std::vector<Count> n = traj.exact_start.counts();
    Count sigma = traj.exact_start.sigma();
    std::vector<double> r(3);
    for (std::size_t e = 0; e < traj.events.size(); ++e) {
      --n[traj.events[e].victim];
      --sigma;
      for (std::size_t j = 0; j < 3; ++j) r[j] = static_cast<double>(n[j]) / static_cast<double>(sigma);
      // thin to roughly 40 points per decade
      const bool keep = sigma < 50 || e % static_cast<std::size_t>(std::max<Count>(1, sigma / 40)) == 0 ||
                        e + 1 == traj.events.size();
      visit(static_cast<double>(sigma), r, keep);
    }
    return res;
  });

  std::vector<PlotPath> paths;
  json check;
  check["x_star"] = ess.x_star.coords();
  check["check_sigma"] = pc.check_sigma;
  check["check_radius"] = pc.check_radius;
  bool all = true;
  for (std::size_t i = 0; i < results.size(); ++i) {
    paths.push_back(results[i].path);
    const bool ok = results[i].closest <= pc.check_radius;
    all = all && ok;
    check["paths"].push_back({{"r0", starts[i]},
                              {"closest_l1", results[i].closest},
                              {"at_sigma", results[i].closest_sigma},
                              {"within_radius", ok}});
    ctx.say("path " + std::to_string(i) + " from " + vec_text(starts[i]) + ": closest L1 distance to x* " +
            format_number(results[i].closest) + " at sigma " + format_number(results[i].closest_sigma));
  }
  check["all_within_radius"] = all;
  const std::array<double, 3> xs{ess.x_star[0], ess.x_star[1], ess.x_star[2]};
  write_text(ctx.opts.out / "plot.svg", barycentric_svg(paths, xs, pc.size));
  write_text(ctx.opts.out / "plot_check.json", check.dump(2) + "\n");
  ctx.say(std::string("all paths within ") + format_number(pc.check_radius) + " of x* at sigma >= " +
          format_number(pc.check_sigma) + ": " + (all ? "yes" : "no"));
  ctx.say("wrote " + (ctx.opts.out / "plot.svg").string());
  return kOk;
}

using Handler = int (*)(const Context&);

const std::map<std::string, Handler>& handlers() {
  static const std::map<std::string, Handler> table{
      {"ess", cmd_ess},           {"ode", cmd_ode},           {"simulate", cmd_simulate},
      {"ensemble", cmd_ensemble}, {"bottleneck", cmd_bottleneck}, {"kingman-check", cmd_kingman},
      {"dual-check", cmd_dual},   {"plot", cmd_plot}};
  return table;
}

}  // namespace

int run_command(const std::string& command, const CommonOptions& options, std::ostream& out, std::ostream& err) {
  const auto it = handlers().find(command);
  if (it == handlers().end()) {
    err << "error: unknown command '" << command << "'\n";
    return kConfigError;
  }
  try {
    if (options.config.empty()) throw ConfigError("--config", "a configuration file is required");
    const AppConfig cfg = load_config(options.config, options.seed);
    std::error_code ec;
    std::filesystem::create_directories(options.out, ec);
    if (ec) throw ConfigError("--out", "cannot create '" + options.out.string() + "': " + ec.message());
    write_text(options.out / "effective_config.json", cfg.effective.dump(2) + "\n");
    const Context ctx{cfg, options, out};
    return it->second(ctx);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return kNumericalError;
  } catch (const std::invalid_argument& e) {
    err << "config error: run: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
}

int main(int argc, char** argv) {
  CLI::App app{"Replicator coalescent simulation and analysis"};
  app.fallthrough();
  app.require_subcommand(1);
  CommonOptions opts;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  unsigned threads = 0;
  auto* seed_opt = app.add_option("--seed", seed, "Override run.seed");
  app.add_option("--config", opts.config, "Configuration file (JSON)");
  app.add_option("--out", out_dir, "Output directory");
  auto* threads_opt = app.add_option("--threads", threads, "Worker threads (default: REPLICOAL_THREADS or 1)");
  app.add_flag("--quiet", opts.quiet, "Suppress progress text");
  for (const auto& [name, handler] : handlers()) app.add_subcommand(name, "");
  app.get_subcommand("ess")->description("Fixed point x*, c and residual of the payoff matrix");
  app.get_subcommand("ode")->description("Replicator trajectory as CSV");
  app.get_subcommand("simulate")->description("Simulate block-count trajectories");
  app.get_subcommand("ensemble")->description("Time-changed ensemble against the replicator solution");
  app.get_subcommand("bottleneck")->description("Distance of r at the hitting time of level m from x*");
  app.get_subcommand("kingman-check")->description("Kingman chain closed forms against Monte Carlo");
  app.get_subcommand("dual-check")->description("Exact hitting laws and the dual-chain rate identity");
  app.get_subcommand("plot")->description("Barycentric SVG of hybrid runs for k = 3");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }
  if (seed_opt->count() > 0) opts.seed = seed;
  if (threads_opt->count() > 0) {
    opts.threads = threads;
  } else if (const char* env = std::getenv("REPLICOAL_THREADS")) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end == env || *end != '\0') {
      std::cerr << "config error: REPLICOAL_THREADS: expected a non-negative integer\n";
      return kConfigError;
    }
    opts.threads = static_cast<unsigned>(v);
  }
  opts.out = out_dir;
  const std::string command = app.get_subcommands().front()->get_name();
  return run_command(command, opts, std::cout, std::cerr);
}

}  // namespace replicoal::app
