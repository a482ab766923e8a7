// coevo: command-line front end for the coevolutionary network engine.
//
//   coevo <subcommand> [--config FILE] [--set key=value ...] [--threads N]
//
// Exit codes: 0 success, 1 configuration error, 2 numerical failure.

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "coevo/coevo.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
  unsigned threads = 1;
};

struct Extra {
  int starts = 50;
  int trials = 100;
  std::size_t steps = 1000;
  std::size_t stride = 1;
  double sample_stride = 0.0;
};

coevo::RunConfig load(const Common& common) {
  coevo::RunConfig cfg;
  if (!common.config_path.empty()) coevo::load_config(cfg, common.config_path);
  for (const auto& kv : common.overrides) coevo::apply_setting(cfg, kv);
  coevo::validate_config(cfg);
  return cfg;
}

std::string out_path(const coevo::RunConfig& cfg, const std::string& name) {
  fs::create_directories(cfg.out_dir);
  return (fs::path(cfg.out_dir) / name).string();
}

std::vector<double> grid(const coevo::GridSpec& g) { return coevo::linear_grid(g.min, g.max, g.steps); }

int cmd_integrate(const coevo::RunConfig& cfg, const Extra& ex) {
  const auto fp = coevo::make_flow_params(cfg.game, cfg.temperature);
  const auto s0 = coevo::random_interior(cfg.n, coevo::derive_seed(cfg.seed, "integrate", 0));
  auto ctl = cfg.controls();
  ctl.sample_stride = ex.sample_stride;
  const auto traj = coevo::integrate(s0, fp, cfg.horizon, ctl);
  json meta{{"converged", traj.converged()},
            {"steps", traj.stats.steps},
            {"rejected", traj.stats.rejected},
            {"final_step", traj.stats.final_step},
            {"t_final", traj.stats.t_final},
            {"seed", cfg.seed},
            {"final_state", coevo::to_json(traj.final_state())},
            {"census", coevo::motif_census(traj.final_state()).signature()}};
  coevo::write_text(out_path(cfg, "trajectory.csv"), coevo::trajectory_csv(traj));
  coevo::write_text(out_path(cfg, "trajectory.json"), meta.dump(2) + "\n");
  std::cout << "t_final " << coevo::fmt(traj.stats.t_final) << (traj.converged() ? " converged " : " not converged ")
            << meta["census"].get<std::string>() << "\n";
  return 0;
}

int cmd_simulate(const coevo::RunConfig& cfg, const Extra& ex) {
  if (!(cfg.temperature > 0.0)) throw coevo::ConfigError("simulate needs temperature > 0");
  const auto payoff = coevo::effective_matrix(cfg.game);
  const auto q0 = coevo::random_qstate(cfg.n, cfg.alpha, cfg.temperature, coevo::derive_seed(cfg.seed, "simulate", 0));
  const auto result = coevo::run(q0, payoff, ex.steps, ex.stride);
  std::string csv = "step,t" + coevo::state_header(cfg.n) + "\n";
  const double scale = cfg.alpha / cfg.temperature;
  for (std::size_t k = 0; k < result.trace.size(); ++k) {
    csv += std::to_string(result.steps[k]) + "," + coevo::fmt(static_cast<double>(result.steps[k]) * scale) +
           coevo::state_row(coevo::project(result.trace[k])) + "\n";
  }
  json meta{{"seed", cfg.seed},
            {"alpha", cfg.alpha},
            {"temperature", cfg.temperature},
            {"steps", ex.steps},
            {"final_projection", coevo::to_json(result.final_projection)}};
  coevo::write_text(out_path(cfg, "policy_trace.csv"), csv);
  coevo::write_text(out_path(cfg, "policy_trace.json"), meta.dump(2) + "\n");
  std::cout << "steps " << ex.steps << " final p " << result.final_projection.p.transpose() << "\n";
  return 0;
}

std::vector<std::pair<coevo::RestPoint, coevo::StabilityReport>> analyse(const coevo::RunConfig& cfg, const Extra& ex,
                                                                         unsigned threads) {
  const auto fp = coevo::make_flow_params(cfg.game, cfg.temperature);
  coevo::RestPointSearchOptions opt;
  opt.workers = threads;
  auto found = coevo::find_rest_points(fp, cfg.n, ex.starts, coevo::derive_seed(cfg.seed, "fixed-points", 0), opt);
  std::vector<std::pair<coevo::RestPoint, coevo::StabilityReport>> out;
  for (auto& rp : found.points) {
    auto rep = coevo::classify_stability(rp, fp);
    out.emplace_back(std::move(rp), std::move(rep));
  }
  return out;
}

int cmd_fixed_points(const coevo::RunConfig& cfg, const Extra& ex, unsigned threads) {
  const auto points = analyse(cfg, ex, threads);
  std::string csv = "id,configuration,classification,residual,max_real" + coevo::state_header(cfg.n) + "\n";
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& [rp, rep] = points[i];
    csv += std::to_string(i) + "," + std::string(coevo::to_string(rep.matched_configuration)) + "," +
           std::string(coevo::to_string(rep.classification)) + "," + coevo::fmt(rp.residual) + "," +
           coevo::fmt(rep.max_real) + coevo::state_row(rp.state) + "\n";
  }
  coevo::write_text(out_path(cfg, "rest_points.csv"), csv);
  std::cout << points.size() << " rest points\n";
  return 0;
}

int cmd_stability(const coevo::RunConfig& cfg, const Extra& ex, unsigned threads) {
  const auto points = analyse(cfg, ex, threads);
  json reports = json::array();
  for (const auto& [rp, rep] : points) {
    json j = coevo::to_json(rep);
    j["state"] = coevo::to_json(rp.state);
    j["residual"] = rp.residual;
    reports.push_back(j);
  }
  json doc{{"temperature", cfg.temperature}, {"n", cfg.n}, {"reports", reports}};
  coevo::write_text(out_path(cfg, "stability.json"), doc.dump(2) + "\n");
  int stable = 0, marginal = 0;
  for (const auto& pr : points) {
    stable += pr.second.classification == coevo::Stability::Stable;
    marginal += pr.second.classification == coevo::Stability::MarginallyStable;
  }
  std::cout << points.size() << " rest points, " << stable << " stable, " << marginal << " marginal\n";
  return 0;
}

int cmd_sweep_temperature(const coevo::RunConfig& cfg, const Extra& ex, unsigned threads) {
  const auto res = coevo::sweep_temperature(cfg.game, cfg.n, grid(cfg.grid_t), ex.starts, cfg.seed, threads);
  std::string csv = "temperature,point_id,configuration,classification,max_real,mean_p\n";
  for (const auto& pt : res.points) {
    for (std::size_t i = 0; i < pt.rest_points.size(); ++i) {
      csv += coevo::fmt(pt.temperature) + "," + std::to_string(i) + "," +
             std::string(coevo::to_string(pt.reports[i].matched_configuration)) + "," +
             std::string(coevo::to_string(pt.reports[i].classification)) + "," + coevo::fmt(pt.reports[i].max_real) +
             "," + coevo::fmt(coevo::mean_strategy(pt.rest_points[i])) + "\n";
    }
  }
  json doc{{"temperature", res.axes[0]}, {"symmetric_stable", res.symmetric_stable}};
  doc["critical_temperature_estimate"] = res.critical_temperature_estimate ? json(*res.critical_temperature_estimate) : json();
  coevo::write_text(out_path(cfg, "sweep_temperature.csv"), csv);
  coevo::write_text(out_path(cfg, "sweep_temperature.json"), doc.dump(2) + "\n");
  std::cout << "T_c estimate "
            << (res.critical_temperature_estimate ? coevo::fmt(*res.critical_temperature_estimate) : "none") << "\n";
  return 0;
}

int cmd_sweep_plane(const coevo::RunConfig& cfg, unsigned threads) {
  const auto res = coevo::sweep_plane(cfg.game, cfg.n, grid(cfg.grid_t), grid(cfg.grid_ci), cfg.seed, threads);
  std::string csv = "temperature,c_iso,stable,principal,max_real\n";
  for (std::size_t it = 0; it < res.axes[0].size(); ++it) {
    for (std::size_t ic = 0; ic < res.axes[1].size(); ++ic) {
      const std::size_t cell = it * res.columns() + ic;
      csv += coevo::fmt(res.axes[0][it]) + "," + coevo::fmt(res.axes[1][ic]) + "," +
             (res.mask[cell] ? "1" : "0") + "," + (res.principal_region[cell] ? "1" : "0") + "," +
             coevo::fmt(res.symmetric_max_real[cell]) + "\n";
    }
  }
  json boundary = json::array();
  for (const auto& [t, ci] : res.boundary) boundary.push_back({t, ci});
  json doc{{"boundary", boundary}, {"spot_checks", res.spot_checks}, {"spot_mismatches", res.spot_mismatches}};
  coevo::write_text(out_path(cfg, "sweep_plane.csv"), csv);
  coevo::write_text(out_path(cfg, "sweep_plane.json"), doc.dump(2) + "\n");
  std::cout << "stable cells " << std::count(res.mask.begin(), res.mask.end(), true) << " of " << res.mask.size()
            << ", spot mismatches " << res.spot_mismatches << "/" << res.spot_checks << "\n";
  return 0;
}

int cmd_census(const coevo::RunConfig& cfg, const Extra& ex, unsigned threads) {
  coevo::BasinOptions opt;
  opt.horizon = cfg.horizon;
  opt.controls = cfg.controls();
  opt.workers = threads;
  const auto res = coevo::basin_sample(cfg.game, cfg.n, cfg.temperature, ex.trials, cfg.seed, opt);
  std::string csv = "kind,label,count,frequency,standard_error\n";
  for (const auto& e : res.partitions) {
    csv += "partition," + e.label + "," + std::to_string(e.count) + "," + coevo::fmt(e.frequency) + "," +
           coevo::fmt(e.standard_error) + "\n";
  }
  for (const auto& e : res.motifs) {
    csv += "motif," + e.label + "," + std::to_string(e.count) + "," + coevo::fmt(e.frequency) + "," +
           coevo::fmt(e.standard_error) + "\n";
  }
  json doc{{"trials", res.trials}, {"converged", res.converged}, {"nonconverged", res.nonconverged}};
  coevo::write_text(out_path(cfg, "census.csv"), csv);
  coevo::write_text(out_path(cfg, "census.json"), doc.dump(2) + "\n");
  for (const auto& e : res.partitions) std::cout << e.label << " " << e.count << "\n";
  return 0;
}

int cmd_critical_temp(const coevo::RunConfig& cfg) {
  const auto game = coevo::reduce(coevo::effective_matrix(cfg.game));
  const auto tc = coevo::critical_temperature(game, cfg.n);
  json doc{{"a", game.a}, {"b", game.b}, {"d", game.d}, {"n", cfg.n}};
  doc["critical_temperature"] = tc ? json(*tc) : json();
  coevo::write_text(out_path(cfg, "critical_temp.json"), doc.dump(2) + "\n");
  std::cout << (tc ? coevo::fmt(*tc) : std::string("none")) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coevolutionary networks of reinforcement-learning agents"};
  app.require_subcommand(1);
  Common common;
  Extra ex;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", common.config_path, "key = value config file");
    sub->add_option("-s,--set", common.overrides, "override a config key (key=value)");
    sub->add_option("-j,--threads", common.threads, "worker threads")->check(CLI::Range(1u, 256u));
  };
  auto* integrate = app.add_subcommand("integrate", "integrate the ODE from a seeded random state");
  add_common(integrate);
  integrate->add_option("--stride", ex.sample_stride, "sampling interval in scaled time (0 = every step)");
  auto* simulate = app.add_subcommand("simulate", "discrete Q-learning run");
  add_common(simulate);
  simulate->add_option("--steps", ex.steps, "learning steps");
  simulate->add_option("--stride", ex.stride, "record every k-th step")->check(CLI::PositiveNumber);
  auto* fixed = app.add_subcommand("fixed-points", "multi-start rest point search");
  add_common(fixed);
  fixed->add_option("--starts", ex.starts, "random starts")->check(CLI::PositiveNumber);
  auto* stability = app.add_subcommand("stability", "rest points with full spectra");
  add_common(stability);
  stability->add_option("--starts", ex.starts, "random starts")->check(CLI::PositiveNumber);
  auto* sweep_t = app.add_subcommand("sweep-temperature", "rest points over the temperature grid");
  add_common(sweep_t);
  sweep_t->add_option("--starts", ex.starts, "random starts per grid value")->check(CLI::PositiveNumber);
  auto* sweep_p = app.add_subcommand("sweep-plane", "symmetric stability over the (T, C_I) grid");
  add_common(sweep_p);
  auto* census = app.add_subcommand("census", "motif census of converged random starts");
  add_common(census);
  census->add_option("--trials", ex.trials, "random starts")->check(CLI::PositiveNumber);
  auto* critical = app.add_subcommand("critical-temp", "critical temperature of the symmetric network");
  add_common(critical);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  coevo::RunConfig cfg;
  try {
    cfg = load(common);
  } catch (const coevo::Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (*integrate) return cmd_integrate(cfg, ex);
    if (*simulate) return cmd_simulate(cfg, ex);
    if (*fixed) return cmd_fixed_points(cfg, ex, common.threads);
    if (*stability) return cmd_stability(cfg, ex, common.threads);
    if (*sweep_t) return cmd_sweep_temperature(cfg, ex, common.threads);
    if (*sweep_p) return cmd_sweep_plane(cfg, common.threads);
    if (*census) return cmd_census(cfg, ex, common.threads);
    if (*critical) return cmd_critical_temp(cfg);
  } catch (const coevo::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const coevo::InvalidInput& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return 1;
  } catch (const coevo::Error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
