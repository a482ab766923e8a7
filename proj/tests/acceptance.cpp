// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <string>

#include "coevo/coevo.hpp"

using namespace coevo;

namespace {

// Pinned tolerances.
constexpr double kTcTarget = 0.36, kTcTol = 0.01;
constexpr double kSpectrumMatchTol = 1e-6;
constexpr double kBlockZeroTol = 1e-7;
constexpr double kPureTol = 1e-6;
constexpr double kUnstableTol = 1e-8;
constexpr double kDiagonalTol = 1e-8;
constexpr double kMotifFraction = 0.95;
constexpr double kOrderFactor = 3.0;

const PayoffSpec kCoordination{4, -2, 1, 0, 0};  // reduced (5, -2, 1)
const PayoffSpec kPd{3, 0, 5, 1, 0};             // reduced (-1, -1, 4), b22 + C_I = 1

struct Outcome {
  bool pass = false;
  std::string detail;
};

template <class... Args>
std::string str(Args&&... args) {
  std::ostringstream os;
  os.precision(6);
  (os << ... << args);
  return os.str();
}

Outcome critical_temperature_value() {
  const auto tc = critical_temperature(reduce(effective_matrix(kCoordination)), 3);
  if (!tc) return {false, "no critical temperature found"};
  return {std::abs(*tc - kTcTarget) <= kTcTol, str("T_c = ", *tc, " (target ", kTcTarget, " +/- ", kTcTol, ")")};
}

Outcome root_count_bifurcation() {
  const auto g = reduce(effective_matrix(kCoordination));
  const auto low = symmetric_fixed_point(g, 3, 0.2).size();
  const auto high = symmetric_fixed_point(g, 3, 0.5).size();
  double flip = -1.0;
  for (int k = 0; k <= 3000; ++k) {
    const double t = 0.2 + 1e-4 * k;
    if (symmetric_fixed_point(g, 3, t).size() == 1) {
      flip = t;
      break;
    }
  }
  const bool ok = low == 3 && high == 1 && std::abs(flip - kTcTarget) <= kTcTol;
  return {ok, str("roots at T=0.2: ", low, ", at T=0.5: ", high, ", count drops to 1 at T = ", flip)};
}

Outcome analytic_spectrum_oracle() {
  // Draw (a, d, b22 + C_I, T, p) and solve for b so that p is a symmetric root.
  Rng rng(derive_seed(1, "acceptance-sym3", 0));
  int accepted = 0, draws = 0;
  double worst = 0.0;
  while (accepted < 100) {
    ++draws;
    const double a = rng.uniform(-10, 10), d = rng.uniform(-5, 5), a22 = rng.uniform(-3, 3);
    const double t = rng.uniform(0, 1), p = rng.uniform(0.05, 0.95);
    const double b = 2 * t * std::log(p / (1 - p)) - a * p;
    if (b < -5 || b > 5) continue;
    ++accepted;
    const FlowParams fp{{a, b, d}, a22, t};
    RestPoint rp;
    if (t > 0.0) {
      Eigen::VectorXd u = Eigen::VectorXd::Zero(independent_dim(3));
      u.tail(3).setConstant(std::log(p / (1 - p)));
      rp = make_rest_point_from_logits(u, 3, fp);
    } else {
      rp = make_rest_point(CoevolState::symmetric(3, p), fp);
    }
    const auto ana = jacobian_analytic_sym3(p, fp.game, a22, 0.0, t).eigenvalues;
    const double dist = spectrum_distance(spectrum(jacobian_numeric(rp, fp)), Spectrum(ana.begin(), ana.end()));
    worst = std::max(worst, dist);
  }
  return {worst < kSpectrumMatchTol, str("max deviation ", worst, " over 100 draws (", draws, " proposals)")};
}

Outcome zero_temperature_structure() {
  int points = 0, violations = 0, pure = 0, pure_violations = 0, symmetric = 0, trace_violations = 0;
  double worst = 0.0, worst_trace = 0.0;
  for (const auto& spec : {kPd, kCoordination}) {
    const auto fp = make_flow_params(spec, 0.0);
    for (const auto& rp : find_rest_points(fp, 3, 40, 5).points) {
      const auto j = jacobian_numeric(rp, fp);
      const auto blocks = split_blocks(j, 3);
      const double j21 = blocks.strategies_links.cwiseAbs().maxCoeff();
      const bool is_pure = ((rp.state.p.array() < 1e-9) || (rp.state.p.array() > 1 - 1e-9)).all();
      ++points;
      worst = std::max(worst, j21);
      violations += j21 >= kBlockZeroTol;
      if (is_pure) {
        ++pure;
        pure_violations += j21 >= kBlockZeroTol;
      }
      if (match_configuration(rp.state) == Configuration::SymmetricUniform) {
        ++symmetric;
        const double tr = std::abs(blocks.links_links.trace());
        worst_trace = std::max(worst_trace, tr);
        trace_violations += tr >= kBlockZeroTol;
      }
    }
  }
  return {violations == 0 && trace_violations == 0 && symmetric > 0,
          str("|J21|max < ", kBlockZeroTol, " at ", points - violations, "/", points, " rest points (worst ", worst,
              "; pure-strategy points ", pure - pure_violations, "/", pure, "), link trace ok at ",
              symmetric - trace_violations, "/", symmetric, " symmetric points (worst ", worst_trace, ")")};
}

Outcome mixed_equilibrium_instability() {
  std::string detail;
  bool ok = true;
  for (const ReducedGame g : {ReducedGame{5, -2, 1}, ReducedGame{-5, 2, 0}}) {
    const FlowParams fp{g, 1.0, 0.0};
    const auto rep = classify_stability(make_rest_point(CoevolState::symmetric(3, *mixed_ne(g)), fp), fp);
    ok = ok && rep.classification == Stability::Unstable;
    detail += str("(", g.a, ",", g.b, ") ", to_string(rep.classification), " max Re ", rep.max_real, "; ");
  }
  return {ok, detail};
}

Outcome pure_strategy_outcomes() {
  const auto fp = make_flow_params(kCoordination, 0.0);
  int pure = 0, converged = 0;
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    OdeControls ctl;
    ctl.sample_stride = 1e3;
    const auto traj = integrate(random_interior(3, derive_seed(6, "acceptance-pure", i)), fp, 1e3, ctl);
    converged += traj.converged();
    const auto& p = traj.final_state().p;
    const double dev = p.cwiseMin((1.0 - p.array()).matrix()).maxCoeff();
    worst = std::max(worst, dev);
    pure += dev < kPureTol;
  }
  return {pure == 200, str(pure, "/200 runs end with every p within ", kPureTol, " of {0,1} (", converged,
                           " converged; worst distance ", worst, ")")};
}

Outcome configuration_recovery() {
  const auto fp = make_flow_params(kPd, 0.0);
  std::map<Configuration, std::set<Stability>> seen;
  for (const auto& rp : find_rest_points(fp, 3, 40, 7).points) {
    seen[match_configuration(rp.state)].insert(classify_stability(rp, fp).classification);
  }
  auto has = [&](Configuration c, Stability s) { return seen.count(c) && seen[c].count(s); };
  const bool all_four = seen.count(Configuration::PairPlusIsolated) && seen.count(Configuration::Star) &&
                        seen.count(Configuration::SymmetricUniform) &&
                        seen.count(Configuration::CyclicNonReciprocated);
  const bool ok = all_four && has(Configuration::PairPlusIsolated, Stability::MarginallyStable) &&
                  has(Configuration::Star, Stability::MarginallyStable) &&
                  seen[Configuration::SymmetricUniform] == std::set<Stability>{Stability::Unstable};
  std::string detail;
  for (const auto& [c, classes] : seen) {
    detail += std::string(to_string(c)) + ":";
    for (auto s : classes) detail += " " + std::string(to_string(s));
    detail += "; ";
  }
  return {ok, detail};
}

Outcome star_stability() {
  const auto fp = make_flow_params(kPd, 0.0);
  double worst_real = -1e300, worst_diag = 0.0;
  for (int n : {4, 5}) {
    Eigen::VectorXd w(n);
    w[0] = 0.0;
    for (int k = 1; k < n; ++k) w[k] = static_cast<double>(k) / (n * (n - 1) / 2);
    const auto rp = make_rest_point(star_state(n, 0, 0.0, w), fp);
    const auto j = jacobian_numeric(rp, fp);
    worst_real = std::max(worst_real, max_real_part(spectrum(j)));
    const auto ana = star_stability_analytic(n, fp.game, fp.a22, 0.0, w);
    Eigen::VectorXd expected(n);
    expected[0] = fp.game.b;
    for (int k = 1; k < n; ++k) expected[k] = fp.game.b * w[k];
    worst_diag = std::max(worst_diag, (ana.strategy_diagonal - expected).cwiseAbs().maxCoeff());
    worst_diag = std::max(worst_diag, (split_blocks(j, n).strategies.diagonal() - expected).cwiseAbs().maxCoeff());
  }
  return {worst_real <= kUnstableTol && worst_diag < kDiagonalTol,
          str("max Re ", worst_real, ", J22 diagonal deviation ", worst_diag)};
}

Outcome motif_statistics() {
  BasinOptions opt;
  const auto r = basin_sample(kPd, 5, 0.01, 500, 7, opt);
  int small = 0, strict = 0;
  for (const auto& t : r.outcomes) {
    if (!t.converged) continue;
    bool only = true, no_isolated = true;
    for (const auto& m : t.census.components) {
      only = only && (m.label == MotifLabel::Pair || m.label == MotifLabel::Star || m.label == MotifLabel::Isolated);
      no_isolated = no_isolated && m.label != MotifLabel::Isolated;
    }
    small += only;
    strict += only && no_isolated;
  }
  // Frequency per trial of a star of each size, with a pair counted as S_2.
  std::map<int, int> by_size;
  for (const auto& m : r.motifs) {
    if (m.label == "Pair") by_size[2] += m.count;
    if (m.label.rfind("Star(", 0) == 0) by_size[std::stoi(m.label.substr(5))] += m.count;
  }
  bool decreasing = by_size.size() >= 2;
  std::string sizes;
  int prev = -1;
  for (const auto& [k, c] : by_size) {
    if (prev >= 0 && c >= prev) decreasing = false;
    prev = c;
    sizes += str(" S", k, "=", c);
  }
  const double frac = r.converged > 0 ? static_cast<double>(small) / r.converged : 0.0;
  return {frac >= kMotifFraction && decreasing,
          str("converged ", r.converged, "/", r.trials, ", star/pair/isolated partitions ", frac,
              " (without isolated agents ", r.converged > 0 ? static_cast<double>(strict) / r.converged : 0.0,
              "), trials containing:", sizes)};
}

Outcome discrete_continuous_consistency() {
  const double temp = 0.2, horizon = 10.0;
  const auto payoff = effective_matrix(kPd);
  const auto base = random_qstate(3, 0.1, temp, derive_seed(10, "acceptance-q", 0));
  const auto q0 = policies(base);
  std::vector<double> gaps;
  const std::vector<double> alphas{0.1, 0.03, 0.01};
  for (double alpha : alphas) {
    auto qs = base;
    qs.alpha = alpha;
    const double dt = alpha / temp;
    const auto steps = static_cast<std::size_t>(std::llround(horizon / dt));
    const auto discrete = run(qs, payoff, steps, 1);
    OdeControls ctl;
    ctl.local_tol = 1e-11;
    ctl.sample_stride = dt;
    ctl.equilibrium_tol = 0.0;
    const auto ode = integrate_joint(q0, payoff, temp, static_cast<double>(steps) * dt, ctl);
    double gap = 0.0;
    const std::size_t m = std::min(discrete.trace.size(), ode.states.size());
    for (std::size_t k = 0; k < m; ++k) {
      const auto a = to_full(project(discrete.trace[k])), b = to_full(project(ode.states[k]));
      gap = std::max(gap, (a - b).cwiseAbs().maxCoeff());
    }
    gaps.push_back(gap);
  }
  bool monotone = true;
  for (std::size_t i = 1; i < gaps.size(); ++i) monotone = monotone && gaps[i] < gaps[i - 1];
  double lo = 1e300, hi = 0.0;
  for (std::size_t i = 0; i < gaps.size(); ++i) {
    lo = std::min(lo, gaps[i] / alphas[i]);
    hi = std::max(hi, gaps[i] / alphas[i]);
  }
  return {monotone && hi / lo <= kOrderFactor,
          str("sup gaps ", gaps[0], ", ", gaps[1], ", ", gaps[2], "; gap/alpha spread ", hi / lo)};
}

Outcome stability_region_geometry() {
  const auto ts = linear_grid(0.02, 1.0, 50);
  const auto cs = linear_grid(-6.0, 3.0, 91);
  const auto r = sweep_plane(kCoordination, 3, ts, cs, 11, 1, 20);
  const double tc = *critical_temperature(reduce(effective_matrix(kCoordination)), 3);
  bool above = false;
  std::size_t row_half = 0;
  for (std::size_t it = 0; it < ts.size(); ++it) {
    if (ts[it] > tc && r.principal_extent(it) > 0.0) above = true;
    if (std::abs(ts[it] - 0.5) < std::abs(ts[row_half] - 0.5)) row_half = it;
  }
  std::size_t cells = 0;
  for (bool b : r.principal_region) cells += b;
  const double cold = r.principal_extent(0), warm = r.principal_extent(row_half);
  return {cells > 0 && above && cold < warm && r.spot_mismatches == 0,
          str("principal region ", cells, " cells; C_I extent ", cold, " at T=", ts[0], ", ", warm, " at T=",
              ts[row_half], "; spot checks ", r.spot_checks - r.spot_mismatches, "/", r.spot_checks)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"critical temperature", critical_temperature_value},
      {"root-count bifurcation", root_count_bifurcation},
      {"three-player analytic spectrum", analytic_spectrum_oracle},
      {"zero-temperature block structure", zero_temperature_structure},
      {"mixed equilibrium instability", mixed_equilibrium_instability},
      {"pure-strategy outcomes", pure_strategy_outcomes},
      {"equilibrium configurations", configuration_recovery},
      {"star stability", star_stability},
      {"motif statistics", motif_statistics},
      {"discrete-continuous consistency", discrete_continuous_consistency},
      {"stability-region geometry", stability_region_geometry},
  };
  int failed = 0, index = 0;
  for (const auto& [name, check] : criteria) {
    ++index;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failed += !o.pass;
    std::printf("%s %2d %-34s %8.2fs  %s\n", o.pass ? "PASS" : "FAIL", index, name.c_str(), secs, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%d criteria passed\n", index - failed, index);
  return failed == 0 ? 0 : 1;
}
