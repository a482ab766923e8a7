#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "coevo/analysis.hpp"
#include "coevo/error.hpp"
#include "coevo/flow.hpp"
#include "coevo/game.hpp"
#include "coevo/integrator.hpp"
#include "coevo/parallel.hpp"
#include "coevo/rng.hpp"
#include "coevo/state.hpp"

namespace coevo {

// ---------------------------------------------------------------------------
// Motif census.

/// Converged links sit near 0 or 1, except the centre weights of a star at
/// T > 0, which hover near 1/(k-1). 0.05 keeps those spokes for k up to ~20.
inline constexpr double kDefaultReciprocity = 0.05;

enum class MotifLabel { Pair, Star, Isolated, Cyclic, Symmetric, Other };

struct Motif {
  MotifLabel label = MotifLabel::Other;
  std::vector<int> members;
  int centre = -1;  // stars only

  int size() const { return static_cast<int>(members.size()); }
};

inline std::string motif_name(const Motif& m) {
  switch (m.label) {
    case MotifLabel::Pair: return "Pair";
    case MotifLabel::Star: return "Star(" + std::to_string(m.size()) + ")";
    case MotifLabel::Isolated: return "Isolated";
    case MotifLabel::Cyclic: return "Cyclic";
    case MotifLabel::Symmetric: return "Symmetric";
    case MotifLabel::Other: return "Other";
  }
  return "?";
}

struct MotifCensus {
  std::vector<Motif> components;
  std::map<std::string, int> counts;

  /// Canonical partition name, e.g. "Pair+Star(3)".
  std::string signature() const {
    std::string out;
    for (const auto& [name, count] : counts) {
      for (int i = 0; i < count; ++i) out += (out.empty() ? "" : "+") + name;
    }
    return out;
  }
};

/// Partition agents into components of the graph with an edge x-y whenever
/// c_xy c_yx > threshold, and label each component. A uniform network is a
/// single Symmetric component; a network without reciprocated links (n >= 3)
/// is a single Cyclic component.
inline MotifCensus motif_census(const CoevolState& s, double reciprocity_threshold = kDefaultReciprocity) {
  const int n = s.n();
  MotifCensus out;
  auto record = [&](Motif m) {
    ++out.counts[motif_name(m)];
    out.components.push_back(std::move(m));
  };
  std::vector<int> everyone(n);
  for (int x = 0; x < n; ++x) everyone[x] = x;

  if (n >= 3 && (s.c - CoevolState::symmetric(n, 0.5).c).cwiseAbs().maxCoeff() < 1e-6) {
    record({MotifLabel::Symmetric, everyone});
    return out;
  }
  std::vector<std::vector<int>> adj(n);
  int edges = 0;
  for (int x = 0; x < n; ++x) {
    for (int y = x + 1; y < n; ++y) {
      if (s.c(x, y) * s.c(y, x) > reciprocity_threshold) {
        adj[x].push_back(y);
        adj[y].push_back(x);
        ++edges;
      }
    }
  }
  if (n >= 3 && edges == 0) {
    record({MotifLabel::Cyclic, everyone});
    return out;
  }
  std::vector<int> component(n, -1);
  for (int root = 0; root < n; ++root) {
    if (component[root] >= 0) continue;
    std::vector<int> members{root};
    component[root] = root;
    for (std::size_t head = 0; head < members.size(); ++head) {
      for (int y : adj[members[head]]) {
        if (component[y] < 0) {
          component[y] = root;
          members.push_back(y);
        }
      }
    }
    std::sort(members.begin(), members.end());
    const int k = static_cast<int>(members.size());
    Motif m{MotifLabel::Other, members};
    if (k == 1) {
      m.label = MotifLabel::Isolated;
    } else if (k == 2) {
      m.label = MotifLabel::Pair;
    } else {
      int internal = 0;
      for (int x : members) internal += static_cast<int>(adj[x].size());
      internal /= 2;
      for (int x : members) {
        if (static_cast<int>(adj[x].size()) == k - 1 && internal == k - 1) {
          m.label = MotifLabel::Star;
          m.centre = x;
          break;
        }
      }
    }
    record(std::move(m));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Parameter sweeps.

struct SweepPoint {
  double temperature = 0.0;
  double c_iso = 0.0;
  std::vector<RestPoint> rest_points;
  std::vector<StabilityReport> reports;
};

struct SweepResult {
  std::vector<std::string> axis_names;
  std::vector<std::vector<double>> axes;
  std::vector<SweepPoint> points;

  // Temperature sweep: whether the symmetric network has a single rest point
  // and it is Stable, per grid value.
  std::vector<bool> symmetric_stable;
  std::optional<double> critical_temperature_estimate;

  // Plane sweep, row-major over (T index, C_I index).
  std::vector<bool> mask;
  std::vector<bool> principal_region;
  std::vector<double> symmetric_max_real;
  /// Closed polyline around the principal region: lower C_I edge by
  /// increasing T, then upper edge by decreasing T.
  std::vector<std::pair<double, double>> boundary;
  int spot_checks = 0;
  int spot_mismatches = 0;

  std::size_t columns() const { return axes.size() > 1 ? axes[1].size() : 1; }
  bool stable_at(std::size_t it, std::size_t ic) const { return mask[it * columns() + ic]; }
  bool principal_at(std::size_t it, std::size_t ic) const { return principal_region[it * columns() + ic]; }

  /// C_I-extent (max - min grid value) of the principal region at T row it.
  double principal_extent(std::size_t it) const {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t ic = 0; ic < columns(); ++ic) {
      if (principal_at(it, ic)) {
        lo = std::min(lo, axes[1][ic]);
        hi = std::max(hi, axes[1][ic]);
      }
    }
    return hi >= lo ? hi - lo : 0.0;
  }
};

inline void require_grid(const std::vector<double>& grid, const char* name) {
  if (grid.empty()) throw InvalidInput(std::string(name) + " grid is empty");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) throw InvalidInput(std::string(name) + " grid must be strictly increasing");
  }
}

inline std::vector<double> linear_grid(double lo, double hi, int steps) {
  if (steps < 1) throw InvalidInput("grid needs at least one point");
  if (steps == 1) return {lo};
  std::vector<double> g(steps);
  for (int i = 0; i < steps; ++i) g[i] = lo + (hi - lo) * i / (steps - 1);
  return g;
}

/// Mean strategy of a rest point; the symmetric branch has all p equal.
inline double mean_strategy(const RestPoint& rp) { return rp.state.p.mean(); }

/// At each temperature, find and classify all rest points. A grid value counts
/// as symmetric-stable when the uniform network has a single rest point and
/// it is Stable; the T_c estimate is the midpoint of the last unstable-to-stable
/// flip along the grid.
inline SweepResult sweep_temperature(const PayoffSpec& spec, int n, const std::vector<double>& t_grid, int starts,
                                     std::uint64_t seed, unsigned workers = 1) {
  require_grid(t_grid, "temperature");
  if (t_grid.front() < 0.0) throw InvalidInput("temperatures must be >= 0");
  SweepResult out;
  out.axis_names = {"temperature"};
  out.axes = {t_grid};
  out.points.resize(t_grid.size());
  out.symmetric_stable.assign(t_grid.size(), false);
  std::vector<char> flag(t_grid.size(), 0);
  parallel_for(t_grid.size(), workers, [&](std::size_t i) {
    const auto fp = make_flow_params(spec, t_grid[i]);
    auto& pt = out.points[i];
    pt.temperature = t_grid[i];
    pt.c_iso = spec.c_iso;
    RestPointSearchOptions opt;
    auto found = find_rest_points(fp, n, starts, derive_seed(seed, "sweep-temperature", i), opt);
    int symmetric = 0;
    bool all_stable = true;
    for (auto& rp : found.points) {
      auto rep = classify_stability(rp, fp);
      if (rep.matched_configuration == Configuration::SymmetricUniform) {
        ++symmetric;
        all_stable = all_stable && rep.classification == Stability::Stable;
      }
      pt.rest_points.push_back(std::move(rp));
      pt.reports.push_back(std::move(rep));
    }
    flag[i] = symmetric == 1 && all_stable;
  });
  for (std::size_t i = 0; i < t_grid.size(); ++i) out.symmetric_stable[i] = flag[i] != 0;
  for (std::size_t i = 1; i < t_grid.size(); ++i) {
    if (!out.symmetric_stable[i - 1] && out.symmetric_stable[i]) {
      out.critical_temperature_estimate = 0.5 * (t_grid[i - 1] + t_grid[i]);
    }
  }
  return out;
}

namespace detail {

/// Spectra of the uniform network at each symmetric root; analytic for n = 3
/// and T > 0, numeric otherwise.
inline std::vector<Spectrum> symmetric_spectra(const PayoffSpec& spec, int n, double temperature, bool analytic) {
  const auto fp = make_flow_params(spec, temperature);
  std::vector<Spectrum> out;
  if (temperature == 0.0) {
    for (double p : symmetric_fixed_point(fp.game, n, 0.0)) {
      out.push_back(spectrum(jacobian_numeric(make_rest_point(CoevolState::symmetric(n, p), fp), fp)));
    }
    return out;
  }
  // Work from the logits: roots far out in the tails round to p = 1.
  for (double u : symmetric_fixed_point_logits(fp.game, n, temperature)) {
    const double p = logistic(u);
    if (analytic && n == 3 && p > 0.0 && p < 1.0) {
      const auto s = jacobian_analytic_sym3(p, fp.game, spec.b22, spec.c_iso, temperature);
      out.emplace_back(s.eigenvalues.begin(), s.eigenvalues.end());
      continue;
    }
    Eigen::VectorXd v = Eigen::VectorXd::Zero(independent_dim(n));
    v.tail(n).setConstant(u);
    out.push_back(spectrum(jacobian_numeric(make_rest_point_from_logits(v, n, fp), fp)));
  }
  return out;
}

}  // namespace detail

/// Stability of the uniform network over the (T, C_I) plane. A cell is in the
/// mask when some symmetric rest point there is Stable. The principal region
/// is the 4-connected component of the mask reaching the highest T row, and
/// `spot_checks` random cells are re-classified with the numeric Jacobian.
inline SweepResult sweep_plane(const PayoffSpec& base, int n, const std::vector<double>& t_grid,
                               const std::vector<double>& ci_grid, std::uint64_t seed, unsigned workers = 1,
                               int spot_checks = 20) {
  require_grid(t_grid, "temperature");
  require_grid(ci_grid, "isolation payoff");
  if (t_grid.front() < 0.0) throw InvalidInput("temperatures must be >= 0");
  const std::size_t rows = t_grid.size(), cols = ci_grid.size(), cells = rows * cols;
  SweepResult out;
  out.axis_names = {"temperature", "c_iso"};
  out.axes = {t_grid, ci_grid};
  out.mask.assign(cells, false);
  out.symmetric_max_real.assign(cells, 0.0);
  std::vector<char> stable(cells, 0);
  auto spec_at = [&](std::size_t ic) {
    PayoffSpec s = base;
    s.c_iso = ci_grid[ic];
    return s;
  };
  auto verdict = [](const std::vector<Spectrum>& spectra, double& best) {
    bool any = false;
    best = std::numeric_limits<double>::infinity();
    for (const auto& sp : spectra) {
      const double m = max_real_part(sp);
      best = std::min(best, m);
      any = any || classify_spectrum(sp) == Stability::Stable;
    }
    return any;
  };
  parallel_for(cells, workers, [&](std::size_t cell) {
    const std::size_t it = cell / cols, ic = cell % cols;
    double best = 0.0;
    stable[cell] = verdict(detail::symmetric_spectra(spec_at(ic), n, t_grid[it], true), best);
    out.symmetric_max_real[cell] = best;
  });
  for (std::size_t i = 0; i < cells; ++i) out.mask[i] = stable[i] != 0;

  // Principal component by flood fill from the top temperature row.
  out.principal_region.assign(cells, false);
  std::vector<std::size_t> queue;
  for (std::size_t ic = 0; ic < cols; ++ic) {
    const std::size_t cell = (rows - 1) * cols + ic;
    if (out.mask[cell]) {
      out.principal_region[cell] = true;
      queue.push_back(cell);
    }
  }
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const std::size_t it = queue[head] / cols, ic = queue[head] % cols;
    auto visit = [&](std::size_t jt, std::size_t jc) {
      const std::size_t cell = jt * cols + jc;
      if (out.mask[cell] && !out.principal_region[cell]) {
        out.principal_region[cell] = true;
        queue.push_back(cell);
      }
    };
    if (it > 0) visit(it - 1, ic);
    if (it + 1 < rows) visit(it + 1, ic);
    if (ic > 0) visit(it, ic - 1);
    if (ic + 1 < cols) visit(it, ic + 1);
  }
  std::vector<std::pair<double, double>> upper;
  for (std::size_t it = 0; it < rows; ++it) {
    std::optional<std::size_t> lo, hi;
    for (std::size_t ic = 0; ic < cols; ++ic) {
      if (out.principal_region[it * cols + ic]) {
        if (!lo) lo = ic;
        hi = ic;
      }
    }
    if (lo) {
      out.boundary.emplace_back(t_grid[it], ci_grid[*lo]);
      upper.emplace_back(t_grid[it], ci_grid[*hi]);
    }
  }
  out.boundary.insert(out.boundary.end(), upper.rbegin(), upper.rend());

  // Spot-verify against the numeric Jacobian.
  Rng rng(derive_seed(seed, "sweep-plane-spot", 0));
  const int checks = static_cast<int>(std::min<std::size_t>(spot_checks, cells));
  std::vector<char> mismatch(checks, 0);
  std::vector<std::size_t> picks(checks);
  for (auto& c : picks) c = static_cast<std::size_t>(rng.uniform() * static_cast<double>(cells)) % cells;
  parallel_for(picks.size(), workers, [&](std::size_t k) {
    const std::size_t it = picks[k] / cols, ic = picks[k] % cols;
    double best = 0.0;
    const bool numeric = verdict(detail::symmetric_spectra(spec_at(ic), n, t_grid[it], false), best);
    mismatch[k] = numeric != out.mask[picks[k]];
  });
  out.spot_checks = checks;
  out.spot_mismatches = static_cast<int>(std::count(mismatch.begin(), mismatch.end(), 1));
  return out;
}

// ---------------------------------------------------------------------------
// Basin sampling.

struct BasinEntry {
  std::string label;
  int count = 0;
  double frequency = 0.0;       // among converged trials
  double standard_error = 0.0;  // binomial
};

struct BasinTrial {
  bool converged = false;
  CoevolState final_state;
  MotifCensus census;
  double residual = 0.0;
};

struct BasinResult {
  int trials = 0;
  int converged = 0;
  int nonconverged = 0;
  /// Per partition signature ("Pair+Star(3)").
  std::vector<BasinEntry> partitions;
  /// Per component label, counted once per trial in which it occurs.
  std::vector<BasinEntry> motifs;
  std::vector<BasinTrial> outcomes;
};

struct BasinOptions {
  double horizon = 1e5;
  double reciprocity_threshold = kDefaultReciprocity;
  /// Final states must also have raw flow residual below this.
  double residual_tol = 1e-6;
  OdeControls controls{};
  unsigned workers = 1;
};

/// Integrate from `trials` random interior states (trial i seeded by
/// derive_seed(seed, "basin", i)) and tabulate the final motif censuses.
inline BasinResult basin_sample(const PayoffSpec& game, int n, double temperature, int trials, std::uint64_t seed,
                                const BasinOptions& opt = {}) {
  if (trials < 1) throw InvalidInput("need at least one trial");
  const auto fp = make_flow_params(game, temperature);
  OdeControls ctl = opt.controls;
  if (ctl.sample_stride <= 0.0) ctl.sample_stride = opt.horizon;  // endpoints only
  BasinResult out;
  out.trials = trials;
  out.outcomes.resize(trials);
  parallel_for(static_cast<std::size_t>(trials), opt.workers, [&](std::size_t i) {
    auto& trial = out.outcomes[i];
    const auto s0 = random_interior(n, derive_seed(seed, "basin", i), 0.05);
    try {
      const auto traj = integrate(s0, fp, opt.horizon, ctl);
      trial.final_state = traj.final_state();
      trial.residual = traj.logit_chart
                           ? independent_field_from_chart(traj.final_coords, n, fp).cwiseAbs().maxCoeff()
                           : flow_residual(trial.final_state, fp);
      trial.converged = traj.converged() && trial.residual < opt.residual_tol;
    } catch (const NumericalError&) {
      trial.final_state = s0;
      trial.converged = false;
    }
    trial.census = motif_census(trial.final_state, opt.reciprocity_threshold);
  });

  std::map<std::string, int> partitions, motifs;
  for (const auto& t : out.outcomes) {
    if (!t.converged) {
      ++out.nonconverged;
      continue;
    }
    ++out.converged;
    ++partitions[t.census.signature()];
    for (const auto& [name, count] : t.census.counts) ++motifs[name];
  }
  auto table = [&](const std::map<std::string, int>& counts) {
    std::vector<BasinEntry> rows;
    for (const auto& [label, count] : counts) {
      const double f = out.converged > 0 ? static_cast<double>(count) / out.converged : 0.0;
      const double se = out.converged > 0 ? std::sqrt(f * (1.0 - f) / out.converged) : 0.0;
      rows.push_back({label, count, f, se});
    }
    return rows;
  };
  out.partitions = table(partitions);
  out.motifs = table(motifs);
  return out;
}

}  // namespace coevo
