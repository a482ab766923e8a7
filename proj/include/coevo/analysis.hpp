#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "coevo/error.hpp"
#include "coevo/flow.hpp"
#include "coevo/game.hpp"
#include "coevo/parallel.hpp"
#include "coevo/rng.hpp"
#include "coevo/state.hpp"

namespace coevo {

inline constexpr double kRestTolerance = 1e-9;
inline constexpr double kSpectrumTolerance = 1e-8;

using Spectrum = std::vector<std::complex<double>>;

enum class Stability { Stable, MarginallyStable, Unstable };
enum class Configuration { PairPlusIsolated, Star, SymmetricUniform, CyclicNonReciprocated, Other };
enum class Chart { Auto, Raw, Logit };

inline std::string_view to_string(Stability s) {
  switch (s) {
    case Stability::Stable: return "Stable";
    case Stability::MarginallyStable: return "MarginallyStable";
    case Stability::Unstable: return "Unstable";
  }
  return "?";
}

inline std::string_view to_string(Configuration c) {
  switch (c) {
    case Configuration::PairPlusIsolated: return "PairPlusIsolated";
    case Configuration::Star: return "Star";
    case Configuration::SymmetricUniform: return "SymmetricUniform";
    case Configuration::CyclicNonReciprocated: return "CyclicNonReciprocated";
    case Configuration::Other: return "Other";
  }
  return "?";
}

/// A state where the flow vanishes. For T > 0 the logit coordinates are kept
/// alongside, since perturbed-vertex states carry links far below 1e-16.
struct RestPoint {
  CoevolState state;
  std::optional<Eigen::VectorXd> logits;
  double residual = 0.0;
  FlowParams params;
};

/// Max-norm of the raw independent-coordinate flow.
inline double flow_residual(const CoevolState& s, const FlowParams& fp) {
  return independent_field(s, fp).cwiseAbs().maxCoeff();
}

inline RestPoint make_rest_point(const CoevolState& s, const FlowParams& fp) {
  RestPoint rp{s, std::nullopt, 0.0, fp};
  if (fp.temperature > 0.0) {
    rp.logits = to_logits(s);
    rp.residual = independent_field_from_chart(*rp.logits, s.n(), fp).cwiseAbs().maxCoeff();
  } else {
    rp.residual = flow_residual(s, fp);
  }
  return rp;
}

inline RestPoint make_rest_point_from_logits(const Eigen::VectorXd& u, int n, const FlowParams& fp) {
  RestPoint rp{from_logits(u, n), u, 0.0, fp};
  rp.residual = independent_field_from_chart(u, n, fp).cwiseAbs().maxCoeff();
  return rp;
}

struct JacobianBlocks {
  Eigen::MatrixXd links_links;       // J11, n(n-2) x n(n-2)
  Eigen::MatrixXd links_strategies;  // J12
  Eigen::MatrixXd strategies_links;  // J21
  Eigen::MatrixXd strategies;        // J22, n x n
};

inline JacobianBlocks split_blocks(const Eigen::MatrixXd& j, int n) {
  const int l = n * (n - 2);
  return {j.topLeftCorner(l, l), j.topRightCorner(l, n), j.bottomLeftCorner(n, l), j.bottomRightCorner(n, n)};
}

namespace detail {

template <class Field>
Eigen::MatrixXd central_differences(Field&& f, const Eigen::VectorXd& x0) {
  const Eigen::Index dim = x0.size();
  Eigen::MatrixXd j(dim, dim);
  Eigen::VectorXd x = x0;
  for (Eigen::Index i = 0; i < dim; ++i) {
    const double h = 1e-6 * std::max(1.0, std::abs(x0[i]));
    x[i] = x0[i] + h;
    const Eigen::VectorXd fp = f(x);
    x[i] = x0[i] - h;
    const Eigen::VectorXd fm = f(x);
    x[i] = x0[i];
    j.col(i) = (fp - fm) / (2.0 * h);
  }
  return j;
}

inline double boundary_distance(const CoevolState& s) {
  double dist = 1.0;
  const int n = s.n();
  for (int x = 0; x < n; ++x) {
    dist = std::min({dist, s.p[x], 1.0 - s.p[x]});
    for (int y = 0; y < n; ++y) {
      if (y != x) dist = std::min(dist, s.c(x, y));
    }
  }
  return dist;
}

inline Chart resolve_chart(const RestPoint& rp, Chart chart) {
  if (chart != Chart::Auto) return chart;
  if (rp.params.temperature == 0.0) return Chart::Raw;
  return detail::boundary_distance(rp.state) > 1e-3 ? Chart::Raw : Chart::Logit;
}

}  // namespace detail

/// Central-difference Jacobian of the independent-coordinate flow, ordered
/// links first (J11 block) then strategies (J22 block). Raw coordinates use
/// the state directly; the logit chart is used near the boundary when T > 0.
/// Spectra agree between charts at a rest point.
inline Eigen::MatrixXd jacobian_numeric(const RestPoint& rp, const FlowParams& fp, Chart chart = Chart::Auto) {
  if (!(rp.residual < kRestTolerance)) {
    throw NotRestPoint("flow residual " + std::to_string(rp.residual) + " exceeds " + std::to_string(kRestTolerance));
  }
  const int n = rp.state.n();
  chart = detail::resolve_chart(rp, chart);
  if (chart == Chart::Logit) {
    if (!(fp.temperature > 0.0)) throw ChartDomainError("logit chart needs T > 0");
    const Eigen::VectorXd u = rp.logits ? *rp.logits : to_logits(rp.state);
    return detail::central_differences([&](const Eigen::VectorXd& v) { return chart_field(v, n, fp); }, u);
  }
  return detail::central_differences(
      [&](const Eigen::VectorXd& v) { return independent_field(from_independent(v, n), fp); },
      to_independent(rp.state));
}

inline Spectrum spectrum(const Eigen::MatrixXd& j) {
  if (j.size() == 0) return {};
  Spectrum out;
  Eigen::EigenSolver<Eigen::MatrixXd> solver(j, false);
  if (solver.info() == Eigen::Success) {
    out.assign(solver.eigenvalues().begin(), solver.eigenvalues().end());
  } else {
    // The real QR iteration occasionally stalls on exactly structured
    // matrices; the complex one uses different shifts.
    Eigen::ComplexEigenSolver<Eigen::MatrixXd> fallback(j, false);
    if (fallback.info() != Eigen::Success) throw NumericalError("eigenvalue iteration did not converge");
    out.assign(fallback.eigenvalues().begin(), fallback.eigenvalues().end());
  }
  std::sort(out.begin(), out.end(), [](auto l, auto r) {
    return l.real() != r.real() ? l.real() > r.real() : l.imag() > r.imag();
  });
  return out;
}

inline double max_real_part(const Spectrum& eig) {
  double m = -std::numeric_limits<double>::infinity();
  for (auto e : eig) m = std::max(m, e.real());
  return m;
}

/// Stable: every Re < -tol. Marginal: max Re within [-tol, tol]. Else unstable.
inline Stability classify_spectrum(const Spectrum& eig, double tol = kSpectrumTolerance) {
  const double m = max_real_part(eig);
  if (m < -tol) return Stability::Stable;
  if (m <= tol) return Stability::MarginallyStable;
  return Stability::Unstable;
}

/// Largest distance between paired eigenvalues of two equal-size multisets,
/// minimized over pairings (greedy on sorted order, then exhaustive repair for
/// small sizes).
inline double spectrum_distance(Spectrum lhs, Spectrum rhs) {
  if (lhs.size() != rhs.size()) return std::numeric_limits<double>::infinity();
  const std::size_t m = lhs.size();
  if (m == 0) return 0.0;
  auto key = [](auto l, auto r) { return l.real() != r.real() ? l.real() < r.real() : l.imag() < r.imag(); };
  std::sort(lhs.begin(), lhs.end(), key);
  std::sort(rhs.begin(), rhs.end(), key);
  if (m <= 8) {
    std::vector<std::size_t> perm(m);
    for (std::size_t i = 0; i < m; ++i) perm[i] = i;
    double best = std::numeric_limits<double>::infinity();
    do {
      double worst = 0.0;
      for (std::size_t i = 0; i < m && worst < best; ++i) worst = std::max(worst, std::abs(lhs[i] - rhs[perm[i]]));
      best = std::min(best, worst);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
  }
  // Greedy nearest matching for larger spectra.
  std::vector<bool> used(m, false);
  double worst = 0.0;
  for (const auto& l : lhs) {
    std::size_t pick = 0;
    double dist = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < m; ++k) {
      if (!used[k] && std::abs(l - rhs[k]) < dist) {
        dist = std::abs(l - rhs[k]);
        pick = k;
      }
    }
    used[pick] = true;
    worst = std::max(worst, dist);
  }
  return worst;
}

/// Coefficients and six eigenvalues of the symmetric three-player network at
/// common strategy p (links all 1/2):
///   v = (a p^2 + b p + d p + b22 + C_I)/4,  m = (a p + d)/8,
///   g = p(1-p)(a p + b)/2,                   k = a p(1-p)/4.
struct Sym3Spectrum {
  double v = 0.0;
  double m = 0.0;
  double g = 0.0;
  double k = 0.0;
  std::array<std::complex<double>, 6> eigenvalues{};
};

inline Sym3Spectrum jacobian_analytic_sym3(double p, const ReducedGame& game, double b22, double c_iso, double temperature) {
  if (!(p > 0.0 && p < 1.0)) throw InvalidInput("symmetric strategy must lie in (0, 1)");
  Sym3Spectrum s;
  const double q = p * (1.0 - p);
  s.v = (game.a * p * p + game.b * p + game.d * p + b22 + c_iso) / 4.0;
  s.m = (game.a * p + game.d) / 8.0;
  s.g = q * (game.a * p + game.b) / 2.0;
  s.k = game.a * q / 4.0;
  const double t = temperature;
  const std::complex<double> root = std::sqrt(std::complex<double>(12.0 * s.g * s.m + (s.k + s.v) * (s.k + s.v), 0.0));
  const double centre = -s.k - 2.0 * t + s.v;
  s.eigenvalues[0] = 2.0 * s.k - t;
  s.eigenvalues[1] = -t - 2.0 * s.v;
  s.eigenvalues[2] = s.eigenvalues[3] = 0.5 * (centre - root);
  s.eigenvalues[4] = s.eigenvalues[5] = 0.5 * (centre + root);
  return s;
}

/// Eigenvalues at a three-player rest point where x and y play only with each
/// other and z is isolated:
///   r_xz - r_xy, r_yz - r_yx, 0, (1-2p_x)(r_x^1 - r_x^2), (1-2p_y)(r_y^1 - r_y^2), 0
/// with r_x^1 - r_x^2 = sum_y (a p_y + b) c_xy c_yx the pure-action reward gap.
inline std::array<std::complex<double>, 6> config1_eigenvalues(const RestPoint& rp, const FlowParams& fp) {
  const auto& s = rp.state;
  if (s.n() != 3) throw TopologyMismatch("pair-plus-isolated eigenvalues need n = 3");
  constexpr double tol = 1e-8;
  int x = -1, y = -1;
  for (int i = 0; i < 3 && x < 0; ++i) {
    for (int j = i + 1; j < 3; ++j) {
      if (s.c(i, j) >= 1.0 - tol && s.c(j, i) >= 1.0 - tol) {
        x = i;
        y = j;
        break;
      }
    }
  }
  if (x < 0) throw TopologyMismatch("no pair with c_xy = c_yx = 1");
  const int z = 3 - x - y;
  auto r = [&](int from, int to) { return s.c(to, from) * match_payoff(fp, s.p[from], s.p[to]); };
  auto gap = [&](int a) {
    double total = 0.0;
    for (int b = 0; b < 3; ++b) {
      if (b != a) total += action_advantage(fp, s.p[b]) * s.c(a, b) * s.c(b, a);
    }
    return total;
  };
  return {r(x, z) - r(x, y), r(y, z) - r(y, x), 0.0,
          (1.0 - 2.0 * s.p[x]) * gap(x), (1.0 - 2.0 * s.p[y]) * gap(y), 0.0};
}

/// Name the link topology. "Connected" means c_xy c_yx > 0.99, "absent" means
/// below 1e-2.
inline Configuration match_configuration(const CoevolState& s) {
  const int n = s.n();
  constexpr double connected = 0.99, absent = 1e-2;
  if (n < 3) return Configuration::Other;
  bool uniform = true;
  for (int x = 0; x < n && uniform; ++x) {
    for (int y = 0; y < n; ++y) {
      if (y != x && std::abs(s.c(x, y) - 1.0 / (n - 1)) > 1e-6) {
        uniform = false;
        break;
      }
    }
  }
  if (uniform) return Configuration::SymmetricUniform;

  int n_connected = 0, n_absent = 0, pairs = 0;
  for (int x = 0; x < n; ++x) {
    for (int y = x + 1; y < n; ++y) {
      const double r = s.c(x, y) * s.c(y, x);
      ++pairs;
      if (r > connected) ++n_connected;
      if (r < absent) ++n_absent;
    }
  }
  if (n_absent == pairs) return Configuration::CyclicNonReciprocated;
  if (n == 3 && n_connected == 1 && n_absent == 2) return Configuration::PairPlusIsolated;

  for (int centre = 0; centre < n; ++centre) {
    bool star = true;
    for (int x = 0; x < n && star; ++x) {
      if (x == centre) continue;
      if (!(s.c(x, centre) > connected)) star = false;
      for (int y = x + 1; y < n && star; ++y) {
        if (y != centre && s.c(x, y) * s.c(y, x) >= absent) star = false;
      }
    }
    if (star) return Configuration::Star;
  }
  return Configuration::Other;
}

struct StabilityReport {
  Spectrum eigenvalues;
  Stability classification = Stability::Unstable;
  Configuration matched_configuration = Configuration::Other;
  double max_real = 0.0;
  Chart chart = Chart::Raw;
  /// max |J21| (T = 0 only); the block-triangular factorization holds when ~0.
  std::optional<double> strategies_links_max;
};

inline StabilityReport classify_stability(const RestPoint& rp, const FlowParams& fp) {
  StabilityReport rep;
  rep.chart = detail::resolve_chart(rp, Chart::Auto);
  const Eigen::MatrixXd j = jacobian_numeric(rp, fp, rep.chart);
  rep.eigenvalues = spectrum(j);
  rep.classification = classify_spectrum(rep.eigenvalues);
  rep.max_real = max_real_part(rep.eigenvalues);
  rep.matched_configuration = match_configuration(rp.state);
  if (fp.temperature == 0.0 && rp.state.n() > 2) {
    rep.strategies_links_max = split_blocks(j, rp.state.n()).strategies_links.cwiseAbs().maxCoeff();
  }
  return rep;
}

/// Star S_n with the given centre: every spoke links only to the centre, the
/// centre splits its weight by `centre_weights` (length n, zero at the
/// centre), and every agent plays `p_common`.
inline CoevolState star_state(int n, int centre, double p_common, const Eigen::VectorXd& centre_weights) {
  if (n < 3) throw InvalidInput("a star needs n >= 3");
  CoevolState s;
  s.p = Eigen::VectorXd::Constant(n, p_common);
  s.c = Eigen::MatrixXd::Zero(n, n);
  for (int x = 0; x < n; ++x) {
    if (x == centre) {
      for (int y = 0; y < n; ++y) s.c(x, y) = y == centre ? 0.0 : centre_weights[y];
    } else {
      s.c(x, centre) = 1.0;
    }
  }
  return s;
}

struct StarSpectrum {
  /// Strategy block diagonal (1-2p_x) sum_y (a p_y + b) c_xy c_yx, per agent.
  Eigen::VectorXd strategy_diagonal;
  /// Predicted link-block eigenvalues: n-2 zeros from the centre's free
  /// weights, and -(a p^2 + (b+d) p + a22) c_centre,s (n-2 times) per spoke s.
  std::vector<double> link_eigenvalues;
  int link_zero_count = 0;
};

inline StarSpectrum star_stability_analytic(int n, const ReducedGame& game, double a22, double p_common,
                                            const Eigen::VectorXd& centre_weights, int centre = 0) {
  if (p_common != 0.0 && p_common != 1.0) throw InvalidInput("star analysis needs a pure common strategy");
  if (n < 3) throw InvalidInput("a star needs n >= 3");
  const FlowParams fp{game, a22, 0.0};
  const auto s = star_state(n, centre, p_common, centre_weights);
  StarSpectrum out;
  out.strategy_diagonal.resize(n);
  for (int x = 0; x < n; ++x) {
    double total = 0.0;
    for (int y = 0; y < n; ++y) {
      if (y != x) total += action_advantage(fp, s.p[y]) * s.c(x, y) * s.c(y, x);
    }
    out.strategy_diagonal[x] = (1.0 - 2.0 * s.p[x]) * total;
  }
  const double pay = match_payoff(fp, p_common, p_common);
  for (int k = 0; k < n - 2; ++k) out.link_eigenvalues.push_back(0.0);
  out.link_zero_count = n - 2;
  for (int spoke = 0; spoke < n; ++spoke) {
    if (spoke == centre) continue;
    for (int k = 0; k < n - 2; ++k) out.link_eigenvalues.push_back(-pay * centre_weights[spoke]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Symmetric-network strategies and the critical temperature.

/// Roots u (logits) of (a sigma(u) + b)/(n-1) = T u on a 10^4-cell grid over
/// |u| <= (|a|+|b|)/((n-1)T) + 1, refined by bisection. Requires T > 0.
inline std::vector<double> symmetric_fixed_point_logits(const ReducedGame& g, int n, double temperature) {
  if (!(temperature > 0.0)) throw InvalidInput("logit roots need T > 0");
  const double s = n - 1;
  auto f = [&](double u) { return (g.a * logistic(u) + g.b) / s - temperature * u; };
  const double bound = (std::abs(g.a) + std::abs(g.b)) / (s * temperature) + 1.0;
  constexpr int cells = 10000;
  std::vector<double> roots;
  double lo = -bound;
  double f_lo = f(lo);
  for (int i = 1; i <= cells; ++i) {
    const double hi = -bound + 2.0 * bound * i / cells;
    const double f_hi = f(hi);
    if (f_lo == 0.0) {
      roots.push_back(lo);
    } else if ((f_lo < 0.0) != (f_hi < 0.0) && f_hi != 0.0) {
      double a = lo, b = hi, fa = f_lo;
      for (int it = 0; it < 200 && b - a > 1e-15 * std::max(1.0, std::abs(a)); ++it) {
        const double mid = 0.5 * (a + b);
        const double fm = f(mid);
        if ((fm < 0.0) == (fa < 0.0)) {
          a = mid;
          fa = fm;
        } else {
          b = mid;
        }
      }
      roots.push_back(0.5 * (a + b));
    }
    lo = hi;
    f_lo = f_hi;
  }
  if (f_lo == 0.0) roots.push_back(lo);
  return roots;
}

/// Common strategies p at which the uniform network is a rest point:
/// (a p + b)/(n-1) = T log(p/(1-p)). At T = 0: {0, -b/a if interior, 1}.
inline std::vector<double> symmetric_fixed_point(const ReducedGame& g, int n, double temperature) {
  if (n < 2) throw InvalidInput("need at least two agents");
  if (!(temperature >= 0.0)) throw InvalidInput("temperature must be >= 0");
  std::vector<double> out;
  if (temperature == 0.0) {
    out.push_back(0.0);
    if (auto m = mixed_ne(g)) out.push_back(*m);
    out.push_back(1.0);
    return out;
  }
  for (double u : symmetric_fixed_point_logits(g, n, temperature)) out.push_back(logistic(u));
  return out;
}

struct Tangency {
  double p = 0.0;
  double temperature = 0.0;
};

/// Solutions of the tangency system (a p + b)/(n-1) = T log(p/(1-p)),
/// a/(n-1) = T/(p(1-p)) with T > 0, seeded from sign changes on a logit grid
/// and polished by Newton on (p, T).
inline std::vector<Tangency> tangencies(const ReducedGame& g, int n) {
  std::vector<Tangency> out;
  if (!(g.a > 0.0)) return out;
  const double s = n - 1;
  auto h = [&](double u) {
    const double p = logistic(u);
    return g.a * p + g.b - g.a * p * (1.0 - p) * u;
  };
  constexpr int cells = 10000;
  constexpr double span = 40.0;
  double lo = -span, h_lo = h(lo);
  for (int i = 1; i <= cells; ++i) {
    const double hi = -span + 2.0 * span * i / cells;
    const double h_hi = h(hi);
    if ((h_lo < 0.0) != (h_hi < 0.0)) {
      double a = lo, b = hi, fa = h_lo;
      for (int it = 0; it < 200 && b - a > 1e-15; ++it) {
        const double mid = 0.5 * (a + b);
        const double fm = h(mid);
        if ((fm < 0.0) == (fa < 0.0)) {
          a = mid;
          fa = fm;
        } else {
          b = mid;
        }
      }
      double p = logistic(0.5 * (a + b));
      double t = g.a * p * (1.0 - p) / s;
      for (int it = 0; it < 8; ++it) {
        const double q = p * (1.0 - p);
        const double l = std::log(p / (1.0 - p));
        const double g1 = (g.a * p + g.b) / s - t * l;
        const double g2 = g.a / s - t / q;
        Eigen::Matrix2d jac;
        jac << g.a / s - t / q, -l,
               t * (1.0 - 2.0 * p) / (q * q), -1.0 / q;
        const Eigen::Vector2d delta = jac.fullPivLu().solve(Eigen::Vector2d(-g1, -g2));
        if (!delta.allFinite()) break;
        const double p_next = p + delta[0];
        if (!(p_next > 0.0 && p_next < 1.0)) break;
        p = p_next;
        t += delta[1];
        if (delta.cwiseAbs().maxCoeff() < 1e-15) break;
      }
      if (t > 0.0) out.push_back({p, t});
    }
    lo = hi;
    h_lo = h_hi;
  }
  return out;
}

/// Temperature above which the symmetric-strategy equation has a single root
/// (three just below). None when no tangency changes the root count.
inline std::optional<double> critical_temperature(const ReducedGame& g, int n) {
  std::optional<double> best;
  for (const auto& t : tangencies(g, n)) {
    const auto below = symmetric_fixed_point(g, n, t.temperature * (1.0 - 1e-3)).size();
    const auto above = symmetric_fixed_point(g, n, t.temperature * (1.0 + 1e-3)).size();
    if (below == 3 && above == 1 && (!best || t.temperature > *best)) best = t.temperature;
  }
  return best;
}

// ---------------------------------------------------------------------------
// Multi-start rest point search.

struct RestPointSearchOptions {
  int max_iterations = 100;
  double dedup_radius = 1e-6;
  unsigned workers = 1;
  bool structured_seeds = true;
};

struct RestPointSearch {
  std::vector<RestPoint> points;
  std::size_t attempted = 0;
  std::size_t dropped = 0;  // starts that did not converge
};

namespace detail {

template <class Field, class Project>
std::optional<Eigen::VectorXd> damped_newton(Field&& f, Eigen::VectorXd x, int max_iterations, double target,
                                             Project&& project) {
  Eigen::VectorXd fx = f(x);
  double norm = fx.cwiseAbs().maxCoeff();
  for (int it = 0; it < max_iterations && norm > target; ++it) {
    const Eigen::MatrixXd j = central_differences(f, x);
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(j);
    cod.setThreshold(1e-10);
    const Eigen::VectorXd delta = cod.solve(-fx);
    if (!delta.allFinite()) return std::nullopt;
    double lambda = 1.0;
    bool accepted = false;
    for (int halving = 0; halving <= 50; ++halving, lambda *= 0.5) {
      Eigen::VectorXd trial = x + lambda * delta;
      project(trial);
      const Eigen::VectorXd ft = f(trial);
      if (!ft.allFinite()) continue;
      const double tn = ft.cwiseAbs().maxCoeff();
      if (tn < norm) {
        x = std::move(trial);
        fx = ft;
        norm = tn;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  if (!(norm <= 1e-3) || !x.allFinite()) return std::nullopt;
  return x;
}

}  // namespace detail

/// Polish a start into a rest point. Logit chart for T > 0, raw independent
/// coordinates with projection onto the simplex at T = 0.
inline std::optional<RestPoint> newton_rest_point(const CoevolState& start, const FlowParams& fp, int max_iterations = 100) {
  const int n = start.n();
  try {
    if (fp.temperature > 0.0) {
      auto f = [&](const Eigen::VectorXd& v) { return chart_field(v, n, fp); };
      auto u = detail::damped_newton(f, to_logits(clamp_interior(start, 1e-12)), max_iterations, 1e-14,
                                     [](Eigen::VectorXd&) {});
      if (!u) return std::nullopt;
      auto rp = make_rest_point_from_logits(*u, n, fp);
      if (!(rp.residual < kRestTolerance) || !(f(*u).cwiseAbs().maxCoeff() < kRestTolerance)) return std::nullopt;
      return rp;
    }
    auto f = [&](const Eigen::VectorXd& v) { return independent_field(from_independent(v, n), fp); };
    auto project = [n](Eigen::VectorXd& v) {
      auto s = from_independent(v, n);
      project_closed(s);
      v = to_independent(s);
    };
    Eigen::VectorXd x0 = to_independent(start);
    project(x0);
    auto x = detail::damped_newton(f, x0, max_iterations, 1e-15, project);
    if (!x) return std::nullopt;
    auto rp = make_rest_point(from_independent(*x, n), fp);
    if (!(rp.residual < kRestTolerance)) return std::nullopt;
    return rp;
  } catch (const Error&) {
    return std::nullopt;
  }
}

/// Structured seeds: the uniform network at every symmetric strategy, and
/// for n = 3 every pure-strategy assignment on the pair-plus-isolated, star
/// and cyclic topologies (all labelings). For n > 3, stars on each centre.
inline std::vector<CoevolState> structured_seeds(const FlowParams& fp, int n) {
  std::vector<CoevolState> seeds;
  const double t = fp.temperature;
  const auto sym = symmetric_fixed_point(fp.game, n, t);
  for (double p : sym) seeds.push_back(CoevolState::symmetric(n, p));
  if (t == 0.0 && n <= 8) {
    for (int mask = 0; mask < (1 << n); ++mask) {
      CoevolState s = CoevolState::symmetric(n, 0.0);
      for (int x = 0; x < n; ++x) s.p[x] = (mask >> x) & 1;
      seeds.push_back(s);
    }
  }
  if (n < 3) return seeds;
  const int vertex_masks = n <= 6 ? (1 << n) : 2;
  auto with_vertex = [&](CoevolState s, int mask) {
    for (int x = 0; x < n; ++x) s.p[x] = n <= 6 ? ((mask >> x) & 1) : mask;
    return s;
  };
  if (n == 3) {
    for (int z = 0; z < 3; ++z) {
      const int x = (z + 1) % 3, y = (z + 2) % 3;
      CoevolState pair = CoevolState::symmetric(3, 0.0);
      pair.c.setZero();
      pair.c(x, y) = pair.c(y, x) = 1.0;
      pair.c(z, x) = pair.c(z, y) = 0.5;
      CoevolState star = CoevolState::symmetric(3, 0.0);
      star.c.setZero();
      star.c(x, z) = star.c(y, z) = 1.0;
      star.c(z, x) = star.c(z, y) = 0.5;
      for (int mask = 0; mask < vertex_masks; ++mask) {
        seeds.push_back(with_vertex(pair, mask));
        seeds.push_back(with_vertex(star, mask));
      }
    }
    for (int orientation = 0; orientation < 2; ++orientation) {
      CoevolState cyc = CoevolState::symmetric(3, 0.0);
      cyc.c.setZero();
      for (int x = 0; x < 3; ++x) cyc.c(x, orientation == 0 ? (x + 1) % 3 : (x + 2) % 3) = 1.0;
      for (int mask = 0; mask < vertex_masks; ++mask) seeds.push_back(with_vertex(cyc, mask));
    }
  } else {
    Eigen::VectorXd weights = Eigen::VectorXd::Constant(n, 1.0 / (n - 1));
    for (int centre = 0; centre < n; ++centre) {
      Eigen::VectorXd w = weights;
      w[centre] = 0.0;
      for (int pure = 0; pure < 2; ++pure) seeds.push_back(star_state(n, centre, pure, w));
    }
  }
  if (t > 0.0) {
    for (auto& s : seeds) s = clamp_interior(s, 1e-6);
  }
  return seeds;
}

/// Multi-start damped Newton search. Start i draws its random interior state
/// from derive_seed(seed, "rest-start", i); survivors are deduplicated in
/// start order, so the result is independent of the worker count.
inline RestPointSearch find_rest_points(const FlowParams& fp, int n, int starts, std::uint64_t seed,
                                        const RestPointSearchOptions& opt = {}) {
  if (starts < 1) throw InvalidInput("need at least one start");
  if (n < 2) throw InvalidInput("need at least two agents");
  std::vector<CoevolState> candidates;
  std::vector<std::optional<RestPoint>> found;

  // Exact symmetric roots go in directly in logit form (no clamping loss).
  std::vector<RestPoint> exact;
  if (fp.temperature > 0.0) {
    for (double u : symmetric_fixed_point_logits(fp.game, n, fp.temperature)) {
      Eigen::VectorXd v = Eigen::VectorXd::Zero(independent_dim(n));
      v.tail(n).setConstant(u);
      auto rp = make_rest_point_from_logits(v, n, fp);
      if (rp.residual < kRestTolerance) exact.push_back(std::move(rp));
    }
  }
  if (opt.structured_seeds) candidates = structured_seeds(fp, n);
  for (int i = 0; i < starts; ++i) {
    candidates.push_back(random_interior(n, derive_seed(seed, "rest-start", static_cast<std::uint64_t>(i)), 0.05));
  }
  found.resize(candidates.size());
  parallel_for(candidates.size(), opt.workers,
               [&](std::size_t i) { found[i] = newton_rest_point(candidates[i], fp, opt.max_iterations); });

  RestPointSearch out;
  out.attempted = candidates.size();
  auto is_new = [&](const RestPoint& rp) {
    const Eigen::VectorXd v = to_full(rp.state);
    for (const auto& q : out.points) {
      if ((to_full(q.state) - v).cwiseAbs().maxCoeff() < opt.dedup_radius) return false;
    }
    return true;
  };
  for (auto& rp : exact) {
    if (is_new(rp)) out.points.push_back(std::move(rp));
  }
  for (auto& f : found) {
    if (!f) {
      ++out.dropped;
      continue;
    }
    if (is_new(*f)) out.points.push_back(std::move(*f));
  }
  return out;
}

}  // namespace coevo
