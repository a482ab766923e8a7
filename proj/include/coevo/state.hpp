#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "coevo/error.hpp"
#include "coevo/rng.hpp"

namespace coevo {

/// Factorized coevolutionary state. p[x] is the probability that agent x plays
/// action 1; c(x, y) the probability that x initiates a game with y. Rows of c
/// are distributions over partners and the diagonal is structurally zero.
struct CoevolState {
  Eigen::VectorXd p;
  Eigen::MatrixXd c;

  int n() const { return static_cast<int>(p.size()); }

  /// Uniform network (every off-diagonal c = 1/(n-1)) with a common strategy.
  static CoevolState symmetric(int n, double p_common) {
    if (n < 2) throw InvalidInput("need at least two agents");
    CoevolState s;
    s.p = Eigen::VectorXd::Constant(n, p_common);
    s.c = Eigen::MatrixXd::Constant(n, n, 1.0 / (n - 1));
    s.c.diagonal().setZero();
    return s;
  }
};

/// Index of the off-diagonal entry of row x that is eliminated by the row
/// normalization (the last one).
inline int dependent_partner(int n, int x) { return x == n - 1 ? n - 2 : n - 1; }

/// Number of independent coordinates: n(n-2) link variables + n strategies.
inline int independent_dim(int n) { return n * (n - 2) + n; }

/// Number of entries in the full raw layout: n strategies + n(n-1) links.
inline int full_dim(int n) { return n + n * (n - 1); }

struct Violation {
  std::string kind;  // "range", "diagonal", "negative", "row-sum", "non-finite"
  int agent = -1;
  double value = 0.0;
};

/// Every simplex/diagonal violation larger than tol. Empty means valid.
inline std::vector<Violation> validate(const CoevolState& s, double tol = 1e-12) {
  std::vector<Violation> out;
  const int n = s.n();
  if (n < 2 || s.c.rows() != n || s.c.cols() != n) {
    out.push_back({"shape", -1, static_cast<double>(n)});
    return out;
  }
  for (int x = 0; x < n; ++x) {
    if (!std::isfinite(s.p[x]) || !s.c.row(x).allFinite()) {
      out.push_back({"non-finite", x, s.p[x]});
      continue;
    }
    if (s.p[x] < -tol || s.p[x] > 1.0 + tol) out.push_back({"range", x, s.p[x]});
    if (std::abs(s.c(x, x)) > tol) out.push_back({"diagonal", x, s.c(x, x)});
    double sum = 0.0;
    for (int y = 0; y < n; ++y) {
      if (y == x) continue;
      if (s.c(x, y) < -tol) out.push_back({"negative", x, s.c(x, y)});
      sum += s.c(x, y);
    }
    if (std::abs(sum - 1.0) > tol) out.push_back({"row-sum", x, sum});
  }
  return out;
}

inline bool is_valid(const CoevolState& s, double tol = 1e-12) { return validate(s, tol).empty(); }

/// Deterministic interior state: p uniform on [margin, 1 - margin] and every
/// off-diagonal link at least `margin`, rows summing to one.
inline CoevolState random_interior(int n, std::uint64_t seed, double margin = 0.05) {
  if (n < 2) throw InvalidInput("need at least two agents");
  if (!(margin > 0.0 && margin < 0.5)) throw InvalidInput("margin must lie in (0, 1/2)");
  if (n > 2 && !(margin * (n - 1) < 1.0)) throw InvalidInput("margin must be below 1/(n-1)");
  Rng rng(seed);
  CoevolState s;
  s.p.resize(n);
  s.c = Eigen::MatrixXd::Zero(n, n);
  for (int x = 0; x < n; ++x) s.p[x] = rng.uniform(margin, 1.0 - margin);
  if (n == 2) {
    s.c(0, 1) = s.c(1, 0) = 1.0;
    return s;
  }
  const double free_mass = 1.0 - margin * (n - 1);
  for (int x = 0; x < n; ++x) {
    // Exponential spacings give a uniform point on the simplex.
    double total = 0.0;
    for (int y = 0; y < n; ++y) {
      if (y == x) continue;
      s.c(x, y) = -std::log1p(-rng.uniform());
      total += s.c(x, y);
    }
    for (int y = 0; y < n; ++y) {
      if (y != x) s.c(x, y) = margin + free_mass * s.c(x, y) / total;
    }
  }
  return s;
}

/// Clamp into the open interior: p into [eps, 1-eps], links up to eps, rows
/// renormalized. Used when ingesting external states for T > 0.
inline CoevolState clamp_interior(CoevolState s, double eps = 1e-9) {
  const int n = s.n();
  for (int x = 0; x < n; ++x) {
    s.p[x] = std::clamp(s.p[x], eps, 1.0 - eps);
    if (n == 2) continue;
    double sum = 0.0;
    for (int y = 0; y < n; ++y) {
      if (y == x) continue;
      s.c(x, y) = std::max(s.c(x, y), eps);
      sum += s.c(x, y);
    }
    for (int y = 0; y < n; ++y) {
      if (y != x) s.c(x, y) /= sum;
    }
  }
  return s;
}

/// Project onto the closed simplex product: clip and renormalize rows.
inline void project_closed(CoevolState& s) {
  const int n = s.n();
  for (int x = 0; x < n; ++x) {
    s.p[x] = std::clamp(s.p[x], 0.0, 1.0);
    s.c(x, x) = 0.0;
    double sum = 0.0;
    for (int y = 0; y < n; ++y) {
      if (y == x) continue;
      s.c(x, y) = std::max(s.c(x, y), 0.0);
      sum += s.c(x, y);
    }
    if (sum <= 0.0) {
      for (int y = 0; y < n; ++y) {
        if (y != x) s.c(x, y) = 1.0 / (n - 1);
      }
    } else {
      for (int y = 0; y < n; ++y) {
        if (y != x) s.c(x, y) /= sum;
      }
    }
  }
}

// Full raw layout: [p_0 .. p_{n-1}, c_0_1, c_0_2, ..., c_{n-1}_{n-2}].

inline Eigen::VectorXd to_full(const CoevolState& s) {
  const int n = s.n();
  Eigen::VectorXd v(full_dim(n));
  v.head(n) = s.p;
  int k = n;
  for (int x = 0; x < n; ++x) {
    for (int y = 0; y < n; ++y) {
      if (y != x) v[k++] = s.c(x, y);
    }
  }
  return v;
}

inline CoevolState from_full(const Eigen::VectorXd& v, int n) {
  CoevolState s;
  s.p = v.head(n);
  s.c = Eigen::MatrixXd::Zero(n, n);
  int k = n;
  for (int x = 0; x < n; ++x) {
    for (int y = 0; y < n; ++y) {
      if (y != x) s.c(x, y) = v[k++];
    }
  }
  return s;
}

// Independent layout: links first (row-major, dependent partner of each row
// skipped), then strategies. Matches the J11/J22 block order.

inline Eigen::VectorXd to_independent(const CoevolState& s) {
  const int n = s.n();
  Eigen::VectorXd v(independent_dim(n));
  int k = 0;
  for (int x = 0; x < n; ++x) {
    const int last = dependent_partner(n, x);
    for (int y = 0; y < n; ++y) {
      if (y != x && y != last) v[k++] = s.c(x, y);
    }
  }
  v.tail(n) = s.p;
  return v;
}

inline CoevolState from_independent(const Eigen::VectorXd& v, int n) {
  CoevolState s;
  s.p = v.tail(n);
  s.c = Eigen::MatrixXd::Zero(n, n);
  int k = 0;
  for (int x = 0; x < n; ++x) {
    const int last = dependent_partner(n, x);
    double sum = 0.0;
    for (int y = 0; y < n; ++y) {
      if (y != x && y != last) {
        s.c(x, y) = v[k++];
        sum += s.c(x, y);
      }
    }
    s.c(x, last) = 1.0 - sum;
  }
  return s;
}

inline double logistic(double u) {
  return u >= 0.0 ? 1.0 / (1.0 + std::exp(-u)) : std::exp(u) / (1.0 + std::exp(u));
}

/// Logit chart in the independent layout: c(x,y) -> log(c(x,y)/c(x,last)),
/// p -> log(p/(1-p)). Requires a strictly interior state.
inline Eigen::VectorXd to_logits(const CoevolState& s) {
  const int n = s.n();
  Eigen::VectorXd u(independent_dim(n));
  int k = 0;
  for (int x = 0; x < n; ++x) {
    const int last = dependent_partner(n, x);
    const double ref = s.c(x, last);
    if (!(ref > 0.0)) throw ChartDomainError("link c(" + std::to_string(x) + "," + std::to_string(last) + ") on boundary");
    for (int y = 0; y < n; ++y) {
      if (y == x || y == last) continue;
      if (!(s.c(x, y) > 0.0)) throw ChartDomainError("link c(" + std::to_string(x) + "," + std::to_string(y) + ") on boundary");
      u[k++] = std::log(s.c(x, y) / ref);
    }
  }
  for (int x = 0; x < n; ++x) {
    const double px = s.p[x];
    if (!(px > 0.0 && px < 1.0)) throw ChartDomainError("strategy p(" + std::to_string(x) + ") on boundary");
    u[k++] = std::log(px) - std::log1p(-px);
  }
  return u;
}

inline CoevolState from_logits(const Eigen::VectorXd& u, int n) {
  CoevolState s;
  s.p.resize(n);
  s.c = Eigen::MatrixXd::Zero(n, n);
  int k = 0;
  for (int x = 0; x < n; ++x) {
    const int last = dependent_partner(n, x);
    const int start = k;
    double top = 0.0;  // the dependent entry has log-ratio 0
    for (int y = 0; y < n; ++y) {
      if (y != x && y != last) top = std::max(top, u[k++]);
    }
    k = start;
    double sum = std::exp(-top);
    for (int y = 0; y < n; ++y) {
      if (y != x && y != last) {
        s.c(x, y) = std::exp(u[k++] - top);
        sum += s.c(x, y);
      }
    }
    s.c(x, last) = std::exp(-top);
    s.c.row(x) /= sum;
  }
  for (int x = 0; x < n; ++x) s.p[x] = logistic(u[k++]);
  return s;
}

/// Distribution over (partner, action) pairs for every agent:
/// q[x](y, i), row x of q[x] is zero, entries of q[x] sum to one.
struct JointStrategy {
  std::vector<Eigen::MatrixX2d> q;

  int n() const { return static_cast<int>(q.size()); }
};

/// Product form q[x](y, i) = c(x, y) * p_x^i.
inline JointStrategy factorize(const CoevolState& s) {
  const int n = s.n();
  JointStrategy j;
  j.q.assign(n, Eigen::MatrixX2d::Zero(n, 2));
  for (int x = 0; x < n; ++x) {
    for (int y = 0; y < n; ++y) {
      if (y == x) continue;
      j.q[x](y, 0) = s.c(x, y) * s.p[x];
      j.q[x](y, 1) = s.c(x, y) * (1.0 - s.p[x]);
    }
  }
  return j;
}

/// Marginals c(x, y) = sum_i q, p_x = sum_y q(y, 0).
inline CoevolState project(const JointStrategy& j) {
  const int n = j.n();
  CoevolState s;
  s.p.resize(n);
  s.c = Eigen::MatrixXd::Zero(n, n);
  for (int x = 0; x < n; ++x) {
    s.c.row(x) = j.q[x].rowwise().sum().transpose();
    s.c(x, x) = 0.0;
    s.p[x] = j.q[x].col(0).sum();
  }
  return s;
}

inline bool is_valid(const JointStrategy& j, double tol = 1e-12) {
  for (int x = 0; x < j.n(); ++x) {
    if (!j.q[x].allFinite() || (j.q[x].array() < -tol).any()) return false;
    if (j.q[x].row(x).cwiseAbs().maxCoeff() > tol) return false;
    if (std::abs(j.q[x].sum() - 1.0) > tol) return false;
  }
  return true;
}

}  // namespace coevo
