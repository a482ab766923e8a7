#pragma once

#include <cmath>
#include <cstddef>
#include <algorithm>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "coevo/error.hpp"
#include "coevo/rng.hpp"
#include "coevo/state.hpp"

namespace coevo {

/// Stateless Q-learning agents. q[x](y, i) is agent x's value for playing
/// action i with partner y; row x of q[x] is unused.
struct QState {
  std::vector<Eigen::MatrixX2d> q;
  double alpha = 0.05;
  double temperature = 0.1;

  int n() const { return static_cast<int>(q.size()); }
};

inline void check_qstate(const QState& qs) {
  if (qs.n() < 2) throw InvalidInput("need at least two agents");
  if (!(qs.alpha > 0.0 && qs.alpha <= 1.0)) throw InvalidInput("learning rate must lie in (0, 1]");
  if (!(qs.temperature > 0.0) || !std::isfinite(qs.temperature)) {
    throw InvalidInput("Boltzmann selection needs a finite temperature T > 0");
  }
}

/// Q-values drawn uniformly from [-0.1, 0.1].
inline QState random_qstate(int n, double alpha, double temperature, std::uint64_t seed) {
  QState qs;
  qs.alpha = alpha;
  qs.temperature = temperature;
  qs.q.assign(n, Eigen::MatrixX2d::Zero(n, 2));
  Rng rng(seed);
  for (int x = 0; x < n; ++x) {
    for (int y = 0; y < n; ++y) {
      if (y == x) continue;
      for (int i = 0; i < 2; ++i) qs.q[x](y, i) = rng.uniform(-0.1, 0.1);
    }
  }
  check_qstate(qs);
  return qs;
}

/// Q-values whose Boltzmann policy is exactly the factorized state s:
/// Q = T log(c p) (up to a per-agent constant). Requires an interior state.
inline QState qstate_from_state(const CoevolState& s, double alpha, double temperature) {
  QState qs;
  qs.alpha = alpha;
  qs.temperature = temperature;
  const int n = s.n();
  qs.q.assign(n, Eigen::MatrixX2d::Zero(n, 2));
  for (int x = 0; x < n; ++x) {
    if (!(s.p[x] > 0.0 && s.p[x] < 1.0)) throw ChartDomainError("strategy on boundary");
    for (int y = 0; y < n; ++y) {
      if (y == x) continue;
      if (!(s.c(x, y) > 0.0)) throw ChartDomainError("link on boundary");
      qs.q[x](y, 0) = temperature * std::log(s.c(x, y) * s.p[x]);
      qs.q[x](y, 1) = temperature * std::log(s.c(x, y) * (1.0 - s.p[x]));
    }
  }
  check_qstate(qs);
  return qs;
}

/// Boltzmann distribution of agent x over all (partner, action) pairs.
inline Eigen::MatrixX2d policy(const QState& qs, int x) {
  if (!(qs.temperature > 0.0)) throw InvalidInput("Boltzmann selection needs T > 0");
  const int n = qs.n();
  const double beta = 1.0 / qs.temperature;
  double top = -std::numeric_limits<double>::infinity();
  for (int y = 0; y < n; ++y) {
    if (y != x) top = std::max(top, qs.q[x].row(y).maxCoeff());
  }
  Eigen::MatrixX2d out = Eigen::MatrixX2d::Zero(n, 2);
  double sum = 0.0;
  for (int y = 0; y < n; ++y) {
    if (y == x) continue;
    for (int i = 0; i < 2; ++i) {
      out(y, i) = std::exp(beta * (qs.q[x](y, i) - top));
      sum += out(y, i);
    }
  }
  return out / sum;
}

inline JointStrategy policies(const QState& qs) {
  JointStrategy j;
  j.q.reserve(qs.n());
  for (int x = 0; x < qs.n(); ++x) j.q.push_back(policy(qs, x));
  return j;
}

/// Average reward of x for (partner y, action i): sum_j A(i, j) q[y](x, j).
/// An agent that y never selects earns nothing from y.
inline double expected_reward(const JointStrategy& pol, int x, int y, int i, const Eigen::Matrix2d& payoff) {
  return payoff(i, 0) * pol.q[y](x, 0) + payoff(i, 1) * pol.q[y](x, 1);
}

/// One synchronous expected-reward update Q <- Q + alpha (R - Q).
inline QState step(const QState& qs, const Eigen::Matrix2d& payoff) {
  const auto pol = policies(qs);
  QState next = qs;
  const int n = qs.n();
  for (int x = 0; x < n; ++x) {
    for (int y = 0; y < n; ++y) {
      if (y == x) continue;
      for (int i = 0; i < 2; ++i) {
        next.q[x](y, i) += qs.alpha * (expected_reward(pol, x, y, i, payoff) - qs.q[x](y, i));
      }
    }
  }
  return next;
}

struct QRun {
  std::vector<std::size_t> steps;
  std::vector<JointStrategy> trace;
  QState final_q;
  /// Marginals c = sum_i q, p = sum_y q(., 0) of the final policy.
  CoevolState final_projection;
};

/// Iterate `step`, recording the joint policy every `stride` steps (and at
/// the last step). Scaled time of step k is k * alpha / T.
inline QRun run(const QState& qs0, const Eigen::Matrix2d& payoff, std::size_t steps, std::size_t stride = 1) {
  check_qstate(qs0);
  if (stride == 0) stride = 1;
  QRun out;
  QState qs = qs0;
  out.steps.push_back(0);
  out.trace.push_back(policies(qs));
  for (std::size_t k = 1; k <= steps; ++k) {
    qs = step(qs, payoff);
    for (const auto& m : qs.q) {
      if (!m.allFinite() || m.cwiseAbs().maxCoeff() > 1e12) {
        throw NumericalError("Q-values diverged at step " + std::to_string(k));
      }
    }
    if (k % stride == 0 || k == steps) {
      out.steps.push_back(k);
      out.trace.push_back(policies(qs));
    }
  }
  out.final_projection = project(out.trace.back());
  out.final_q = std::move(qs);
  return out;
}

}  // namespace coevo
