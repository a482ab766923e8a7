#pragma once

#include <array>
#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "coevo/error.hpp"
#include "coevo/game.hpp"
#include "coevo/state.hpp"

namespace coevo {

/// Reduced game, the effective a22 = b22 + C_I (needed by the link rewards)
/// and the exploration temperature T = 1/beta.
struct FlowParams {
  ReducedGame game;
  double a22 = 0.0;
  double temperature = 0.0;
};

inline FlowParams make_flow_params(const PayoffSpec& spec, double temperature) {
  if (!(temperature >= 0.0) || !std::isfinite(temperature)) throw InvalidInput("temperature must be finite and >= 0");
  return FlowParams{reduce(effective_matrix(spec)), spec.b22 + spec.c_iso, temperature};
}

/// Expected payoff of a player mixing p_own against one mixing p_other.
inline double match_payoff(const FlowParams& fp, double p_own, double p_other) {
  const auto& g = fp.game;
  return g.a * p_own * p_other + g.b * p_own + g.d * p_other + fp.a22;
}

/// Payoff advantage of action 1 over action 2 against an opponent mixing p_other.
inline double action_advantage(const FlowParams& fp, double p_other) {
  return fp.game.a * p_other + fp.game.b;
}

struct StateDerivative {
  Eigen::VectorXd dp;
  Eigen::MatrixXd dc;
};

namespace detail {

/// Selection (payoff) parts shared by every chart:
///   strategy[x] = sum_y (a p_y + b) c_xy c_yx
///   reward(x,y) = c_yx (a p_x p_y + b p_x + d p_y + a22)
struct SelectionTerms {
  Eigen::VectorXd strategy;
  Eigen::MatrixXd reward;
  Eigen::VectorXd mean_reward;  // R_x = sum_y reward(x,y) c_xy
};

inline SelectionTerms selection_terms(const CoevolState& s, const FlowParams& fp) {
  const int n = s.n();
  SelectionTerms t{Eigen::VectorXd::Zero(n), Eigen::MatrixXd::Zero(n, n), Eigen::VectorXd::Zero(n)};
  for (int x = 0; x < n; ++x) {
    for (int y = 0; y < n; ++y) {
      if (y == x) continue;
      const double recip = s.c(x, y) * s.c(y, x);
      t.strategy[x] += action_advantage(fp, s.p[y]) * recip;
      t.reward(x, y) = s.c(y, x) * match_payoff(fp, s.p[x], s.p[y]);
      t.mean_reward[x] += t.reward(x, y) * s.c(x, y);
    }
  }
  return t;
}

inline void require_interior(const CoevolState& s) {
  const int n = s.n();
  for (int x = 0; x < n; ++x) {
    if (!(s.p[x] > 0.0 && s.p[x] < 1.0)) {
      throw ChartDomainError("strategy p(" + std::to_string(x) + ") on boundary with T > 0");
    }
    for (int y = 0; y < n; ++y) {
      if (y != x && !(s.c(x, y) > 0.0)) {
        throw ChartDomainError("link c(" + std::to_string(x) + "," + std::to_string(y) + ") on boundary with T > 0");
      }
    }
  }
}

}  // namespace detail

/// Two-action coevolutionary replicator field:
///   dp_x = p_x(1-p_x) [sum_y (a p_y + b) c_xy c_yx + T log((1-p_x)/p_x)]
///   dc_xy = c_xy [r_xy - R_x + T sum_y' c_xy' log(c_xy'/c_xy)]
/// At T = 0 the state may touch the boundary; for T > 0 it must be interior.
inline StateDerivative flow_two_action(const CoevolState& s, const FlowParams& fp) {
  const int n = s.n();
  const double temp = fp.temperature;
  if (temp > 0.0) detail::require_interior(s);
  const auto sel = detail::selection_terms(s, fp);
  StateDerivative out{Eigen::VectorXd::Zero(n), Eigen::MatrixXd::Zero(n, n)};
  for (int x = 0; x < n; ++x) {
    double rate = sel.strategy[x];
    if (temp > 0.0) rate += temp * (std::log1p(-s.p[x]) - std::log(s.p[x]));
    out.dp[x] = s.p[x] * (1.0 - s.p[x]) * rate;

    double entropy = 0.0;
    if (temp > 0.0) {
      for (int y = 0; y < n; ++y) {
        if (y != x) entropy += s.c(x, y) * std::log(s.c(x, y));
      }
    }
    for (int y = 0; y < n; ++y) {
      if (y == x) continue;
      double g = sel.reward(x, y) - sel.mean_reward[x];
      if (temp > 0.0) g += temp * (entropy - std::log(s.c(x, y)));
      out.dc(x, y) = s.c(x, y) * g;
    }
  }
  return out;
}

/// Derivative in the full raw layout [p, off-diagonal c row-major].
inline Eigen::VectorXd full_field(const CoevolState& s, const FlowParams& fp) {
  const auto d = flow_two_action(s, fp);
  CoevolState tmp{d.dp, d.dc};
  return to_full(tmp);
}

/// Derivative of the independent coordinates (links then strategies).
inline Eigen::VectorXd independent_field(const CoevolState& s, const FlowParams& fp) {
  const auto d = flow_two_action(s, fp);
  const int n = s.n();
  Eigen::VectorXd v(independent_dim(n));
  int k = 0;
  for (int x = 0; x < n; ++x) {
    const int last = dependent_partner(n, x);
    for (int y = 0; y < n; ++y) {
      if (y != x && y != last) v[k++] = d.dc(x, y);
    }
  }
  v.tail(n) = d.dp;
  return v;
}

/// Vector field in the logit chart (requires T > 0 for the interior to be
/// invariant, but is well defined for any T):
///   du_xy = r_xy - r_x,last - T u_xy,    du_x = sum_y (a p_y + b) c_xy c_yx - T u_x
inline Eigen::VectorXd chart_field(const Eigen::VectorXd& u, int n, const FlowParams& fp) {
  const auto s = from_logits(u, n);
  const auto sel = detail::selection_terms(s, fp);
  Eigen::VectorXd out(u.size());
  int k = 0;
  for (int x = 0; x < n; ++x) {
    const int last = dependent_partner(n, x);
    for (int y = 0; y < n; ++y) {
      if (y == x || y == last) continue;
      out[k] = sel.reward(x, y) - sel.reward(x, last) - fp.temperature * u[k];
      ++k;
    }
  }
  for (int x = 0; x < n; ++x, ++k) out[k] = sel.strategy[x] - fp.temperature * u[k];
  return out;
}

/// Map a chart velocity du at chart point u to the raw independent-coordinate
/// velocity: dc_xy = c_xy (du_xy - sum_y' c_xy' du_xy'), dp_x = p_x(1-p_x) du_x.
inline Eigen::VectorXd raw_from_chart_velocity(const Eigen::VectorXd& u, const Eigen::VectorXd& du, int n) {
  const auto s = from_logits(u, n);
  Eigen::VectorXd v(independent_dim(n));
  int k = 0;
  for (int x = 0; x < n; ++x) {
    const int last = dependent_partner(n, x);
    const int start = k;
    double mean = 0.0;
    for (int y = 0; y < n; ++y) {
      if (y != x && y != last) mean += s.c(x, y) * du[k++];
    }
    k = start;
    for (int y = 0; y < n; ++y) {
      if (y != x && y != last) {
        v[k] = s.c(x, y) * (du[k] - mean);
        ++k;
      }
    }
  }
  for (int x = 0; x < n; ++x, ++k) v[k] = s.p[x] * (1.0 - s.p[x]) * du[k];
  return v;
}

/// Raw independent-coordinate derivative evaluated through the chart; stays
/// accurate when links are far below machine epsilon.
inline Eigen::VectorXd independent_field_from_chart(const Eigen::VectorXd& u, int n, const FlowParams& fp) {
  return raw_from_chart_velocity(u, chart_field(u, n, fp), n);
}

/// Six independent variables of the three-player system. The complementary
/// links are c_xz = 1 - c_xy, c_yx = 1 - c_yz, c_zy = 1 - c_zx.
struct ThreePlayerCoords {
  double px = 0.5, py = 0.5, pz = 0.5;
  double cxy = 0.5, cyz = 0.5, czx = 0.5;
};

inline ThreePlayerCoords three_player_coords(const CoevolState& s) {
  if (s.n() != 3) throw InvalidInput("three-player coordinates need n = 3");
  return {s.p[0], s.p[1], s.p[2], s.c(0, 1), s.c(1, 2), s.c(2, 0)};
}

inline CoevolState from_three_player(const ThreePlayerCoords& k) {
  CoevolState s;
  s.p = Eigen::Vector3d(k.px, k.py, k.pz);
  s.c = Eigen::MatrixXd::Zero(3, 3);
  s.c(0, 1) = k.cxy;
  s.c(0, 2) = 1.0 - k.cxy;
  s.c(1, 2) = k.cyz;
  s.c(1, 0) = 1.0 - k.cyz;
  s.c(2, 0) = k.czx;
  s.c(2, 1) = 1.0 - k.czx;
  return s;
}

/// The explicit three-player system written with effective weights
/// w_xy = c_xy(1-c_yz), w_xz = (1-c_xy)c_zx, w_yz = c_yz(1-c_zx).
/// Returns d/dt of (p_x, p_y, p_z, c_xy, c_yz, c_zx).
inline std::array<double, 6> flow_three_player(const ThreePlayerCoords& k, const FlowParams& fp) {
  const double temp = fp.temperature;
  auto entropic = [temp](double v) {
    if (temp == 0.0) return 0.0;
    if (!(v > 0.0 && v < 1.0)) throw ChartDomainError("three-player coordinate on boundary with T > 0");
    return temp * (std::log1p(-v) - std::log(v));
  };
  const double wxy = k.cxy * (1.0 - k.cyz);
  const double wxz = (1.0 - k.cxy) * k.czx;
  const double wyz = k.cyz * (1.0 - k.czx);
  auto adv = [&](double p) { return action_advantage(fp, p); };
  auto pay = [&](double own, double other) { return match_payoff(fp, own, other); };

  const double r_xy = (1.0 - k.cyz) * pay(k.px, k.py);
  const double r_xz = k.czx * pay(k.px, k.pz);
  const double r_yz = (1.0 - k.czx) * pay(k.py, k.pz);
  const double r_yx = k.cxy * pay(k.py, k.px);
  const double r_zx = (1.0 - k.cxy) * pay(k.pz, k.px);
  const double r_zy = k.cyz * pay(k.pz, k.py);

  std::array<double, 6> out{};
  out[0] = k.px * (1.0 - k.px) * (adv(k.py) * wxy + adv(k.pz) * wxz + entropic(k.px));
  out[1] = k.py * (1.0 - k.py) * (adv(k.pz) * wyz + adv(k.px) * wxy + entropic(k.py));
  out[2] = k.pz * (1.0 - k.pz) * (adv(k.px) * wxz + adv(k.py) * wyz + entropic(k.pz));
  out[3] = k.cxy * (1.0 - k.cxy) * (r_xy - r_xz + entropic(k.cxy));
  out[4] = k.cyz * (1.0 - k.cyz) * (r_yz - r_yx + entropic(k.cyz));
  out[5] = k.czx * (1.0 - k.czx) * (r_zx - r_zy + entropic(k.czx));
  return out;
}

/// Expected reward of x for choosing (y, action i) when everyone follows q:
/// sum_j A(i, j) q[y](x, j). Zero if y never picks x.
inline double joint_reward(const JointStrategy& q, const Eigen::Matrix2d& payoff, int x, int y, int i) {
  return payoff(i, 0) * q.q[y](x, 0) + payoff(i, 1) * q.q[y](x, 1);
}

/// Replicator field over full (partner, action) distributions:
///   dq/q = R_xy^i - sum q R + T sum q log(q / q_xy^i).
inline JointStrategy flow_joint(const JointStrategy& q, const Eigen::Matrix2d& payoff, double temperature) {
  const int n = q.n();
  JointStrategy out;
  out.q.assign(n, Eigen::MatrixX2d::Zero(n, 2));
  for (int x = 0; x < n; ++x) {
    double mean = 0.0;
    double entropy = 0.0;
    for (int y = 0; y < n; ++y) {
      if (y == x) continue;
      for (int i = 0; i < 2; ++i) {
        const double v = q.q[x](y, i);
        if (temperature > 0.0) {
          if (!(v > 0.0)) throw ChartDomainError("joint strategy on boundary with T > 0");
          entropy += v * std::log(v);
        }
        mean += v * joint_reward(q, payoff, x, y, i);
      }
    }
    for (int y = 0; y < n; ++y) {
      if (y == x) continue;
      for (int i = 0; i < 2; ++i) {
        const double v = q.q[x](y, i);
        double g = joint_reward(q, payoff, x, y, i) - mean;
        if (temperature > 0.0) g += temperature * (entropy - std::log(v));
        out.q[x](y, i) = v * g;
      }
    }
  }
  return out;
}

// Log chart for joint strategies: w = log q (unnormalized per agent), stored
// agent-major over off-diagonal (y, i) pairs.

inline int joint_dim(int n) { return n * (n - 1) * 2; }

inline JointStrategy joint_from_logs(const Eigen::VectorXd& w, int n) {
  JointStrategy j;
  j.q.assign(n, Eigen::MatrixX2d::Zero(n, 2));
  const int per = 2 * (n - 1);
  for (int x = 0; x < n; ++x) {
    const auto seg = w.segment(x * per, per);
    const double top = seg.maxCoeff();
    double sum = 0.0;
    int k = 0;
    for (int y = 0; y < n; ++y) {
      if (y == x) continue;
      for (int i = 0; i < 2; ++i) {
        j.q[x](y, i) = std::exp(seg[k++] - top);
        sum += j.q[x](y, i);
      }
    }
    j.q[x] /= sum;
  }
  return j;
}

inline Eigen::VectorXd joint_to_logs(const JointStrategy& j) {
  const int n = j.n();
  Eigen::VectorXd w(joint_dim(n));
  int k = 0;
  for (int x = 0; x < n; ++x) {
    for (int y = 0; y < n; ++y) {
      if (y == x) continue;
      for (int i = 0; i < 2; ++i) {
        if (!(j.q[x](y, i) > 0.0)) throw ChartDomainError("joint strategy on boundary");
        w[k++] = std::log(j.q[x](y, i));
      }
    }
  }
  return w;
}

/// d(log q)/dt: the per-capita growth rates of the joint replicator field.
inline Eigen::VectorXd joint_log_field(const Eigen::VectorXd& w, int n, const Eigen::Matrix2d& payoff, double temperature) {
  const auto q = joint_from_logs(w, n);
  const int per = 2 * (n - 1);
  Eigen::VectorXd out(w.size());
  for (int x = 0; x < n; ++x) {
    const auto seg = w.segment(x * per, per);
    const double top = seg.maxCoeff();
    const double lse = top + std::log((seg.array() - top).exp().sum());
    double mean = 0.0;
    double entropy = 0.0;
    int k = 0;
    for (int y = 0; y < n; ++y) {
      if (y == x) continue;
      for (int i = 0; i < 2; ++i, ++k) {
        const double v = q.q[x](y, i);
        mean += v * joint_reward(q, payoff, x, y, i);
        entropy += v * (seg[k] - lse);
      }
    }
    k = 0;
    for (int y = 0; y < n; ++y) {
      if (y == x) continue;
      for (int i = 0; i < 2; ++i, ++k) {
        out[x * per + k] = joint_reward(q, payoff, x, y, i) - mean + temperature * (entropy - (seg[k] - lse));
      }
    }
  }
  return out;
}

}  // namespace coevo
