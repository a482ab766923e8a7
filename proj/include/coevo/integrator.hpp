#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <sstream>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "coevo/error.hpp"
#include "coevo/flow.hpp"
#include "coevo/state.hpp"

namespace coevo {

struct OdeControls {
  double local_tol = 1e-9;
  double equilibrium_tol = 1e-10;
  /// Sampling interval in scaled time; 0 records every accepted step.
  double sample_stride = 0.0;
  double initial_step = 1e-2;
  double min_step = 1e-14;
  double max_step = std::numeric_limits<double>::infinity();
  std::size_t max_steps = 100'000'000;
};

struct OdeStats {
  std::size_t steps = 0;
  std::size_t rejected = 0;
  double final_step = 0.0;
  double t_final = 0.0;
  bool converged = false;
};

namespace detail {

inline std::string describe(const Eigen::VectorXd& y) {
  std::ostringstream os;
  os.precision(6);
  os << '[';
  const Eigen::Index shown = std::min<Eigen::Index>(y.size(), 12);
  for (Eigen::Index i = 0; i < shown; ++i) os << (i ? ", " : "") << y[i];
  if (shown < y.size()) os << ", ...";
  os << ']';
  return os.str();
}

}  // namespace detail

/// Dormand-Prince 4(5) with FSAL and mixed absolute/relative error control.
///
/// `field(y)` returns dy/dt. `project(y)` may modify y after an accepted step
/// and returns true if it did. `sample(t, y)` is called at t0, at every
/// multiple of the stride, and at the final time. Integration stops early once
/// residual(y, field(y)) < equilibrium_tol.
template <class Field, class Project, class Sample, class Residual>
OdeStats dopri45(Field&& field, Eigen::VectorXd& y, double t0, double t_end, const OdeControls& ctl,
                 Project&& project, Sample&& sample, Residual&& residual) {
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                   a65 = -5103.0 / 18656;
  constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                   e6 = 22.0 / 525, e7 = -1.0 / 40;
  // Fields are autonomous, so the stage times c_i are not needed.

  auto eval = [&](const Eigen::VectorXd& v) {
    Eigen::VectorXd d = field(v);
    if (!d.allFinite()) throw NumericalError("non-finite vector field at state " + detail::describe(v));
    return d;
  };

  OdeStats stats;
  double t = t0;
  double h = std::min(ctl.initial_step, t_end - t0);
  Eigen::VectorXd k1 = eval(y);
  sample(t, y);

  const bool strided = ctl.sample_stride > 0.0;
  std::size_t next_index = 1;
  auto next_sample = [&]() { return strided ? t0 + static_cast<double>(next_index) * ctl.sample_stride : t_end; };

  if (residual(y, k1) < ctl.equilibrium_tol) {
    stats.converged = true;
    stats.t_final = t;
    return stats;
  }

  Eigen::VectorXd k2, k3, k4, k5, k6, k7, y_new, tmp;
  while (t < t_end) {
    if (stats.steps >= ctl.max_steps) throw NumericalError("step budget exhausted at t=" + std::to_string(t));
    const double target = std::min(next_sample(), t_end);
    bool hits_target = false;
    double step = std::min(h, ctl.max_step);
    if (t + step >= target) {
      step = target - t;
      hits_target = true;
    }
    if (step < ctl.min_step * std::max(1.0, std::abs(t))) {
      throw StiffnessError("step size underflow (h=" + std::to_string(step) + ") at t=" + std::to_string(t) +
                           " state " + detail::describe(y));
    }

    tmp = y + step * a21 * k1;
    k2 = eval(tmp);
    tmp = y + step * (a31 * k1 + a32 * k2);
    k3 = eval(tmp);
    tmp = y + step * (a41 * k1 + a42 * k2 + a43 * k3);
    k4 = eval(tmp);
    tmp = y + step * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    k5 = eval(tmp);
    tmp = y + step * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    k6 = eval(tmp);
    y_new = y + step * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    k7 = eval(y_new);

    const Eigen::VectorXd err = step * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    double err_norm = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      const double scale = ctl.local_tol * (1.0 + std::max(std::abs(y[i]), std::abs(y_new[i])));
      err_norm = std::max(err_norm, std::abs(err[i]) / scale);
    }

    if (err_norm > 1.0) {
      ++stats.rejected;
      h = step * std::max(0.2, 0.9 * std::pow(err_norm, -0.2));
      continue;
    }

    ++stats.steps;
    t = hits_target ? target : t + step;
    y = y_new;
    k1 = k7;
    if (project(y)) k1 = eval(y);
    stats.final_step = step;
    const double grow = err_norm == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err_norm, -0.2), 0.2, 5.0);
    // A step shortened to land on a sample time says nothing about the
    // attainable step size.
    h = hits_target ? std::max(h, step * grow) : step * grow;

    const bool converged = residual(y, k1) < ctl.equilibrium_tol;
    if (!strided || (hits_target && target < t_end) || converged || t >= t_end) {
      sample(t, y);
    }
    if (strided && hits_target && target < t_end) ++next_index;
    if (converged) {
      stats.converged = true;
      break;
    }
  }
  stats.t_final = t;
  return stats;
}

/// As above with residual max|field(y)|.
template <class Field, class Project, class Sample>
OdeStats dopri45(Field&& field, Eigen::VectorXd& y, double t0, double t_end, const OdeControls& ctl,
                 Project&& project, Sample&& sample) {
  return dopri45(std::forward<Field>(field), y, t0, t_end, ctl, std::forward<Project>(project),
                 std::forward<Sample>(sample),
                 [](const Eigen::VectorXd&, const Eigen::VectorXd& d) { return d.cwiseAbs().maxCoeff(); });
}

/// Ordered samples of an integration run.
struct Trajectory {
  std::vector<double> times;
  std::vector<CoevolState> states;
  OdeStats stats;
  /// Final point in the integration chart (logits for T > 0, full raw layout at T = 0).
  Eigen::VectorXd final_coords;
  bool logit_chart = false;

  bool converged() const { return stats.converged; }
  const CoevolState& final_state() const { return states.back(); }
};

/// Integrate the two-action coevolutionary flow for `horizon` units of scaled
/// time. T > 0 runs in the logit chart (the interior is invariant there);
/// T = 0 runs in raw coordinates with clipping onto the simplex.
inline Trajectory integrate(const CoevolState& s0, const FlowParams& fp, double horizon, const OdeControls& ctl = {}) {
  if (!(horizon > 0.0)) throw InvalidInput("horizon must be positive");
  if (!is_valid(s0, 1e-9)) throw InvalidInput("initial state violates the simplex constraints");
  const int n = s0.n();
  Trajectory traj;
  if (fp.temperature > 0.0) {
    traj.logit_chart = true;
    Eigen::VectorXd u = to_logits(s0);
    traj.stats = dopri45(
        [&](const Eigen::VectorXd& v) { return chart_field(v, n, fp); }, u, 0.0, horizon, ctl,
        [](Eigen::VectorXd&) { return false; },
        [&](double t, const Eigen::VectorXd& v) {
          traj.times.push_back(t);
          traj.states.push_back(from_logits(v, n));
        },
        // Convergence is judged on the raw flow; chart velocities of links
        // far below machine epsilon carry no information.
        [n](const Eigen::VectorXd& v, const Eigen::VectorXd& du) {
          return raw_from_chart_velocity(v, du, n).cwiseAbs().maxCoeff();
        });
    traj.final_coords = u;
  } else {
    Eigen::VectorXd y = to_full(s0);
    auto project = [n](Eigen::VectorXd& v) {
      bool outside = false;
      for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (v[i] < 0.0 || (i < n && v[i] > 1.0)) outside = true;
      }
      if (!outside) return false;
      auto s = from_full(v, n);
      project_closed(s);
      v = to_full(s);
      return true;
    };
    traj.stats = dopri45(
        [&](const Eigen::VectorXd& v) { return full_field(from_full(v, n), fp); }, y, 0.0, horizon, ctl, project,
        [&](double t, const Eigen::VectorXd& v) {
          traj.times.push_back(t);
          traj.states.push_back(from_full(v, n));
        });
    traj.final_coords = y;
  }
  return traj;
}

struct JointTrajectory {
  std::vector<double> times;
  std::vector<JointStrategy> states;
  OdeStats stats;
};

/// Integrate the joint (partner, action) replicator field in log coordinates.
inline JointTrajectory integrate_joint(const JointStrategy& q0, const Eigen::Matrix2d& payoff, double temperature,
                                       double horizon, const OdeControls& ctl = {}) {
  if (!(horizon > 0.0)) throw InvalidInput("horizon must be positive");
  const int n = q0.n();
  Eigen::VectorXd w = joint_to_logs(q0);
  JointTrajectory traj;
  traj.stats = dopri45(
      [&](const Eigen::VectorXd& v) { return joint_log_field(v, n, payoff, temperature); }, w, 0.0, horizon, ctl,
      [](Eigen::VectorXd&) { return false; },
      [&](double t, const Eigen::VectorXd& v) {
        traj.times.push_back(t);
        traj.states.push_back(joint_from_logs(v, n));
      });
  return traj;
}

}  // namespace coevo
