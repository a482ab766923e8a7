#pragma once

#include <cmath>
#include <optional>
#include <string_view>

#include <Eigen/Dense>

#include "coevo/error.hpp"

namespace coevo {

/// Base 2x2 game B plus the isolation payoff C_I. Row = own action,
/// column = opponent action; action 1 is index 0.
struct PayoffSpec {
  double b11 = 0.0;
  double b12 = 0.0;
  double b21 = 0.0;
  double b22 = 0.0;
  double c_iso = 0.0;
};

/// Reduced two-action parameters. Shift-invariant under A -> A + k.
struct ReducedGame {
  double a = 0.0;
  double b = 0.0;
  double d = 0.0;
};

enum class GameClass { DominantAction, Coordination, AntiCoordination, Degenerate };

inline std::string_view to_string(GameClass c) {
  switch (c) {
    case GameClass::DominantAction: return "DominantAction";
    case GameClass::Coordination: return "Coordination";
    case GameClass::AntiCoordination: return "AntiCoordination";
    case GameClass::Degenerate: return "Degenerate";
  }
  return "?";
}

/// Effective payoff matrix a_ij = b_ij + C_I. Downstream dynamics treat an
/// isolated agent as earning 0, so the shift is all the isolation payoff does.
inline Eigen::Matrix2d effective_matrix(const PayoffSpec& spec) {
  for (double v : {spec.b11, spec.b12, spec.b21, spec.b22, spec.c_iso}) {
    if (!std::isfinite(v)) throw InvalidInput("payoff entries must be finite");
  }
  Eigen::Matrix2d a;
  a << spec.b11 + spec.c_iso, spec.b12 + spec.c_iso,
       spec.b21 + spec.c_iso, spec.b22 + spec.c_iso;
  return a;
}

inline ReducedGame reduce(const Eigen::Matrix2d& a) {
  if (!a.allFinite()) throw InvalidInput("payoff matrix must be finite");
  return ReducedGame{a(0, 0) - a(1, 0) - a(0, 1) + a(1, 1),
                     a(0, 1) - a(1, 1),
                     a(1, 0) - a(1, 1)};
}

/// Partition of the (a, b) plane by the mixed-equilibrium ratio r = -b/a.
/// Boundaries (a = 0, r = 0, r = 1) are Degenerate; comparisons are exact.
inline GameClass classify(const ReducedGame& g) {
  if (g.a == 0.0 || g.b == 0.0 || -g.b == g.a) return GameClass::Degenerate;
  const double r = -g.b / g.a;
  if (r < 0.0 || r > 1.0) return GameClass::DominantAction;
  return g.a > 0.0 ? GameClass::Coordination : GameClass::AntiCoordination;
}

/// Interior mixed equilibrium p* = -b/a, if it lies strictly inside (0, 1).
inline std::optional<double> mixed_ne(const ReducedGame& g) {
  if (g.a == 0.0) return std::nullopt;
  const double r = -g.b / g.a;
  if (r > 0.0 && r < 1.0) return r;
  return std::nullopt;
}

}  // namespace coevo
