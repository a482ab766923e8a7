// Library walk-through: rest points of a small prisoner's dilemma network and
// their stability, then one integration from a random start.

#include <iostream>
#include <map>
#include <string>

#include "coevo/coevo.hpp"

int main() {
  const coevo::PayoffSpec pd{3, 0, 5, 1, 0};
  const auto fp = coevo::make_flow_params(pd, 0.0);

  const auto found = coevo::find_rest_points(fp, 3, 20, 42);
  std::map<std::string, int> tally;
  for (const auto& rp : found.points) {
    const auto rep = coevo::classify_stability(rp, fp);
    ++tally[std::string(coevo::to_string(rep.matched_configuration)) + " " +
            std::string(coevo::to_string(rep.classification))];
  }
  for (const auto& [label, count] : tally) std::cout << count << "  " << label << "\n";

  const auto traj = coevo::integrate(coevo::random_interior(3, 1), coevo::make_flow_params(pd, 0.05), 1e4);
  std::cout << "T = 0.05 run ends in " << coevo::motif_census(traj.final_state()).signature()
            << (traj.converged() ? "" : " (not converged)") << "\n";
}
