#pragma once

#include <charconv>
#include <cmath>
#include <complex>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "coevo/analysis.hpp"
#include "coevo/error.hpp"
#include "coevo/game.hpp"
#include "coevo/integrator.hpp"
#include "coevo/state.hpp"

namespace coevo {

class ConfigError : public Error {
 public:
  using Error::Error;
};

struct GridSpec {
  double min = 0.0;
  double max = 1.0;
  int steps = 1;
};

/// Flat key = value run configuration. Blank lines and lines starting with
/// '#' are ignored; every other line must hold one known key.
struct RunConfig {
  PayoffSpec game{4.0, -2.0, 1.0, 0.0, 0.0};
  int n = 3;
  double temperature = 0.0;
  double alpha = 0.05;
  std::uint64_t seed = 1;
  double horizon = 100.0;
  double tol_local = 1e-9;
  double tol_equilibrium = 1e-10;
  GridSpec grid_t{0.05, 1.0, 20};
  GridSpec grid_ci{-6.0, 3.0, 19};
  std::string out_dir = ".";

  OdeControls controls() const {
    OdeControls c;
    c.local_tol = tol_local;
    c.equilibrium_tol = tol_equilibrium;
    return c;
  }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <class T>
T parse_number(std::string_view key, std::string_view text) {
  T value{};
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end) {
    throw ConfigError("bad value '" + std::string(text) + "' for key '" + std::string(key) + "'");
  }
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(value)) throw ConfigError("non-finite value for key '" + std::string(key) + "'");
  }
  return value;
}

using Setter = std::function<void(RunConfig&, std::string_view key, std::string_view value)>;

inline const std::map<std::string, Setter, std::less<>>& config_setters() {
  auto real = [](double RunConfig::*field) {
    return Setter([field](RunConfig& c, std::string_view k, std::string_view v) { c.*field = parse_number<double>(k, v); });
  };
  auto game = [](double PayoffSpec::*field) {
    return Setter([field](RunConfig& c, std::string_view k, std::string_view v) { c.game.*field = parse_number<double>(k, v); });
  };
  auto grid = [](GridSpec RunConfig::*g, int which) {
    return Setter([g, which](RunConfig& c, std::string_view k, std::string_view v) {
      if (which == 0) (c.*g).min = parse_number<double>(k, v);
      if (which == 1) (c.*g).max = parse_number<double>(k, v);
      if (which == 2) (c.*g).steps = parse_number<int>(k, v);
    });
  };
  static const std::map<std::string, Setter, std::less<>> setters{
      {"game.b11", game(&PayoffSpec::b11)},
      {"game.b12", game(&PayoffSpec::b12)},
      {"game.b21", game(&PayoffSpec::b21)},
      {"game.b22", game(&PayoffSpec::b22)},
      {"game.c_iso", game(&PayoffSpec::c_iso)},
      {"n", [](RunConfig& c, std::string_view k, std::string_view v) { c.n = parse_number<int>(k, v); }},
      {"temperature", real(&RunConfig::temperature)},
      {"alpha", real(&RunConfig::alpha)},
      {"seed", [](RunConfig& c, std::string_view k, std::string_view v) { c.seed = parse_number<std::uint64_t>(k, v); }},
      {"horizon", real(&RunConfig::horizon)},
      {"tol.local", real(&RunConfig::tol_local)},
      {"tol.equilibrium", real(&RunConfig::tol_equilibrium)},
      {"grid.t.min", grid(&RunConfig::grid_t, 0)},
      {"grid.t.max", grid(&RunConfig::grid_t, 1)},
      {"grid.t.steps", grid(&RunConfig::grid_t, 2)},
      {"grid.ci.min", grid(&RunConfig::grid_ci, 0)},
      {"grid.ci.max", grid(&RunConfig::grid_ci, 1)},
      {"grid.ci.steps", grid(&RunConfig::grid_ci, 2)},
      {"out.dir", [](RunConfig& c, std::string_view, std::string_view v) { c.out_dir = std::string(v); }},
  };
  return setters;
}

}  // namespace detail

/// Apply one "key = value" assignment.
inline void apply_setting(RunConfig& cfg, std::string_view line) {
  const auto eq = line.find('=');
  if (eq == std::string_view::npos) throw ConfigError("expected key = value, got '" + std::string(line) + "'");
  const auto key = detail::trim(line.substr(0, eq));
  const auto value = detail::trim(line.substr(eq + 1));
  const auto& setters = detail::config_setters();
  const auto it = setters.find(key);
  if (it == setters.end()) throw ConfigError("unknown config key '" + std::string(key) + "'");
  if (value.empty()) throw ConfigError("empty value for key '" + std::string(key) + "'");
  it->second(cfg, key, value);
}

inline void parse_config(RunConfig& cfg, std::istream& in) {
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = detail::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    try {
      apply_setting(cfg, line);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
}

inline void load_config(RunConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  parse_config(cfg, in);
}

/// Range checks shared by every subcommand.
inline void validate_config(const RunConfig& c) {
  auto need = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
  };
  try {
    (void)effective_matrix(c.game);
  } catch (const InvalidInput& e) {
    throw ConfigError(e.what());
  }
  need(c.n >= 2 && c.n <= 64, "n must lie in [2, 64]");
  need(c.temperature >= 0.0, "temperature must be >= 0");
  need(c.alpha > 0.0 && c.alpha <= 1.0, "alpha must lie in (0, 1]");
  need(c.horizon > 0.0, "horizon must be positive");
  need(c.tol_local > 0.0 && c.tol_equilibrium > 0.0, "tolerances must be positive");
  for (const auto* g : {&c.grid_t, &c.grid_ci}) {
    need(g->steps >= 1, "grid steps must be >= 1");
    need(g->steps == 1 ? g->min <= g->max : g->min < g->max, "grid min must be below grid max");
  }
  need(c.grid_t.min >= 0.0, "temperature grid must be >= 0");
  need(!c.out_dir.empty(), "out.dir must not be empty");
}

// ---------------------------------------------------------------------------
// Text output. Shortest round-trip formatting keeps files byte-stable.

inline std::string fmt(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc{} ? std::string(buf, ptr) : std::string("nan");
}

inline std::string state_header(int n) {
  std::string h;
  for (int x = 0; x < n; ++x) h += ",p_" + std::to_string(x);
  for (int x = 0; x < n; ++x) {
    for (int y = 0; y < n; ++y) {
      if (y != x) h += ",c_" + std::to_string(x) + "_" + std::to_string(y);
    }
  }
  return h;
}

inline std::string state_row(const CoevolState& s) {
  std::string r;
  const Eigen::VectorXd v = to_full(s);
  for (Eigen::Index i = 0; i < v.size(); ++i) r += "," + fmt(v[i]);
  return r;
}

inline std::string trajectory_csv(const Trajectory& traj) {
  const int n = traj.states.front().n();
  std::string out = "t" + state_header(n) + "\n";
  for (std::size_t i = 0; i < traj.states.size(); ++i) out += fmt(traj.times[i]) + state_row(traj.states[i]) + "\n";
  return out;
}

inline nlohmann::json to_json(const CoevolState& s) {
  nlohmann::json j;
  j["n"] = s.n();
  j["p"] = std::vector<double>(s.p.data(), s.p.data() + s.n());
  auto rows = nlohmann::json::array();
  for (int x = 0; x < s.n(); ++x) {
    std::vector<double> row(s.n());
    for (int y = 0; y < s.n(); ++y) row[y] = s.c(x, y);
    rows.push_back(row);
  }
  j["c"] = rows;
  return j;
}

inline CoevolState state_from_json(const nlohmann::json& j) {
  CoevolState s;
  const int n = j.at("n").get<int>();
  const auto p = j.at("p").get<std::vector<double>>();
  const auto c = j.at("c").get<std::vector<std::vector<double>>>();
  if (static_cast<int>(p.size()) != n || static_cast<int>(c.size()) != n) throw InvalidInput("state size mismatch");
  s.p = Eigen::Map<const Eigen::VectorXd>(p.data(), n);
  s.c.resize(n, n);
  for (int x = 0; x < n; ++x) {
    if (static_cast<int>(c[x].size()) != n) throw InvalidInput("state size mismatch");
    for (int y = 0; y < n; ++y) s.c(x, y) = c[x][y];
  }
  return s;
}

inline nlohmann::json to_json(const StabilityReport& r) {
  nlohmann::json j;
  auto eig = nlohmann::json::array();
  for (auto e : r.eigenvalues) eig.push_back({e.real(), e.imag()});
  j["eigenvalues"] = eig;
  j["classification"] = std::string(to_string(r.classification));
  j["matched_configuration"] = std::string(to_string(r.matched_configuration));
  j["max_real"] = r.max_real;
  if (r.strategies_links_max) j["j21_max"] = *r.strategies_links_max;
  return j;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << text;
  if (!out) throw Error("write failed for '" + path + "'");
}

}  // namespace coevo
