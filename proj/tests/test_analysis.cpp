#include <catch_amalgamated.hpp>

#include <set>

#include "coevo/analysis.hpp"

using namespace coevo;
using Catch::Approx;

namespace {

const ReducedGame kCoord{5, -2, 1};

RestPoint symmetric_rest(int n, double p, const FlowParams& fp) {
  if (fp.temperature > 0.0) {
    Eigen::VectorXd u = Eigen::VectorXd::Zero(independent_dim(n));
    u.tail(n).setConstant(std::log(p / (1 - p)));
    return make_rest_point_from_logits(u, n, fp);
  }
  return make_rest_point(CoevolState::symmetric(n, p), fp);
}

CoevolState pair_plus_isolated(double pz, double czx) {
  CoevolState s = CoevolState::symmetric(3, 0.0);
  s.c.setZero();
  s.c(0, 1) = s.c(1, 0) = 1.0;
  s.c(2, 0) = czx;
  s.c(2, 1) = 1.0 - czx;
  s.p[2] = pz;
  return s;
}

Spectrum as_spectrum(const std::array<std::complex<double>, 6>& a) { return Spectrum(a.begin(), a.end()); }

}  // namespace

TEST_CASE("symmetric strategy roots", "[analysis]") {
  const auto hot = symmetric_fixed_point(kCoord, 3, 0.5);
  REQUIRE(hot.size() == 1);
  CHECK(hot[0] == Approx(0.93576576112657706).epsilon(1e-12));

  const auto cool = symmetric_fixed_point(kCoord, 3, 0.2);
  REQUIRE(cool.size() == 3);
  CHECK(cool[0] == Approx(0.0073303823487632691).epsilon(1e-12));
  CHECK(cool[1] == Approx(0.3507353081537553).epsilon(1e-12));
  CHECK(cool[2] == Approx(0.9994433638926726).epsilon(1e-12));

  const auto cold = symmetric_fixed_point(kCoord, 3, 0.0);
  REQUIRE(cold.size() == 3);
  CHECK(cold[0] == 0.0);
  CHECK(cold[1] == Approx(0.4));
  CHECK(cold[2] == 1.0);

  CHECK(symmetric_fixed_point({-1, -1, 4}, 3, 0.3).size() == 1);
}

TEST_CASE("critical temperature", "[analysis]") {
  const auto tc = critical_temperature(kCoord, 3);
  REQUIRE(tc);
  CHECK(*tc == Approx(0.36276800984402371).epsilon(1e-10));
  CHECK(std::abs(*tc - 0.36) <= 0.01);

  const auto tan = tangencies(kCoord, 3);
  REQUIRE_FALSE(tan.empty());
  const auto it = std::max_element(tan.begin(), tan.end(),
                                   [](auto l, auto r) { return l.temperature < r.temperature; });
  CHECK(it->p == Approx(0.17612842659104749).epsilon(1e-9));
  CHECK(std::abs(it->p - 0.174) < 0.005);

  const auto tc4 = critical_temperature(kCoord, 4);
  REQUIRE(tc4);
  CHECK(*tc4 == Approx(0.2418453398960158).epsilon(1e-10));

  CHECK_FALSE(critical_temperature({-1, -1, 4}, 3));
  CHECK_FALSE(critical_temperature({-5, 2, 0}, 3));  // anti-coordination: root count never changes
}

TEST_CASE("root count drops from three to one at the critical temperature", "[analysis][property]") {
  const double tc = *critical_temperature(kCoord, 3);
  std::size_t last = 3;
  double flip = -1.0;
  for (double t = 0.05; t <= 0.8; t += 0.0025) {
    const auto count = symmetric_fixed_point(kCoord, 3, t).size();
    CHECK((count == 1 || count == 3));
    if (last == 3 && count == 1) flip = t;
    if (last == 1) CHECK(count == 1);
    last = count;
  }
  CHECK(std::abs(flip - tc) < 0.01);
}

TEST_CASE("analytic three-player spectrum", "[analysis]") {
  const auto s = jacobian_analytic_sym3(0.5, kCoord, 0.0, 0.0, 0.1);
  CHECK(s.v == Approx(0.1875));
  CHECK(s.m == Approx(0.4375));
  CHECK(s.g == Approx(0.0625));
  CHECK(s.k == Approx(0.3125));
  CHECK(s.eigenvalues[0].real() == Approx(0.525));

  const auto cold = jacobian_analytic_sym3(0.4, kCoord, 0.0, 0.0, 0.0);
  CHECK(cold.eigenvalues[0].real() == Approx(2 * cold.k));
  CHECK(cold.eigenvalues[0].real() > 0.0);

  CHECK_THROWS_AS(jacobian_analytic_sym3(0.0, kCoord, 0, 0, 0.1), InvalidInput);
  CHECK_THROWS_AS(jacobian_analytic_sym3(1.0, kCoord, 0, 0, 0.1), InvalidInput);
}

TEST_CASE("analytic and numeric spectra agree at symmetric rest points", "[analysis][oracle]") {
  // b is chosen so that p is a symmetric root: (a p + b) = 2 T logit(p).
  Rng rng(2024);
  int accepted = 0;
  double worst = 0.0;
  while (accepted < 100) {
    const double a = rng.uniform(-10, 10), d = rng.uniform(-5, 5), s = rng.uniform(-3, 3);
    const double t = rng.uniform(0, 1), p = rng.uniform(0.05, 0.95);
    const double b = 2 * t * std::log(p / (1 - p)) - a * p;
    if (b < -5 || b > 5) continue;
    ++accepted;
    const FlowParams fp{{a, b, d}, s, t};
    const auto num = spectrum(jacobian_numeric(symmetric_rest(3, p, fp), fp));
    const auto ana = jacobian_analytic_sym3(p, fp.game, s, 0.0, t);
    worst = std::max(worst, spectrum_distance(num, as_spectrum(ana.eigenvalues)));
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("numeric Jacobian structure", "[analysis]") {
  // T = 0 star rest point for the prisoner's dilemma.
  const FlowParams pd{{-1, -1, 4}, 1.0, 0.0};
  Eigen::VectorXd w(3);
  w << 0.0, 0.3, 0.7;
  const auto star = make_rest_point(star_state(3, 0, 0.0, w), pd);
  const auto j = jacobian_numeric(star, pd);
  CHECK(j.rows() == 6);
  CHECK(split_blocks(j, 3).strategies_links.cwiseAbs().maxCoeff() < 1e-7);

  const FlowParams cold{kCoord, 0.2, 0.0};
  const auto sym = jacobian_numeric(make_rest_point(CoevolState::symmetric(3, 0.4), cold), cold);
  CHECK(std::abs(split_blocks(sym, 3).links_links.trace()) < 1e-7);
  CHECK(split_blocks(sym, 3).links_links.diagonal().cwiseAbs().maxCoeff() < 1e-7);

  const FlowParams flat{{0, 0, 0}, 1.3, 0.25};
  const auto jf = jacobian_numeric(symmetric_rest(4, 0.5, flat), flat);
  const auto j22 = split_blocks(jf, 4).strategies;
  CHECK((j22 - Eigen::MatrixXd::Identity(4, 4) * -0.25).cwiseAbs().maxCoeff() < 1e-7);

  const auto off = make_rest_point(random_interior(3, 1), cold);
  CHECK_THROWS_AS(jacobian_numeric(off, cold), NotRestPoint);
}

TEST_CASE("raw and logit charts give the same spectrum", "[analysis]") {
  const FlowParams fp{kCoord, -3.3, 0.45};
  const auto rp = symmetric_rest(3, symmetric_fixed_point(kCoord, 3, 0.45)[0], fp);
  const auto raw = spectrum(jacobian_numeric(rp, fp, Chart::Raw));
  const auto logit = spectrum(jacobian_numeric(rp, fp, Chart::Logit));
  CHECK(spectrum_distance(raw, logit) < 1e-6);
}

TEST_CASE("pair with an isolated agent", "[analysis]") {
  const FlowParams pd{{-1, -1, 4}, 1.0, 0.0};  // b21 + C_I = 5, b22 + C_I = 1
  const auto rp = make_rest_point(pair_plus_isolated(0.1, 0.3), pd);
  REQUIRE(rp.residual < kRestTolerance);
  const auto ana = as_spectrum(config1_eigenvalues(rp, pd));
  const auto num = spectrum(jacobian_numeric(rp, pd));
  CHECK(spectrum_distance(ana, num) < 1e-6);
  CHECK(classify_spectrum(ana) == Stability::MarginallyStable);
  const auto rep = classify_stability(rp, pd);
  CHECK(rep.classification == Stability::MarginallyStable);
  CHECK(rep.matched_configuration == Configuration::PairPlusIsolated);

  // Coordination game, pair on action 1 with b11 + C_I > 0.
  const FlowParams co{kCoord, 0.5, 0.0};
  auto s = pair_plus_isolated(0.2, 0.5);
  s.p[0] = s.p[1] = 1.0;
  const auto rc = make_rest_point(s, co);
  const auto eig = as_spectrum(config1_eigenvalues(rc, co));
  CHECK(classify_spectrum(eig) == Stability::MarginallyStable);
  CHECK(spectrum_distance(eig, spectrum(jacobian_numeric(rc, co))) < 1e-6);

  CHECK_THROWS_AS(config1_eigenvalues(make_rest_point(CoevolState::symmetric(3, 0.4), co), co), TopologyMismatch);
}

TEST_CASE("stability classes", "[analysis]") {
  CHECK(classify_spectrum({{-1, 0}, {-1e-7, 3}}) == Stability::Stable);
  CHECK(classify_spectrum({{-1, 0}, {1e-9, 0}}) == Stability::MarginallyStable);
  CHECK(classify_spectrum({{-1, 0}, {2e-8, 0}}) == Stability::Unstable);

  for (const ReducedGame g : {kCoord, ReducedGame{-5, 2, 0}}) {
    const FlowParams fp{g, 1.0, 0.0};
    const auto rep = classify_stability(make_rest_point(CoevolState::symmetric(3, *mixed_ne(g)), fp), fp);
    CHECK(rep.classification == Stability::Unstable);
    CHECK(rep.matched_configuration == Configuration::SymmetricUniform);
  }

  const FlowParams pd{{-1, -1, 4}, 1.0, 0.0};
  Eigen::VectorXd w(4);
  w << 0.0, 0.2, 0.3, 0.5;
  const auto star = classify_stability(make_rest_point(star_state(4, 0, 0.0, w), pd), pd);
  CHECK(star.classification == Stability::MarginallyStable);
  CHECK(star.matched_configuration == Configuration::Star);

  const FlowParams lonely{{-1, -1, 4}, -1.0, 0.0};  // -C_I above the defection reward
  CoevolState cyc = CoevolState::symmetric(3, 0.0);
  cyc.c.setZero();
  cyc.c(0, 1) = cyc.c(1, 2) = cyc.c(2, 0) = 1.0;
  const auto rc = classify_stability(make_rest_point(cyc, lonely), lonely);
  CHECK(rc.classification != Stability::Unstable);
  CHECK(rc.matched_configuration == Configuration::CyclicNonReciprocated);
}

TEST_CASE("star spectra", "[analysis]") {
  const ReducedGame pd{-1, -1, 4};
  for (int n : {4, 5}) {
    Eigen::VectorXd w(n);
    w[0] = 0.0;
    for (int k = 1; k < n; ++k) w[k] = static_cast<double>(k) / (n * (n - 1) / 2);
    const auto ana = star_stability_analytic(n, pd, 1.0, 0.0, w);
    CHECK(ana.strategy_diagonal[0] == Approx(pd.b));
    for (int k = 1; k < n; ++k) CHECK(ana.strategy_diagonal[k] == Approx(pd.b * w[k]).margin(1e-15));
    CHECK(static_cast<int>(ana.link_eigenvalues.size()) == n * (n - 2));
    CHECK(ana.link_zero_count == n - 2);

    const FlowParams fp{pd, 1.0, 0.0};
    const auto j = jacobian_numeric(make_rest_point(star_state(n, 0, 0.0, w), fp), fp);
    const auto blocks = split_blocks(j, n);
    CHECK((blocks.strategies.diagonal() - ana.strategy_diagonal).cwiseAbs().maxCoeff() < 1e-8);
    Spectrum links;
    for (double v : ana.link_eigenvalues) links.emplace_back(v, 0.0);
    CHECK(spectrum_distance(links, spectrum(blocks.links_links)) < 1e-6);
    CHECK(max_real_part(spectrum(j)) <= 1e-8);
  }
  CHECK_THROWS_AS(star_stability_analytic(4, pd, 1.0, 0.5, Eigen::VectorXd::Constant(4, 1.0 / 3)), InvalidInput);
}

TEST_CASE("rest points of the three-player prisoner's dilemma", "[analysis]") {
  const auto fp = make_flow_params({3, 0, 5, 1, 0}, 0.0);
  const auto found = find_rest_points(fp, 3, 30, 42);
  std::set<Configuration> seen;
  for (const auto& rp : found.points) {
    CHECK(rp.residual < kRestTolerance);
    CHECK(is_valid(rp.state, 1e-9));
    seen.insert(match_configuration(rp.state));

    const auto rep = classify_stability(rp, fp);
    const bool pure = ((rp.state.p.array() < 1e-9) || (rp.state.p.array() > 1 - 1e-9)).all();
    if (pure) CHECK(*rep.strategies_links_max < 1e-7);
  }
  CHECK(seen.count(Configuration::PairPlusIsolated));
  CHECK(seen.count(Configuration::Star));
  CHECK(seen.count(Configuration::SymmetricUniform));
  CHECK(seen.count(Configuration::CyclicNonReciprocated));
}

TEST_CASE("rest point search is independent of the worker count", "[analysis][property]") {
  const auto fp = make_flow_params({4, -2, 1, 0, -3.3}, 0.3);
  RestPointSearchOptions one, four;
  four.workers = 4;
  const auto a = find_rest_points(fp, 3, 12, 5, one);
  const auto b = find_rest_points(fp, 3, 12, 5, four);
  REQUIRE(a.points.size() == b.points.size());
  for (std::size_t i = 0; i < a.points.size(); ++i) CHECK(to_full(a.points[i].state) == to_full(b.points[i].state));
}

TEST_CASE("symmetric-topology rest points share one strategy", "[analysis][property]") {
  for (double t : {0.2, 0.5}) {
    const auto fp = make_flow_params({4, -2, 1, 0, 0}, t);
    const auto found = find_rest_points(fp, 3, 20, 3);
    int symmetric = 0;
    for (const auto& rp : found.points) {
      if (match_configuration(rp.state) != Configuration::SymmetricUniform) continue;
      ++symmetric;
      CHECK(rp.state.p.maxCoeff() - rp.state.p.minCoeff() < 1e-8);
    }
    CHECK(symmetric == (t < 0.36 ? 3 : 1));
  }
}

TEST_CASE("mixed T = 0 rest points have a traceless unstable strategy block", "[analysis][property]") {
  const FlowParams fp{kCoord, 0.5, 0.0};
  const auto rp = make_rest_point(CoevolState::symmetric(4, 0.4), fp);
  const auto j22 = split_blocks(jacobian_numeric(rp, fp), 4).strategies;
  CHECK(std::abs(j22.trace()) < 1e-7);
  CHECK(max_real_part(spectrum(j22)) > 0.0);
}

TEST_CASE("topology names", "[analysis]") {
  CHECK(match_configuration(CoevolState::symmetric(3, 0.2)) == Configuration::SymmetricUniform);
  CHECK(match_configuration(pair_plus_isolated(0.0, 0.5)) == Configuration::PairPlusIsolated);
  Eigen::VectorXd w = Eigen::VectorXd::Constant(5, 0.25);
  w[2] = 0.0;
  CHECK(match_configuration(star_state(5, 2, 1.0, w)) == Configuration::Star);
  CHECK(match_configuration(random_interior(3, 2)) == Configuration::Other);
}
