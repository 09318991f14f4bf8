#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "optiwing/flow.hpp"

using namespace optiwing;

TEST_CASE("sutherland viscosity reference values") {
  // At the reference temperature the law returns mu0 exactly.
  CHECK(flow::sutherland_viscosity(273.15) == doctest::Approx(1.716e-5).epsilon(1e-12));
  // Independent step-by-step evaluation: mu0 (T/T0)^1.5 (T0+S)/(T+S).
  const double expected = 1.716e-5 * std::pow(300.0 / 273.15, 1.5) *
                          (273.15 + 110.4) / (300.0 + 110.4);
  CHECK(flow::sutherland_viscosity(300.0) == doctest::Approx(expected).epsilon(1e-14));
  CHECK(std::abs(flow::sutherland_viscosity(300.0) - 1.846e-5) < 1e-8);
  CHECK_THROWS(flow::sutherland_viscosity(0.0));
  CHECK_THROWS(flow::sutherland_viscosity(-10.0));
}

TEST_CASE("sutherland viscosity monotone over 200..400 K") {
  double prev = flow::sutherland_viscosity(200.0);
  for (double t = 205.0; t <= 400.0; t += 5.0) {
    const double mu = flow::sutherland_viscosity(t);
    CHECK(mu > prev);
    prev = mu;
  }
}

TEST_CASE("prandtl-schlichting skin friction") {
  // Direct evaluation of (2 log10 Re - 0.65)^(-2.3).
  CHECK(flow::skin_friction(1e6) ==
        doctest::Approx(std::pow(2.0 * 6.0 - 0.65, -2.3)).epsilon(1e-14));
  CHECK(flow::skin_friction(1e6) == doctest::Approx(3.745497559970e-3).epsilon(1e-9));
  CHECK(flow::skin_friction(1e8) == doctest::Approx(1.870469911191e-3).epsilon(1e-9));

  double prev = flow::skin_friction(1e5);
  for (double re = 2e5; re <= 1e9; re *= 1.5) {
    const double cf = flow::skin_friction(re);
    CHECK(cf < prev);
    prev = cf;
  }
  CHECK_THROWS(flow::skin_friction(0.5));
  CHECK_THROWS(flow::skin_friction(2.0));  // 2 log10(2) < 0.65
}

TEST_CASE("off-wall distance golden chain") {
  flow::WallSpacingInputs in;
  in.mach = 0.5;
  in.reynolds = 5e6;
  in.t_inf = 300.0;
  in.l_ref = 1.0;
  in.y_plus = 1.0;
  const flow::WallSpacingResult r = flow::off_wall_distance(in);

  // Independent evaluation of every intermediate quantity.
  const double a = std::sqrt(1.4 * 287.0 * 300.0);
  const double u = 0.5 * a;
  const double mu = flow::sutherland_viscosity(300.0);
  const double rho = 5e6 * mu / u;
  const double cf = std::pow(2.0 * std::log10(5e6) - 0.65, -2.3);
  const double tau = cf * 0.5 * rho * u * u;
  const double delta = mu / (rho * std::sqrt(tau / rho));

  CHECK(r.a == doctest::Approx(a).epsilon(1e-14));
  CHECK(r.u == doctest::Approx(u).epsilon(1e-14));
  CHECK(r.rho == doctest::Approx(rho).epsilon(1e-14));
  CHECK(r.tau_w == doctest::Approx(tau).epsilon(1e-14));
  CHECK(r.delta == doctest::Approx(delta).epsilon(1e-12));
  CHECK(std::abs(r.delta - 5.28e-6) < 0.02e-6);

  // Internal identities as stored.
  CHECK(r.u == r.a * in.mach);
  CHECK(r.tau_w == doctest::Approx(r.cf * 0.5 * r.rho * r.u * r.u).epsilon(1e-15));
  // The two delta formulations agree to machine precision.
  CHECK(r.delta ==
        doctest::Approx(in.y_plus * r.mu / std::sqrt(r.rho * r.tau_w)).epsilon(1e-15));
}

TEST_CASE("off-wall distance is linear in y+ and decreasing in Re") {
  flow::WallSpacingInputs in;
  in.mach = 0.6;
  in.reynolds = 3e6;
  in.t_inf = 300.0;
  const double d1 = flow::off_wall_distance(in).delta;
  in.y_plus = 2.0;
  const double d2 = flow::off_wall_distance(in).delta;
  CHECK(d2 == doctest::Approx(2.0 * d1).epsilon(1e-15));

  in.y_plus = 1.0;
  double prev = 0.0;
  bool first = true;
  for (double re = 1e6; re <= 1e7; re *= 1.4) {
    in.reynolds = re;
    const double d = flow::off_wall_distance(in).delta;
    if (!first) CHECK(d < prev);
    prev = d;
    first = false;
  }
  in.mach = -1.0;
  CHECK_THROWS(flow::off_wall_distance(in));
}

TEST_CASE("latin hypercube basics") {
  const flow::ParameterBounds bounds;
  CHECK_THROWS(flow::latin_hypercube(bounds, 0, 1));

  const auto one = flow::latin_hypercube(bounds, 1, 42);
  REQUIRE(one.size() == 1);
  CHECK(flow::within_bounds(one[0], bounds));

  // All samples inside Table bounds for several n.
  for (int n : {3, 10, 77}) {
    for (const auto& c : flow::latin_hypercube(bounds, n, 7)) {
      CHECK(flow::within_bounds(c, bounds));
    }
  }
}

namespace {

// Stratification oracle: exactly one sample per equal-width stratum.
bool stratified(std::vector<double> values, double lo, double hi) {
  const int n = static_cast<int>(values.size());
  std::vector<int> counts(static_cast<std::size_t>(n), 0);
  for (double v : values) {
    auto k = static_cast<int>((v - lo) / (hi - lo) * n);
    if (k == n) k = n - 1;
    if (k < 0 || k >= n) return false;
    ++counts[static_cast<std::size_t>(k)];
  }
  return std::all_of(counts.begin(), counts.end(), [](int c) { return c == 1; });
}

}  // namespace

TEST_CASE("latin hypercube stratification per marginal") {
  const flow::ParameterBounds bounds;
  const int n = 10;
  const auto samples = flow::latin_hypercube(bounds, n, 99);
  std::vector<double> mach, re, cl, vmin;
  for (const auto& c : samples) {
    mach.push_back(c.mach);
    re.push_back(c.reynolds);
    cl.push_back(c.cl_con);
    vmin.push_back(c.vmin_frac);
  }
  CHECK(stratified(mach, 0.4, 0.9));
  CHECK(stratified(re, 1e6, 1e7));
  CHECK(stratified(cl, 0.5, 1.2));
  CHECK(stratified(vmin, 0.75, 1.0));
}

TEST_CASE("latin hypercube stratification property over random n and seeds") {
  const flow::ParameterBounds bounds;
  Rng meta(123, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + static_cast<int>(meta.uniform_index(60));
    const std::uint64_t seed = meta.next_u64();
    const auto samples = flow::latin_hypercube(bounds, n, seed);
    std::vector<double> mach;
    for (const auto& c : samples) mach.push_back(c.mach);
    CHECK(stratified(mach, 0.4, 0.9));
  }
}

TEST_CASE("latin hypercube determinism and log-Re option") {
  const flow::ParameterBounds bounds;
  const auto a = flow::latin_hypercube(bounds, 16, 5);
  const auto b = flow::latin_hypercube(bounds, 16, 5);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].mach == b[i].mach);
    CHECK(a[i].reynolds == b[i].reynolds);
    CHECK(a[i].cl_con == b[i].cl_con);
    CHECK(a[i].vmin_frac == b[i].vmin_frac);
  }
  const auto c = flow::latin_hypercube(bounds, 16, 6);
  bool any_diff = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].mach != c[i].mach) any_diff = true;
  }
  CHECK(any_diff);

  // Log-space stratification: one sample per equal log-width stratum.
  const int n = 8;
  const auto logs = flow::latin_hypercube(bounds, n, 11, true);
  std::vector<double> lre;
  for (const auto& s : logs) lre.push_back(std::log(s.reynolds));
  CHECK(stratified(lre, std::log(1e6), std::log(1e7)));
}
