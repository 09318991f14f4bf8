#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "optiwing/geometry.hpp"
#include "optiwing/rng.hpp"
#include "optiwing/synthetic.hpp"

using namespace optiwing;
using geom::Section;
using geom::Vec2;

namespace {

Section unit_square() {
  return Section{{{0, 0}, {1, 0}, {1, 1}, {0, 1}, {0, 0}}};
}

Section circle_polygon(int n, double r = 1.0) {
  Section s;
  for (int i = 0; i < n; ++i) {
    const double a = 2.0 * M_PI * i / n;
    s.coords.push_back({r * std::cos(a), r * std::sin(a)});
  }
  s.coords.push_back(s.coords.front());
  return s;
}

Section airfoil_fixture(std::uint64_t seed = 3) {
  Rng rng(seed, 0);
  synth::ShapeCoeffs c{};
  for (std::size_t m = 0; m < c.size(); ++m) {
    c[m] = std::clamp(0.003 * rng.normal(), -0.005, 0.005);
  }
  return synth::family_section(c, 201);
}

geom::WingGeometry scaled_stack(const Section& s, const std::vector<double>& scales,
                                const std::vector<double>& stations) {
  geom::WingGeometry w;
  w.span_stations = stations;
  for (double k : scales) {
    Section slice = s;
    for (Vec2& p : slice.coords) p.y *= k;
    w.slices.push_back(slice);
  }
  return w;
}

// Monte-Carlo point-in-polygon area estimate (crossing number).
double mc_area(const Section& s, int n_samples, std::uint64_t seed) {
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (const Vec2& p : s.coords) {
    x0 = std::min(x0, p.x);
    x1 = std::max(x1, p.x);
    y0 = std::min(y0, p.y);
    y1 = std::max(y1, p.y);
  }
  Rng rng(seed, 1);
  int inside = 0;
  for (int i = 0; i < n_samples; ++i) {
    const double px = rng.uniform(x0, x1);
    const double py = rng.uniform(y0, y1);
    bool in = false;
    for (std::size_t j = 0; j + 1 < s.coords.size(); ++j) {
      const Vec2& a = s.coords[j];
      const Vec2& b = s.coords[j + 1];
      if ((a.y > py) != (b.y > py)) {
        const double xint = a.x + (py - a.y) / (b.y - a.y) * (b.x - a.x);
        if (px < xint) in = !in;
      }
    }
    if (in) ++inside;
  }
  return (x1 - x0) * (y1 - y0) * inside / static_cast<double>(n_samples);
}

}  // namespace

TEST_CASE("section area analytic values") {
  CHECK(geom::section_area(unit_square()) == doctest::Approx(1.0).epsilon(1e-15));
  Section tri{{{0, 0}, {1, 0}, {0, 1}, {0, 0}}};
  CHECK(geom::section_area(tri) == doctest::Approx(0.5).epsilon(1e-15));
  Section open{{{0, 0}, {1, 0}, {1, 1}, {0, 1}}};
  CHECK_THROWS(geom::section_area(open));
}

TEST_CASE("section area vs Monte-Carlo oracle on an airfoil slice") {
  const Section s = airfoil_fixture();
  const double exact = geom::section_area(s);
  const double mc = mc_area(s, 400000, 9);
  CHECK(std::abs(mc - exact) / exact < 1e-3 * 10);  // 0.1% target, MC noise margin
}

TEST_CASE("area and volume invariances") {
  const Section s = airfoil_fixture(5);
  const double a0 = geom::section_area(s);

  Section reversed = s;
  std::reverse(reversed.coords.begin(), reversed.coords.end());
  CHECK(geom::section_area(reversed) == doctest::Approx(a0).epsilon(1e-15));

  Section shifted = s;
  for (Vec2& p : shifted.coords) p.x += 3.7;
  CHECK(geom::section_area(shifted) == doctest::Approx(a0).epsilon(1e-12));

  // Volume scales exactly linearly with a uniform area scaling.
  geom::WingGeometry w = scaled_stack(s, {1.0, 1.0, 1.0}, {0.0, 1.0, 2.5});
  geom::WingGeometry w2 = scaled_stack(s, {2.0, 2.0, 2.0}, {0.0, 1.0, 2.5});
  CHECK(geom::wing_volume(w2) == doctest::Approx(2.0 * geom::wing_volume(w)).epsilon(1e-13));
  CHECK(geom::wing_volume(w) >= 0.0);
}

TEST_CASE("wing volume analytic cases") {
  // Constant unit-area section extruded 2.5 m.
  geom::WingGeometry w;
  w.slices = {unit_square(), unit_square()};
  w.span_stations = {0.0, 2.5};
  CHECK(geom::wing_volume(w) == doctest::Approx(2.5).epsilon(1e-15));

  // Linearly tapering area 1 -> 0 (trapezoid exact for a linear integrand).
  Section degenerate{{{0.5, 0.5}, {0.5, 0.5}, {0.5, 0.5}, {0.5, 0.5}, {0.5, 0.5}}};
  geom::WingGeometry taper;
  taper.slices = {unit_square(), degenerate};
  taper.span_stations = {0.0, 2.5};
  CHECK(geom::wing_volume(taper) == doctest::Approx(1.25).epsilon(1e-15));

  geom::WingGeometry single;
  single.slices = {unit_square()};
  single.span_stations = {0.0};
  CHECK_THROWS(geom::wing_volume(single));
}

TEST_CASE("wing volume refinement oracle on a curved-taper wing") {
  // Quadratic area profile: trapezoid on 9 slices vs a 1000-slice refinement.
  const Section base = airfoil_fixture(7);
  auto build = [&](int n) {
    geom::WingGeometry w;
    for (int k = 0; k < n; ++k) {
      const double eta = 2.5 * k / (n - 1.0);
      const double scale = 1.0 - 0.5 * (eta / 2.5) * (eta / 2.5);
      Section s = base;
      for (Vec2& p : s.coords) p.y *= scale;
      w.slices.push_back(std::move(s));
      w.span_stations.push_back(eta);
    }
    return w;
  };
  const double coarse = geom::wing_volume(build(9));
  const double fine = geom::wing_volume(build(1000));
  CHECK(std::abs(coarse - fine) / fine < 0.005);
}

TEST_CASE("resample is a fixed point on cosine-spaced input") {
  const Section s = airfoil_fixture(11);
  const Section once = geom::resample_section(s, 161);
  const Section twice = geom::resample_section(once, 161);
  REQUIRE(once.coords.size() == twice.coords.size());
  for (std::size_t i = 0; i < once.coords.size(); ++i) {
    CHECK(std::abs(once.coords[i].x - twice.coords[i].x) < 1e-9);
    CHECK(std::abs(once.coords[i].y - twice.coords[i].y) < 1e-9);
  }
}

TEST_CASE("resample circle stays on the circle") {
  const Section s = geom::resample_section(circle_polygon(512), 128);
  CHECK(s.coords.size() == 128);
  for (const Vec2& p : s.coords) {
    CHECK(std::abs(std::hypot(p.x, p.y) - 1.0) < 1e-3);
  }
  CHECK(geom::is_closed(s));
}

TEST_CASE("resample input validation") {
  CHECK_THROWS(geom::resample_section(circle_polygon(512), 4));
  CHECK_THROWS(geom::resample_section(circle_polygon(512), 7));
  CHECK_NOTHROW(geom::resample_section(circle_polygon(512), 8));
  Section tiny{{{0, 0}, {1, 0}, {0, 0}}};
  CHECK_THROWS(geom::resample_section(tiny, 64));
  Section zero{{{0.3, 0.3}, {0.3, 0.3}, {0.3, 0.3}, {0.3, 0.3}, {0.3, 0.3}}};
  CHECK_THROWS(geom::resample_section(zero, 64));
}

TEST_CASE("canonical orientation starts at the trailing edge, CCW") {
  Section s = airfoil_fixture(13);
  std::reverse(s.coords.begin(), s.coords.end());
  const Section canon = geom::canonicalize_loop(s);
  double max_x = -1e300;
  for (const Vec2& p : canon.coords) max_x = std::max(max_x, p.x);
  CHECK(canon.coords.front().x == doctest::Approx(max_x));
  // Positive (counter-clockwise) signed area: upper surface first.
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < canon.coords.size(); ++i) {
    acc += canon.coords[i].x * canon.coords[i + 1].y -
           canon.coords[i + 1].x * canon.coords[i].y;
  }
  CHECK(acc > 0.0);
  CHECK(canon.coords[1].y > canon.coords[canon.coords.size() - 2].y);
}

TEST_CASE("thickness of a symmetric analytic section is 2 f(x)") {
  // y = +-f(x) polygon with dense sampling.
  auto f = [](double x) { return 0.06 * std::sin(M_PI * x) + 0.02 * x * (1.0 - x); };
  Section s;
  const int n = 2001;
  for (int i = 0; i < n; ++i) {
    const double x = 1.0 - i / (n - 1.0);
    s.coords.push_back({x, f(x)});
  }
  for (int i = 1; i < n - 1; ++i) {
    const double x = i / (n - 1.0);
    s.coords.push_back({x, -f(x)});
  }
  s.coords.push_back(s.coords.front());

  const int stations = 50;
  const std::vector<double> t = geom::thickness_distribution(s, stations);
  const std::vector<double> xs = geom::cosine_stations(stations);
  for (int i = 0; i < stations; ++i) {
    CHECK(std::abs(t[static_cast<std::size_t>(i)] - 2.0 * f(xs[static_cast<std::size_t>(i)])) < 1e-6);
  }
}

TEST_CASE("thickness of a flat plate is zero") {
  Section s{{{1, 0}, {0.6, 0}, {0.2, 0}, {0, 0}, {0.4, 0}, {0.8, 0}, {1, 0}}};
  for (double t : geom::thickness_distribution(s, 20)) {
    CHECK(std::abs(t) < 1e-15);
  }
}

TEST_CASE("thickness vs brute-force segment intersection oracle") {
  const Section s = airfoil_fixture(17);
  const int stations = 40;
  const std::vector<double> t = geom::thickness_distribution(s, stations);
  const std::vector<double> xs = geom::cosine_stations(stations);

  double x_min = 1e300, x_max = -1e300;
  for (const Vec2& p : s.coords) {
    x_min = std::min(x_min, p.x);
    x_max = std::max(x_max, p.x);
  }
  for (int i = 0; i < stations; ++i) {
    const double x = x_min + (x_max - x_min) * xs[static_cast<std::size_t>(i)];
    // All crossings of the vertical line with loop segments.
    double y_hi = -1e300, y_lo = 1e300;
    for (std::size_t j = 0; j + 1 < s.coords.size(); ++j) {
      const Vec2& a = s.coords[j];
      const Vec2& b = s.coords[j + 1];
      if ((a.x - x) * (b.x - x) <= 0.0 && a.x != b.x) {
        const double y = a.y + (x - a.x) / (b.x - a.x) * (b.y - a.y);
        y_hi = std::max(y_hi, y);
        y_lo = std::min(y_lo, y);
      }
    }
    CHECK(std::abs(t[static_cast<std::size_t>(i)] - (y_hi - y_lo)) < 1e-8);
  }
}

TEST_CASE("station outside chord is an error") {
  const Section s = airfoil_fixture(19);
  CHECK_THROWS(geom::sample_surfaces(s, {1.2}));
  CHECK_THROWS(geom::sample_surfaces(s, {-0.1}));
}

TEST_CASE("self intersection detection") {
  Section bowtie{{{0, 0}, {1, 1}, {1, 0}, {0, 1}, {0, 0}}};
  CHECK(geom::self_intersects(bowtie));
  CHECK_FALSE(geom::self_intersects(airfoil_fixture(23)));
  CHECK_FALSE(geom::self_intersects(unit_square()));
}

TEST_CASE("check_constraints identity case") {
  const Section s = airfoil_fixture(29);
  geom::WingGeometry w;
  for (int k = 0; k < 9; ++k) {
    w.slices.push_back(s);
    w.span_stations.push_back(2.5 * k / 8.0);
  }
  const geom::ConstraintReport rep = geom::check_constraints(w, w, 2.5, 0.75);
  CHECK(rep.volume_fraction == doctest::Approx(1.0).epsilon(1e-12));
  REQUIRE(rep.thickness_fractions.size() == 200);
  for (double f : rep.thickness_fractions) {
    CHECK(f == doctest::Approx(1.0).epsilon(1e-9));
  }
  CHECK(rep.volume_ok);
  CHECK(rep.thickness_ok);
  CHECK(rep.alpha_ok);
  CHECK_FALSE(rep.shear_applicable);
  CHECK(rep.all_ok());
}

TEST_CASE("check_constraints violations") {
  const Section s = airfoil_fixture(31);
  geom::WingGeometry w;
  for (int k = 0; k < 9; ++k) {
    w.slices.push_back(s);
    w.span_stations.push_back(2.5 * k / 8.0);
  }
  geom::WingGeometry shrunk = w;
  for (auto& slice : shrunk.slices) {
    for (Vec2& p : slice.coords) p.y *= 0.70;
  }
  const geom::ConstraintReport rep = geom::check_constraints(w, shrunk, 2.5, 0.75);
  CHECK(rep.volume_fraction == doctest::Approx(0.70).epsilon(1e-9));
  CHECK_FALSE(rep.volume_ok);
  CHECK(rep.thickness_ok);  // 0.70 within [0.15, 3.0]

  const geom::ConstraintReport alpha_bad = geom::check_constraints(w, w, 11.0, 0.75);
  CHECK_FALSE(alpha_bad.alpha_ok);
  CHECK_FALSE(alpha_bad.all_ok());

  geom::WingGeometry fewer = w;
  fewer.slices.pop_back();
  fewer.span_stations.pop_back();
  CHECK_THROWS(geom::check_constraints(w, fewer, 2.5, 0.75));
}

TEST_CASE("validate reports structural problems") {
  geom::WingGeometry w;
  w.slices = {unit_square(), unit_square()};
  w.span_stations = {0.0, 0.0};  // not strictly increasing
  CHECK_FALSE(geom::validate(w).empty());

  geom::WingGeometry ok;
  ok.slices = {unit_square(), unit_square()};
  ok.span_stations = {0.0, 2.5};
  CHECK(geom::validate(ok).empty());
}
