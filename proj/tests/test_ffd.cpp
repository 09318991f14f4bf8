#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "optiwing/ffd.hpp"
#include "optiwing/rng.hpp"

using namespace optiwing;
using ffd::Vec3;

namespace {

std::vector<Vec3> unit_box_cloud() {
  std::vector<Vec3> pts;
  for (int i = 0; i <= 1; ++i) {
    for (int j = 0; j <= 1; ++j) {
      for (int k = 0; k <= 1; ++k) {
        pts.push_back({static_cast<double>(i), static_cast<double>(j),
                       static_cast<double>(k)});
      }
    }
  }
  return pts;
}

std::vector<Vec3> random_interior(const ffd::FFDCage& cage, int n, std::uint64_t seed) {
  Rng rng(seed, 0);
  std::vector<Vec3> pts;
  for (int i = 0; i < n; ++i) {
    pts.push_back({rng.uniform(cage.x_bounds[0] + 1e-3, cage.x_bounds[1] - 1e-3),
                   rng.uniform(cage.y_bounds[0] + 1e-3, cage.y_bounds[1] - 1e-3),
                   rng.uniform(cage.eta_bounds[0] + 1e-3, cage.eta_bounds[1] - 1e-3)});
  }
  return pts;
}

}  // namespace

TEST_CASE("cage construction") {
  const auto cloud = unit_box_cloud();
  const ffd::FFDCage cage = ffd::build_cage(cloud, {}, 0.0);
  CHECK(cage.dims.total() == 160);
  CHECK(cage.x_bounds[0] == 0.0);
  CHECK(cage.x_bounds[1] == 1.0);
  CHECK(cage.y_bounds[0] == 0.0);
  CHECK(cage.eta_bounds[1] == 1.0);

  // Corner control points coincide with box corners at zero margin.
  const Vec3 c000 = cage.control_point(0, 0, 0);
  CHECK(c000.x == 0.0);
  CHECK(c000.y == 0.0);
  CHECK(c000.eta == 0.0);
  const Vec3 c971 = cage.control_point(9, 1, 7);
  CHECK(c971.x == 1.0);
  CHECK(c971.y == 1.0);
  CHECK(c971.eta == 1.0);

  const ffd::FFDCage padded = ffd::build_cage(cloud, {}, 0.05);
  CHECK(padded.x_bounds[1] - padded.x_bounds[0] == doctest::Approx(1.10).epsilon(1e-12));
  CHECK(padded.y_bounds[1] - padded.y_bounds[0] == doctest::Approx(1.10).epsilon(1e-12));

  std::vector<Vec3> flat = {{0, 0, 0}, {1, 0, 1}};  // zero y extent
  CHECK_THROWS(ffd::build_cage(flat, {}, 0.0));
}

TEST_CASE("embedding basics") {
  const ffd::FFDCage cage = ffd::build_cage(unit_box_cloud(), {}, 0.0);
  const ffd::EmbeddedPoints corner = ffd::embed({{0, 0, 0}, {1, 1, 1}}, cage);
  CHECK(corner.parametric[0].x == 0.0);
  CHECK(corner.parametric[0].y == 0.0);
  CHECK(corner.parametric[0].eta == 0.0);
  CHECK(corner.parametric[1].x == 1.0);
  CHECK(corner.parametric[1].y == 1.0);
  CHECK(corner.parametric[1].eta == 1.0);

  const ffd::EmbeddedPoints mid = ffd::embed({{0.5, 0.5, 0.5}}, cage);
  CHECK(mid.parametric[0].x == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(mid.parametric[0].y == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(mid.parametric[0].eta == doctest::Approx(0.5).epsilon(1e-15));

  // Snap inside tolerance, reject beyond it.
  CHECK_NOTHROW(ffd::embed({{-0.5e-9, 0.5, 0.5}}, cage));
  CHECK_THROWS(ffd::embed({{-1e-6, 0.5, 0.5}}, cage));
}

TEST_CASE("zero deformation is the identity, bit-exact in x and eta") {
  const ffd::FFDCage cage = ffd::build_cage(unit_box_cloud(), {}, 0.1);
  const auto pts = random_interior(cage, 50, 3);
  const ffd::EmbeddedPoints emb = ffd::embed(pts, cage);
  ffd::Deformation zero{std::vector<double>(160, 0.0)};
  const auto out = ffd::deform(emb, cage, zero);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    CHECK(out[i].x == pts[i].x);      // bit identical
    CHECK(out[i].eta == pts[i].eta);  // bit identical
    CHECK(out[i].y == pts[i].y);
  }
}

TEST_CASE("uniform shift via partition of unity") {
  const ffd::FFDCage cage = ffd::build_cage(unit_box_cloud(), {}, 0.05);
  const auto pts = random_interior(cage, 40, 5);
  const ffd::EmbeddedPoints emb = ffd::embed(pts, cage);
  ffd::Deformation d{std::vector<double>(160, 0.01)};
  const auto out = ffd::deform(emb, cage, d);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    CHECK(out[i].y - pts[i].y == doctest::Approx(0.01).epsilon(1e-12));
    CHECK(out[i].x == pts[i].x);
  }
}

TEST_CASE("deformation is linear in delta_y") {
  const ffd::FFDCage cage = ffd::build_cage(unit_box_cloud(), {}, 0.05);
  const auto pts = random_interior(cage, 30, 7);
  const ffd::EmbeddedPoints emb = ffd::embed(pts, cage);

  Rng rng(11, 0);
  ffd::Deformation d1{std::vector<double>(160)}, d2{std::vector<double>(160)},
      sum{std::vector<double>(160)};
  for (int i = 0; i < 160; ++i) {
    d1.delta_y[static_cast<std::size_t>(i)] = 0.01 * rng.normal();
    d2.delta_y[static_cast<std::size_t>(i)] = 0.01 * rng.normal();
    sum.delta_y[static_cast<std::size_t>(i)] =
        d1.delta_y[static_cast<std::size_t>(i)] + d2.delta_y[static_cast<std::size_t>(i)];
  }
  const auto o1 = ffd::deform(emb, cage, d1);
  const auto o2 = ffd::deform(emb, cage, d2);
  const auto os = ffd::deform(emb, cage, sum);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double lhs = os[i].y - pts[i].y;
    const double rhs = (o1[i].y - pts[i].y) + (o2[i].y - pts[i].y);
    CHECK(std::abs(lhs - rhs) < 1e-12);
  }
}

TEST_CASE("single control point perturbation is local and nonnegative") {
  const ffd::FFDCage cage = ffd::build_cage(unit_box_cloud(), {}, 0.0);
  // A grid of probe points along x at fixed y, eta.
  std::vector<Vec3> probes;
  for (int i = 0; i <= 20; ++i) probes.push_back({i / 20.0, 0.5, 0.5});
  const ffd::EmbeddedPoints emb = ffd::embed(probes, cage);

  ffd::Deformation d{std::vector<double>(160, 0.0)};
  const int pick_i = 3;  // control column near x = 1/3
  for (int j = 0; j < 2; ++j) {
    for (int k = 0; k < 8; ++k) {
      d.delta_y[ffd::FFDCage::flat_index(cage.dims, pick_i, j, k)] = 0.02;
    }
  }
  const auto out = ffd::deform(emb, cage, d);
  double best = -1.0;
  std::size_t best_idx = 0;
  for (std::size_t i = 0; i < probes.size(); ++i) {
    const double dy = out[i].y - probes[i].y;
    CHECK(dy >= -1e-15);
    if (dy > best) {
      best = dy;
      best_idx = i;
    }
  }
  // Bernstein B_i^9 peaks at t = i/9.
  const double peak_x = pick_i / 9.0;
  CHECK(std::abs(probes[best_idx].x - peak_x) < 0.06);
}

TEST_CASE("shear twist residuals") {
  const ffd::FFDCage cage = ffd::build_cage(unit_box_cloud(), {}, 0.0);
  ffd::Deformation zero{std::vector<double>(160, 0.0)};
  const ffd::ShearResiduals r0 = ffd::shear_twist_residuals(zero, cage);
  REQUIRE(r0.te.size() == 8);
  REQUIRE(r0.le.size() == 8);
  for (double v : r0.te) CHECK(v == 0.0);
  for (double v : r0.le) CHECK(v == 0.0);

  // Antisymmetric TE perturbation: +a upper, -a lower -> residual 0.
  ffd::Deformation anti{std::vector<double>(160, 0.0)};
  const double a = 0.004;
  for (int k = 0; k < 8; ++k) {
    anti.delta_y[ffd::FFDCage::flat_index(cage.dims, 9, 1, k)] = a;
    anti.delta_y[ffd::FFDCage::flat_index(cage.dims, 9, 0, k)] = -a;
  }
  const ffd::ShearResiduals ra = ffd::shear_twist_residuals(anti, cage);
  for (double v : ra.te) CHECK(v == doctest::Approx(0.0).epsilon(1e-15));

  // Symmetric perturbation: residual 2a.
  ffd::Deformation sym{std::vector<double>(160, 0.0)};
  for (int k = 0; k < 8; ++k) {
    sym.delta_y[ffd::FFDCage::flat_index(cage.dims, 9, 1, k)] = a;
    sym.delta_y[ffd::FFDCage::flat_index(cage.dims, 9, 0, k)] = a;
  }
  const ffd::ShearResiduals rs = ffd::shear_twist_residuals(sym, cage);
  for (double v : rs.te) CHECK(v == doctest::Approx(2.0 * a).epsilon(1e-15));
  for (double v : rs.le) CHECK(v == 0.0);

  // Attaching to a constraint report flags the violation.
  geom::ConstraintReport rep;
  ffd::attach_shear_residuals(rep, sym, cage);
  CHECK(rep.shear_applicable);
  CHECK_FALSE(rep.te_shear_ok);
  CHECK(rep.le_shear_ok);
}

TEST_CASE("deformation bound violations are reported, not clamped") {
  ffd::Deformation d{std::vector<double>(160, 0.0)};
  d.delta_y[5] = 0.03;
  d.delta_y[100] = -0.026;
  const auto bad = ffd::bound_violations(d);
  REQUIRE(bad.size() == 2);
  CHECK(bad[0] == 5);
  CHECK(bad[1] == 100);
  CHECK(d.delta_y[5] == 0.03);
}

TEST_CASE("dimension mismatches are errors") {
  const ffd::FFDCage cage = ffd::build_cage(unit_box_cloud(), {}, 0.0);
  const ffd::EmbeddedPoints emb = ffd::embed({{0.5, 0.5, 0.5}}, cage);
  ffd::Deformation wrong{std::vector<double>(80, 0.0)};
  CHECK_THROWS(ffd::deform(emb, cage, wrong));
  CHECK_THROWS(ffd::shear_twist_residuals(wrong, cage));

  ffd::FFDCage other = cage;
  other.dims.neta = 4;
  ffd::Deformation d4{std::vector<double>(static_cast<std::size_t>(other.dims.total()), 0.0)};
  CHECK_THROWS(ffd::deform(emb, other, d4));
}

TEST_CASE("cage text round trip") {
  const ffd::FFDCage cage = ffd::build_cage(unit_box_cloud(), {}, 0.07);
  const ffd::FFDCage back = ffd::cage_from_text(ffd::cage_to_text(cage));
  CHECK(back.dims.nx == cage.dims.nx);
  CHECK(back.x_bounds == cage.x_bounds);
  CHECK(back.y_bounds == cage.y_bounds);
  CHECK(back.eta_bounds == cage.eta_bounds);
  CHECK_THROWS(ffd::cage_from_text("{\"kind\":\"other\"}"));
}
