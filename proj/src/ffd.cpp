#include "optiwing/ffd.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "json.hpp"

namespace optiwing::ffd {

namespace {

constexpr double kSnapTol = 1e-9;  // meters

// All Bernstein basis values of degree n at t, by the de Casteljau-style
// recurrence; exact partition of unity.
std::vector<double> bernstein_row(int n, double t) {
  std::vector<double> b(static_cast<std::size_t>(n) + 1, 0.0);
  b[0] = 1.0;
  const double s = 1.0 - t;
  for (int j = 1; j <= n; ++j) {
    double saved = 0.0;
    for (int k = 0; k < j; ++k) {
      const double tmp = b[static_cast<std::size_t>(k)];
      b[static_cast<std::size_t>(k)] = saved + s * tmp;
      saved = t * tmp;
    }
    b[static_cast<std::size_t>(j)] = saved;
  }
  return b;
}

double embed_axis(double v, double lo, double hi, const char* axis) {
  if (v < lo - kSnapTol || v > hi + kSnapTol) {
    throw std::invalid_argument(std::string("embed: point outside cage on ") + axis);
  }
  const double extent = hi - lo;
  double u = (v - lo) / extent;
  if (u < 0.0) u = 0.0;
  if (u > 1.0) u = 1.0;
  return u;
}

}  // namespace

Vec3 FFDCage::control_point(int i, int j, int k) const {
  auto lerp = [](const std::array<double, 2>& b, int idx, int n) {
    return n == 1 ? b[0] : b[0] + (b[1] - b[0]) * idx / static_cast<double>(n - 1);
  };
  return Vec3{lerp(x_bounds, i, dims.nx), lerp(y_bounds, j, dims.ny),
              lerp(eta_bounds, k, dims.neta)};
}

std::vector<std::size_t> bound_violations(const Deformation& d, double bound) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < d.delta_y.size(); ++i) {
    if (std::abs(d.delta_y[i]) > bound) out.push_back(i);
  }
  return out;
}

FFDCage build_cage(const std::vector<Vec3>& points, const CageDims& dims,
                   double margin) {
  if (points.empty()) throw std::invalid_argument("build_cage: no points");
  if (dims.nx < 2 || dims.ny < 2 || dims.neta < 2) {
    throw std::invalid_argument("build_cage: lattice needs >= 2 points per axis");
  }
  double inf = std::numeric_limits<double>::infinity();
  std::array<double, 2> xb{inf, -inf}, yb{inf, -inf}, eb{inf, -inf};
  for (const Vec3& p : points) {
    xb[0] = std::min(xb[0], p.x);
    xb[1] = std::max(xb[1], p.x);
    yb[0] = std::min(yb[0], p.y);
    yb[1] = std::max(yb[1], p.y);
    eb[0] = std::min(eb[0], p.eta);
    eb[1] = std::max(eb[1], p.eta);
  }
  for (const auto& b : {xb, yb, eb}) {
    if (!(b[1] - b[0] > 0.0)) {
      throw std::invalid_argument("build_cage: degenerate bounding box");
    }
  }
  auto expand = [margin](std::array<double, 2>& b) {
    const double pad = margin * (b[1] - b[0]);
    b[0] -= pad;
    b[1] += pad;
  };
  expand(xb);
  expand(yb);
  expand(eb);
  return FFDCage{dims, xb, yb, eb};
}

std::vector<Vec3> wing_points(const geom::WingGeometry& w) {
  std::vector<Vec3> pts;
  for (std::size_t k = 0; k < w.slices.size(); ++k) {
    for (const geom::Vec2& p : w.slices[k].coords) {
      pts.push_back({p.x, p.y, w.span_stations[k]});
    }
  }
  return pts;
}

FFDCage build_cage(const geom::WingGeometry& w, const CageDims& dims,
                   double margin) {
  return build_cage(wing_points(w), dims, margin);
}

EmbeddedPoints embed(const std::vector<Vec3>& points, const FFDCage& cage) {
  EmbeddedPoints out;
  out.dims = cage.dims;
  out.points = points;
  out.parametric.reserve(points.size());
  for (const Vec3& p : points) {
    out.parametric.push_back(
        {embed_axis(p.x, cage.x_bounds[0], cage.x_bounds[1], "x"),
         embed_axis(p.y, cage.y_bounds[0], cage.y_bounds[1], "y"),
         embed_axis(p.eta, cage.eta_bounds[0], cage.eta_bounds[1], "eta")});
  }
  return out;
}

std::vector<Vec3> deform(const EmbeddedPoints& embedded, const FFDCage& cage,
                         const Deformation& d) {
  const CageDims& dims = cage.dims;
  if (embedded.dims.nx != dims.nx || embedded.dims.ny != dims.ny ||
      embedded.dims.neta != dims.neta) {
    throw std::invalid_argument("deform: embedding built for a different lattice");
  }
  if (d.delta_y.size() != static_cast<std::size_t>(dims.total())) {
    throw std::invalid_argument("deform: deformation size mismatch");
  }
  std::vector<Vec3> out = embedded.points;
  for (std::size_t p = 0; p < out.size(); ++p) {
    const Vec3& uvw = embedded.parametric[p];
    const std::vector<double> bu = bernstein_row(dims.nx - 1, uvw.x);
    const std::vector<double> bv = bernstein_row(dims.ny - 1, uvw.y);
    const std::vector<double> bw = bernstein_row(dims.neta - 1, uvw.eta);
    double dy = 0.0;
    for (int i = 0; i < dims.nx; ++i) {
      for (int j = 0; j < dims.ny; ++j) {
        const double bij = bu[static_cast<std::size_t>(i)] * bv[static_cast<std::size_t>(j)];
        for (int k = 0; k < dims.neta; ++k) {
          dy += bij * bw[static_cast<std::size_t>(k)] *
                d.delta_y[FFDCage::flat_index(dims, i, j, k)];
        }
      }
    }
    out[p].y += dy;
  }
  return out;
}

ShearResiduals shear_twist_residuals(const Deformation& d, const FFDCage& cage) {
  const CageDims& dims = cage.dims;
  if (d.delta_y.size() != static_cast<std::size_t>(dims.total())) {
    throw std::invalid_argument("shear_twist_residuals: deformation size mismatch");
  }
  const int j_lower = 0;
  const int j_upper = dims.ny - 1;
  ShearResiduals r;
  r.te.reserve(static_cast<std::size_t>(dims.neta));
  r.le.reserve(static_cast<std::size_t>(dims.neta));
  for (int k = 0; k < dims.neta; ++k) {
    r.te.push_back(d.delta_y[FFDCage::flat_index(dims, dims.nx - 1, j_upper, k)] +
                   d.delta_y[FFDCage::flat_index(dims, dims.nx - 1, j_lower, k)]);
    r.le.push_back(d.delta_y[FFDCage::flat_index(dims, 0, j_upper, k)] +
                   d.delta_y[FFDCage::flat_index(dims, 0, j_lower, k)]);
  }
  return r;
}

void attach_shear_residuals(geom::ConstraintReport& report, const Deformation& d,
                            const FFDCage& cage, double tol) {
  const ShearResiduals r = shear_twist_residuals(d, cage);
  report.te_shear_residual = r.te;
  report.le_shear_residual = r.le;
  report.shear_applicable = true;
  report.te_shear_ok = true;
  report.le_shear_ok = true;
  for (double v : r.te) {
    if (std::abs(v) > tol) report.te_shear_ok = false;
  }
  for (double v : r.le) {
    if (std::abs(v) > tol) report.le_shear_ok = false;
  }
}

std::string cage_to_text(const FFDCage& cage) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["kind"] = "ffd_cage";
  j["dims"] = {cage.dims.nx, cage.dims.ny, cage.dims.neta};
  j["x_bounds"] = cage.x_bounds;
  j["y_bounds"] = cage.y_bounds;
  j["eta_bounds"] = cage.eta_bounds;
  return j.dump(2);
}

FFDCage cage_from_text(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  if (j.value("kind", "") != "ffd_cage") {
    throw std::runtime_error("cage_from_text: not an ffd_cage record");
  }
  FFDCage cage;
  cage.dims.nx = j.at("dims").at(0).get<int>();
  cage.dims.ny = j.at("dims").at(1).get<int>();
  cage.dims.neta = j.at("dims").at(2).get<int>();
  j.at("x_bounds").get_to(cage.x_bounds);
  j.at("y_bounds").get_to(cage.y_bounds);
  j.at("eta_bounds").get_to(cage.eta_bounds);
  return cage;
}

}  // namespace optiwing::ffd
