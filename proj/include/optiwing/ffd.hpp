#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "optiwing/geometry.hpp"

namespace optiwing::ffd {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double eta = 0.0;
};

struct CageDims {
  int nx = 10;
  int ny = 2;
  int neta = 8;

  int total() const { return nx * ny * neta; }
};

/// Axis-aligned lattice of control points enclosing the wing. Control point
/// (i, j, k) sits at cell fractions i/(nx-1), j/(ny-1), k/(neta-1) of the
/// bounding box. Flat index = (i * ny + j) * neta + k.
struct FFDCage {
  CageDims dims;
  std::array<double, 2> x_bounds{};
  std::array<double, 2> y_bounds{};
  std::array<double, 2> eta_bounds{};

  Vec3 control_point(int i, int j, int k) const;
  static std::size_t flat_index(const CageDims& d, int i, int j, int k) {
    return static_cast<std::size_t>((i * d.ny + j) * d.neta + k);
  }
};

/// Per-control-point y displacement, meters. |delta_y| <= 0.025 per the
/// optimization problem; violations are reported, never clamped.
struct Deformation {
  std::vector<double> delta_y;
};

constexpr double kDeformationBound = 0.025;

/// Indices of deformation entries exceeding the bound (empty = within bounds).
std::vector<std::size_t> bound_violations(const Deformation& d,
                                          double bound = kDeformationBound);

/// Points embedded into a cage: parametric (u, v, w) in [0,1]^3 plus the
/// original coordinates, which are reproduced verbatim on zero deformation.
struct EmbeddedPoints {
  CageDims dims;
  std::vector<Vec3> points;      // original coordinates
  std::vector<Vec3> parametric;  // (u, v, w) per point
};

/// Uniform lattice enclosing the points, expanded by `margin` times the
/// extent on each side of every axis. Throws on a degenerate bounding box.
FFDCage build_cage(const std::vector<Vec3>& points, const CageDims& dims = {},
                   double margin = 0.0);

/// Cage around a wing stack (section points at their span stations).
FFDCage build_cage(const geom::WingGeometry& w, const CageDims& dims = {},
                   double margin = 0.0);

std::vector<Vec3> wing_points(const geom::WingGeometry& w);

/// Parametric embedding. Points outside the cage by more than 1e-9 m are an
/// error; smaller excursions snap onto the boundary.
EmbeddedPoints embed(const std::vector<Vec3>& points, const FFDCage& cage);

/// Applies a y-only Bernstein tensor-product deformation. x and eta pass
/// through bit-identical; y gains the Bernstein-weighted sum of delta_y.
std::vector<Vec3> deform(const EmbeddedPoints& embedded, const FFDCage& cage,
                         const Deformation& d);

struct ShearResiduals {
  std::vector<double> te;  // one per spanwise lattice station
  std::vector<double> le;
};

/// Trailing/leading-edge shearing-twist residuals: at each spanwise lattice
/// station, delta_y(upper) + delta_y(lower) on the extreme-x columns
/// (i = nx-1 for TE, i = 0 for LE). Zero residual means the y_upper = -y_lower
/// constraint holds at that station.
ShearResiduals shear_twist_residuals(const Deformation& d, const FFDCage& cage);

/// Fills the shear fields of a constraint report from an available
/// deformation (residual tolerance 1e-12 m).
void attach_shear_residuals(geom::ConstraintReport& report, const Deformation& d,
                            const FFDCage& cage, double tol = 1e-12);

/// Cage round-trip through the canonical structured-text format.
std::string cage_to_text(const FFDCage& cage);
FFDCage cage_from_text(const std::string& text);

}  // namespace optiwing::ffd
