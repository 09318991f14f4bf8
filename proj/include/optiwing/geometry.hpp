#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace optiwing::geom {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

/// Closed airfoil cross-section in the chordwise plane. Canonical orientation
/// is counter-clockwise starting at the trailing edge, upper surface first,
/// with the last point duplicating the first (tolerance 1e-9 m).
struct Section {
  std::vector<Vec2> coords;

  std::size_t n_points() const { return coords.size(); }
};

/// Ordered spanwise stack of sections. Stations are meters along the span,
/// strictly increasing within [0, half_span]. Canonical analysis stacks carry
/// 9 slices. `cp`, when non-empty, holds one surface-pressure value per
/// section point (same ordering as the section loop).
struct WingGeometry {
  std::vector<Section> slices;
  std::vector<double> span_stations;
  double half_span = 2.5;
  std::vector<std::vector<double>> cp;  // optional, per slice per point

  bool has_pressure() const { return !cp.empty(); }
};

constexpr double kClosureTol = 1e-9;

bool is_closed(const Section& s, double tol = kClosureTol);
double perimeter(const Section& s);
bool self_intersects(const Section& s);

/// Reorders a closed loop to the canonical orientation (CCW from the
/// max-x vertex, upper surface first). Point set is unchanged.
Section canonicalize_loop(const Section& s);

/// Structural checks for a wing stack; returns human-readable violations.
std::vector<std::string> validate(const WingGeometry& w);

/// Redistributes a closed section to n points (including the closing
/// duplicate), cosine-spaced in arc length independently on the upper and
/// lower surfaces. Requires n >= 8 and at least 4 input points. No smoothing
/// is applied beyond the redistribution (see smooth_hook).
Section resample_section(const Section& raw, int n);

/// Extension point for filtering during resample; currently the identity.
Section smooth_hook(Section s);

/// Enclosed area via the shoelace formula, orientation-independent.
double section_area(const Section& s);

/// Trapezoidal integration of section area over the span stations.
double wing_volume(const WingGeometry& w);

/// Upper/lower surface heights sampled at chordwise stations given as chord
/// fractions in [0, 1] (0 = leading edge). Stations are mapped to physical x
/// across the section's own chord.
struct SurfaceSamples {
  std::vector<double> x;        // physical x per station
  std::vector<double> y_upper;
  std::vector<double> y_lower;
};
SurfaceSamples sample_surfaces(const Section& s,
                               const std::vector<double>& chord_fractions);

/// Per-point field (e.g. surface pressure) sampled on the upper and lower
/// surfaces at chordwise stations; `field` is parallel to s.coords.
struct SurfaceFieldSamples {
  std::vector<double> x;
  std::vector<double> upper;
  std::vector<double> lower;
};
SurfaceFieldSamples sample_surface_field(const Section& s,
                                         const std::vector<double>& field,
                                         const std::vector<double>& chord_fractions);

/// Cosine-spaced chord fractions over [x0, x1]; endpoints excluded from the
/// chord ends to avoid LE/TE degeneracy in thickness ratios.
std::vector<double> cosine_stations(int n, double x0 = 0.01, double x1 = 0.99);

/// Vertical thickness (upper minus lower surface y) at n_stations cosine
/// chord stations over [0.01, 0.99].
std::vector<double> thickness_distribution(const Section& s, int n_stations);

/// y of the trailing-edge point (max-x vertex); used to read the spanwise
/// dihedral offset embedded in dataset slices.
double trailing_edge_y(const Section& s);

/// Optimization-problem constraint bounds.
struct ConstraintBounds {
  double volume_hi = 1.2;
  double thickness_lo = 0.15;
  double thickness_hi = 3.0;
  double alpha_lo = 0.0;
  double alpha_hi = 10.0;
  int thickness_chord_stations = 25;
  int thickness_span_stations = 8;
};

struct ConstraintReport {
  double volume_fraction = 0.0;
  std::vector<double> thickness_fractions;  // 25 chordwise x 8 spanwise = 200
  std::vector<double> te_shear_residual;    // empty = not applicable
  std::vector<double> le_shear_residual;
  double alpha = 0.0;

  bool volume_ok = false;
  bool thickness_ok = false;
  bool alpha_ok = false;
  bool shear_applicable = false;
  bool te_shear_ok = true;
  bool le_shear_ok = true;

  bool all_ok() const {
    return volume_ok && thickness_ok && alpha_ok &&
           (!shear_applicable || (te_shear_ok && le_shear_ok));
  }
};

/// Evaluates the geometric constraints of a candidate against its initial
/// geometry: volume fraction within [vmin_frac, 1.2], the 200 thickness
/// fractions within [0.15, 3.0] on a 25x8 chord-by-span grid, and alpha
/// within [0, 10] degrees. Shearing residuals are left not-applicable; the
/// FFD module attaches them when a deformation is available.
ConstraintReport check_constraints(const WingGeometry& initial,
                                   const WingGeometry& candidate, double alpha,
                                   double vmin_frac,
                                   const ConstraintBounds& bounds = {});

}  // namespace optiwing::geom
