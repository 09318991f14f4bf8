#include "optiwing/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace optiwing::geom {

namespace {

double dist(const Vec2& a, const Vec2& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

// Signed shoelace area of a closed loop (last point duplicates the first).
double signed_area(const std::vector<Vec2>& pts) {
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    acc += pts[i].x * pts[i + 1].y - pts[i + 1].x * pts[i].y;
  }
  return 0.5 * acc;
}

// Proper segment intersection test, excluding shared endpoints.
bool segments_cross(const Vec2& p1, const Vec2& p2, const Vec2& q1,
                    const Vec2& q2) {
  auto orient = [](const Vec2& a, const Vec2& b, const Vec2& c) {
    return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
  };
  const double o1 = orient(p1, p2, q1);
  const double o2 = orient(p1, p2, q2);
  const double o3 = orient(q1, q2, p1);
  const double o4 = orient(q1, q2, p2);
  return ((o1 > 0) != (o2 > 0)) && ((o3 > 0) != (o4 > 0)) && o1 != 0.0 &&
         o2 != 0.0 && o3 != 0.0 && o4 != 0.0;
}

// Places m points along a polyline at the given arc-length fractions.
std::vector<Vec2> place_along(const std::vector<Vec2>& poly,
                              const std::vector<double>& fractions) {
  std::vector<double> cum(poly.size(), 0.0);
  for (std::size_t i = 1; i < poly.size(); ++i) {
    cum[i] = cum[i - 1] + dist(poly[i - 1], poly[i]);
  }
  const double total = cum.back();
  std::vector<Vec2> out;
  out.reserve(fractions.size());
  std::size_t seg = 0;
  for (double f : fractions) {
    const double target = f * total;
    while (seg + 2 < poly.size() && cum[seg + 1] < target) ++seg;
    const double len = cum[seg + 1] - cum[seg];
    const double w = len > 0.0 ? (target - cum[seg]) / len : 0.0;
    out.push_back({poly[seg].x + w * (poly[seg + 1].x - poly[seg].x),
                   poly[seg].y + w * (poly[seg + 1].y - poly[seg].y)});
  }
  return out;
}

std::vector<double> cosine_fractions(int m) {
  std::vector<double> f(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    f[static_cast<std::size_t>(i)] =
        0.5 * (1.0 - std::cos(M_PI * static_cast<double>(i) / (m - 1)));
  }
  return f;
}

std::vector<double> arc_fractions(const std::vector<Vec2>& poly) {
  std::vector<double> f(poly.size(), 0.0);
  for (std::size_t i = 1; i < poly.size(); ++i) {
    f[i] = f[i - 1] + dist(poly[i - 1], poly[i]);
  }
  const double total = f.back();
  for (double& v : f) v /= total;
  return f;
}

// Places m points so that each sits at the cosine arc-length fraction of the
// *output* polyline. Points placed at fractions of the input polyline drift
// slightly because chords shorten the path; a few fixed-point corrections
// remove the drift, which also makes the redistribution idempotent.
std::vector<Vec2> place_cosine(const std::vector<Vec2>& poly, int m) {
  const std::vector<double> want = cosine_fractions(m);
  std::vector<double> targets = want;
  std::vector<Vec2> placed;
  for (int iter = 0; iter < 25; ++iter) {
    placed = place_along(poly, targets);
    const std::vector<double> got = arc_fractions(placed);
    double err = 0.0;
    for (std::size_t i = 0; i < got.size(); ++i) {
      err = std::max(err, std::abs(got[i] - want[i]));
    }
    if (err < 1e-13) break;
    for (std::size_t i = 1; i + 1 < targets.size(); ++i) {
      targets[i] += want[i] - got[i];
      targets[i] = std::clamp(targets[i], 0.0, 1.0);
    }
    for (std::size_t i = 1; i < targets.size(); ++i) {
      targets[i] = std::max(targets[i], targets[i - 1]);
    }
  }
  return placed;
}

// Unique loop points (closing duplicate stripped).
std::vector<Vec2> unique_points(const Section& s) {
  std::vector<Vec2> pts = s.coords;
  if (pts.size() > 1 && dist(pts.front(), pts.back()) <= kClosureTol) {
    pts.pop_back();
  }
  return pts;
}

struct SplitLoop {
  std::vector<Vec2> upper;  // TE -> LE
  std::vector<Vec2> lower;  // LE -> TE
  std::vector<double> upper_field;
  std::vector<double> lower_field;
};

// Canonical traversal order of the unique loop points: starts at the max-x
// vertex, counter-clockwise.
std::vector<std::size_t> canonical_order(const std::vector<Vec2>& pts) {
  const std::size_t n = pts.size();
  std::size_t te = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (pts[i].x > pts[te].x) te = i;
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = (te + i) % n;

  std::vector<Vec2> loop;
  loop.reserve(n + 1);
  for (std::size_t i : order) loop.push_back(pts[i]);
  loop.push_back(pts[te]);
  if (signed_area(loop) < 0.0) {
    std::reverse(order.begin() + 1, order.end());
  }
  return order;
}

// Splits a loop (with an optional parallel per-point field) at the extreme-x
// vertices.
SplitLoop split_surfaces(const Section& s, const std::vector<double>* field = nullptr) {
  std::vector<Vec2> pts = unique_points(s);
  if (pts.size() < 3) throw std::invalid_argument("split_surfaces: degenerate loop");
  const std::vector<std::size_t> order = canonical_order(pts);

  std::vector<Vec2> ordered(order.size());
  std::vector<double> ordered_field;
  if (field) {
    if (field->size() != s.coords.size()) {
      throw std::invalid_argument("split_surfaces: field size mismatch");
    }
    ordered_field.resize(order.size());
  }
  for (std::size_t i = 0; i < order.size(); ++i) {
    ordered[i] = pts[order[i]];
    if (field) ordered_field[i] = (*field)[order[i]];
  }

  std::size_t le = 0;
  for (std::size_t i = 1; i < ordered.size(); ++i) {
    if (ordered[i].x < ordered[le].x) le = i;
  }
  SplitLoop out;
  out.upper.assign(ordered.begin(), ordered.begin() + static_cast<long>(le) + 1);
  out.lower.assign(ordered.begin() + static_cast<long>(le), ordered.end());
  out.lower.push_back(ordered.front());
  if (field) {
    out.upper_field.assign(ordered_field.begin(),
                           ordered_field.begin() + static_cast<long>(le) + 1);
    out.lower_field.assign(ordered_field.begin() + static_cast<long>(le),
                           ordered_field.end());
    out.lower_field.push_back(ordered_field.front());
  }
  return out;
}

// Linear interpolation of a per-point value along a surface polyline at
// chordwise position x. Scans in traversal order so mildly non-monotone LE
// regions resolve to the nearest match; clamps outside the covered range.
double interp_surface(const std::vector<Vec2>& poly,
                      const std::vector<double>& values, double x) {
  for (std::size_t i = 0; i + 1 < poly.size(); ++i) {
    const double x0 = poly[i].x;
    const double x1 = poly[i + 1].x;
    if ((x >= std::min(x0, x1)) && (x <= std::max(x0, x1))) {
      const double dx = x1 - x0;
      if (std::abs(dx) < 1e-300) return 0.5 * (values[i] + values[i + 1]);
      const double w = (x - x0) / dx;
      return values[i] + w * (values[i + 1] - values[i]);
    }
  }
  const double df = std::abs(x - poly.front().x);
  const double dl = std::abs(x - poly.back().x);
  return df < dl ? values.front() : values.back();
}

std::vector<double> y_of(const std::vector<Vec2>& poly) {
  std::vector<double> y(poly.size());
  for (std::size_t i = 0; i < poly.size(); ++i) y[i] = poly[i].y;
  return y;
}

}  // namespace

bool is_closed(const Section& s, double tol) {
  return s.coords.size() >= 4 && dist(s.coords.front(), s.coords.back()) <= tol;
}

double perimeter(const Section& s) {
  double acc = 0.0;
  for (std::size_t i = 1; i < s.coords.size(); ++i) {
    acc += dist(s.coords[i - 1], s.coords[i]);
  }
  return acc;
}

bool self_intersects(const Section& s) {
  const std::vector<Vec2> pts = unique_points(s);
  const std::size_t n = pts.size();
  if (n < 4) return false;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 2; j < n; ++j) {
      if (i == 0 && j == n - 1) continue;  // adjacent around the wrap
      if (segments_cross(pts[i], pts[(i + 1) % n], pts[j], pts[(j + 1) % n])) {
        return true;
      }
    }
  }
  return false;
}

Section canonicalize_loop(const Section& s) {
  std::vector<Vec2> pts = unique_points(s);
  if (pts.size() < 3) throw std::invalid_argument("canonicalize_loop: degenerate loop");
  const std::vector<std::size_t> order = canonical_order(pts);
  Section out;
  out.coords.reserve(pts.size() + 1);
  for (std::size_t i : order) out.coords.push_back(pts[i]);
  out.coords.push_back(out.coords.front());
  return out;
}

std::vector<std::string> validate(const WingGeometry& w) {
  std::vector<std::string> problems;
  if (w.slices.size() != w.span_stations.size()) {
    problems.push_back("slice count does not match span station count");
  }
  for (std::size_t i = 1; i < w.span_stations.size(); ++i) {
    if (w.span_stations[i] <= w.span_stations[i - 1]) {
      problems.push_back("span stations not strictly increasing");
      break;
    }
  }
  if (!w.span_stations.empty() &&
      (w.span_stations.front() < -kClosureTol ||
       w.span_stations.back() > w.half_span + kClosureTol)) {
    problems.push_back("span stations outside [0, half_span]");
  }
  for (std::size_t k = 0; k < w.slices.size(); ++k) {
    const Section& s = w.slices[k];
    if (!is_closed(s)) {
      problems.push_back("slice " + std::to_string(k) + " is not a closed loop");
      continue;
    }
    if (self_intersects(s)) {
      problems.push_back("slice " + std::to_string(k) + " self-intersects");
    }
  }
  if (!w.cp.empty()) {
    if (w.cp.size() != w.slices.size()) {
      problems.push_back("cp slice count mismatch");
    } else {
      for (std::size_t k = 0; k < w.cp.size(); ++k) {
        if (w.cp[k].size() != w.slices[k].coords.size()) {
          problems.push_back("cp point count mismatch on slice " + std::to_string(k));
        }
      }
    }
  }
  return problems;
}

Section smooth_hook(Section s) { return s; }

Section resample_section(const Section& raw, int n) {
  if (raw.coords.size() < 4) {
    throw std::invalid_argument("resample_section: need at least 4 points");
  }
  if (n < 8) {
    throw std::invalid_argument("resample_section: minimum n is 8");
  }
  if (perimeter(raw) <= 0.0) {
    throw std::invalid_argument("resample_section: degenerate zero-perimeter input");
  }

  const SplitLoop surf = split_surfaces(raw);
  const int n_unique = n - 1;
  const int n_up = n_unique / 2 + 1;
  const int n_low = n_unique - n_up + 2;

  const std::vector<Vec2> upper = place_cosine(surf.upper, n_up);
  const std::vector<Vec2> lower = place_cosine(surf.lower, n_low);

  Section out;
  out.coords.reserve(static_cast<std::size_t>(n));
  out.coords.insert(out.coords.end(), upper.begin(), upper.end());
  out.coords.insert(out.coords.end(), lower.begin() + 1, lower.end() - 1);
  out.coords.push_back(upper.front());
  return smooth_hook(std::move(out));
}

double section_area(const Section& s) {
  if (!is_closed(s)) {
    throw std::invalid_argument("section_area: open loop");
  }
  return std::abs(signed_area(s.coords));
}

double wing_volume(const WingGeometry& w) {
  if (w.slices.size() < 2) {
    throw std::invalid_argument("wing_volume: need at least 2 slices");
  }
  if (w.slices.size() != w.span_stations.size()) {
    throw std::invalid_argument("wing_volume: slice/station count mismatch");
  }
  double vol = 0.0;
  double prev_area = section_area(w.slices[0]);
  for (std::size_t k = 1; k < w.slices.size(); ++k) {
    const double area = section_area(w.slices[k]);
    vol += 0.5 * (area + prev_area) * (w.span_stations[k] - w.span_stations[k - 1]);
    prev_area = area;
  }
  return vol;
}

SurfaceSamples sample_surfaces(const Section& s,
                               const std::vector<double>& chord_fractions) {
  const SplitLoop surf = split_surfaces(s);
  double x_min = std::numeric_limits<double>::infinity();
  double x_max = -std::numeric_limits<double>::infinity();
  for (const Vec2& p : surf.upper) {
    x_min = std::min(x_min, p.x);
    x_max = std::max(x_max, p.x);
  }
  for (const Vec2& p : surf.lower) {
    x_min = std::min(x_min, p.x);
    x_max = std::max(x_max, p.x);
  }
  SurfaceSamples out;
  out.x.reserve(chord_fractions.size());
  out.y_upper.reserve(chord_fractions.size());
  out.y_lower.reserve(chord_fractions.size());
  const std::vector<double> yu = y_of(surf.upper);
  const std::vector<double> yl = y_of(surf.lower);
  for (double f : chord_fractions) {
    if (f < -1e-12 || f > 1.0 + 1e-12) {
      throw std::invalid_argument("sample_surfaces: station outside chord");
    }
    const double x = x_min + f * (x_max - x_min);
    out.x.push_back(x);
    out.y_upper.push_back(interp_surface(surf.upper, yu, x));
    out.y_lower.push_back(interp_surface(surf.lower, yl, x));
  }
  return out;
}

SurfaceFieldSamples sample_surface_field(const Section& s,
                                         const std::vector<double>& field,
                                         const std::vector<double>& chord_fractions) {
  const SplitLoop surf = split_surfaces(s, &field);
  double x_min = std::numeric_limits<double>::infinity();
  double x_max = -std::numeric_limits<double>::infinity();
  for (const Vec2& p : surf.upper) {
    x_min = std::min(x_min, p.x);
    x_max = std::max(x_max, p.x);
  }
  for (const Vec2& p : surf.lower) {
    x_min = std::min(x_min, p.x);
    x_max = std::max(x_max, p.x);
  }
  SurfaceFieldSamples out;
  for (double f : chord_fractions) {
    if (f < -1e-12 || f > 1.0 + 1e-12) {
      throw std::invalid_argument("sample_surface_field: station outside chord");
    }
    const double x = x_min + f * (x_max - x_min);
    out.x.push_back(x);
    out.upper.push_back(interp_surface(surf.upper, surf.upper_field, x));
    out.lower.push_back(interp_surface(surf.lower, surf.lower_field, x));
  }
  return out;
}

std::vector<double> cosine_stations(int n, double x0, double x1) {
  std::vector<double> f = cosine_fractions(n);
  for (double& v : f) v = x0 + (x1 - x0) * v;
  return f;
}

std::vector<double> thickness_distribution(const Section& s, int n_stations) {
  if (n_stations < 1) {
    throw std::invalid_argument("thickness_distribution: need n_stations >= 1");
  }
  const SurfaceSamples samples = sample_surfaces(s, cosine_stations(n_stations));
  std::vector<double> t(samples.x.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    t[i] = samples.y_upper[i] - samples.y_lower[i];
  }
  return t;
}

double trailing_edge_y(const Section& s) {
  if (s.coords.empty()) throw std::invalid_argument("trailing_edge_y: empty section");
  const Vec2* te = &s.coords[0];
  for (const Vec2& p : s.coords) {
    if (p.x > te->x) te = &p;
  }
  return te->y;
}

ConstraintReport check_constraints(const WingGeometry& initial,
                                   const WingGeometry& candidate, double alpha,
                                   double vmin_frac,
                                   const ConstraintBounds& bounds) {
  if (initial.slices.size() != candidate.slices.size()) {
    throw std::invalid_argument("check_constraints: mismatched slice counts");
  }
  ConstraintReport rep;
  rep.alpha = alpha;
  rep.alpha_ok = alpha >= bounds.alpha_lo && alpha <= bounds.alpha_hi;

  rep.volume_fraction = wing_volume(candidate) / wing_volume(initial);
  rep.volume_ok =
      rep.volume_fraction >= vmin_frac && rep.volume_fraction <= bounds.volume_hi;

  // Thickness ratios on a chord-by-span grid; 25 x 8 = 200 values matching
  // the optimizer's constraint count. Spanwise values are linearly
  // interpolated between the bracketing slices.
  const std::vector<double> chord = cosine_stations(bounds.thickness_chord_stations);
  const int n_span = bounds.thickness_span_stations;

  auto slice_thickness = [&](const WingGeometry& w, std::size_t k) {
    const SurfaceSamples ss = sample_surfaces(w.slices[k], chord);
    std::vector<double> t(ss.x.size());
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = ss.y_upper[i] - ss.y_lower[i];
    return t;
  };

  std::vector<std::vector<double>> t_init(initial.slices.size());
  std::vector<std::vector<double>> t_cand(candidate.slices.size());
  for (std::size_t k = 0; k < initial.slices.size(); ++k) {
    t_init[k] = slice_thickness(initial, k);
    t_cand[k] = slice_thickness(candidate, k);
  }

  const double eta0 = initial.span_stations.front();
  const double eta1 = initial.span_stations.back();
  rep.thickness_ok = true;
  rep.thickness_fractions.reserve(
      static_cast<std::size_t>(n_span * bounds.thickness_chord_stations));
  for (int j = 0; j < n_span; ++j) {
    const double eta =
        n_span == 1 ? eta0 : eta0 + (eta1 - eta0) * j / static_cast<double>(n_span - 1);
    // Bracketing slices and interpolation weight.
    std::size_t hi = 1;
    while (hi + 1 < initial.span_stations.size() && initial.span_stations[hi] < eta) ++hi;
    const std::size_t lo = hi - 1;
    const double gap = initial.span_stations[hi] - initial.span_stations[lo];
    const double w = gap > 0.0 ? std::clamp((eta - initial.span_stations[lo]) / gap, 0.0, 1.0) : 0.0;
    for (int i = 0; i < bounds.thickness_chord_stations; ++i) {
      const auto idx = static_cast<std::size_t>(i);
      const double ti = (1.0 - w) * t_init[lo][idx] + w * t_init[hi][idx];
      const double tc = (1.0 - w) * t_cand[lo][idx] + w * t_cand[hi][idx];
      double frac;
      if (std::abs(ti) < 1e-12) {
        frac = std::abs(tc) < 1e-12 ? 1.0 : std::numeric_limits<double>::infinity();
      } else {
        frac = tc / ti;
      }
      rep.thickness_fractions.push_back(frac);
      if (!(frac >= bounds.thickness_lo && frac <= bounds.thickness_hi)) {
        rep.thickness_ok = false;
      }
    }
  }
  return rep;
}

}  // namespace optiwing::geom
