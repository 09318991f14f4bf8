#include "optiwing/bezier.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <thread>

namespace optiwing::bezier {

namespace {

constexpr int kDegree = kNumControl - 1;

void bernstein_row(double t, std::array<double, kNumControl>& b) {
  b.fill(0.0);
  b[0] = 1.0;
  const double s = 1.0 - t;
  for (int j = 1; j <= kDegree; ++j) {
    double saved = 0.0;
    for (int k = 0; k < j; ++k) {
      const double tmp = b[static_cast<std::size_t>(k)];
      b[static_cast<std::size_t>(k)] = saved + s * tmp;
      saved = t * tmp;
    }
    b[static_cast<std::size_t>(j)] = saved;
  }
}

struct RationalEval {
  geom::Vec2 point;
  double denom;
  std::array<double, kNumControl> basis;
};

RationalEval eval_full(const BezierLatent& latent, double t) {
  RationalEval ev;
  bernstein_row(t, ev.basis);
  double nx = 0.0, ny = 0.0, den = 0.0;
  for (int i = 0; i < kNumControl; ++i) {
    const double bw = ev.basis[static_cast<std::size_t>(i)] * latent.weights[static_cast<std::size_t>(i)];
    nx += bw * latent.control_points[static_cast<std::size_t>(i)].x;
    ny += bw * latent.control_points[static_cast<std::size_t>(i)].y;
    den += bw;
  }
  ev.denom = den;
  ev.point = {nx / den, ny / den};
  return ev;
}

// Chord-length parameters over [0, 1].
std::vector<double> chord_parameters(const std::vector<geom::Vec2>& pts) {
  std::vector<double> t(pts.size(), 0.0);
  for (std::size_t i = 1; i < pts.size(); ++i) {
    t[i] = t[i - 1] + std::hypot(pts[i].x - pts[i - 1].x, pts[i].y - pts[i - 1].y);
  }
  const double total = t.back();
  if (total <= 0.0) throw std::invalid_argument("encode: zero-perimeter section");
  for (double& v : t) v /= total;
  return t;
}

BezierLatent initial_latent(const std::vector<geom::Vec2>& pts,
                            const std::vector<double>& params) {
  BezierLatent latent;
  latent.weights.fill(1.0);
  // Control points from uniform arc-length subsampling of the input.
  std::size_t seg = 0;
  for (int i = 0; i < kNumControl; ++i) {
    const double target = static_cast<double>(i) / kDegree;
    while (seg + 2 < pts.size() && params[seg + 1] < target) ++seg;
    const double len = params[seg + 1] - params[seg];
    const double w = len > 0.0 ? (target - params[seg]) / len : 0.0;
    latent.control_points[static_cast<std::size_t>(i)] = {
        pts[seg].x + w * (pts[seg + 1].x - pts[seg].x),
        pts[seg].y + w * (pts[seg + 1].y - pts[seg].y)};
  }
  latent.control_points[0] = pts.front();
  latent.control_points[kNumControl - 1] = pts.back();
  return latent;
}

double fit_mse(const BezierLatent& latent, const std::vector<geom::Vec2>& pts,
               const std::vector<double>& params) {
  double acc = 0.0;
  for (std::size_t j = 0; j < pts.size(); ++j) {
    const geom::Vec2 c = evaluate(latent, params[j]);
    const double dx = c.x - pts[j].x;
    const double dy = c.y - pts[j].y;
    acc += dx * dx + dy * dy;
  }
  return acc / (2.0 * static_cast<double>(pts.size()));
}

// Newton point-inversion pass: move each interior parameter to the foot
// point of its target on the current curve.
void refine_parameters(const BezierLatent& latent,
                       const std::vector<geom::Vec2>& pts,
                       std::vector<double>& params, int steps = 3) {
  for (std::size_t j = 1; j + 1 < params.size(); ++j) {
    double t = params[j];
    for (int it = 0; it < steps; ++it) {
      const geom::Vec2 c = evaluate(latent, t);
      const geom::Vec2 d = evaluate_derivative(latent, t);
      const double rx = c.x - pts[j].x;
      const double ry = c.y - pts[j].y;
      const double num = rx * d.x + ry * d.y;
      const double den = d.x * d.x + d.y * d.y;
      if (den <= 1e-300) break;
      t -= num / den;
      if (t < 0.0) t = 0.0;
      if (t > 1.0) t = 1.0;
    }
    params[j] = t;
  }
}

}  // namespace

std::array<double, kLatentSize> BezierLatent::to_flat() const {
  std::array<double, kLatentSize> f{};
  for (int i = 0; i < kNumControl; ++i) {
    f[static_cast<std::size_t>(i)] = control_points[static_cast<std::size_t>(i)].x;
    f[static_cast<std::size_t>(kNumControl + i)] = control_points[static_cast<std::size_t>(i)].y;
    f[static_cast<std::size_t>(2 * kNumControl + i)] = weights[static_cast<std::size_t>(i)];
  }
  return f;
}

BezierLatent BezierLatent::from_flat(const std::array<double, kLatentSize>& flat) {
  BezierLatent latent;
  for (int i = 0; i < kNumControl; ++i) {
    latent.control_points[static_cast<std::size_t>(i)] = {
        flat[static_cast<std::size_t>(i)], flat[static_cast<std::size_t>(kNumControl + i)]};
    latent.weights[static_cast<std::size_t>(i)] = flat[static_cast<std::size_t>(2 * kNumControl + i)];
  }
  return latent;
}

geom::Vec2 evaluate(const BezierLatent& latent, double t) {
  if (t < 0.0 || t > 1.0) throw std::invalid_argument("evaluate: t outside [0, 1]");
  return eval_full(latent, t).point;
}

geom::Vec2 evaluate_derivative(const BezierLatent& latent, double t) {
  // C = N / D; C' = (N' D - N D') / D^2 with N', D' from the degree-(n-1)
  // Bernstein difference formula.
  std::array<double, kNumControl> b{};
  bernstein_row(t, b);
  std::array<double, kNumControl> blo{};  // degree n-1 row in slots 0..n-1
  blo.fill(0.0);
  blo[0] = 1.0;
  const double s = 1.0 - t;
  for (int j = 1; j <= kDegree - 1; ++j) {
    double saved = 0.0;
    for (int k = 0; k < j; ++k) {
      const double tmp = blo[static_cast<std::size_t>(k)];
      blo[static_cast<std::size_t>(k)] = saved + s * tmp;
      saved = t * tmp;
    }
    blo[static_cast<std::size_t>(j)] = saved;
  }
  double nx = 0.0, ny = 0.0, den = 0.0;
  double dnx = 0.0, dny = 0.0, dden = 0.0;
  for (int i = 0; i < kNumControl; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    const double bw = b[idx] * latent.weights[idx];
    nx += bw * latent.control_points[idx].x;
    ny += bw * latent.control_points[idx].y;
    den += bw;
    // d/dt B_i^n = n (B_{i-1}^{n-1} - B_i^{n-1})
    const double dbi = kDegree * ((i > 0 ? blo[static_cast<std::size_t>(i - 1)] : 0.0) -
                                  (i < kDegree ? blo[idx] : 0.0));
    const double dbw = dbi * latent.weights[idx];
    dnx += dbw * latent.control_points[idx].x;
    dny += dbw * latent.control_points[idx].y;
    dden += dbw;
  }
  const double inv_d2 = 1.0 / (den * den);
  return {(dnx * den - nx * dden) * inv_d2, (dny * den - ny * dden) * inv_d2};
}

std::pair<BezierLatent, FitReport> encode(const geom::Section& s,
                                          const FitOptions& opts) {
  if (s.coords.size() < 8) throw std::invalid_argument("encode: too few points");

  // Fit in a frame anchored at the first point. This keeps the arithmetic
  // identical under input translation, which the ill-conditioned degree-29
  // system would otherwise amplify into visible latent differences.
  const geom::Vec2 anchor = s.coords.front();
  std::vector<geom::Vec2> pts = s.coords;
  for (geom::Vec2& p : pts) {
    p.x -= anchor.x;
    p.y -= anchor.y;
  }

  std::vector<double> params = chord_parameters(pts);
  BezierLatent latent = initial_latent(pts, params);
  const std::array<geom::Vec2, kNumControl> cp_init = latent.control_points;

  const std::size_t n_pts = pts.size();
  // Free unknowns: interior control points (x, y) then all log-weights.
  const int n_cp_free = kNumControl - 2;
  const int n_params = 2 * n_cp_free + kNumControl;

  // Point rows, one dead-band log-weight penalty row per weight, and two
  // dead-band rows per interior control point.
  const auto n_rows =
      2 * static_cast<Eigen::Index>(n_pts) + kNumControl + 2 * (kNumControl - 2);
  Eigen::MatrixXd jac(n_rows, n_params);
  Eigen::VectorXd res(n_rows);

  const double band = opts.weight_band;
  const double sqrt_wd = std::sqrt(opts.weight_band_penalty);
  auto band_excess = [band](double w) {
    const double lw = std::log(w);
    const double ex = std::abs(lw) - band;
    return ex > 0.0 ? (lw > 0.0 ? ex : -ex) : 0.0;
  };
  const double sqrt_cpd = std::sqrt(opts.cp_band_penalty);
  auto cp_excess = [&](double v, double ref) {
    const double d = v - ref;
    const double ex = std::abs(d) - opts.cp_band;
    return ex > 0.0 ? (d > 0.0 ? ex : -ex) : 0.0;
  };
  auto objective = [&](const BezierLatent& l, const std::vector<double>& prm) {
    double acc = fit_mse(l, pts, prm) * (2.0 * static_cast<double>(n_pts));
    for (double w : l.weights) {
      const double ex = band_excess(w);
      acc += opts.weight_band_penalty * ex * ex;
    }
    for (int i = 1; i <= kNumControl - 2; ++i) {
      const auto idx = static_cast<std::size_t>(i);
      const double exx = cp_excess(l.control_points[idx].x, cp_init[idx].x);
      const double exy = cp_excess(l.control_points[idx].y, cp_init[idx].y);
      acc += opts.cp_band_penalty * (exx * exx + exy * exy);
    }
    return acc / (2.0 * static_cast<double>(n_pts));
  };

  double lambda = 1e-3;
  double mse = objective(latent, params);
  FitReport report;
  report.converged = false;

  int iter = 0;
  for (; iter < opts.max_iterations; ++iter) {
    jac.setZero();
    for (std::size_t j = 0; j < n_pts; ++j) {
      const RationalEval ev = eval_full(latent, params[j]);
      const auto row = static_cast<Eigen::Index>(2 * j);
      res(row) = ev.point.x - pts[j].x;
      res(row + 1) = ev.point.y - pts[j].y;
      for (int i = 0; i < kNumControl; ++i) {
        const auto idx = static_cast<std::size_t>(i);
        const double bw_over_d =
            ev.basis[idx] * latent.weights[idx] / ev.denom;
        if (i >= 1 && i <= kNumControl - 2) {
          const int col = 2 * (i - 1);
          jac(row, col) = bw_over_d;
          jac(row + 1, col + 1) = bw_over_d;
        }
        // d/d(log w_i) = B_i w_i (P_i - C) / D
        const int wcol = 2 * n_cp_free + i;
        jac(row, wcol) = bw_over_d * (latent.control_points[idx].x - ev.point.x);
        jac(row + 1, wcol) = bw_over_d * (latent.control_points[idx].y - ev.point.y);
      }
    }

    // Dead-band weight penalty rows.
    for (int i = 0; i < kNumControl; ++i) {
      const auto row = 2 * static_cast<Eigen::Index>(n_pts) + i;
      const double ex = band_excess(latent.weights[static_cast<std::size_t>(i)]);
      res(row) = sqrt_wd * ex;
      if (ex != 0.0) jac(row, 2 * n_cp_free + i) = sqrt_wd;
    }
    // Dead-band control point rows.
    for (int i = 1; i <= kNumControl - 2; ++i) {
      const auto idx = static_cast<std::size_t>(i);
      const auto row = 2 * static_cast<Eigen::Index>(n_pts) + kNumControl + 2 * (i - 1);
      const double exx = cp_excess(latent.control_points[idx].x, cp_init[idx].x);
      const double exy = cp_excess(latent.control_points[idx].y, cp_init[idx].y);
      res(row) = sqrt_cpd * exx;
      res(row + 1) = sqrt_cpd * exy;
      if (exx != 0.0) jac(row, 2 * (i - 1)) = sqrt_cpd;
      if (exy != 0.0) jac(row + 1, 2 * (i - 1) + 1) = sqrt_cpd;
    }

    if (opts.refine_stations) {
      // Variable projection: the eliminated station unknowns leave behind a
      // projection of each point's rows onto the complement of the curve
      // tangent. Interior points only; the endpoints stay pinned.
      for (std::size_t j = 1; j + 1 < n_pts; ++j) {
        const geom::Vec2 d = evaluate_derivative(latent, params[j]);
        const double dd = d.x * d.x + d.y * d.y;
        if (dd <= 1e-300) continue;
        const auto row = static_cast<Eigen::Index>(2 * j);
        const double pr = (d.x * res(row) + d.y * res(row + 1)) / dd;
        res(row) -= d.x * pr;
        res(row + 1) -= d.y * pr;
        for (int col = 0; col < n_params; ++col) {
          const double pj = (d.x * jac(row, col) + d.y * jac(row + 1, col)) / dd;
          jac(row, col) -= d.x * pj;
          jac(row + 1, col) -= d.y * pj;
        }
      }
    }

    // Column norms for Marquardt scaling of the damping term.
    Eigen::VectorXd col_norms(n_params);
    for (int d = 0; d < n_params; ++d) {
      col_norms(d) = jac.col(d).norm() + 1e-9;
    }

    bool stepped = false;
    for (int attempt = 0; attempt < 14 && !stepped; ++attempt) {
      // Damped least squares via QR on the augmented system; better
      // conditioned than the normal equations for the degree-29 basis.
      Eigen::MatrixXd aug(jac.rows() + n_params, n_params);
      aug.topRows(jac.rows()) = jac;
      aug.bottomRows(n_params).setZero();
      const double sqrt_lambda = std::sqrt(lambda);
      for (int d = 0; d < n_params; ++d) {
        aug(jac.rows() + d, d) = sqrt_lambda * col_norms(d);
      }
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(aug.rows());
      rhs.head(jac.rows()) = -res;
      const Eigen::VectorXd step = aug.householderQr().solve(rhs);

      BezierLatent trial = latent;
      for (int i = 1; i <= kNumControl - 2; ++i) {
        const int col = 2 * (i - 1);
        trial.control_points[static_cast<std::size_t>(i)].x += step(col);
        trial.control_points[static_cast<std::size_t>(i)].y += step(col + 1);
      }
      for (int i = 0; i < kNumControl; ++i) {
        // Log-weight moves are trust-regioned: the Moebius gauge direction is
        // nearly null and unbounded steps along it destabilize the fit.
        const double dw = std::clamp(step(2 * n_cp_free + i), -1.5, 1.5);
        double& w = trial.weights[static_cast<std::size_t>(i)];
        w = std::clamp(w * std::exp(dw), 1e-4, 1e4);
      }
      std::vector<double> trial_params = params;
      if (opts.refine_stations) {
        refine_parameters(trial, pts, trial_params);
      }
      const double trial_mse = objective(trial, trial_params);
      if (trial_mse <= mse) {
        const double rel_change = (mse - trial_mse) / (mse + 1e-300);
        latent = trial;
        params = std::move(trial_params);
        mse = trial_mse;
        lambda = std::max(lambda * 0.3, 1e-14);
        stepped = true;
        if (rel_change < opts.rel_tol) {
          report.converged = true;
        }
      } else {
        lambda *= 3.0;
      }
    }
    if (!stepped) break;  // damping exhausted; keep best iterate
    if (report.converged) {
      ++iter;
      break;
    }
  }

  const double geometric_mse = fit_mse(latent, pts, params);

  // Canonical weight gauge: geometric mean 1 (curve unchanged).
  double log_sum = 0.0;
  for (double w : latent.weights) log_sum += std::log(w);
  const double scale = std::exp(-log_sum / kNumControl);
  for (double& w : latent.weights) w *= scale;

  for (geom::Vec2& p : latent.control_points) {
    p.x += anchor.x;
    p.y += anchor.y;
  }

  report.mse = geometric_mse;
  report.iterations = iter;
  report.stations = std::move(params);
  return {latent, report};
}

geom::Section decode(const BezierLatent& latent, int n) {
  if (n < 8) throw std::invalid_argument("decode: minimum n is 8");
  std::vector<double> stations(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    stations[static_cast<std::size_t>(k)] = static_cast<double>(k) / (n - 1);
  }
  return decode_at(latent, stations);
}

geom::Section decode_at(const BezierLatent& latent,
                        const std::vector<double>& stations) {
  geom::Section out;
  out.coords.reserve(stations.size());
  for (double t : stations) out.coords.push_back(evaluate(latent, t));
  return out;
}

std::vector<std::pair<BezierLatent, FitReport>> encode_batch(
    const std::vector<geom::Section>& sections, const FitOptions& opts,
    int threads) {
  std::vector<std::pair<BezierLatent, FitReport>> out(sections.size());
  if (sections.empty()) return out;
  const int n_threads = std::max(1, std::min<int>(threads, static_cast<int>(sections.size())));
  std::vector<std::thread> pool;
  std::size_t chunk = (sections.size() + static_cast<std::size_t>(n_threads) - 1) /
                      static_cast<std::size_t>(n_threads);
  for (int w = 0; w < n_threads; ++w) {
    const std::size_t begin = static_cast<std::size_t>(w) * chunk;
    const std::size_t end = std::min(sections.size(), begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&, begin, end] {
      for (std::size_t i = begin; i < end; ++i) {
        out[i] = encode(sections[i], opts);
      }
    });
  }
  for (auto& th : pool) th.join();
  return out;
}

}  // namespace optiwing::bezier
