#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "optiwing/geometry.hpp"

namespace optiwing::bezier {

constexpr int kNumControl = 30;
constexpr int kLatentSize = 3 * kNumControl;  // 30 x, 30 y, 30 w

/// Rational Bezier section latent: 30 control points and 30 positive weights.
/// The first and last control points stay pinned to the section's trailing
/// edge endpoints during fitting.
struct BezierLatent {
  std::array<geom::Vec2, kNumControl> control_points{};
  std::array<double, kNumControl> weights{};

  std::array<double, kLatentSize> to_flat() const;
  static BezierLatent from_flat(const std::array<double, kLatentSize>& flat);
};

struct FitReport {
  double mse = 0.0;  // mean squared residual, m^2
  int iterations = 0;
  bool converged = false;
  std::vector<double> stations;  // parameter value per fitted input point
};

struct FitOptions {
  int max_iterations = 200;
  double rel_tol = 1e-12;
  // Joint station refinement (variable projection): treats the per-point
  // parameters as eliminated unknowns instead of freezing the chord-length
  // assignment. Off by default; the frozen parameterization is gauge-fixed
  // and exactly translation-equivariant. Enable to reproduce sections
  // sampled from an arbitrary curve parameterization to machine accuracy.
  bool refine_stations = false;
  // Dead-band penalty on log-weights: free inside e^(+-2), quadratic
  // outside. Frozen-station fits otherwise push weights to extreme ratios
  // (a Moebius reparameterization in disguise), which makes the latents
  // ill-conditioned downstream.
  double weight_band = 2.0;
  double weight_band_penalty = 1e-4;
  // Matching dead-band on interior control points, relative to their
  // arc-length initialization: free within the band, quadratic outside.
  // Unconstrained high-degree fits otherwise park control points far from
  // the section with compensating weights, leaving latents ill-conditioned.
  double cp_band = 0.15;
  double cp_band_penalty = 1e-3;
};

/// Rational Bezier point at t in [0, 1].
geom::Vec2 evaluate(const BezierLatent& latent, double t);

/// Curve derivative dC/dt; used by point inversion and curvature checks.
geom::Vec2 evaluate_derivative(const BezierLatent& latent, double t);

/// Least-squares fit of a closed section: Levenberg-Marquardt over interior
/// control points and log-weights, chord-length initial parameterization.
/// Deterministic for a given input. On divergence the best iterate is
/// returned with converged = false.
std::pair<BezierLatent, FitReport> encode(const geom::Section& s,
                                          const FitOptions& opts = {});

/// Samples the latent at n uniform parameter stations (n >= 8). Stations of
/// different n nest whenever (n1 - 1) divides (n2 - 1).
geom::Section decode(const BezierLatent& latent, int n);

/// Samples the latent at explicit parameter stations.
geom::Section decode_at(const BezierLatent& latent,
                        const std::vector<double>& stations);

/// Encodes many sections, parallelized across sections.
std::vector<std::pair<BezierLatent, FitReport>> encode_batch(
    const std::vector<geom::Section>& sections, const FitOptions& opts = {},
    int threads = 2);

}  // namespace optiwing::bezier
