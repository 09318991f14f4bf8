#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "optiwing/rng.hpp"

namespace optiwing::flow {

/// One sampled design condition: flow state plus optimizer constraint levels.
struct FlowCondition {
  double mach = 0.0;
  double reynolds = 0.0;
  double cl_con = 0.0;
  double vmin_frac = 0.0;
};

struct ParameterRange {
  std::string name;
  double lower;
  double upper;
};

/// Sampled parameter bounds for the dataset's design conditions.
struct ParameterBounds {
  ParameterRange mach{"mach", 0.4, 0.9};
  ParameterRange reynolds{"reynolds", 1e6, 1e7};
  ParameterRange cl_con{"cl_con", 0.5, 1.2};
  ParameterRange vmin_frac{"vmin_frac", 0.75, 1.0};

  std::array<const ParameterRange*, 4> ranges() const {
    return {&mach, &reynolds, &cl_con, &vmin_frac};
  }
};

bool within_bounds(const FlowCondition& c, const ParameterBounds& b = {});

/// Latin-hypercube sample of n conditions: each parameter's marginal places
/// exactly one point in each of n equal-width strata, at a uniform random
/// offset within the stratum. Deterministic for a fixed seed.
/// When log_reynolds is set, the Reynolds marginal is stratified in log space.
std::vector<FlowCondition> latin_hypercube(const ParameterBounds& bounds, int n,
                                           std::uint64_t seed,
                                           bool log_reynolds = false);

struct WallSpacingInputs {
  double mach;
  double reynolds;
  double t_inf;        // K
  double l_ref = 1.0;  // m
  double y_plus = 1.0;

  // Air constants.
  double gas_constant = 287.0;      // J/(kg K)
  double gamma_heat = 1.4;
  double mu0 = 1.716e-5;            // Pa s
  double t0 = 273.15;               // K
  double sutherland_s = 110.4;      // K
};

struct WallSpacingResult {
  double a;      // speed of sound, m/s
  double u;      // freestream velocity, m/s
  double mu;     // dynamic viscosity, Pa s
  double rho;    // density, kg/m^3
  double cf;     // skin friction coefficient
  double tau_w;  // wall shear stress, Pa
  double u_tau;  // friction velocity, m/s
  double delta;  // first-cell off-wall distance, m
};

/// Sutherland's law: mu = mu0 (t/t0)^1.5 (t0+S)/(t+S). Throws for t <= 0.
double sutherland_viscosity(double t, double mu0 = 1.716e-5,
                            double t0 = 273.15, double s = 110.4);

/// Prandtl-Schlichting turbulent flat-plate estimate,
/// C_f = (2 log10(Re) - 0.65)^(-2.3). Quoted validity 1e5 < Re < 1e9.
double skin_friction(double re);

/// First-cell height estimate for a target y+ from (M, Re, T). Density is
/// closed from the Reynolds number definition, rho = Re mu / (u L).
WallSpacingResult off_wall_distance(const WallSpacingInputs& in);

}  // namespace optiwing::flow
