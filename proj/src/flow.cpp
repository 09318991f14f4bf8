#include "optiwing/flow.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace optiwing::flow {

bool within_bounds(const FlowCondition& c, const ParameterBounds& b) {
  return c.mach >= b.mach.lower && c.mach <= b.mach.upper &&
         c.reynolds >= b.reynolds.lower && c.reynolds <= b.reynolds.upper &&
         c.cl_con >= b.cl_con.lower && c.cl_con <= b.cl_con.upper &&
         c.vmin_frac >= b.vmin_frac.lower && c.vmin_frac <= b.vmin_frac.upper;
}

std::vector<FlowCondition> latin_hypercube(const ParameterBounds& bounds, int n,
                                           std::uint64_t seed,
                                           bool log_reynolds) {
  if (n < 1) throw std::invalid_argument("latin_hypercube: n must be >= 1");

  Rng root(seed, Rng::hash_key("lhs"));
  const auto ranges = bounds.ranges();

  // One column of stratified samples per parameter, independently permuted.
  std::vector<std::vector<double>> columns(ranges.size());
  for (std::size_t p = 0; p < ranges.size(); ++p) {
    const ParameterRange& r = *ranges[p];
    double lo = r.lower;
    double hi = r.upper;
    const bool log_axis = log_reynolds && r.name == "reynolds";
    if (log_axis) {
      lo = std::log(lo);
      hi = std::log(hi);
    }
    Rng col = root.fork(p);
    std::vector<double>& samples = columns[p];
    samples.resize(static_cast<std::size_t>(n));
    const double width = (hi - lo) / n;
    for (int k = 0; k < n; ++k) {
      double v = lo + (k + col.uniform()) * width;
      samples[static_cast<std::size_t>(k)] = log_axis ? std::exp(v) : v;
    }
    col.shuffle(samples);
  }

  std::vector<FlowCondition> out(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    auto& c = out[static_cast<std::size_t>(k)];
    c.mach = columns[0][static_cast<std::size_t>(k)];
    c.reynolds = columns[1][static_cast<std::size_t>(k)];
    c.cl_con = columns[2][static_cast<std::size_t>(k)];
    c.vmin_frac = columns[3][static_cast<std::size_t>(k)];
  }
  return out;
}

double sutherland_viscosity(double t, double mu0, double t0, double s) {
  if (t <= 0.0) throw std::invalid_argument("sutherland_viscosity: t must be > 0");
  return mu0 * std::pow(t / t0, 1.5) * (t0 + s) / (t + s);
}

double skin_friction(double re) {
  if (re <= 1.0) throw std::invalid_argument("skin_friction: re must be > 1");
  const double base = 2.0 * std::log10(re) - 0.65;
  if (base <= 0.0) throw std::invalid_argument("skin_friction: correlation undefined");
  return std::pow(base, -2.3);
}

WallSpacingResult off_wall_distance(const WallSpacingInputs& in) {
  if (in.mach <= 0.0 || in.reynolds <= 0.0 || in.t_inf <= 0.0 ||
      in.l_ref <= 0.0 || in.y_plus <= 0.0) {
    throw std::invalid_argument("off_wall_distance: inputs must be positive");
  }
  WallSpacingResult r;
  r.a = std::sqrt(in.gamma_heat * in.gas_constant * in.t_inf);
  r.u = in.mach * r.a;
  r.mu = sutherland_viscosity(in.t_inf, in.mu0, in.t0, in.sutherland_s);
  r.rho = in.reynolds * r.mu / (r.u * in.l_ref);
  r.cf = skin_friction(in.reynolds);
  r.tau_w = r.cf * 0.5 * r.rho * r.u * r.u;
  r.u_tau = std::sqrt(r.tau_w / r.rho);
  r.delta = in.y_plus * r.mu / (r.rho * r.u_tau);
  return r;
}

}  // namespace optiwing::flow
