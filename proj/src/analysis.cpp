#include "optiwing/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "optiwing/rng.hpp"

namespace optiwing::analysis {

namespace {

double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * (static_cast<double>(v.size()) - 1.0);
  const auto lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double w = pos - static_cast<double>(lo);
  return v[lo] * (1.0 - w) + v[hi] * w;
}

std::size_t nearest_slice(const geom::WingGeometry& w, double span_fraction) {
  const double target = span_fraction * w.half_span;
  std::size_t best = 0;
  double best_d = std::abs(w.span_stations[0] - target);
  for (std::size_t k = 1; k < w.span_stations.size(); ++k) {
    const double d = std::abs(w.span_stations[k] - target);
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  return best;
}

}  // namespace

int PcaResult::n_for(double threshold) const {
  for (std::size_t i = 0; i < cumulative.size(); ++i) {
    if (cumulative[i] >= threshold) return static_cast<int>(i) + 1;
  }
  return static_cast<int>(cumulative.size());
}

PcaResult pca_cumulative(const Eigen::MatrixXd& data) {
  if (data.rows() < 2) {
    throw std::invalid_argument("pca_cumulative: need at least 2 cases");
  }
  Eigen::MatrixXd centered = data.rowwise() - data.colwise().mean();
  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered);
  const Eigen::VectorXd sv = svd.singularValues();
  const double total = sv.squaredNorm();
  if (!(total > 0.0)) {
    throw std::invalid_argument("pca_cumulative: zero total variance");
  }
  PcaResult out;
  out.explained_variance_ratio.reserve(static_cast<std::size_t>(sv.size()));
  out.cumulative.reserve(static_cast<std::size_t>(sv.size()));
  double running = 0.0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    const double ratio = sv(i) * sv(i) / total;
    running += ratio;
    out.explained_variance_ratio.push_back(ratio);
    out.cumulative.push_back(running);
  }
  return out;
}

Eigen::MatrixXd geometry_features(const std::vector<geom::WingGeometry>& wings,
                                  int n_chord) {
  if (wings.empty()) throw std::invalid_argument("geometry_features: no wings");
  const std::vector<double> stations = geom::cosine_stations(n_chord);
  const std::size_t n_slices = wings.front().slices.size();
  const auto cols = static_cast<Eigen::Index>(n_slices) * 2 * n_chord;
  Eigen::MatrixXd out(static_cast<Eigen::Index>(wings.size()), cols);
  for (std::size_t w = 0; w < wings.size(); ++w) {
    if (wings[w].slices.size() != n_slices) {
      throw std::invalid_argument("geometry_features: inconsistent slice counts");
    }
    Eigen::Index col = 0;
    for (const geom::Section& s : wings[w].slices) {
      const geom::SurfaceSamples ss = geom::sample_surfaces(s, stations);
      for (int i = 0; i < n_chord; ++i) {
        out(static_cast<Eigen::Index>(w), col++) = ss.y_upper[static_cast<std::size_t>(i)];
      }
      for (int i = 0; i < n_chord; ++i) {
        out(static_cast<Eigen::Index>(w), col++) = ss.y_lower[static_cast<std::size_t>(i)];
      }
    }
  }
  return out;
}

Eigen::MatrixXd pressure_features(const std::vector<geom::WingGeometry>& wings,
                                  int n_chord) {
  if (wings.empty()) throw std::invalid_argument("pressure_features: no wings");
  const std::vector<double> stations = geom::cosine_stations(n_chord);
  const std::size_t n_slices = wings.front().slices.size();
  const auto cols = static_cast<Eigen::Index>(n_slices) * 2 * n_chord;
  Eigen::MatrixXd out(static_cast<Eigen::Index>(wings.size()), cols);
  for (std::size_t w = 0; w < wings.size(); ++w) {
    if (!wings[w].has_pressure()) {
      throw std::invalid_argument("pressure_features: wing without cp data");
    }
    Eigen::Index col = 0;
    for (std::size_t k = 0; k < wings[w].slices.size(); ++k) {
      const geom::SurfaceFieldSamples fs =
          geom::sample_surface_field(wings[w].slices[k], wings[w].cp[k], stations);
      for (int i = 0; i < n_chord; ++i) {
        out(static_cast<Eigen::Index>(w), col++) = fs.upper[static_cast<std::size_t>(i)];
      }
      for (int i = 0; i < n_chord; ++i) {
        out(static_cast<Eigen::Index>(w), col++) = fs.lower[static_cast<std::size_t>(i)];
      }
    }
  }
  return out;
}

std::vector<double> default_span_fractions() {
  return {0.0, 0.25, 0.5, 0.75, 0.9, 1.0};
}

DifferenceProfile aggregate_difference(
    const std::vector<std::pair<geom::WingGeometry, geom::WingGeometry>>& pairs,
    const std::vector<double>& span_fractions, int n_chord, DiffKind kind) {
  if (pairs.empty()) throw std::invalid_argument("aggregate_difference: no pairs");
  DifferenceProfile out;
  out.span_fractions = span_fractions;
  out.chord_stations = geom::cosine_stations(n_chord);

  const std::size_t n_span = span_fractions.size();
  out.mean_abs.assign(n_span, std::vector<double>(static_cast<std::size_t>(n_chord), 0.0));
  out.stddev.assign(n_span, std::vector<double>(static_cast<std::size_t>(n_chord), 0.0));

  // diffs[s][c][pair]
  std::vector<std::vector<std::vector<double>>> diffs(
      n_span, std::vector<std::vector<double>>(static_cast<std::size_t>(n_chord)));

  for (const auto& [a, b] : pairs) {
    if (a.slices.size() != b.slices.size()) {
      throw std::invalid_argument("aggregate_difference: misaligned pair");
    }
    for (std::size_t s = 0; s < n_span; ++s) {
      const std::size_t ka = nearest_slice(a, span_fractions[s]);
      const std::size_t kb = nearest_slice(b, span_fractions[s]);
      std::vector<double> ua, la, ub, lb;
      if (kind == DiffKind::shape) {
        const geom::SurfaceSamples sa = geom::sample_surfaces(a.slices[ka], out.chord_stations);
        const geom::SurfaceSamples sb = geom::sample_surfaces(b.slices[kb], out.chord_stations);
        ua = sa.y_upper;
        la = sa.y_lower;
        ub = sb.y_upper;
        lb = sb.y_lower;
      } else {
        if (!a.has_pressure() || !b.has_pressure()) {
          throw std::invalid_argument("aggregate_difference: missing cp data");
        }
        const geom::SurfaceFieldSamples fa =
            geom::sample_surface_field(a.slices[ka], a.cp[ka], out.chord_stations);
        const geom::SurfaceFieldSamples fb =
            geom::sample_surface_field(b.slices[kb], b.cp[kb], out.chord_stations);
        ua = fa.upper;
        la = fa.lower;
        ub = fb.upper;
        lb = fb.lower;
      }
      for (int c = 0; c < n_chord; ++c) {
        const auto ci = static_cast<std::size_t>(c);
        // Upper and lower surfaces pooled into one magnitude per station.
        const double d =
            0.5 * (std::abs(ua[ci] - ub[ci]) + std::abs(la[ci] - lb[ci]));
        diffs[s][ci].push_back(d);
      }
    }
  }

  for (std::size_t s = 0; s < n_span; ++s) {
    for (int c = 0; c < n_chord; ++c) {
      const auto ci = static_cast<std::size_t>(c);
      const metrics::Stat st = metrics::stat_of(diffs[s][ci]);
      out.mean_abs[s][ci] = st.mean;
      out.stddev[s][ci] = st.stddev;
    }
  }
  return out;
}

LdSummary ld_distribution(const std::vector<data::CaseDescriptor>& cases,
                          LdAxis axis, int n_bins) {
  std::vector<const data::CaseDescriptor*> usable;
  for (const data::CaseDescriptor& c : cases) {
    if (c.has_initial_sim()) usable.push_back(&c);
  }
  if (usable.empty()) {
    throw std::invalid_argument("ld_distribution: no cases with initial simulations");
  }
  auto key = [axis](const data::CaseDescriptor& c) {
    return axis == LdAxis::mach ? c.condition.mach : c.condition.reynolds;
  };
  double lo = key(*usable.front()), hi = lo;
  for (const auto* c : usable) {
    lo = std::min(lo, key(*c));
    hi = std::max(hi, key(*c));
  }
  if (usable.size() == 1 || hi == lo) n_bins = 1;

  LdSummary out;
  out.axis = axis;
  const double width = n_bins > 0 ? (hi - lo) / n_bins : 0.0;
  for (int b = 0; b < n_bins; ++b) {
    LdBin bin;
    bin.lo = lo + b * width;
    bin.hi = b + 1 == n_bins ? hi : lo + (b + 1) * width;
    std::vector<double> ld_init, ld_opt;
    for (const auto* c : usable) {
      const double v = key(*c);
      const bool inside = b + 1 == n_bins ? (v >= bin.lo && v <= bin.hi)
                                          : (v >= bin.lo && v < bin.hi);
      if (!inside) continue;
      ld_init.push_back(c->coeff_initial.l_over_d());
      ld_opt.push_back(c->coeff_optimized.l_over_d());
    }
    bin.count = static_cast<int>(ld_init.size());
    if (bin.count > 0) {
      bin.mean_initial = metrics::stat_of(ld_init).mean;
      bin.mean_optimized = metrics::stat_of(ld_opt).mean;
      bin.median_initial = quantile(ld_init, 0.5);
      bin.median_optimized = quantile(ld_opt, 0.5);
      bin.q25_initial = quantile(ld_init, 0.25);
      bin.q75_initial = quantile(ld_init, 0.75);
      bin.q25_optimized = quantile(ld_opt, 0.25);
      bin.q75_optimized = quantile(ld_opt, 0.75);
    }
    out.bins.push_back(bin);
  }
  return out;
}

std::map<std::string, AblationCurve> run_ablation(
    const std::vector<std::string>& train_pool, const std::vector<int>& sizes,
    int repeats, int passes, const TrainFn& train_fn, const EvalFn& eval_fn,
    std::uint64_t seed) {
  for (std::size_t i = 1; i < sizes.size(); ++i) {
    if (sizes[i] <= sizes[i - 1]) {
      throw std::invalid_argument("run_ablation: sizes must be strictly increasing");
    }
  }
  if (!sizes.empty() && static_cast<std::size_t>(sizes.back()) > train_pool.size()) {
    throw std::invalid_argument("run_ablation: size exceeds training pool");
  }

  std::map<std::string, AblationCurve> curves;
  for (std::size_t si = 0; si < sizes.size(); ++si) {
    const int size = sizes[si];
    std::map<std::string, std::vector<double>> collected;
    bool failed = false;
    for (int rep = 0; rep < repeats && !failed; ++rep) {
      std::vector<std::string> pool = train_pool;
      Rng rng(seed, Rng::hash_key("ablation"));
      Rng sub = rng.fork(static_cast<std::uint64_t>(size) * 131 +
                         static_cast<std::uint64_t>(rep));
      sub.shuffle(pool);
      pool.resize(static_cast<std::size_t>(size));
      try {
        const std::string model = train_fn(pool, rep);
        for (int pass = 0; pass < passes; ++pass) {
          for (const auto& [name, value] : eval_fn(model, pass)) {
            collected[name].push_back(value);
          }
        }
      } catch (const std::exception&) {
        failed = true;  // recorded, sweep continues
      }
    }
    for (auto& [name, values] : collected) {
      AblationCurve& curve = curves[name];
      if (curve.metric_name.empty()) {
        curve.metric_name = name;
        curve.repeats = repeats;
        curve.passes = passes;
      }
    }
    // Record this size on every curve seen so far.
    for (auto& [name, curve] : curves) {
      curve.sizes.push_back(size);
      curve.failed.push_back(failed || collected.find(name) == collected.end());
      const auto it = collected.find(name);
      curve.values.push_back(it == collected.end() ? metrics::Stat{}
                                                   : metrics::stat_of(it->second));
    }
  }
  return curves;
}

std::vector<double> marginal_improvement_rate(const AblationCurve& curve) {
  if (curve.sizes.size() < 2) {
    throw std::invalid_argument("marginal_improvement_rate: need >= 2 sizes");
  }
  const double baseline = curve.values.front().mean;
  if (baseline == 0.0) {
    throw std::invalid_argument("marginal_improvement_rate: zero baseline value");
  }
  std::vector<double> rates;
  for (std::size_t i = 0; i + 1 < curve.sizes.size(); ++i) {
    const double dm = curve.values[i].mean - curve.values[i + 1].mean;
    const double dn = curve.sizes[i + 1] - curve.sizes[i];
    rates.push_back(100.0 * dm / (baseline * dn));
  }
  return rates;
}

}  // namespace optiwing::analysis
