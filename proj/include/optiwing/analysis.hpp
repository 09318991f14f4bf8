#pragma once

#include <Eigen/Dense>

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "optiwing/dataset.hpp"
#include "optiwing/geometry.hpp"
#include "optiwing/metrics.hpp"

namespace optiwing::analysis {

struct PcaResult {
  std::vector<double> explained_variance_ratio;  // descending
  std::vector<double> cumulative;                // running sum

  /// Minimal component count reaching the cumulative threshold.
  int n_for(double threshold) const;
};

/// PCA of a cases-by-features matrix (mean-centered internally).
/// Requires at least 2 cases and nonzero total variance.
PcaResult pca_cumulative(const Eigen::MatrixXd& data);

/// Feature rows for PCA and the shape metrics: upper/lower surface y at
/// n_chord cosine stations, concatenated over every slice of the stack.
Eigen::MatrixXd geometry_features(const std::vector<geom::WingGeometry>& wings,
                                  int n_chord = 100);

/// Same layout with surface pressure values; every wing must carry cp data.
Eigen::MatrixXd pressure_features(const std::vector<geom::WingGeometry>& wings,
                                  int n_chord = 100);

enum class DiffKind { shape, pressure };

struct DifferenceProfile {
  std::vector<double> span_fractions;   // of half-span
  std::vector<double> chord_stations;   // chord fractions
  std::vector<std::vector<double>> mean_abs;  // [span][chord]
  std::vector<std::vector<double>> stddev;
};

/// Aggregate |delta y| (or |delta Cp|) between paired stacks at the requested
/// span fractions (nearest slice) and cosine chord stations; mean and std
/// across pairs, upper and lower surfaces pooled.
DifferenceProfile aggregate_difference(
    const std::vector<std::pair<geom::WingGeometry, geom::WingGeometry>>& pairs,
    const std::vector<double>& span_fractions, int n_chord, DiffKind kind);

/// Default figure stations: 0, 25, 50, 75, 90, 100 percent of half-span.
std::vector<double> default_span_fractions();

enum class LdAxis { mach, reynolds };

struct LdBin {
  double lo = 0.0;
  double hi = 0.0;
  int count = 0;
  double mean_initial = 0.0;
  double mean_optimized = 0.0;
  double median_initial = 0.0;
  double median_optimized = 0.0;
  double q25_initial = 0.0, q75_initial = 0.0;
  double q25_optimized = 0.0, q75_optimized = 0.0;
};

struct LdSummary {
  LdAxis axis = LdAxis::mach;
  std::vector<LdBin> bins;
};

/// Binned L/D summaries for initial and optimized coefficients. Cases whose
/// initial simulation failed are excluded; throws if nothing remains.
LdSummary ld_distribution(const std::vector<data::CaseDescriptor>& cases,
                          LdAxis axis, int n_bins = 6);

struct AblationCurve {
  std::string metric_name;
  std::vector<int> sizes;
  std::vector<metrics::Stat> values;   // one per size
  std::vector<bool> failed;            // training failure recorded per size
  int repeats = 0;
  int passes = 0;
};

/// train_fn(train_ids, repeat_index) -> opaque model key;
/// eval_fn(model_key, pass_index) -> named metric values.
using TrainFn = std::function<std::string(const std::vector<std::string>&, int)>;
using EvalFn =
    std::function<std::map<std::string, double>(const std::string&, int)>;

/// For each training-set size: subsample the pool (seeded), train `repeats`
/// models, evaluate each with `passes` passes, and average. Training
/// failures are recorded on the curve and the sweep continues.
std::map<std::string, AblationCurve> run_ablation(
    const std::vector<std::string>& train_pool, const std::vector<int>& sizes,
    int repeats, int passes, const TrainFn& train_fn, const EvalFn& eval_fn,
    std::uint64_t seed);

/// Relative marginal improvement rate in percent per additional training
/// sample for consecutive sizes: 100 * (m_i - m_{i+1}) /
/// (m_at_smallest_size * (n_{i+1} - n_i)). Positive means improvement for
/// lower-is-better metrics.
std::vector<double> marginal_improvement_rate(const AblationCurve& curve);

}  // namespace optiwing::analysis
