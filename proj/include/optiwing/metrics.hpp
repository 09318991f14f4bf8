#pragma once

#include <functional>
#include <vector>

namespace optiwing::metrics {

using Feature = std::vector<double>;
using FeatureSet = std::vector<Feature>;

/// Gaussian kernel bandwidths; statistics are computed per gamma and then
/// averaged.
struct KernelConfig {
  std::vector<double> gammas{0.5, 25.0, 50.0, 100.0};
};

/// k(x, y) = exp(-gamma ||x - y||^2).
double gaussian_kernel(const Feature& x, const Feature& y, double gamma);

/// Squared maximum mean discrepancy, biased V-statistic (diagonal terms
/// included). Negative numerical results clamp to zero; identical sample
/// sets give exactly zero.
double mmd2(const FeatureSet& p, const FeatureSet& q, double gamma);

/// Arithmetic mean of mmd2 over the configured bandwidths.
double mmd_avg(const FeatureSet& p, const FeatureSet& q,
               const KernelConfig& cfg = {});

/// Vendi score: exp of the Shannon entropy of the eigenvalues of K/n.
/// Ranges from 1 (all samples identical) to n (all mutually dissimilar).
/// Eigenvalues below 1e-12 are treated as zero.
double vendi(const FeatureSet& x, double gamma);

/// Vendi averaged over bandwidths.
double vendi_avg(const FeatureSet& x, const KernelConfig& cfg = {});

/// Generated-set Vendi over ground-truth Vendi, each gamma-averaged before
/// the ratio.
double vendi_normalized(const FeatureSet& gen, const FeatureSet& truth,
                        const KernelConfig& cfg = {});

/// Percent of generated designs whose volume meets its case's minimum:
/// 100 * mean(indicator(v_gen / v_init >= vmin)).
double volume_satisfaction(const std::vector<double>& gen_volumes,
                           const std::vector<double>& init_volumes,
                           const std::vector<double>& vmin_fracs);

/// Mean squared error over all elements of equal-length vectors.
double mse(const Feature& truth, const Feature& pred);

/// MSE averaged across a set of paired feature vectors.
double mse_set(const FeatureSet& truth, const FeatureSet& pred);

struct SpanwiseResult {
  std::vector<double> profile;  // metric per slice index
  double average = 0.0;
};

/// Evaluates `metric` on per-slice sample sets and averages across slices.
/// gen[k] and truth[k] hold the slice-k feature sets of every case.
SpanwiseResult spanwise_average(
    const std::function<double(const FeatureSet&, const FeatureSet&)>& metric,
    const std::vector<FeatureSet>& gen, const std::vector<FeatureSet>& truth);

struct SpearmanResult {
  double rho = 0.0;
  double p_value = 1.0;
  bool defined = false;  // false when either vector is constant
};

/// Spearman rank correlation with average-rank tie handling; p-value from
/// the t approximation with n-2 degrees of freedom.
SpearmanResult spearman(const std::vector<double>& inputs,
                        const std::vector<double>& errors);

struct Stat {
  double mean = 0.0;
  double stddev = 0.0;
};

Stat stat_of(const std::vector<double>& values);

/// Evaluation summary across repeated sampling passes over one split.
struct MetricReport {
  Stat mse_shape;
  Stat mmd_shape_spanwise_avg;
  Stat mse_alpha;
  Stat mmd_alpha;
  Stat vendi_spanwise_avg;
  Stat vendi_normalized;
  Stat vol_constraint_pct;
  std::vector<double> shape_mse_profile;  // per-slice, averaged over passes
  std::vector<double> shape_mmd_profile;
  std::vector<double> vendi_profile;
  int passes = 0;
};

}  // namespace optiwing::metrics
