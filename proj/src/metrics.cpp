#include "optiwing/metrics.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace optiwing::metrics {

namespace {

double sq_dist(const Feature& x, const Feature& y) {
  if (x.size() != y.size()) {
    throw std::invalid_argument("kernel: dimension mismatch");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    acc += d * d;
  }
  return acc;
}

// Regularized incomplete beta via Lentz's continued fraction.
double betacf(double a, double b, double x) {
  const double eps = 3e-14;
  const double fpmin = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < fpmin) d = fpmin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 300; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::abs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::abs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < eps) break;
  }
  return h;
}

double betai(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_bt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                       a * std::log(x) + b * std::log(1.0 - x);
  const double bt = std::exp(ln_bt);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return bt * betacf(a, b, x) / a;
  }
  return 1.0 - bt * betacf(b, a, 1.0 - x) / b;
}

// Two-sided p-value of Student's t with nu degrees of freedom.
double t_two_sided_p(double t, double nu) {
  return betai(0.5 * nu, 0.5, nu / (nu + t * t));
}

std::vector<double> average_ranks(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double gaussian_kernel(const Feature& x, const Feature& y, double gamma) {
  if (gamma <= 0.0) throw std::invalid_argument("gaussian_kernel: gamma must be > 0");
  return std::exp(-gamma * sq_dist(x, y));
}

double mmd2(const FeatureSet& p, const FeatureSet& q, double gamma) {
  if (p.empty() || q.empty()) {
    throw std::invalid_argument("mmd2: empty sample set");
  }
  const auto m = static_cast<double>(p.size());
  const auto n = static_cast<double>(q.size());
  double kpp = 0.0, kqq = 0.0, kpq = 0.0;
  for (const Feature& a : p) {
    for (const Feature& b : p) kpp += gaussian_kernel(a, b, gamma);
  }
  for (const Feature& a : q) {
    for (const Feature& b : q) kqq += gaussian_kernel(a, b, gamma);
  }
  for (const Feature& a : p) {
    for (const Feature& b : q) kpq += gaussian_kernel(a, b, gamma);
  }
  const double value = kpp / (m * m) + kqq / (n * n) - 2.0 * kpq / (m * n);
  return value > 0.0 ? value : 0.0;
}

double mmd_avg(const FeatureSet& p, const FeatureSet& q,
               const KernelConfig& cfg) {
  if (cfg.gammas.empty()) throw std::invalid_argument("mmd_avg: no bandwidths");
  double acc = 0.0;
  for (double g : cfg.gammas) acc += mmd2(p, q, g);
  return acc / static_cast<double>(cfg.gammas.size());
}

double vendi(const FeatureSet& x, double gamma) {
  if (x.empty()) throw std::invalid_argument("vendi: empty set");
  const auto n = static_cast<Eigen::Index>(x.size());
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    k(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = gaussian_kernel(x[static_cast<std::size_t>(i)],
                                       x[static_cast<std::size_t>(j)], gamma);
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  k /= static_cast<double>(n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(k);
  double entropy = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double lam = solver.eigenvalues()(i);
    if (lam > 1e-12) entropy -= lam * std::log(lam);
  }
  return std::exp(entropy);
}

double vendi_avg(const FeatureSet& x, const KernelConfig& cfg) {
  if (cfg.gammas.empty()) throw std::invalid_argument("vendi_avg: no bandwidths");
  double acc = 0.0;
  for (double g : cfg.gammas) acc += vendi(x, g);
  return acc / static_cast<double>(cfg.gammas.size());
}

double vendi_normalized(const FeatureSet& gen, const FeatureSet& truth,
                        const KernelConfig& cfg) {
  return vendi_avg(gen, cfg) / vendi_avg(truth, cfg);
}

double volume_satisfaction(const std::vector<double>& gen_volumes,
                           const std::vector<double>& init_volumes,
                           const std::vector<double>& vmin_fracs) {
  if (gen_volumes.size() != init_volumes.size() ||
      gen_volumes.size() != vmin_fracs.size()) {
    throw std::invalid_argument("volume_satisfaction: length mismatch");
  }
  if (gen_volumes.empty()) {
    throw std::invalid_argument("volume_satisfaction: empty input");
  }
  double satisfied = 0.0;
  for (std::size_t i = 0; i < gen_volumes.size(); ++i) {
    if (gen_volumes[i] / init_volumes[i] >= vmin_fracs[i]) satisfied += 1.0;
  }
  return 100.0 * satisfied / static_cast<double>(gen_volumes.size());
}

double mse(const Feature& truth, const Feature& pred) {
  if (truth.size() != pred.size()) {
    throw std::invalid_argument("mse: length mismatch");
  }
  if (truth.empty()) throw std::invalid_argument("mse: empty input");
  double acc = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double d = truth[i] - pred[i];
    acc += d * d;
  }
  return acc / static_cast<double>(truth.size());
}

double mse_set(const FeatureSet& truth, const FeatureSet& pred) {
  if (truth.size() != pred.size()) {
    throw std::invalid_argument("mse_set: case count mismatch");
  }
  if (truth.empty()) throw std::invalid_argument("mse_set: empty input");
  double acc = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) acc += mse(truth[i], pred[i]);
  return acc / static_cast<double>(truth.size());
}

SpanwiseResult spanwise_average(
    const std::function<double(const FeatureSet&, const FeatureSet&)>& metric,
    const std::vector<FeatureSet>& gen, const std::vector<FeatureSet>& truth) {
  if (gen.size() != truth.size()) {
    throw std::invalid_argument("spanwise_average: slice count mismatch");
  }
  if (gen.empty()) throw std::invalid_argument("spanwise_average: no slices");
  SpanwiseResult out;
  out.profile.reserve(gen.size());
  for (std::size_t k = 0; k < gen.size(); ++k) {
    out.profile.push_back(metric(gen[k], truth[k]));
  }
  out.average = std::accumulate(out.profile.begin(), out.profile.end(), 0.0) /
                static_cast<double>(out.profile.size());
  return out;
}

SpearmanResult spearman(const std::vector<double>& inputs,
                        const std::vector<double>& errors) {
  if (inputs.size() != errors.size()) {
    throw std::invalid_argument("spearman: length mismatch");
  }
  const std::size_t n = inputs.size();
  if (n < 3) throw std::invalid_argument("spearman: need n >= 3");

  SpearmanResult out;
  const auto constant = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [&](double x) { return x == v[0]; });
  };
  if (constant(inputs) || constant(errors)) {
    out.defined = false;
    out.rho = std::nan("");
    out.p_value = std::nan("");
    return out;
  }

  const std::vector<double> rx = average_ranks(inputs);
  const std::vector<double> ry = average_ranks(errors);
  const double mean = 0.5 * (static_cast<double>(n) + 1.0);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = rx[i] - mean;
    const double dy = ry[i] - mean;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  out.rho = sxy / std::sqrt(sxx * syy);
  out.defined = true;
  const double nu = static_cast<double>(n) - 2.0;
  const double denom = 1.0 - out.rho * out.rho;
  if (denom <= 0.0) {
    out.p_value = 0.0;
  } else {
    const double t = out.rho * std::sqrt(nu / denom);
    out.p_value = t_two_sided_p(t, nu);
  }
  return out;
}

Stat stat_of(const std::vector<double>& values) {
  Stat s;
  if (values.empty()) return s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) /
           static_cast<double>(values.size());
  double acc = 0.0;
  for (double v : values) acc += (v - s.mean) * (v - s.mean);
  s.stddev = values.size() > 1
                 ? std::sqrt(acc / static_cast<double>(values.size() - 1))
                 : 0.0;
  return s;
}

}  // namespace optiwing::metrics
