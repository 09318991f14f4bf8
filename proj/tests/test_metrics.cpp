#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "optiwing/metrics.hpp"
#include "optiwing/rng.hpp"

using namespace optiwing;
using metrics::Feature;
using metrics::FeatureSet;

TEST_CASE("gaussian kernel values") {
  CHECK(metrics::gaussian_kernel({1.0, 2.0}, {1.0, 2.0}, 5.0) == 1.0);
  CHECK(metrics::gaussian_kernel({0.0}, {1.0}, 0.5) ==
        doctest::Approx(0.6065306597126334).epsilon(1e-14));
  CHECK(metrics::gaussian_kernel({0.0}, {1.0}, 1e6) < 1e-300);
  CHECK_THROWS(metrics::gaussian_kernel({0.0}, {1.0, 2.0}, 0.5));
  CHECK_THROWS(metrics::gaussian_kernel({0.0}, {1.0}, -1.0));
}

TEST_CASE("mmd2 hand values and identities") {
  const FeatureSet p{{0.0}};
  const FeatureSet q{{1.0}};
  // 1 + 1 - 2 exp(-0.5), biased V-statistic with diagonal terms.
  CHECK(metrics::mmd2(p, q, 0.5) ==
        doctest::Approx(0.7869386805747332).epsilon(1e-12));
  CHECK(std::abs(metrics::mmd2(p, q, 0.5) - 0.78694) < 1e-5);

  const FeatureSet same{{0.3, 1.0}, {0.7, -0.2}, {0.1, 0.1}};
  CHECK(metrics::mmd2(same, same, 2.0) == 0.0);  // exact for the V-statistic
  CHECK(metrics::mmd2(p, q, 0.5) == metrics::mmd2(q, p, 0.5));
  CHECK_THROWS(metrics::mmd2({}, q, 0.5));
}

TEST_CASE("mmd2 Monte-Carlo self consistency") {
  Rng rng(77, 0);
  FeatureSet a, b;
  for (int i = 0; i < 400; ++i) {
    a.push_back({0.2 * rng.normal(), 0.2 * rng.normal()});
    b.push_back({0.2 * rng.normal(), 0.2 * rng.normal()});
  }
  CHECK(metrics::mmd_avg(a, b) < 0.01);
}

TEST_CASE("mmd_avg equals the per-gamma mean") {
  const FeatureSet p{{0.0}, {0.4}};
  const FeatureSet q{{1.0}, {0.6}};
  metrics::KernelConfig single;
  single.gammas = {25.0};
  CHECK(metrics::mmd_avg(p, q, single) == metrics::mmd2(p, q, 25.0));

  const metrics::KernelConfig def;
  double acc = 0.0;
  for (double g : def.gammas) acc += metrics::mmd2(p, q, g);
  CHECK(metrics::mmd_avg(p, q, def) == doctest::Approx(acc / 4.0).epsilon(1e-15));
  CHECK(metrics::mmd_avg(p, p, def) == 0.0);
}

TEST_CASE("vendi score limits") {
  // n identical designs -> 1.
  const FeatureSet same(7, Feature{0.5, -0.3});
  CHECK(metrics::vendi(same, 10.0) == doctest::Approx(1.0).epsilon(1e-9));

  // Two mutually distant points: eigenvalues {1/2, 1/2}, score 2.
  const FeatureSet two{{0.0}, {100.0}};
  CHECK(metrics::vendi(two, 1.0) == doctest::Approx(2.0).epsilon(1e-3));

  // k mutually distant points -> k.
  FeatureSet spread;
  for (int i = 0; i < 6; ++i) spread.push_back({100.0 * i});
  CHECK(metrics::vendi(spread, 1.0) == doctest::Approx(6.0).epsilon(1e-3));
}

TEST_CASE("vendi invariances") {
  Rng rng(5, 0);
  FeatureSet x;
  for (int i = 0; i < 8; ++i) x.push_back({rng.normal(), rng.normal()});
  const double v = metrics::vendi(x, 0.7);

  FeatureSet shuffled = x;
  std::reverse(shuffled.begin(), shuffled.end());
  CHECK(metrics::vendi(shuffled, 0.7) == doctest::Approx(v).epsilon(1e-10));

  // Duplicating every element doubles n but leaves the score unchanged.
  FeatureSet doubled = x;
  doubled.insert(doubled.end(), x.begin(), x.end());
  CHECK(metrics::vendi(doubled, 0.7) == doctest::Approx(v).epsilon(1e-6));
  CHECK(v >= 1.0);
  CHECK(v <= static_cast<double>(x.size()));
}

TEST_CASE("vendi normalized") {
  Rng rng(9, 0);
  FeatureSet truth;
  for (int i = 0; i < 10; ++i) truth.push_back({rng.normal(), rng.normal()});
  CHECK(metrics::vendi_normalized(truth, truth) == doctest::Approx(1.0).epsilon(1e-12));

  const FeatureSet collapsed(10, truth.front());
  CHECK(metrics::vendi_normalized(collapsed, truth) < 1.0);
}

TEST_CASE("volume satisfaction") {
  CHECK(metrics::volume_satisfaction({1.0, 2.0}, {1.0, 2.0}, {0.9, 1.0}) == 100.0);
  CHECK(metrics::volume_satisfaction({0.8, 1.0, 1.0, 1.0}, {1.0, 1.0, 1.0, 1.0},
                                     {0.9, 0.9, 0.9, 0.9}) == 75.0);
  // Invariant to a common volume rescale.
  CHECK(metrics::volume_satisfaction({1.6, 2.0}, {2.0, 2.0}, {0.9, 0.9}) ==
        metrics::volume_satisfaction({0.8, 1.0}, {1.0, 1.0}, {0.9, 0.9}));
  CHECK_THROWS(metrics::volume_satisfaction({1.0}, {1.0, 2.0}, {0.9, 0.9}));
}

TEST_CASE("mse") {
  CHECK(metrics::mse({1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}) == 0.0);
  CHECK(metrics::mse({0.0, 2.0}, {0.0, 0.0}) == doctest::Approx(2.0));
  CHECK_THROWS(metrics::mse({1.0}, {1.0, 2.0}));
  CHECK_THROWS(metrics::mse({}, {}));
}

TEST_CASE("spanwise average") {
  // gen[k][case], truth[k][case]
  const std::size_t slices = 9;
  std::vector<FeatureSet> truth(slices, FeatureSet{{0.0, 0.0}, {1.0, 1.0}});
  std::vector<FeatureSet> gen = truth;

  auto slice_mse = [](const FeatureSet& g, const FeatureSet& t) {
    return metrics::mse_set(t, g);
  };
  const metrics::SpanwiseResult zero = metrics::spanwise_average(slice_mse, gen, truth);
  CHECK(zero.average == 0.0);
  for (double v : zero.profile) CHECK(v == 0.0);

  // Perturbing only the last slice localizes the profile there.
  gen[8][0] = {0.5, 0.5};
  const metrics::SpanwiseResult pert = metrics::spanwise_average(slice_mse, gen, truth);
  for (std::size_t k = 0; k < 8; ++k) CHECK(pert.profile[k] == 0.0);
  CHECK(pert.profile[8] > 0.0);
  CHECK(pert.average == doctest::Approx(pert.profile[8] / 9.0).epsilon(1e-15));

  std::vector<FeatureSet> short_gen(slices - 1);
  CHECK_THROWS(metrics::spanwise_average(slice_mse, short_gen, truth));
}

namespace {

// Brute-force rank oracle: average rank of equal values.
std::vector<double> brute_ranks(const std::vector<double>& v) {
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double less = 0.0, equal = 0.0;
    for (std::size_t j = 0; j < v.size(); ++j) {
      if (v[j] < v[i]) ++less;
      if (v[j] == v[i]) ++equal;
    }
    ranks[i] = less + 0.5 * (equal + 1.0);
  }
  return ranks;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / a.size();
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / b.size();
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

TEST_CASE("spearman correlation") {
  const std::vector<double> x{1.0, 2.0, 3.0, 4.0, 5.0};
  const std::vector<double> up{2.0, 4.0, 6.0, 8.0, 10.0};
  const std::vector<double> down{10.0, 8.0, 6.0, 4.0, 2.0};
  CHECK(metrics::spearman(x, up).rho == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(metrics::spearman(x, down).rho == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(metrics::spearman(x, up).p_value < 0.05);

  // Ties: compare against the brute-force rank oracle.
  const std::vector<double> a{3.0, 1.0, 1.0, 2.0, 5.0, 5.0, 5.0};
  const std::vector<double> b{0.2, -1.0, 0.2, 0.9, 2.0, 1.5, 2.0};
  const metrics::SpearmanResult r = metrics::spearman(a, b);
  CHECK(r.defined);
  CHECK(r.rho == doctest::Approx(pearson(brute_ranks(a), brute_ranks(b))).epsilon(1e-12));

  const std::vector<double> constant{1.0, 1.0, 1.0, 1.0, 1.0};
  CHECK_FALSE(metrics::spearman(constant, up).defined);
  CHECK_THROWS(metrics::spearman({1.0, 2.0}, {1.0, 2.0}));  // n < 3
}

TEST_CASE("stat_of") {
  const metrics::Stat s = metrics::stat_of({1.0, 2.0, 3.0});
  CHECK(s.mean == doctest::Approx(2.0));
  CHECK(s.stddev == doctest::Approx(1.0));
  CHECK(metrics::stat_of({5.0}).stddev == 0.0);
}
