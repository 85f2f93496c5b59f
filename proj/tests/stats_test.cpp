#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include <boost/math/special_functions/erf.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <gtest/gtest.h>

#include "sgnlab/stats.hpp"
#include "support.hpp"
#include "sw_reference.hpp"

using namespace sgnlab;
namespace fx = sgnlab::fixtures;

namespace {

double ks_uniform_distance(std::vector<double> p) {
  std::sort(p.begin(), p.end());
  const double n = static_cast<double>(p.size());
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    d = std::max(d, static_cast<double>(i + 1) / n - p[i]);
    d = std::max(d, p[i] - static_cast<double>(i) / n);
  }
  return d;
}

double rejection_rate(std::size_t trials, std::uint64_t seed,
                      const std::function<std::vector<double>(std::uint64_t)>& sampler) {
  std::size_t rejected = 0;
  for (std::size_t t = 0; t < trials; ++t)
    rejected += shapiro_wilk(sampler(seed + t)).classification == Verdict::non_gaussian;
  return static_cast<double>(rejected) / static_cast<double>(trials);
}

std::vector<double> ranks(const std::vector<double>& x) {
  std::vector<std::size_t> order(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    for (std::size_t k = i; k <= j; ++k) r[order[k]] = 0.5 * static_cast<double>(i + j);
    i = j + 1;
  }
  return r;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) ma += a[i] / n, mb += b[i] / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

TEST(NormalCdf, KnownValues) {
  EXPECT_EQ(std_normal_cdf(0.0), 0.5);
  EXPECT_NEAR(std_normal_cdf(1.96), 0.9750021048517795, 1e-15);
  for (double x : {0.1, 0.7, 1.3, 2.5, 4.0}) EXPECT_NEAR(std_normal_cdf(x) + std_normal_cdf(-x), 1.0, 1e-15);
}

TEST(NormalCdf, MatchesHighPrecisionOnGrid) {
  using big = boost::multiprecision::cpp_bin_float_50;
  double worst = 0.0;
  for (int i = 0; i <= 10000; ++i) {
    const double x = -10.0 + 20.0 * i / 10000.0;
    const big exact = big(0.5) * boost::math::erfc(-big(x) / boost::multiprecision::sqrt(big(2)));
    worst = std::max(worst, std::abs(std_normal_cdf(x) - exact.convert_to<double>()));
  }
  EXPECT_LT(worst, 1e-12);
}

TEST(NormalQuantile, InvertsCdf) {
  for (double p : {1e-10, 0.001, 0.025, 0.3, 0.5, 0.8, 0.975, 0.999999})
    EXPECT_NEAR(std_normal_cdf(std_normal_quantile(p)), p, 1e-12 * std::max(1.0, p / (1 - p)));
}

TEST(ShapiroWilk, MatchesReferenceImplementation) {
  for (const auto& ref : fx::sw_reference) {
    const auto x = fx::reference_vector(ref.k, ref.n);
    const SWResult r = shapiro_wilk(x);
    EXPECT_NEAR(r.w, ref.w, 1e-6) << "n = " << ref.n;
    EXPECT_NEAR(r.p_value, ref.p, 1e-6 + 1e-4 * ref.p) << "n = " << ref.n;
    EXPECT_EQ(r.n, static_cast<std::size_t>(ref.n));
  }
}

TEST(ShapiroWilk, WeightsExample) {
  const std::vector<double> x{148, 154, 158, 160, 161, 162, 166, 170, 182, 195, 236};
  const SWResult r = shapiro_wilk(x);
  EXPECT_NEAR(r.w, 0.7888146948631716, 1e-6);
  EXPECT_NEAR(r.p_value, 0.006703814061898823, 1e-6);
  EXPECT_EQ(r.classification, Verdict::non_gaussian);
}

TEST(ShapiroWilk, InvariantUnderAffineMapsAndOrder) {
  auto x = fx::normal_sample(300, 4);
  const SWResult a = shapiro_wilk(x);
  for (auto& v : x) v = 3.0 - 0.25 * v;
  std::reverse(x.begin(), x.end());
  const SWResult b = shapiro_wilk(x);
  EXPECT_NEAR(a.w, b.w, 1e-12);
  EXPECT_NEAR(a.p_value, b.p_value, 1e-10);
}

TEST(ShapiroWilk, DegenerateAndInvalidSamples) {
  const std::vector<double> constant(50, 2.5);
  const SWResult r = shapiro_wilk(constant);
  EXPECT_EQ(r.classification, Verdict::dirac);
  EXPECT_FALSE(r.defined());
  EXPECT_TRUE(counts_as_gaussian(r.classification));
  EXPECT_THROW(shapiro_wilk(std::vector<double>{1.0, 2.0}), ValidationError);
  EXPECT_THROW(shapiro_wilk(fx::normal_sample(5001, 1)), ValidationError);
  EXPECT_THROW(shapiro_wilk(std::vector<double>{1.0, NAN, 2.0}), ValidationError);
}

TEST(ShapiroWilk, CalibratedUnderTheNull) {
  const double rate = rejection_rate(1000, 100, [](std::uint64_t s) { return fx::normal_sample(500, s); });
  EXPECT_GE(rate, 0.03);
  EXPECT_LE(rate, 0.07);
}

TEST(ShapiroWilk, NullPValuesAreUniform) {
  for (std::size_t n : {20u, 200u, 2000u}) {
    std::vector<double> p;
    for (std::uint64_t t = 0; t < 2000; ++t) p.push_back(shapiro_wilk(fx::normal_sample(n, 7000 + t)).p_value);
    EXPECT_LT(ks_uniform_distance(p), 0.05) << "n = " << n;
  }
}

TEST(ShapiroWilk, PowerAgainstHeavyTails) {
  EXPECT_GE(rejection_rate(200, 1, [](std::uint64_t s) { return fx::cauchy_sample(500, s); }), 0.99);
  EXPECT_GE(rejection_rate(200, 1, [](std::uint64_t s) { return fx::laplace_sample(500, s); }), 0.5);
}

TEST(Classify, SubsamplesLongSamplesDeterministically) {
  const auto x = fx::cauchy_sample(4000, 3);
  EXPECT_EQ(classify_gaussian(x, {0.05, 2000, 9}), Verdict::non_gaussian);
  const auto g = fx::normal_sample(6000, 3);
  EXPECT_EQ(classify_gaussian(g, {0.05, 2000, 9}), classify_gaussian(g, {0.05, 2000, 9}));
  EXPECT_EQ(classify_gaussian(std::vector<double>(10, 0.0)), Verdict::dirac);
  EXPECT_THROW(classify_gaussian(g, {0.05, 6000, 0}), ValidationError);
}

// Standardized sums of b Rademacher variables pass more often as b grows.
TEST(Classify, RademacherSumsTrendTowardGaussian) {
  const std::vector<std::size_t> batches{1, 4, 16, 64, 256};
  std::vector<double> rate, logb;
  for (std::size_t b : batches) {
    std::size_t pass = 0;
    for (std::uint64_t t = 0; t < 40; ++t) {
      std::mt19937_64 rng(31 * b + t);
      std::bernoulli_distribution coin(0.5);
      std::vector<double> x(500);
      for (auto& v : x) {
        int s = 0;
        for (std::size_t i = 0; i < b; ++i) s += coin(rng) ? 1 : -1;
        v = s / std::sqrt(static_cast<double>(b));
      }
      pass += counts_as_gaussian(classify_gaussian(x));
    }
    rate.push_back(static_cast<double>(pass) / 40.0);
    logb.push_back(std::log2(static_cast<double>(b)));
  }
  EXPECT_EQ(rate.front(), 0.0);
  EXPECT_GT(pearson(ranks(logb), ranks(rate)), 0.0);
  EXPECT_GT(rate.back(), rate.front());
}

TEST(Moments, RademacherIsExact) {
  const MomentSummary m = moment_summary(std::vector<double>{-1.0, 1.0, 1.0, -1.0});
  EXPECT_EQ(m.beta_ratio, 1.0);
  EXPECT_EQ(m.kurt_term, 0.0);
  EXPECT_EQ(m.kurtosis_bound, 1.0);
  const MomentSummary w = moment_summary(rademacher().support, rademacher().weights);
  EXPECT_EQ(w.beta_ratio, 1.0);
}

TEST(Moments, GaussianLimits) {
  const auto x = fx::normal_sample(1000000, 12);
  const MomentSummary m = moment_summary(x);
  EXPECT_NEAR(m.beta_ratio, 2.0 * std::sqrt(2.0 / std::numbers::pi), 0.01);
  EXPECT_NEAR(m.kurtosis_bound, std::sqrt(3.0), 0.01);
}

TEST(Moments, UniformByQuadrature) {
  const std::size_t n = 100000;
  std::vector<double> x(n), w(n, 1.0 / static_cast<double>(n));
  for (std::size_t i = 0; i < n; ++i) x[i] = -1.0 + (2.0 * static_cast<double>(i) + 1.0) / static_cast<double>(n);
  const MomentSummary m = moment_summary(x, w);
  EXPECT_NEAR(m.kurtosis_bound, std::sqrt(1.8), 1e-6);
  EXPECT_NEAR(m.beta_ratio, 0.25 / std::pow(1.0 / 3.0, 1.5), 1e-6);
}

TEST(Moments, RatioBetweenOneAndKurtosisBound) {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<std::size_t> len(2, 200);
  std::uniform_int_distribution<int> family(0, 3);
  for (int t = 0; t < 10000; ++t) {
    const std::size_t n = len(rng);
    const std::uint64_t s = rng();
    std::vector<double> x;
    switch (family(rng)) {
      case 0: x = fx::normal_sample(n, s); break;
      case 1: x = fx::cauchy_sample(n, s); break;
      case 2: x = fx::laplace_sample(n, s); break;
      default: x = fx::draw(n, s, std::uniform_int_distribution<int>(-2, 2)); break;
    }
    const MomentSummary m = moment_summary(x);
    if (m.degenerate()) continue;
    ASSERT_GE(m.beta_ratio, 1.0 - 1e-12) << t;
    ASSERT_LE(m.beta_ratio, m.kurtosis_bound * (1.0 + 1e-12)) << t;
  }
}

TEST(Moments, DegenerateAndValidation) {
  const MomentSummary m = moment_summary(std::vector<double>{3.0, 3.0, 3.0});
  EXPECT_TRUE(m.degenerate());
  EXPECT_THROW(berry_esseen_bound(m, 4), NumericalError);
  EXPECT_THROW(moment_summary(std::vector<double>{1.0}), ValidationError);
  EXPECT_THROW(moment_summary(std::vector<double>{1.0, 2.0}, std::vector<double>{1.0}), ValidationError);
}

TEST(BerryEsseen, RademacherValues) {
  const MomentSummary m = moment_summary(rademacher().support, rademacher().weights);
  EXPECT_DOUBLE_EQ(berry_esseen_bound(m, 1).from_beta_ratio, 0.4748);
  EXPECT_NEAR(berry_esseen_bound(m, 2).from_beta_ratio, 0.3357, 5e-5);
  EXPECT_DOUBLE_EQ(berry_esseen_bound(m, 2).from_kurtosis_bound, berry_esseen_bound(m, 2).from_beta_ratio);
  EXPECT_THROW(berry_esseen_bound(m, 0), ValidationError);
}

TEST(SupCdfDistance, RademacherValues) {
  EXPECT_NEAR(sup_cdf_distance(rademacher(), 1), 0.3413447460685429, 1e-12);
  EXPECT_NEAR(sup_cdf_distance(rademacher(), 2), 0.25, 1e-12);
}

TEST(SupCdfDistance, BelowBerryEsseenForBernoulli) {
  for (int k = 1; k <= 9; ++k) {
    const auto d = bernoulli(0.1 * k);
    const MomentSummary m = moment_summary(d.support, d.weights);
    for (std::size_t n = 1; n <= 12; ++n) {
      const double sup = sup_cdf_distance(d, n);
      EXPECT_GT(sup, 0.0);
      EXPECT_LE(sup, berry_esseen_bound(m, n).from_beta_ratio) << "p = " << 0.1 * k << ", n = " << n;
    }
  }
}

TEST(SupCdfDistance, Validation) {
  EXPECT_THROW(sup_cdf_distance({{1.0, 1.0}, {0.5, 0.5}}, 3), NumericalError);
  EXPECT_THROW(sup_cdf_distance({{1.0}, {1.0}}, 3), NumericalError);
  EXPECT_THROW(sup_cdf_distance(rademacher(), 21), ValidationError);
  EXPECT_THROW(sup_cdf_distance({{0.0, 1.0}, {0.5, 0.6}}, 2), ValidationError);
}

TEST(TailIndex, KnownLaws) {
  EXPECT_GE(tail_index(fx::normal_sample(100000, 5)).alpha, 1.95);
  const double cauchy = tail_index(fx::cauchy_sample(100000, 5)).alpha;
  EXPECT_GE(cauchy, 0.95);
  EXPECT_LE(cauchy, 1.05);
  const double stable = tail_index(fx::stable_sample(1.5, 100000, 5)).alpha;
  EXPECT_GE(stable, 1.4);
  EXPECT_LE(stable, 1.6);
}

TEST(TailIndex, RangeAndValidation) {
  EXPECT_EQ(tail_index(std::vector<double>(200, 1.0)).alpha, tail_index_alpha_floor);
  for (double a : {0.5, 0.8, 1.2, 1.8}) {
    const double est = tail_index(fx::stable_sample(a, 20000, 2)).alpha;
    EXPECT_GT(est, tail_index_alpha_floor);
    EXPECT_LE(est, 2.0);
  }
  EXPECT_EQ(tail_index(fx::normal_sample(1000, 1)).method, "mcculloch-quantile");
  EXPECT_THROW(tail_index(fx::normal_sample(99, 1)), ValidationError);
}
