#ifndef SGNLAB_STATS_HPP
#define SGNLAB_STATS_HPP

// Normality statistics for gradient-noise samples: Shapiro-Wilk (Royston's AS R94),
// moment summaries and the Berry-Esseen rate bound, exact sup-CDF distance of
// standardized discrete sums, and a quantile-based alpha-stable tail index.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <boost/math/special_functions/erf.hpp>

#include "sgnlab/error.hpp"
#include "sgnlab/numeric.hpp"

namespace sgnlab {

// Best published value of the universal Berry-Esseen constant (Shevtsova, 2011).
inline constexpr double berry_esseen_constant = 0.4748;

inline double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

inline double std_normal_quantile(double p) {
  require(p > 0.0 && p < 1.0, "normal quantile needs p in (0, 1)");
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

// Type-7 (linear interpolation) quantile of an ascending-sorted sample.
inline double sorted_quantile(std::span<const double> sorted, double p) {
  require(!sorted.empty(), "quantile of an empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * std::clamp(p, 0.0, 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

// ---------------------------------------------------------------------------
// Shapiro-Wilk

enum class Verdict { gaussian, dirac, non_gaussian };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::gaussian:
      return "gaussian";
    case Verdict::dirac:
      return "dirac";
    case Verdict::non_gaussian:
      return "non_gaussian";
  }
  return "?";
}

// Dirac counts as Gaussian in every percentage.
inline bool counts_as_gaussian(Verdict v) { return v != Verdict::non_gaussian; }

struct SWResult {
  double w = std::numeric_limits<double>::quiet_NaN();
  double p_value = std::numeric_limits<double>::quiet_NaN();
  Verdict classification = Verdict::non_gaussian;
  std::size_t n = 0;

  // False for degenerate (Dirac) samples, where W and p are undefined.
  [[nodiscard]] bool defined() const { return classification != Verdict::dirac; }
};

inline constexpr double default_alpha_level = 0.05;
inline constexpr std::size_t shapiro_wilk_max_n = 5000;

// Point-mass rule: range no larger than 1e-12 relative to max(1, max |x|).
inline bool is_degenerate(std::span<const double> x) {
  if (x.empty()) return true;
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  const double scale = std::max({1.0, std::abs(*lo), std::abs(*hi)});
  return (*hi - *lo) <= 1e-12 * scale;
}

namespace detail {

// c[0] + c[1] x + c[2] x^2 + ...
template <std::size_t N>
double poly(const std::array<double, N>& c, double x) {
  double r = 0.0;
  for (std::size_t i = N; i-- > 0;) r = r * x + c[i];
  return r;
}

// Antisymmetric Shapiro-Wilk coefficients a_1..a_n for ascending order statistics,
// normalized so that sum a_i^2 = 1 (Royston's approximation).
inline std::vector<double> shapiro_wilk_coefficients(std::size_t n) {
  static constexpr std::array<double, 6> c1{0.0, 0.221157, -0.147981, -2.07119, 4.434685, -2.706056};
  static constexpr std::array<double, 6> c2{0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633};

  const std::size_t half = n / 2;
  std::vector<double> upper(half);  // coefficients of the top half, largest first
  if (n == 3) {
    upper[0] = std::numbers::sqrt2 / 2.0;
  } else {
    const double an = static_cast<double>(n);
    std::vector<double> m(half);
    double summ2 = 0.0;
    for (std::size_t i = 0; i < half; ++i) {
      m[i] = -std_normal_quantile((static_cast<double>(i + 1) - 0.375) / (an + 0.25));
      summ2 += m[i] * m[i];
    }
    summ2 *= 2.0;
    const double ssumm2 = std::sqrt(summ2);
    const double rsn = 1.0 / std::sqrt(an);
    const double a1 = poly(c1, rsn) + m[0] / ssumm2;

    std::size_t first_scaled = 1;
    double fac = 0.0;
    if (n > 5) {
      const double a2 = m[1] / ssumm2 + poly(c2, rsn);
      fac = std::sqrt((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1]) / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2));
      upper[1] = a2;
      first_scaled = 2;
    } else {
      fac = std::sqrt((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1));
    }
    upper[0] = a1;
    for (std::size_t i = first_scaled; i < half; ++i) upper[i] = m[i] / fac;
  }

  std::vector<double> a(n, 0.0);
  for (std::size_t i = 0; i < half; ++i) {
    a[n - 1 - i] = upper[i];
    a[i] = -upper[i];
  }
  return a;
}

}  // namespace detail

inline SWResult shapiro_wilk(std::span<const double> sample, double alpha_level = default_alpha_level) {
  const std::size_t n = sample.size();
  require(n >= 3 && n <= shapiro_wilk_max_n,
          "Shapiro-Wilk needs 3 <= n <= 5000 (got n = " + std::to_string(n) + ")");
  require(std::all_of(sample.begin(), sample.end(), [](double x) { return std::isfinite(x); }),
          "Shapiro-Wilk sample contains non-finite values");

  SWResult result;
  result.n = n;
  if (is_degenerate(sample)) {
    result.classification = Verdict::dirac;
    return result;
  }

  std::vector<double> x(sample.begin(), sample.end());
  std::stable_sort(x.begin(), x.end());
  const std::vector<double> a = detail::shapiro_wilk_coefficients(n);

  // W is the squared correlation between coefficients and order statistics. The
  // complement 1 - W is formed directly to keep precision when W is close to 1.
  const double range = x.back() - x.front();
  double mean_x = 0.0;
  for (double& xi : x) {
    xi /= range;
    mean_x += xi;
  }
  mean_x /= static_cast<double>(n);
  double ssa = 0.0, ssx = 0.0, sax = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mean_x;
    ssa += a[i] * a[i];
    ssx += dx * dx;
    sax += a[i] * dx;
  }
  const double ssassx = std::sqrt(ssa * ssx);
  const double w1 = (ssassx - sax) * (ssassx + sax) / (ssa * ssx);
  result.w = 1.0 - w1;

  const double an = static_cast<double>(n);
  if (n == 3) {
    constexpr double six_over_pi = 6.0 / std::numbers::pi;
    constexpr double third_pi = std::numbers::pi / 3.0;
    result.p_value = std::max(0.0, six_over_pi * (std::asin(std::sqrt(result.w)) - third_pi));
  } else if (w1 <= 0.0) {
    result.p_value = 1.0;
  } else {
    static constexpr std::array<double, 2> g{-2.273, 0.459};
    static constexpr std::array<double, 4> c3{0.544, -0.39978, 0.025054, -6.714e-4};
    static constexpr std::array<double, 4> c4{1.3822, -0.77857, 0.062767, -0.0020322};
    static constexpr std::array<double, 4> c5{-1.5861, -0.31082, -0.083751, 0.0038915};
    static constexpr std::array<double, 3> c6{-0.4803, -0.082676, 0.0030302};

    double y = std::log(w1);
    double m = 0.0, s = 1.0;
    bool tiny = false;
    if (n <= 11) {
      const double gamma = detail::poly(g, an);
      if (y >= gamma) {
        tiny = true;
      } else {
        y = -std::log(gamma - y);
        m = detail::poly(c3, an);
        s = std::exp(detail::poly(c4, an));
      }
    } else {
      const double ln = std::log(an);
      m = detail::poly(c5, ln);
      s = std::exp(detail::poly(c6, ln));
    }
    // Upper normal tail of the transformed statistic.
    result.p_value = tiny ? 1e-99 : 0.5 * std::erfc((y - m) / s / std::numbers::sqrt2);
  }
  result.p_value = std::clamp(result.p_value, 0.0, 1.0);
  result.classification = result.p_value > alpha_level ? Verdict::gaussian : Verdict::non_gaussian;
  return result;
}

struct ClassifyOptions {
  double alpha_level = default_alpha_level;
  std::size_t subsample_cap = 2000;  // at most shapiro_wilk_max_n
  std::uint64_t seed = 0;
};

// Dirac if the sample is a point mass, otherwise Gaussian iff the Shapiro-Wilk p-value
// exceeds the level. Samples longer than the cap are uniformly subsampled (seeded).
inline Verdict classify_gaussian(std::span<const double> sample, const ClassifyOptions& opts = {}) {
  require(sample.size() >= 3, "classification needs at least 3 points");
  require(opts.subsample_cap >= 3 && opts.subsample_cap <= shapiro_wilk_max_n,
          "subsample cap must lie in [3, 5000]");
  if (is_degenerate(sample)) return Verdict::dirac;
  if (sample.size() <= opts.subsample_cap) return shapiro_wilk(sample, opts.alpha_level).classification;

  std::vector<double> pool(sample.begin(), sample.end());
  std::mt19937_64 rng(opts.seed);
  for (std::size_t i = 0; i < opts.subsample_cap; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(opts.subsample_cap);
  return shapiro_wilk(pool, opts.alpha_level).classification;
}

// ---------------------------------------------------------------------------
// Moments and the Berry-Esseen bound

struct MomentSummary {
  std::size_t n = 0;
  double mean = 0.0;
  double variance = 0.0;  // population (1/n) central second moment
  double std_dev = 0.0;
  double beta = 0.0;  // E|x - mean|^3
  // Ratios below are NaN when the sample is degenerate.
  double beta_ratio = std::numeric_limits<double>::quiet_NaN();      // beta / sigma^3
  double kurt_term = std::numeric_limits<double>::quiet_NaN();       // var[z^2]
  double kurtosis_bound = std::numeric_limits<double>::quiet_NaN();  // sqrt(var[z^2] + 1)

  [[nodiscard]] bool degenerate() const { return !std::isfinite(beta_ratio); }
};

// Central empirical moments with equal weights, or with the supplied probability weights.
inline MomentSummary moment_summary(std::span<const double> x, std::span<const double> weights = {}) {
  require(x.size() >= 2, "moment summary needs at least 2 points");
  require(weights.empty() || weights.size() == x.size(), "weights must match the sample length");
  const auto w = [&](std::size_t i) { return weights.empty() ? 1.0 / static_cast<double>(x.size()) : weights[i]; };

  MomentSummary s;
  s.n = x.size();
  for (std::size_t i = 0; i < x.size(); ++i) s.mean += w(i) * x[i];
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - s.mean;
    const double d2 = d * d;
    m2 += w(i) * d2;
    m3 += w(i) * d2 * std::abs(d);
    m4 += w(i) * d2 * d2;
  }
  s.variance = m2;
  s.std_dev = std::sqrt(m2);
  s.beta = m3;
  if (is_degenerate(x) || m2 <= 0.0) return s;

  s.beta_ratio = m3 / (m2 * s.std_dev);
  const double ez4 = m4 / (m2 * m2);
  s.kurt_term = std::max(0.0, ez4 - 1.0);
  s.kurtosis_bound = std::sqrt(s.kurt_term + 1.0);
  return s;
}

struct BerryEsseenBound {
  double from_beta_ratio = 0.0;      // (beta / sigma^3) * A0 / sqrt(n)
  double from_kurtosis_bound = 0.0;  // sqrt(var[z^2] + 1) * A0 / sqrt(n)
};

inline BerryEsseenBound berry_esseen_bound(const MomentSummary& summary, std::size_t batch_size) {
  require(batch_size > 0, "batch size must be positive");
  if (summary.degenerate()) throw NumericalError("Berry-Esseen bound is undefined for a degenerate sample");
  const double scale = berry_esseen_constant / std::sqrt(static_cast<double>(batch_size));
  return {summary.beta_ratio * scale, summary.kurtosis_bound * scale};
}

struct DiscreteDistribution {
  std::vector<double> support;
  std::vector<double> weights;

  void validate() const {
    require(!support.empty() && support.size() == weights.size(), "support and weights must be non-empty and equal length");
    require(std::all_of(weights.begin(), weights.end(), [](double p) { return p >= 0.0; }), "weights must be non-negative");
    require(std::abs(std::accumulate(weights.begin(), weights.end(), 0.0) - 1.0) <= 1e-12, "weights must sum to 1");
  }
};

inline DiscreteDistribution rademacher() { return {{-1.0, 1.0}, {0.5, 0.5}}; }
inline DiscreteDistribution bernoulli(double p) { return {{0.0, 1.0}, {1.0 - p, p}}; }

inline constexpr std::size_t exact_enumeration_max_support = 20;
inline constexpr std::size_t exact_enumeration_max_n = 20;
inline constexpr std::size_t exact_enumeration_max_atoms = 2'000'000;

// Exact sup_x |F_n(x) - Phi(x)| for the standardized sum of n i.i.d. copies of `dist`.
inline double sup_cdf_distance(const DiscreteDistribution& dist, std::size_t n) {
  dist.validate();
  require(n >= 1, "batch size must be positive");
  require(dist.support.size() <= exact_enumeration_max_support && n <= exact_enumeration_max_n,
          "exact enumeration supports at most 20 support points and n <= 20; use a Monte Carlo estimate instead");

  if (dist.support.size() == 1) throw NumericalError("sup-CDF distance is undefined for a point mass");
  const MomentSummary m = moment_summary(dist.support, dist.weights);
  if (m.variance <= 0.0) throw NumericalError("sup-CDF distance is undefined for a point mass");

  // Sum distribution by repeated convolution; atoms closer than a relative 1e-12 are merged.
  std::map<double, double> atoms{{0.0, 1.0}};
  const double merge_tol = 1e-12 * std::max(1.0, static_cast<double>(n) *
                                                      std::abs(*std::max_element(dist.support.begin(), dist.support.end(),
                                                                                 [](double a, double b) { return std::abs(a) < std::abs(b); })));
  for (std::size_t step = 0; step < n; ++step) {
    std::map<double, double> next;
    for (const auto& [value, prob] : atoms)
      for (std::size_t j = 0; j < dist.support.size(); ++j)
        if (dist.weights[j] > 0.0) next[value + dist.support[j]] += prob * dist.weights[j];
    atoms.clear();
    for (const auto& [value, prob] : next) {
      if (!atoms.empty() && value - atoms.rbegin()->first <= merge_tol) {
        atoms.rbegin()->second += prob;
      } else {
        atoms.emplace_hint(atoms.end(), value, prob);
      }
    }
    require(atoms.size() <= exact_enumeration_max_atoms,
            "sum distribution has too many atoms for exact enumeration; use a Monte Carlo estimate instead");
  }

  const double nd = static_cast<double>(n);
  const double center = nd * m.mean;
  const double scale = std::sqrt(nd * m.variance);
  double cdf = 0.0;
  double sup = 0.0;
  for (const auto& [value, prob] : atoms) {
    const double z = (value - center) / scale;
    const double phi = std_normal_cdf(z);
    sup = std::max(sup, std::abs(cdf - phi));  // left limit
    cdf += prob;
    sup = std::max(sup, std::abs(std::min(cdf, 1.0) - phi));
  }
  return sup;
}

// ---------------------------------------------------------------------------
// Tail index

struct TailIndexEstimate {
  double alpha = 2.0;
  double nu = 0.0;  // observed quantile ratio
  std::string method;
};

namespace detail {

// nu_alpha = (x_0.95 - x_0.05) / (x_0.75 - x_0.25) for symmetric alpha-stable laws,
// alpha = 2.00, 1.95, ..., 0.30.
inline constexpr std::array<double, 35> mcculloch_nu{
    2.438664, 2.473342, 2.512818, 2.557985, 2.609914, 2.669882, 2.739382,  2.820128,  2.914029,
    3.023170, 3.149795, 3.296352, 3.465625, 3.660946, 3.886470, 4.147494,  4.450851,  4.805423,
    5.222869, 5.718676, 6.313751, 7.036866, 7.928492, 9.047016, 10.479083, 12.357522, 14.893767,
    18.439616, 23.612187, 31.565570, 44.635118, 68.039545, 115.054031, 225.196237, 549.892833};

inline constexpr double mcculloch_alpha_max = 2.0;
inline constexpr double mcculloch_alpha_step = 0.05;

}  // namespace detail

inline constexpr double tail_index_alpha_floor = 0.3;
inline constexpr std::size_t tail_index_min_n = 100;

// McCulloch quantile estimator of the alpha-stable stability index, clipped to (0.3, 2].
inline TailIndexEstimate tail_index(std::span<const double> sample) {
  require(sample.size() >= tail_index_min_n,
          "tail index needs at least 100 points (got " + std::to_string(sample.size()) + ")");
  std::vector<double> x(sample.begin(), sample.end());
  std::sort(x.begin(), x.end());

  TailIndexEstimate est;
  est.method = "mcculloch-quantile";
  const double iqr = sorted_quantile(x, 0.75) - sorted_quantile(x, 0.25);
  const double outer = sorted_quantile(x, 0.95) - sorted_quantile(x, 0.05);
  if (iqr <= 0.0) {
    // Mass concentrated in the middle half: heavier than any tabulated law.
    est.nu = std::numeric_limits<double>::infinity();
    est.alpha = tail_index_alpha_floor;
    return est;
  }
  est.nu = outer / iqr;

  const auto& table = detail::mcculloch_nu;
  if (est.nu <= table.front()) {
    est.alpha = detail::mcculloch_alpha_max;
  } else if (est.nu >= table.back()) {
    est.alpha = tail_index_alpha_floor;
  } else {
    const auto it = std::upper_bound(table.begin(), table.end(), est.nu);
    const auto hi = static_cast<std::size_t>(it - table.begin());
    const std::size_t lo = hi - 1;
    const double t = (std::log(est.nu) - std::log(table[lo])) / (std::log(table[hi]) - std::log(table[lo]));
    est.alpha = detail::mcculloch_alpha_max - (static_cast<double>(lo) + t) * detail::mcculloch_alpha_step;
  }
  est.alpha = std::clamp(est.alpha, tail_index_alpha_floor, detail::mcculloch_alpha_max);
  return est;
}

}  // namespace sgnlab

#endif  // SGNLAB_STATS_HPP
