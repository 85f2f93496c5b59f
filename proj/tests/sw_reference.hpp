#ifndef SGNLAB_TESTS_SW_REFERENCE_HPP
#define SGNLAB_TESTS_SW_REFERENCE_HPP

#include <array>
#include <cmath>
#include <vector>

namespace sgnlab::fixtures {

// Sample k of the frozen Shapiro-Wilk reference set.
inline std::vector<double> reference_vector(int k, int n) {
  std::vector<double> x(static_cast<std::size_t>(n));
  for (int i = 1; i <= n; ++i) {
    double v = std::sin(1.7 * i + k) * std::exp(0.3 * std::cos(0.37 * i * (k + 1))) + 0.01 * (i % 7);
    if (k % 3 == 1) v = v * v * v;
    if (k % 3 == 2) v = std::exp(v);
    x[static_cast<std::size_t>(i - 1)] = v;
  }
  return x;
}

struct SwReference {
  int k;
  int n;
  double w;
  double p;
};

// W and p from scipy.stats.shapiro on reference_vector(k, n).
inline constexpr std::array<SwReference, 20> sw_reference{{
    {0, 3, 0.954200785717, 0.58808977956},
    {1, 4, 0.910724263287, 0.486247877855},
    {2, 5, 0.76382271003, 0.0397649282036},
    {3, 6, 0.929072719237, 0.572960196881},
    {4, 7, 0.904011775497, 0.355969955995},
    {5, 8, 0.861062093955, 0.123034714315},
    {6, 10, 0.909735572454, 0.279179621319},
    {7, 11, 0.916037776269, 0.287007501288},
    {8, 12, 0.879046264214, 0.0852161143084},
    {9, 15, 0.935290236805, 0.326818046984},
    {10, 20, 0.854865159771, 0.00643794656099},
    {11, 25, 0.874005733386, 0.00521069659333},
    {12, 30, 0.929206766097, 0.0467797090624},
    {13, 50, 0.886121436558, 0.000172538468454},
    {14, 75, 0.894449095507, 1.28829138219e-05},
    {15, 100, 0.952744478016, 0.00126359370889},
    {16, 200, 0.972770271599, 0.000629402452975},
    {17, 500, 0.891800505602, 2.79572971648e-18},
    {18, 1000, 0.953486106361, 2.94653328626e-17},
    {19, 2000, 0.931999647757, 2.94473720722e-29},
}};

}  // namespace sgnlab::fixtures

#endif  // SGNLAB_TESTS_SW_REFERENCE_HPP
