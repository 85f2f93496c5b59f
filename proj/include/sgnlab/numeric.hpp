#ifndef SGNLAB_NUMERIC_HPP
#define SGNLAB_NUMERIC_HPP

#include <cmath>
#include <cstdint>
#include <span>
#include <string_view>

#include <Eigen/Dense>

namespace sgnlab {

// Neumaier-compensated running sum of vectors.
class CompensatedVectorSum {
 public:
  explicit CompensatedVectorSum(Eigen::Index size)
      : sum_(Eigen::VectorXd::Zero(size)), comp_(Eigen::VectorXd::Zero(size)) {}

  void add(const Eigen::Ref<const Eigen::VectorXd>& x) {
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double t = sum_[i] + x[i];
      if (std::abs(sum_[i]) >= std::abs(x[i])) {
        comp_[i] += (sum_[i] - t) + x[i];
      } else {
        comp_[i] += (x[i] - t) + sum_[i];
      }
      sum_[i] = t;
    }
  }

  [[nodiscard]] Eigen::VectorXd value() const { return sum_ + comp_; }

 private:
  Eigen::VectorXd sum_;
  Eigen::VectorXd comp_;
};

inline double compensated_sum(std::span<const double> xs) {
  double sum = 0.0;
  double comp = 0.0;
  for (double x : xs) {
    const double t = sum + x;
    comp += std::abs(sum) >= std::abs(x) ? (sum - t) + x : (x - t) + sum;
    sum = t;
  }
  return sum + comp;
}

// SplitMix64 finalizer; used to derive independent per-draw seeds from a base seed.
constexpr std::uint64_t mix_seed(std::uint64_t base, std::uint64_t counter) noexcept {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (counter + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// 64-bit FNV-1a.
class Fnv1a {
 public:
  void update(const void* data, std::size_t size) noexcept {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < size; ++i) {
      hash_ ^= bytes[i];
      hash_ *= 0x100000001B3ULL;
    }
  }
  void update(std::string_view s) noexcept { update(s.data(), s.size()); }
  [[nodiscard]] std::uint64_t digest() const noexcept { return hash_; }

 private:
  std::uint64_t hash_ = 0xCBF29CE484222325ULL;
};

}  // namespace sgnlab

#endif  // SGNLAB_NUMERIC_HPP
