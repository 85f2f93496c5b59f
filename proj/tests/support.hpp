#ifndef SGNLAB_TESTS_SUPPORT_HPP
#define SGNLAB_TESTS_SUPPORT_HPP

// Test-only samplers and fixtures.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "sgnlab/net.hpp"

namespace sgnlab::fixtures {

// Symmetric alpha-stable draws (beta = 0, unit scale), Chambers-Mallows-Stuck.
inline double stable_symmetric(double alpha, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-std::numbers::pi / 2, std::numbers::pi / 2);
  std::exponential_distribution<double> e(1.0);
  const double v = u(rng);
  const double w = e(rng);
  if (alpha == 1.0) return std::tan(v);
  return std::sin(alpha * v) / std::pow(std::cos(v), 1.0 / alpha) *
         std::pow(std::cos(v - alpha * v) / w, (1.0 - alpha) / alpha);
}

template <typename Dist>
std::vector<double> draw(std::size_t n, std::uint64_t seed, Dist dist) {
  std::mt19937_64 rng(seed);
  std::vector<double> x(n);
  for (auto& v : x) v = dist(rng);
  return x;
}

inline std::vector<double> normal_sample(std::size_t n, std::uint64_t seed) {
  return draw(n, seed, std::normal_distribution<double>());
}

inline std::vector<double> cauchy_sample(std::size_t n, std::uint64_t seed) {
  return draw(n, seed, std::cauchy_distribution<double>());
}

inline std::vector<double> laplace_sample(std::size_t n, std::uint64_t seed) {
  std::exponential_distribution<double> e(1.0);
  std::bernoulli_distribution sign(0.5);
  return draw(n, seed, [&](std::mt19937_64& rng) { return sign(rng) ? e(rng) : -e(rng); });
}

inline std::vector<double> stable_sample(double alpha, std::size_t n, std::uint64_t seed) {
  return draw(n, seed, [&](std::mt19937_64& rng) { return stable_symmetric(alpha, rng); });
}

inline Eigen::VectorXd random_vector(Eigen::Index n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Eigen::VectorXd v(n);
  for (auto& x : v) x = normal(rng);
  return v;
}

// Scalar-generic loss of a flat parameter vector, written independently of the library's
// forward pass so that it can serve as an oracle (evaluated in long double).
template <typename T>
T reference_loss(const std::vector<T>& flat, const NetSpec& spec, const Eigen::VectorXd& input,
                 const Eigen::VectorXd& target) {
  std::vector<T> a(input.data(), input.data() + input.size());
  std::size_t pos = 0;
  for (std::size_t k = 0; k < spec.depth(); ++k) {
    const std::size_t rows = spec.layer_sizes[k + 1], cols = spec.layer_sizes[k];
    std::vector<T> u(rows, T(0));
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j) u[i] += flat[pos++] * a[j];
    for (std::size_t i = 0; i < rows; ++i) u[i] += flat[pos++];
    const ActivationSpec act = spec.activations[k];
    for (auto& x : u) {
      switch (act.kind) {
        case Activation::relu:
          x = x > 0 ? x : T(0);
          break;
        case Activation::leaky_relu:
          x = x > 0 ? x : T(act.slope) * x;
          break;
        case Activation::sigmoid:
          x = T(1) / (T(1) + std::exp(-x));
          break;
        case Activation::tanh:
          x = std::tanh(x);
          break;
        case Activation::softplus:
          x = x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
          break;
        case Activation::identity:
          break;
      }
    }
    a = std::move(u);
  }
  T loss = 0;
  if (spec.loss == LossKind::mse) {
    for (std::size_t i = 0; i < a.size(); ++i) {
      const T r = a[i] - T(target[static_cast<Eigen::Index>(i)]);
      loss += r * r;
    }
    return loss;
  }
  T max = a[0];
  for (const T& x : a) max = std::max(max, x);
  T sum = 0;
  for (const T& x : a) sum += std::exp(x - max);
  const T lse = max + std::log(sum);
  for (std::size_t i = 0; i < a.size(); ++i) loss -= T(target[static_cast<Eigen::Index>(i)]) * (a[i] - lse);
  return loss;
}

// Central differences of reference_loss in long double.
inline Eigen::VectorXd finite_difference_gradient(const Params& params, const NetSpec& spec,
                                                  const Eigen::VectorXd& input, const Eigen::VectorXd& target,
                                                  long double h = 1e-5L) {
  const Eigen::VectorXd flat = params.flatten();
  std::vector<long double> x(flat.data(), flat.data() + flat.size());
  Eigen::VectorXd g(flat.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const long double keep = x[i];
    x[i] = keep + h;
    const long double up = reference_loss(x, spec, input, target);
    x[i] = keep - h;
    const long double down = reference_loss(x, spec, input, target);
    x[i] = keep;
    g[static_cast<Eigen::Index>(i)] = static_cast<double>((up - down) / (2 * h));
  }
  return g;
}

// Random net with up to 4 learnable layers of width <= 16 and random activations.
inline NetSpec random_net(std::mt19937_64& rng, LossKind loss, Activation forced_activation) {
  std::uniform_int_distribution<std::size_t> depth(1, 4), width(1, 16), act(0, 5);
  NetSpec spec;
  spec.loss = loss;
  const std::size_t d = depth(rng);
  for (std::size_t k = 0; k <= d; ++k) spec.layer_sizes.push_back(width(rng));
  if (loss == LossKind::cross_entropy && spec.layer_sizes.back() < 2) spec.layer_sizes.back() = 2;
  for (std::size_t k = 0; k < d; ++k) spec.activations.push_back({static_cast<Activation>(act(rng)), 0.1});
  spec.activations[std::uniform_int_distribution<std::size_t>(0, d - 1)(rng)] = {forced_activation, 0.1};
  return spec;
}

struct GradientCheck {
  std::size_t nets = 0;
  std::size_t coordinates = 0;  // compared coordinates, |g| > 1e-8
  double worst_relative_error = 0.0;
};

// Backprop against long-double central differences on `nets` random nets. Nets cycle
// through every activation (forced into one random layer) and both losses.
inline GradientCheck check_gradients(std::size_t nets, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  GradientCheck out;
  for (std::size_t t = 0; t < nets; ++t) {
    const auto loss = t % 2 == 0 ? LossKind::mse : LossKind::cross_entropy;
    const auto forced = static_cast<Activation>((t / 2) % 6);
    const NetSpec spec = random_net(rng, loss, forced);
    const Params params = initialize(spec, rng());
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Eigen::VectorXd input(static_cast<Eigen::Index>(spec.input_dim()));
    for (auto& x : input) x = unit(rng);
    Eigen::VectorXd target(static_cast<Eigen::Index>(spec.output_dim()));
    if (loss == LossKind::mse) {
      for (auto& x : target) x = unit(rng);
    } else {
      target.setZero();
      target[std::uniform_int_distribution<Eigen::Index>(0, target.size() - 1)(rng)] = 1.0;
    }
    const Eigen::VectorXd bp = per_sample_gradient(params, spec, input, target);
    const Eigen::VectorXd fd = finite_difference_gradient(params, spec, input, target);
    for (Eigen::Index i = 0; i < bp.size(); ++i) {
      const double scale = std::max(std::abs(bp[i]), std::abs(fd[i]));
      if (scale <= 1e-8) continue;
      ++out.coordinates;
      out.worst_relative_error = std::max(out.worst_relative_error, std::abs(bp[i] - fd[i]) / scale);
    }
    ++out.nets;
  }
  return out;
}

}  // namespace sgnlab::fixtures

#endif  // SGNLAB_TESTS_SUPPORT_HPP
