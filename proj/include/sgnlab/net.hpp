#ifndef SGNLAB_NET_HPP
#define SGNLAB_NET_HPP

// Dense feed-forward network with exact per-sample backpropagation.
//
// Layer k (1-based, k = 1..K) computes
//   u(k) = W(k) a(k-1) + b(k),   a(k) = f_k(u(k)),   a(0) = input.
// Parameters flatten layer-major: W(1) row-major, b(1), W(2) row-major, b(2), ...

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sgnlab/error.hpp"
#include "sgnlab/numeric.hpp"

namespace sgnlab {

enum class Activation { relu, leaky_relu, sigmoid, tanh, softplus, identity };

struct ActivationSpec {
  Activation kind = Activation::identity;
  double slope = 0.01;  // LeakyReLU only

  friend bool operator==(const ActivationSpec&, const ActivationSpec&) = default;
};

enum class LossKind { mse, cross_entropy };

inline double activate(const ActivationSpec& a, double x) {
  switch (a.kind) {
    case Activation::relu:
      return x > 0.0 ? x : 0.0;
    case Activation::leaky_relu:
      return x > 0.0 ? x : a.slope * x;
    case Activation::sigmoid:
      return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
    case Activation::tanh:
      return std::tanh(x);
    case Activation::softplus:
      return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
    case Activation::identity:
      return x;
  }
  return x;
}

// ReLU and LeakyReLU use the subgradient of the negative side at exactly 0.
inline double activate_derivative(const ActivationSpec& a, double x) {
  switch (a.kind) {
    case Activation::relu:
      return x > 0.0 ? 1.0 : 0.0;
    case Activation::leaky_relu:
      return x > 0.0 ? 1.0 : a.slope;
    case Activation::sigmoid: {
      const double s = activate(a, x);
      return s * (1.0 - s);
    }
    case Activation::tanh: {
      const double t = std::tanh(x);
      return 1.0 - t * t;
    }
    case Activation::softplus:
      return activate({Activation::sigmoid}, x);
    case Activation::identity:
      return 1.0;
  }
  return 1.0;
}

// Supremum of |f'| over the real line.
inline double lipschitz_constant(const ActivationSpec& a) {
  switch (a.kind) {
    case Activation::leaky_relu:
      return std::max(1.0, std::abs(a.slope));
    case Activation::sigmoid:
      return 0.25;
    default:
      return 1.0;
  }
}

struct NetSpec {
  std::vector<std::size_t> layer_sizes;
  std::vector<ActivationSpec> activations;
  LossKind loss = LossKind::mse;

  [[nodiscard]] std::size_t depth() const noexcept {
    return layer_sizes.empty() ? 0 : layer_sizes.size() - 1;
  }
  [[nodiscard]] std::size_t input_dim() const { return layer_sizes.front(); }
  [[nodiscard]] std::size_t output_dim() const { return layer_sizes.back(); }

  // Flat offset of the first weight of learnable layer `layer` (0-based).
  [[nodiscard]] std::size_t layer_offset(std::size_t layer) const {
    std::size_t offset = 0;
    for (std::size_t k = 0; k < layer; ++k) offset += layer_sizes[k + 1] * (layer_sizes[k] + 1);
    return offset;
  }
  [[nodiscard]] std::size_t param_count() const { return layer_offset(depth()); }

  void validate() const {
    require(layer_sizes.size() >= 2, "network needs at least two layer sizes");
    require(std::all_of(layer_sizes.begin(), layer_sizes.end(), [](std::size_t n) { return n > 0; }),
            "layer sizes must be positive");
    require(activations.size() == depth(), "need exactly one activation per learnable layer (got " +
                                               std::to_string(activations.size()) + ", expected " +
                                               std::to_string(depth()) + ")");
    require(loss != LossKind::cross_entropy || output_dim() >= 2,
            "cross-entropy needs an output dimension of at least 2");
  }

  friend bool operator==(const NetSpec&, const NetSpec&) = default;
};

struct DenseLayer {
  Eigen::MatrixXd weight;  // rows = this layer's width, cols = previous width
  Eigen::VectorXd bias;
};

using Gradient = Eigen::VectorXd;

class Params {
 public:
  Params() = default;

  // Zero-initialized parameters shaped for `spec`.
  explicit Params(const NetSpec& spec) {
    spec.validate();
    layers_.reserve(spec.depth());
    for (std::size_t k = 0; k < spec.depth(); ++k) {
      const auto rows = static_cast<Eigen::Index>(spec.layer_sizes[k + 1]);
      const auto cols = static_cast<Eigen::Index>(spec.layer_sizes[k]);
      layers_.push_back({Eigen::MatrixXd::Zero(rows, cols), Eigen::VectorXd::Zero(rows)});
    }
  }

  static Params unflatten(const NetSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& flat) {
    Params p(spec);
    require(static_cast<std::size_t>(flat.size()) == spec.param_count(),
            "flat parameter vector has length " + std::to_string(flat.size()) + ", expected " +
                std::to_string(spec.param_count()));
    Eigen::Index pos = 0;
    for (auto& layer : p.layers_) {
      for (Eigen::Index i = 0; i < layer.weight.rows(); ++i)
        for (Eigen::Index j = 0; j < layer.weight.cols(); ++j) layer.weight(i, j) = flat[pos++];
      for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias[i] = flat[pos++];
    }
    return p;
  }

  [[nodiscard]] Eigen::VectorXd flatten() const {
    Eigen::VectorXd flat(static_cast<Eigen::Index>(size()));
    Eigen::Index pos = 0;
    for (const auto& layer : layers_) {
      for (Eigen::Index i = 0; i < layer.weight.rows(); ++i)
        for (Eigen::Index j = 0; j < layer.weight.cols(); ++j) flat[pos++] = layer.weight(i, j);
      for (Eigen::Index i = 0; i < layer.bias.size(); ++i) flat[pos++] = layer.bias[i];
    }
    return flat;
  }

  [[nodiscard]] std::size_t size() const noexcept {
    std::size_t n = 0;
    for (const auto& layer : layers_) n += static_cast<std::size_t>(layer.weight.size() + layer.bias.size());
    return n;
  }

  [[nodiscard]] std::size_t depth() const noexcept { return layers_.size(); }
  [[nodiscard]] const DenseLayer& layer(std::size_t k) const { return layers_.at(k); }
  [[nodiscard]] DenseLayer& layer(std::size_t k) { return layers_.at(k); }

  [[nodiscard]] bool matches(const NetSpec& spec) const {
    if (layers_.size() != spec.depth()) return false;
    for (std::size_t k = 0; k < layers_.size(); ++k) {
      if (static_cast<std::size_t>(layers_[k].weight.rows()) != spec.layer_sizes[k + 1] ||
          static_cast<std::size_t>(layers_[k].weight.cols()) != spec.layer_sizes[k] ||
          layers_[k].bias.size() != layers_[k].weight.rows())
        return false;
    }
    return true;
  }

  // Content hash of the flattened parameters (bit patterns).
  [[nodiscard]] std::uint64_t hash() const {
    const Eigen::VectorXd flat = flatten();
    Fnv1a h;
    h.update(flat.data(), static_cast<std::size_t>(flat.size()) * sizeof(double));
    return h.digest();
  }

 private:
  std::vector<DenseLayer> layers_;
};

// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] for weights and biases.
inline Params initialize(const NetSpec& spec, std::uint64_t seed) {
  Params p(spec);
  std::mt19937_64 rng(seed);
  for (std::size_t k = 0; k < p.depth(); ++k) {
    auto& layer = p.layer(k);
    const double bound = 1.0 / std::sqrt(static_cast<double>(spec.layer_sizes[k]));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Eigen::Index i = 0; i < layer.weight.rows(); ++i)
      for (Eigen::Index j = 0; j < layer.weight.cols(); ++j) layer.weight(i, j) = dist(rng);
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias[i] = dist(rng);
  }
  return p;
}

struct ForwardTrace {
  std::vector<Eigen::VectorXd> pre;   // u(1..K), stored at index k-1
  std::vector<Eigen::VectorXd> post;  // a(0..K), post[0] = input

  [[nodiscard]] const Eigen::VectorXd& output() const { return post.back(); }
};

inline ForwardTrace forward(const Params& params, const NetSpec& spec,
                            const Eigen::Ref<const Eigen::VectorXd>& input) {
  require(params.matches(spec), "parameters do not match the network shape");
  require(static_cast<std::size_t>(input.size()) == spec.input_dim(),
          "input has length " + std::to_string(input.size()) + ", network expects " +
              std::to_string(spec.input_dim()));
  require(input.allFinite(), "input contains non-finite values");

  ForwardTrace trace;
  trace.pre.reserve(spec.depth());
  trace.post.reserve(spec.depth() + 1);
  trace.post.emplace_back(input);
  for (std::size_t k = 0; k < spec.depth(); ++k) {
    const auto& layer = params.layer(k);
    Eigen::VectorXd u = layer.weight * trace.post.back() + layer.bias;
    Eigen::VectorXd a = u.unaryExpr([&](double x) { return activate(spec.activations[k], x); });
    trace.pre.push_back(std::move(u));
    trace.post.push_back(std::move(a));
  }
  return trace;
}

namespace detail {

inline void check_target(const Eigen::VectorXd& output, const Eigen::Ref<const Eigen::VectorXd>& target,
                         LossKind kind) {
  require(target.size() == output.size(), "target has length " + std::to_string(target.size()) +
                                              ", network output has " + std::to_string(output.size()));
  if (kind == LossKind::cross_entropy) {
    require((target.array() >= 0.0).all(), "cross-entropy target has negative entries");
    require(std::abs(target.sum() - 1.0) <= 1e-9, "cross-entropy target must sum to 1");
  }
}

inline Eigen::VectorXd log_softmax(const Eigen::VectorXd& logits) {
  const double max = logits.maxCoeff();
  const double lse = max + std::log((logits.array() - max).exp().sum());
  return logits.array() - lse;
}

}  // namespace detail

inline double per_sample_loss(const ForwardTrace& trace, const Eigen::Ref<const Eigen::VectorXd>& target,
                              LossKind kind) {
  const Eigen::VectorXd& out = trace.output();
  detail::check_target(out, target, kind);
  if (kind == LossKind::mse) return (target - out).squaredNorm();
  return -target.dot(detail::log_softmax(out));
}

// dL/da(K) for one sample. For cross-entropy this is softmax(a) - y, entries in [-1, 1].
inline Eigen::VectorXd loss_output_gradient(const Eigen::VectorXd& output,
                                            const Eigen::Ref<const Eigen::VectorXd>& target, LossKind kind) {
  detail::check_target(output, target, kind);
  if (kind == LossKind::mse) return 2.0 * (output - target);
  const Eigen::VectorXd p = detail::log_softmax(output).array().exp();
  return p - target;
}

inline Gradient per_sample_gradient(const Params& params, const NetSpec& spec,
                                    const Eigen::Ref<const Eigen::VectorXd>& input,
                                    const Eigen::Ref<const Eigen::VectorXd>& target) {
  const ForwardTrace trace = forward(params, spec, input);
  Gradient grad(static_cast<Eigen::Index>(spec.param_count()));

  // delta holds dL/du(k) while walking the layers backwards.
  Eigen::VectorXd delta = loss_output_gradient(trace.output(), target, spec.loss);
  for (std::size_t k = spec.depth(); k-- > 0;) {
    const auto& act = spec.activations[k];
    delta.array() *= trace.pre[k].unaryExpr([&](double x) { return activate_derivative(act, x); }).array();

    const Eigen::VectorXd& prev = trace.post[k];
    const auto rows = delta.size();
    const auto cols = prev.size();
    auto pos = static_cast<Eigen::Index>(spec.layer_offset(k));
    for (Eigen::Index i = 0; i < rows; ++i) {
      grad.segment(pos, cols) = delta[i] * prev.transpose();
      pos += cols;
    }
    grad.segment(pos, rows) = delta;

    if (k > 0) delta = params.layer(k).weight.transpose() * delta;
  }
  return grad;
}

struct Sample {
  Eigen::VectorXd input;
  Eigen::VectorXd target;
};

using Dataset = std::vector<Sample>;

// Mean of per-sample gradients over `indices` into `data`, with compensated summation.
inline Gradient mean_gradient(const Params& params, const NetSpec& spec, const Dataset& data,
                              std::span<const std::size_t> indices) {
  require(!indices.empty(), "gradient of an empty batch is undefined");
  CompensatedVectorSum sum(static_cast<Eigen::Index>(spec.param_count()));
  for (std::size_t i : indices) {
    const Sample& s = data.at(i);
    sum.add(per_sample_gradient(params, spec, s.input, s.target));
  }
  return sum.value() / static_cast<double>(indices.size());
}

inline Gradient batch_gradient(const Params& params, const NetSpec& spec, const Dataset& batch) {
  require(!batch.empty(), "gradient of an empty batch is undefined");
  std::vector<std::size_t> all(batch.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return mean_gradient(params, spec, batch, all);
}

inline double mean_loss(const Params& params, const NetSpec& spec, const Dataset& data) {
  require(!data.empty(), "loss of an empty dataset is undefined");
  std::vector<double> losses;
  losses.reserve(data.size());
  for (const auto& s : data) losses.push_back(per_sample_loss(forward(params, spec, s.input), s.target, spec.loss));
  return compensated_sum(losses) / static_cast<double>(data.size());
}

}  // namespace sgnlab

#endif  // SGNLAB_NET_HPP
