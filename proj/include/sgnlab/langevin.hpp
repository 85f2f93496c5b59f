#ifndef SGNLAB_LANGEVIN_HPP
#define SGNLAB_LANGEVIN_HPP

// Langevin picture of momentum SGD.
//
//   m theta'' + gamma theta' = -grad phi(theta) + eta,   <eta eta^T> = D delta(t - t')
//
// Discretizing with the per-step displacement v_n = theta_n - theta_{n-1} gives heavy-ball
// momentum with rho = 1 / (1 + gamma dt / m) and alpha = dt / (gamma + m / dt).
// Near a minimum with D = dt * H, the stationary density is approximately
//   exp(-(gamma/dt) |theta - theta*|^2) * exp(-(gamma/dt) v^T H^{-1} v).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "sgnlab/error.hpp"
#include "sgnlab/net.hpp"
#include "sgnlab/noise.hpp"

namespace sgnlab {

struct SGDHyperparams {
  double momentum = 0.0;       // rho in [0, 1)
  double learning_rate = 0.0;  // alpha > 0

  void validate() const {
    require(momentum >= 0.0 && momentum < 1.0, "momentum must lie in [0, 1)");
    require(learning_rate > 0.0, "learning rate must be positive");
  }
};

inline SGDHyperparams hyperparam_map(double mass, double friction, double dt) {
  require(mass > 0.0 && friction > 0.0 && dt > 0.0, "mass, friction and time step must be positive");
  return {1.0 / (1.0 + friction * dt / mass), dt / (friction + mass / dt)};
}

struct MassFriction {
  double mass = 0.0;
  double friction = 0.0;
  bool overdamped = false;  // rho = 0 maps to the massless limit
};

// Solves rho = m / (m + gamma dt), alpha = dt^2 / (m + gamma dt) for (m, gamma).
inline MassFriction inverse_hyperparam_map(const SGDHyperparams& hp, double dt) {
  hp.validate();
  require(dt > 0.0, "time step must be positive");
  const double total = dt * dt / hp.learning_rate;  // m + gamma dt
  const double mass = hp.momentum * total;
  return {mass, (total - mass) / dt, hp.momentum == 0.0};
}

struct PhaseState {
  Eigen::VectorXd position;
  Eigen::VectorXd velocity;
};

// v <- rho v - alpha grad;  theta <- theta + v
inline PhaseState step_momentum_sgd(const PhaseState& state, const Eigen::Ref<const Eigen::VectorXd>& grad,
                                    const SGDHyperparams& hp) {
  require(grad.size() == state.position.size() && state.velocity.size() == state.position.size(),
          "state and gradient dimensions disagree");
  PhaseState next;
  next.velocity = hp.momentum * state.velocity - hp.learning_rate * grad;
  next.position = state.position + next.velocity;
  return next;
}

// One step of the finite-difference Langevin recurrence in displacement form,
//   m (v_n - v_{n-1}) / dt^2 + gamma v_n / dt = -g,   theta_n = theta_{n-1} + v_n,
// where `state.velocity` is the displacement v_{n-1} and `force_term` is g (gradient plus noise).
inline PhaseState step_langevin_difference(const PhaseState& state, const Eigen::Ref<const Eigen::VectorXd>& force_term,
                                           double mass, double friction, double dt) {
  require(mass > 0.0 && friction >= 0.0 && dt > 0.0, "invalid mass, friction or time step");
  PhaseState next;
  next.velocity = (mass * state.velocity - dt * dt * force_term) / (mass + friction * dt);
  next.position = state.position + next.velocity;
  return next;
}

enum class FrictionScheme {
  implicit,  // friction evaluated at the new velocity; D = 0 reproduces heavy-ball momentum exactly
  explicit_euler,
};

class LangevinConfig {
 public:
  LangevinConfig(double mass, double friction, double dt, Eigen::MatrixXd diffusion,
                 FrictionScheme scheme = FrictionScheme::implicit)
      : mass_(mass), friction_(friction), dt_(dt), diffusion_(std::move(diffusion)), scheme_(scheme) {
    require(mass_ > 0.0, "mass must be positive");
    require(friction_ >= 0.0, "friction must be non-negative");
    require(dt_ > 0.0, "time step must be positive");
    require(diffusion_.rows() == diffusion_.cols(), "diffusion matrix must be square");
    require(diffusion_.allFinite(), "diffusion matrix has non-finite entries");
    const double scale = std::max(1.0, diffusion_.cwiseAbs().maxCoeff());
    require((diffusion_ - diffusion_.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * scale,
            "diffusion matrix must be symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(diffusion_);
    require(eig.eigenvalues().minCoeff() >= -1e-10 * scale, "diffusion matrix must be positive semidefinite");
    // Eigenvalues below 1e-12 are treated as zero.
    const Eigen::VectorXd root = eig.eigenvalues().unaryExpr([](double l) { return l < 1e-12 ? 0.0 : std::sqrt(l); });
    sqrt_diffusion_ = eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
  }

  // D = dt * C for a noise covariance C.
  static LangevinConfig from_noise_covariance(double mass, double friction, double dt,
                                              const Eigen::Ref<const Eigen::MatrixXd>& covariance,
                                              FrictionScheme scheme = FrictionScheme::implicit) {
    return {mass, friction, dt, dt * covariance, scheme};
  }

  [[nodiscard]] double mass() const { return mass_; }
  [[nodiscard]] double friction() const { return friction_; }
  [[nodiscard]] double dt() const { return dt_; }
  [[nodiscard]] Eigen::Index dim() const { return diffusion_.rows(); }
  [[nodiscard]] FrictionScheme scheme() const { return scheme_; }
  [[nodiscard]] const Eigen::MatrixXd& diffusion() const { return diffusion_; }
  [[nodiscard]] const Eigen::MatrixXd& sqrt_diffusion() const { return sqrt_diffusion_; }
  [[nodiscard]] Eigen::MatrixXd noise_covariance() const { return diffusion_ / dt_; }

 private:
  double mass_;
  double friction_;
  double dt_;
  Eigen::MatrixXd diffusion_;
  Eigen::MatrixXd sqrt_diffusion_;
  FrictionScheme scheme_;
};

using GradientField = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

// Euler-Maruyama step of the underdamped equation with velocity v = d theta / dt:
//   m dv = (-gamma v - grad phi(theta)) dt + sqrt(D) dW,   d theta = v dt.
// The position update uses the new velocity.
template <typename Rng>
PhaseState step_underdamped(const PhaseState& state, const GradientField& potential_grad, const LangevinConfig& cfg,
                            Rng& rng) {
  require(state.position.size() == cfg.dim() && state.velocity.size() == cfg.dim(),
          "state dimension does not match the diffusion matrix");
  const double m = cfg.mass();
  const double dt = cfg.dt();
  const Eigen::VectorXd force = potential_grad(state.position);

  Eigen::VectorXd kick = Eigen::VectorXd::Zero(cfg.dim());
  if (!cfg.sqrt_diffusion().isZero(0.0)) {
    std::normal_distribution<double> normal;
    Eigen::VectorXd xi(cfg.dim());
    for (Eigen::Index i = 0; i < xi.size(); ++i) xi[i] = normal(rng);
    kick = cfg.sqrt_diffusion() * xi * (std::sqrt(dt) / m);
  }

  PhaseState next;
  if (cfg.scheme() == FrictionScheme::implicit) {
    next.velocity = (state.velocity - (dt / m) * force + kick) / (1.0 + cfg.friction() * dt / m);
  } else {
    next.velocity = state.velocity + (dt / m) * (-cfg.friction() * state.velocity - force) + kick;
  }
  next.position = state.position + dt * next.velocity;
  return next;
}

class QuadraticPotential {
 public:
  QuadraticPotential(Eigen::VectorXd minimizer, Eigen::MatrixXd hessian)
      : minimizer_(std::move(minimizer)), hessian_(std::move(hessian)) {
    require(hessian_.rows() == hessian_.cols() && hessian_.rows() == minimizer_.size(),
            "Hessian must be square and match the minimizer dimension");
    require((hessian_ - hessian_.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, hessian_.cwiseAbs().maxCoeff()),
            "Hessian must be symmetric");
    llt_.compute(hessian_);
    require(llt_.info() == Eigen::Success, "Hessian must be positive definite");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(hessian_, Eigen::EigenvaluesOnly);
    require(eig.eigenvalues().minCoeff() > 1e-14 * eig.eigenvalues().maxCoeff(), "Hessian is numerically singular");
  }

  [[nodiscard]] const Eigen::VectorXd& minimizer() const { return minimizer_; }
  [[nodiscard]] const Eigen::MatrixXd& hessian() const { return hessian_; }
  [[nodiscard]] Eigen::Index dim() const { return minimizer_.size(); }

  [[nodiscard]] double value(const Eigen::VectorXd& theta) const {
    const Eigen::VectorXd d = theta - minimizer_;
    return 0.5 * d.dot(hessian_ * d);
  }
  [[nodiscard]] Eigen::VectorXd gradient(const Eigen::VectorXd& theta) const { return hessian_ * (theta - minimizer_); }
  [[nodiscard]] Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const { return llt_.solve(rhs); }
  [[nodiscard]] GradientField gradient_field() const {
    return [this](const Eigen::VectorXd& theta) { return gradient(theta); };
  }

 private:
  Eigen::VectorXd minimizer_;
  Eigen::MatrixXd hessian_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
};

// Logarithm of the unnormalized approximate stationary density.
inline double steady_state_log_density(const Eigen::VectorXd& theta, const Eigen::VectorXd& velocity, double friction,
                                       double dt, const QuadraticPotential& pot) {
  require(friction > 0.0 && dt > 0.0, "friction and time step must be positive");
  require(theta.size() == pot.dim() && velocity.size() == pot.dim(), "phase point dimension mismatch");
  const double k = friction / dt;
  const Eigen::VectorXd d = theta - pot.minimizer();
  return -k * d.squaredNorm() - k * velocity.dot(pot.solve(velocity));
}

inline double steady_state_density(const Eigen::VectorXd& theta, const Eigen::VectorXd& velocity, double friction,
                                   double dt, const QuadraticPotential& pot) {
  return std::exp(steady_state_log_density(theta, velocity, friction, dt, pot));
}

struct PhaseCovariances {
  Eigen::MatrixXd position;
  Eigen::MatrixXd velocity;
};

// Gaussian covariances read off the stationary density: (dt / 2 gamma) I and (dt / 2 gamma) H.
inline PhaseCovariances analytic_covariances(double friction, double dt, const QuadraticPotential& pot) {
  require(friction > 0.0 && dt > 0.0, "friction and time step must be positive");
  const double s = dt / (2.0 * friction);
  return {s * Eigen::MatrixXd::Identity(pot.dim(), pot.dim()), s * pot.hessian()};
}

inline constexpr std::size_t dense_covariance_max_coords = 64;

// Population covariance of per-sample gradients over the dataset, restricted to `coords`.
inline Eigen::MatrixXd noise_covariance_at(const Params& params, const NetSpec& spec, const Dataset& data,
                                           std::span<const std::size_t> coords) {
  require(!data.empty(), "covariance of an empty dataset is undefined");
  require(!coords.empty() && coords.size() <= dense_covariance_max_coords,
          "dense noise covariance needs between 1 and 64 coordinates");
  const auto k = static_cast<Eigen::Index>(coords.size());
  Eigen::MatrixXd g(static_cast<Eigen::Index>(data.size()), k);
  for (std::size_t s = 0; s < data.size(); ++s) {
    const Gradient full = per_sample_gradient(params, spec, data[s].input, data[s].target);
    for (Eigen::Index c = 0; c < k; ++c) {
      require(coords[static_cast<std::size_t>(c)] < spec.param_count(), "coordinate index out of range");
      g(static_cast<Eigen::Index>(s), c) = full[static_cast<Eigen::Index>(coords[static_cast<std::size_t>(c)])];
    }
  }
  const Eigen::MatrixXd centered = g.rowwise() - g.colwise().mean();
  Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(data.size());
  return 0.5 * (cov + cov.transpose());
}

using PhaseDensity = std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)>;

struct ProbabilityCurrent {
  Eigen::VectorXd position;  // J_theta
  Eigen::VectorXd velocity;  // J_v
};

// J = -{A - 1/2 [0; D grad_v]} pi with drift A = (v, -(gamma v + grad phi)), unit mass:
//   J_theta = -v pi,   J_v = (gamma v + grad phi) pi + 1/2 D grad_v pi.
// grad_v pi is taken by central differences with step 1e-5 * max(1, |v|).
inline ProbabilityCurrent probability_current(const Eigen::VectorXd& theta, const Eigen::VectorXd& velocity,
                                              const LangevinConfig& cfg, const QuadraticPotential& pot,
                                              const PhaseDensity& density) {
  require(theta.size() == pot.dim() && velocity.size() == pot.dim() && cfg.dim() == pot.dim(),
          "phase point dimension mismatch");
  const double pi = density(theta, velocity);
  const double h = 1e-5 * std::max(1.0, velocity.cwiseAbs().maxCoeff());
  Eigen::VectorXd grad_v(velocity.size());
  for (Eigen::Index i = 0; i < velocity.size(); ++i) {
    Eigen::VectorXd up = velocity, down = velocity;
    up[i] += h;
    down[i] -= h;
    grad_v[i] = (density(theta, up) - density(theta, down)) / (2.0 * h);
  }
  return {-velocity * pi,
          (cfg.friction() * velocity + pot.gradient(theta)) * pi + 0.5 * cfg.diffusion() * grad_v};
}

// Streaming mean and covariance (Welford) with a mergeable state.
class RunningMoments {
 public:
  explicit RunningMoments(Eigen::Index dim = 0)
      : mean_(Eigen::VectorXd::Zero(dim)), m2_(Eigen::MatrixXd::Zero(dim, dim)),
        m3_(Eigen::VectorXd::Zero(dim)) {}

  void add(const Eigen::VectorXd& x) {
    const double n0 = static_cast<double>(count_);
    ++count_;
    const double n = static_cast<double>(count_);
    const Eigen::VectorXd delta = x - mean_;
    const Eigen::VectorXd delta_n = delta / n;
    // Per-coordinate third central moment update (Terriberry).
    const Eigen::VectorXd term1 = delta.cwiseProduct(delta_n) * n0;
    m3_ += term1.cwiseProduct(delta_n) * (n - 2.0) - 3.0 * delta_n.cwiseProduct(m2_.diagonal());
    mean_ += delta_n;
    m2_.noalias() += (delta * delta.transpose()) * (n0 / n);
  }

  void merge(const RunningMoments& other) {
    if (other.count_ == 0) return;
    if (count_ == 0) {
      *this = other;
      return;
    }
    const double na = static_cast<double>(count_);
    const double nb = static_cast<double>(other.count_);
    const double n = na + nb;
    const Eigen::VectorXd delta = other.mean_ - mean_;
    const Eigen::VectorXd d2 = delta.cwiseProduct(delta);
    m3_ += other.m3_ + delta.cwiseProduct(d2) * (na * nb * (na - nb) / (n * n)) +
           3.0 * delta.cwiseProduct(na * other.m2_.diagonal() - nb * m2_.diagonal()) / n;
    m2_ += other.m2_ + (delta * delta.transpose()) * (na * nb / n);
    mean_ += delta * (nb / n);
    count_ += other.count_;
  }

  [[nodiscard]] std::size_t count() const { return count_; }
  [[nodiscard]] const Eigen::VectorXd& mean() const { return mean_; }
  // Population covariance.
  [[nodiscard]] Eigen::MatrixXd covariance() const {
    return count_ == 0 ? m2_ : Eigen::MatrixXd(m2_ / static_cast<double>(count_));
  }
  [[nodiscard]] Eigen::VectorXd skewness() const {
    const double n = static_cast<double>(count_);
    const Eigen::VectorXd var = m2_.diagonal() / n;
    return (m3_ / n).cwiseQuotient(var.cwiseSqrt().cwiseProduct(var));
  }

 private:
  std::size_t count_ = 0;
  Eigen::VectorXd mean_;
  Eigen::MatrixXd m2_;
  Eigen::VectorXd m3_;
};

struct SimulationMoments {
  std::size_t samples = 0;
  Eigen::VectorXd mean_position;
  Eigen::MatrixXd cov_position;
  Eigen::VectorXd mean_velocity;
  Eigen::MatrixXd cov_velocity;
  Eigen::VectorXd skew_velocity;
  // Batch-means standard errors (100 contiguous batches), which account for autocorrelation.
  Eigen::VectorXd stderr_mean_position;
  Eigen::VectorXd stderr_skew_velocity;
  PhaseState final_state;
};

using TrajectoryObserver = std::function<void(std::size_t step, const PhaseState&)>;

inline constexpr double divergence_threshold = 1e8;

// Integrates the quadratic-potential Langevin dynamics for `steps` steps and accumulates
// moments over steps (burn_in, steps]. The observer, if set, sees every post-burn-in state.
inline SimulationMoments simulate(const LangevinConfig& cfg, const QuadraticPotential& pot, const PhaseState& initial,
                                  std::size_t steps, std::size_t burn_in, std::uint64_t seed,
                                  const TrajectoryObserver& observer = {}) {
  require(steps > burn_in, "steps must exceed burn-in");
  require(cfg.dim() == pot.dim() && initial.position.size() == pot.dim() && initial.velocity.size() == pot.dim(),
          "dimension mismatch between configuration, potential and initial state");

  constexpr std::size_t n_batches = 100;
  const std::size_t kept = steps - burn_in;
  const std::size_t batch_len = std::max<std::size_t>(1, kept / n_batches);

  std::mt19937_64 rng(seed);
  const GradientField grad = pot.gradient_field();
  RunningMoments theta_moments(pot.dim()), v_moments(pot.dim());
  RunningMoments batch_theta(pot.dim()), batch_v(pot.dim());
  std::vector<Eigen::VectorXd> batch_means;
  std::vector<Eigen::VectorXd> batch_skews;

  PhaseState state = initial;
  for (std::size_t step = 1; step <= steps; ++step) {
    state = step_underdamped(state, grad, cfg, rng);
    if (!state.position.allFinite() || state.position.norm() > divergence_threshold)
      throw NumericalError("Langevin simulation diverged at step " + std::to_string(step));
    if (step <= burn_in) continue;
    theta_moments.add(state.position);
    v_moments.add(state.velocity);
    batch_theta.add(state.position);
    batch_v.add(state.velocity);
    if (batch_theta.count() == batch_len) {
      batch_means.push_back(batch_theta.mean());
      batch_skews.push_back(batch_v.skewness());
      batch_theta = RunningMoments(pot.dim());
      batch_v = RunningMoments(pot.dim());
    }
    if (observer) observer(step, state);
  }

  SimulationMoments out;
  out.samples = theta_moments.count();
  out.mean_position = theta_moments.mean();
  out.cov_position = theta_moments.covariance();
  out.mean_velocity = v_moments.mean();
  out.cov_velocity = v_moments.covariance();
  out.skew_velocity = v_moments.skewness();
  out.final_state = state;

  const auto batch_stderr = [&](const std::vector<Eigen::VectorXd>& xs) {
    Eigen::VectorXd se = Eigen::VectorXd::Constant(pot.dim(), std::numeric_limits<double>::quiet_NaN());
    if (xs.size() < 2) return se;
    RunningMoments m(pot.dim());
    for (const auto& x : xs) m.add(x);
    const double b = static_cast<double>(xs.size());
    return Eigen::VectorXd((m.covariance().diagonal() * b / (b - 1.0) / b).cwiseSqrt());
  };
  out.stderr_mean_position = batch_stderr(batch_means);
  out.stderr_skew_velocity = batch_stderr(batch_skews);
  return out;
}

// CSV trajectory writer: "step,theta_0..,v_0.." with every `stride`-th state.
class TrajectoryCsvWriter {
 public:
  TrajectoryCsvWriter(std::ostream& os, Eigen::Index dim, std::size_t stride) : os_(os), stride_(stride) {
    require(stride > 0, "thinning stride must be positive");
    os_ << "step";
    for (Eigen::Index i = 0; i < dim; ++i) os_ << ",theta_" << i;
    for (Eigen::Index i = 0; i < dim; ++i) os_ << ",v_" << i;
    os_ << '\n';
  }

  void operator()(std::size_t step, const PhaseState& s) {
    if (step % stride_ != 0) return;
    os_ << step;
    for (Eigen::Index i = 0; i < s.position.size(); ++i) os_ << ',' << format_real(s.position[i]);
    for (Eigen::Index i = 0; i < s.velocity.size(); ++i) os_ << ',' << format_real(s.velocity[i]);
    os_ << '\n';
  }

 private:
  std::ostream& os_;
  std::size_t stride_;
};

}  // namespace sgnlab

#endif  // SGNLAB_LANGEVIN_HPP
