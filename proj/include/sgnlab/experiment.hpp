#ifndef SGNLAB_EXPERIMENT_HPP
#define SGNLAB_EXPERIMENT_HPP

// Experiment pipeline: train a small MLP with momentum SGD, freeze checkpoints, probe the
// gradient noise over a batch-size sweep, then measure per-layer Gaussianity and the
// distribution of the Berry-Esseen moment ratios. Also the Langevin validation campaign.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sgnlab/config.hpp"
#include "sgnlab/dataset.hpp"
#include "sgnlab/error.hpp"
#include "sgnlab/langevin.hpp"
#include "sgnlab/net.hpp"
#include "sgnlab/noise.hpp"
#include "sgnlab/parallel.hpp"
#include "sgnlab/stats.hpp"

namespace sgnlab {

// ---------------------------------------------------------------------------
// Training

struct Checkpoint {
  std::size_t epoch = 0;
  Params params;
};

struct EpochStats {
  std::size_t epoch = 0;
  double learning_rate = 0.0;
  double loss = 0.0;
  double accuracy = 0.0;
};

struct TrainingResult {
  std::vector<Checkpoint> checkpoints;
  std::vector<EpochStats> log;

  [[nodiscard]] const Checkpoint& at_epoch(std::size_t epoch) const {
    for (const auto& c : checkpoints)
      if (c.epoch == epoch) return c;
    throw ValidationError("no checkpoint saved at epoch " + std::to_string(epoch));
  }
};

inline double accuracy(const Params& params, const NetSpec& spec, const Dataset& data) {
  std::size_t hits = 0;
  for (const auto& s : data) hits += argmax(forward(params, spec, s.input).output()) == argmax(s.target);
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

inline double scheduled_learning_rate(const TrainConfig& t, std::size_t epoch) {
  return (t.lr_drop_epoch > 0 && epoch > t.lr_drop_epoch) ? t.learning_rate * t.lr_drop_factor : t.learning_rate;
}

// Momentum SGD over shuffled epochs (epochs numbered from 1); weight decay enters the
// gradient as lambda * theta. Epoch 0 in the checkpoint list means the initialization.
inline TrainingResult train(const ExperimentConfig& cfg, const Dataset& data) {
  cfg.validate();
  require(!data.empty(), "cannot train on an empty dataset");
  const NetSpec& spec = cfg.net;
  const TrainConfig& t = cfg.train;
  const auto wants = [&](std::size_t epoch) {
    return std::find(t.checkpoints.begin(), t.checkpoints.end(), epoch) != t.checkpoints.end();
  };

  TrainingResult result;
  Params params = initialize(spec, t.seed);
  if (wants(0)) result.checkpoints.push_back({0, params});

  PhaseState state{params.flatten(), Eigen::VectorXd::Zero(static_cast<Eigen::Index>(spec.param_count()))};
  std::vector<std::size_t> order(data.size());
  for (std::size_t epoch = 1; epoch <= t.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(mix_seed(t.seed, epoch));
    std::shuffle(order.begin(), order.end(), rng);
    const SGDHyperparams hp{t.momentum, scheduled_learning_rate(t, epoch)};

    for (std::size_t start = 0; start < order.size(); start += t.batch_size) {
      const std::size_t stop = std::min(order.size(), start + t.batch_size);
      const std::span<const std::size_t> batch(order.data() + start, stop - start);
      const Gradient g = mean_gradient(params, spec, data, batch) + t.weight_decay * state.position;
      state = step_momentum_sgd(state, g, hp);
      params = Params::unflatten(spec, state.position);
    }

    const double loss = mean_loss(params, spec, data);
    if (!std::isfinite(loss) || !state.position.allFinite())
      throw NumericalError("training diverged at epoch " + std::to_string(epoch));
    result.log.push_back({epoch, hp.learning_rate, loss, accuracy(params, spec, data)});
    if (wants(epoch)) result.checkpoints.push_back({epoch, params});
  }
  return result;
}

// Checkpoint files: "SGNP" | version u32 | epoch u64 | parameter count u64 | f64 payload (flat order).
inline constexpr std::array<char, 4> params_magic{'S', 'G', 'N', 'P'};
inline constexpr std::uint32_t params_format_version = 1;

inline void write_checkpoint(const Checkpoint& c, std::ostream& os) {
  os.write(params_magic.data(), params_magic.size());
  detail::put_le<std::uint32_t>(os, params_format_version);
  detail::put_le<std::uint64_t>(os, c.epoch);
  const Eigen::VectorXd flat = c.params.flatten();
  detail::put_le<std::uint64_t>(os, static_cast<std::uint64_t>(flat.size()));
  for (Eigen::Index i = 0; i < flat.size(); ++i) detail::put_le<double>(os, flat[i]);
  if (!os) throw IoError("failed writing checkpoint");
}

inline Checkpoint read_checkpoint(std::istream& is, const NetSpec& spec) {
  std::size_t offset = 0;
  std::array<char, 4> magic{};
  if (!is.read(magic.data(), magic.size())) throw ParseError("truncated checkpoint while reading magic", offset);
  if (magic != params_magic) throw ParseError("bad magic, expected \"SGNP\"", offset);
  offset += 4;
  const auto version = detail::get_le<std::uint32_t>(is, offset, "version");
  if (version != params_format_version)
    throw ParseError("unsupported checkpoint version " + std::to_string(version), offset - 4);
  Checkpoint c{static_cast<std::size_t>(detail::get_le<std::uint64_t>(is, offset, "epoch")), Params(spec)};
  const auto count = detail::get_le<std::uint64_t>(is, offset, "parameter count");
  if (count != spec.param_count())
    throw ParseError("checkpoint holds " + std::to_string(count) + " parameters, net expects " +
                         std::to_string(spec.param_count()),
                     offset - 8);
  Eigen::VectorXd flat(static_cast<Eigen::Index>(count));
  for (Eigen::Index i = 0; i < flat.size(); ++i) flat[i] = detail::get_le<double>(is, offset, "payload");
  c.params = Params::unflatten(spec, flat);
  return c;
}

// ---------------------------------------------------------------------------
// Noise probing over a batch-size sweep

struct ProbeRun {
  std::size_t checkpoint = 0;
  std::vector<CoordinateId> coordinates;
  std::vector<NoiseSampleSet> sets;  // one per batch size, in sweep order
};

// One coordinate selection and one reference gradient shared by every batch size.
inline ProbeRun probe_sweep(const ExperimentConfig& cfg, const Checkpoint& checkpoint, const Dataset& data,
                            std::size_t workers = 1) {
  const ProbeSettings& p = cfg.probe;
  ProbeRun run;
  run.checkpoint = checkpoint.epoch;
  run.coordinates = select_coordinates(cfg.net, p.max_coords_per_layer, p.seed, p.include_bias);
  const Gradient reference = full_gradient(checkpoint.params, cfg.net, data);
  for (std::size_t batch_size : p.batch_sizes) {
    ProbeConfig pc{batch_size, p.n_draws, p.max_coords_per_layer, p.sampling, p.include_bias,
                   mix_seed(p.seed, batch_size)};
    run.sets.push_back(sample_noise(checkpoint.params, cfg.net, data, pc, run.coordinates, reference, workers));
  }
  return run;
}

// Verdict per coordinate row; the subsampling seed depends only on the coordinate.
inline std::vector<Verdict> classify_rows(const NoiseSampleSet& set, const StatsSettings& s, std::size_t workers = 1) {
  std::vector<Verdict> verdicts(set.n_coordinates());
  parallel_for(verdicts.size(), workers, [&](std::size_t i) {
    const std::vector<double> row = set.row(i);
    const std::uint64_t key = i < set.coordinates.size() ? set.coordinates[i].flat_index : i;
    verdicts[i] = classify_gaussian(row, {s.alpha_level, s.sw_subsample_cap, mix_seed(s.seed, key)});
  });
  return verdicts;
}

struct GaussianityCell {
  std::size_t layer = 0;  // 0-based
  std::size_t batch_size = 0;
  std::size_t checkpoint = 0;
  std::size_t gaussian = 0;
  std::size_t dirac = 0;
  std::size_t non_gaussian = 0;

  [[nodiscard]] std::size_t tested() const { return gaussian + dirac + non_gaussian; }
  // Dirac rows count as Gaussian.
  [[nodiscard]] double percentage() const {
    return tested() == 0 ? 0.0 : 100.0 * static_cast<double>(gaussian + dirac) / static_cast<double>(tested());
  }
};

struct GaussianityReport {
  std::vector<GaussianityCell> cells;  // layer-major, then batch size in sweep order
  std::size_t n_draws = 0;
  double alpha_level = 0.05;

  [[nodiscard]] const GaussianityCell& cell(std::size_t layer, std::size_t batch_size) const {
    for (const auto& c : cells)
      if (c.layer == layer && c.batch_size == batch_size) return c;
    throw ValidationError("no Gaussianity cell for layer " + std::to_string(layer + 1) + ", batch size " +
                          std::to_string(batch_size));
  }
};

inline GaussianityReport gaussianity_sweep(const ExperimentConfig& cfg, const ProbeRun& run, std::size_t workers = 1) {
  GaussianityReport report;
  report.n_draws = cfg.probe.n_draws;
  report.alpha_level = cfg.stats.alpha_level;
  std::vector<std::vector<Verdict>> verdicts;
  for (const auto& set : run.sets) verdicts.push_back(classify_rows(set, cfg.stats, workers));

  for (std::size_t layer = 0; layer < cfg.net.depth(); ++layer) {
    for (std::size_t b = 0; b < run.sets.size(); ++b) {
      GaussianityCell cell{layer, run.sets[b].batch_size, run.checkpoint};
      for (std::size_t i = 0; i < run.coordinates.size(); ++i) {
        if (run.coordinates[i].layer != layer) continue;
        switch (verdicts[b][i]) {
          case Verdict::gaussian:
            ++cell.gaussian;
            break;
          case Verdict::dirac:
            ++cell.dirac;
            break;
          case Verdict::non_gaussian:
            ++cell.non_gaussian;
            break;
        }
      }
      report.cells.push_back(cell);
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Moment-ratio distributions

struct Histogram {
  double lo = 0.0;
  double hi = 0.0;
  std::vector<std::size_t> counts;

  static Histogram of(std::span<const double> xs, double lo, double hi, std::size_t bins) {
    Histogram h{lo, std::max(hi, lo + 1e-12), std::vector<std::size_t>(bins, 0)};
    const double width = (h.hi - h.lo) / static_cast<double>(bins);
    for (double x : xs) {
      const double pos = std::floor((x - h.lo) / width);
      const auto bin = static_cast<std::size_t>(std::clamp(pos, 0.0, static_cast<double>(bins - 1)));
      ++h.counts[bin];
    }
    return h;
  }
};

inline const std::vector<double>& reported_quantile_levels() {
  static const std::vector<double> levels{0.05, 0.25, 0.5, 0.75, 0.95};
  return levels;
}

struct BoundCell {
  std::size_t layer = 0;
  std::size_t batch_size = 0;
  std::size_t checkpoint = 0;
  std::size_t tested = 0;
  std::size_t dirac = 0;  // degenerate rows, excluded from the distributions
  Histogram beta_ratio_hist;
  Histogram kurtosis_bound_hist;
  std::vector<double> beta_ratio_quantiles;  // at reported_quantile_levels()
  std::vector<double> kurtosis_bound_quantiles;
  double median_beta_ratio = std::numeric_limits<double>::quiet_NaN();
  double gaussian_percentage = 0.0;
  // Quantiles of the two distributions taken at the observed Gaussianity percentage.
  double spine_beta_ratio = std::numeric_limits<double>::quiet_NaN();
  double spine_kurtosis_bound = std::numeric_limits<double>::quiet_NaN();
};

struct BoundReport {
  std::vector<BoundCell> cells;  // layer-major, then batch size

  [[nodiscard]] const BoundCell& cell(std::size_t layer, std::size_t batch_size) const {
    for (const auto& c : cells)
      if (c.layer == layer && c.batch_size == batch_size) return c;
    throw ValidationError("no bound cell for layer " + std::to_string(layer + 1) + ", batch size " +
                          std::to_string(batch_size));
  }
};

inline constexpr std::size_t bound_histogram_bins = 40;

inline BoundReport bound_sweep(const ExperimentConfig& cfg, const ProbeRun& run, const GaussianityReport& gauss,
                               std::size_t workers = 1) {
  BoundReport report;
  for (std::size_t b = 0; b < run.sets.size(); ++b) {
    const NoiseSampleSet& set = run.sets[b];
    std::vector<MomentSummary> summaries(set.n_coordinates());
    parallel_for(summaries.size(), workers, [&](std::size_t i) { summaries[i] = moment_summary(set.row(i)); });

    for (std::size_t layer = 0; layer < cfg.net.depth(); ++layer) {
      BoundCell cell;
      cell.layer = layer;
      cell.batch_size = set.batch_size;
      cell.checkpoint = run.checkpoint;
      std::vector<double> betas, kurts;
      for (std::size_t i = 0; i < run.coordinates.size(); ++i) {
        if (run.coordinates[i].layer != layer) continue;
        ++cell.tested;
        if (summaries[i].degenerate()) {
          ++cell.dirac;
          continue;
        }
        betas.push_back(summaries[i].beta_ratio);
        kurts.push_back(summaries[i].kurtosis_bound);
      }
      cell.gaussian_percentage = gauss.cell(layer, set.batch_size).percentage();
      if (!betas.empty()) {
        std::sort(betas.begin(), betas.end());
        std::sort(kurts.begin(), kurts.end());
        // Both histograms share the axis [1, max kurtosis bound]; the ratio never exceeds the bound.
        cell.beta_ratio_hist = Histogram::of(betas, 1.0, kurts.back(), bound_histogram_bins);
        cell.kurtosis_bound_hist = Histogram::of(kurts, 1.0, kurts.back(), bound_histogram_bins);
        for (double q : reported_quantile_levels()) {
          cell.beta_ratio_quantiles.push_back(sorted_quantile(betas, q));
          cell.kurtosis_bound_quantiles.push_back(sorted_quantile(kurts, q));
        }
        cell.median_beta_ratio = sorted_quantile(betas, 0.5);
        cell.spine_beta_ratio = sorted_quantile(betas, cell.gaussian_percentage / 100.0);
        cell.spine_kurtosis_bound = sorted_quantile(kurts, cell.gaussian_percentage / 100.0);
      } else {
        cell.beta_ratio_hist = Histogram::of({}, 1.0, 1.0, bound_histogram_bins);
        cell.kurtosis_bound_hist = cell.beta_ratio_hist;
      }
      report.cells.push_back(std::move(cell));
    }
  }
  std::stable_sort(report.cells.begin(), report.cells.end(),
                   [](const BoundCell& a, const BoundCell& b) { return a.layer < b.layer; });
  return report;
}

// Per-coordinate tail indices of a noise set (rows with fewer than 100 draws are rejected).
inline std::vector<TailIndexEstimate> tail_indices(const NoiseSampleSet& set, std::size_t workers = 1) {
  std::vector<TailIndexEstimate> out(set.n_coordinates());
  parallel_for(out.size(), workers, [&](std::size_t i) { out[i] = tail_index(set.row(i)); });
  return out;
}

struct TailIndexCell {
  std::size_t layer = 0;  // 0-based
  std::size_t batch_size = 0;
  std::size_t tested = 0;  // non-degenerate rows
  std::size_t dirac = 0;
  double median_alpha = std::numeric_limits<double>::quiet_NaN();
  double fraction_below = 0.0;  // share of tested rows with alpha < tail_heavy_threshold
};

inline constexpr double tail_heavy_threshold = 1.9;

// Median tail index per (layer, batch size); degenerate rows are counted apart.
inline std::vector<TailIndexCell> tail_index_sweep(const ProbeRun& run, std::size_t workers = 1) {
  std::size_t layers = 0;
  for (const auto& c : run.coordinates) layers = std::max(layers, c.layer + 1);
  std::vector<TailIndexCell> cells;
  for (std::size_t layer = 0; layer < layers; ++layer) {
    for (const auto& set : run.sets) {
      std::vector<std::size_t> rows;
      TailIndexCell cell{layer, set.batch_size};
      for (std::size_t i = 0; i < set.n_coordinates(); ++i) {
        if (run.coordinates[i].layer != layer) continue;
        if (is_degenerate(set.row(i)))
          ++cell.dirac;
        else
          rows.push_back(i);
      }
      std::vector<double> alphas(rows.size());
      parallel_for(rows.size(), workers, [&](std::size_t k) { alphas[k] = tail_index(set.row(rows[k])).alpha; });
      cell.tested = alphas.size();
      if (!alphas.empty()) {
        cell.fraction_below =
            static_cast<double>(std::count_if(alphas.begin(), alphas.end(),
                                              [](double a) { return a < tail_heavy_threshold; })) /
            static_cast<double>(alphas.size());
        std::sort(alphas.begin(), alphas.end());
        cell.median_alpha = sorted_quantile(alphas, 0.5);
      }
      cells.push_back(cell);
    }
  }
  return cells;
}

// Spearman rank correlation with average ranks for ties. NaN when either side is constant.
inline double spearman(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size() && x.size() >= 2, "Spearman correlation needs two equal-length samples");
  const auto ranks = [](std::span<const double> v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto rx = ranks(x), ry = ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sxy / std::sqrt(sxx * syy);
}

// ---------------------------------------------------------------------------
// Langevin validation campaign

struct LangevinReport {
  LangevinSettings settings;
  PhaseCovariances analytic;
  SimulationMoments empirical;
  double rel_error_cov_position = 0.0;  // Frobenius, relative to the analytic matrix
  double rel_error_cov_velocity = 0.0;
  std::vector<double> tv_distance_position;  // per coordinate, 200-bin histogram vs Gaussian marginal
  double min_current_ratio = 0.0;            // min ||J_theta|| / pi over grid points with ||v|| >= 0.1
  double min_current_norm = 0.0;             // min ||J_theta|| over the same points
  std::size_t grid_points = 0;
  std::size_t underflow_points = 0;  // grid points where pi < 1e-300
  double fixed_point_drift = 0.0;    // D = 0 run started at (theta*, 0)
};

inline constexpr std::size_t tv_histogram_bins = 200;

// Marginal histogram over mean +/- 5 sd; mass outside the window is compared as one tail bin.
class MarginalHistogram {
 public:
  MarginalHistogram(double mean, double sd, std::size_t bins)
      : lo_(mean - 5.0 * sd), hi_(mean + 5.0 * sd), mean_(mean), sd_(sd), counts_(bins, 0) {}

  void add(double x) {
    ++total_;
    if (x < lo_ || x >= hi_) {
      ++outside_;
      return;
    }
    const auto bin = static_cast<std::size_t>((x - lo_) / (hi_ - lo_) * static_cast<double>(counts_.size()));
    ++counts_[std::min(bin, counts_.size() - 1)];
  }

  [[nodiscard]] double tv_distance() const {
    const double n = static_cast<double>(total_);
    const double width = (hi_ - lo_) / static_cast<double>(counts_.size());
    double tv = 0.0;
    double inside_model = 0.0;
    for (std::size_t b = 0; b < counts_.size(); ++b) {
      const double a = lo_ + width * static_cast<double>(b);
      const double p = std_normal_cdf((a + width - mean_) / sd_) - std_normal_cdf((a - mean_) / sd_);
      inside_model += p;
      tv += std::abs(static_cast<double>(counts_[b]) / n - p);
    }
    tv += std::abs(static_cast<double>(outside_) / n - (1.0 - inside_model));
    return 0.5 * tv;
  }

 private:
  double lo_, hi_, mean_, sd_;
  std::vector<std::size_t> counts_;
  std::size_t total_ = 0;
  std::size_t outside_ = 0;
};

// Minimum of ||J_theta|| / pi over a grid x grid slice: theta_0 - theta*_0 and v_0 each span
// [-1, 1], other coordinates sit at (theta*, 0). Points with ||v|| < 0.1 are skipped.
inline void current_grid(const LangevinConfig& cfg, const QuadraticPotential& pot, std::size_t grid,
                         LangevinReport& report) {
  require(grid >= 2, "current grid needs at least 2 points per axis");
  const PhaseDensity density = [&](const Eigen::VectorXd& th, const Eigen::VectorXd& v) {
    return steady_state_density(th, v, cfg.friction(), cfg.dt(), pot);
  };
  report.min_current_ratio = std::numeric_limits<double>::infinity();
  report.min_current_norm = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid; ++i) {
    for (std::size_t j = 0; j < grid; ++j) {
      Eigen::VectorXd theta = pot.minimizer();
      Eigen::VectorXd v = Eigen::VectorXd::Zero(pot.dim());
      theta[0] += -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(grid - 1);
      v[0] = -1.0 + 2.0 * static_cast<double>(j) / static_cast<double>(grid - 1);
      if (v.norm() < 0.1 - 1e-12) continue;
      ++report.grid_points;
      const double pi = density(theta, v);
      if (pi < 1e-300) {
        ++report.underflow_points;
        continue;
      }
      const ProbabilityCurrent j_cur = probability_current(theta, v, cfg, pot, density);
      report.min_current_ratio = std::min(report.min_current_ratio, j_cur.position.norm() / pi);
      report.min_current_norm = std::min(report.min_current_norm, j_cur.position.norm());
    }
  }
}

inline LangevinReport langevin_campaign(const LangevinSettings& s, const TrajectoryObserver& trajectory = {}) {
  require(!s.hessian_diag.empty(), "Hessian diagonal must not be empty");
  const auto d = static_cast<Eigen::Index>(s.hessian_diag.size());
  Eigen::VectorXd diag(d);
  for (Eigen::Index i = 0; i < d; ++i) diag[i] = s.hessian_diag[static_cast<std::size_t>(i)];
  const QuadraticPotential pot(Eigen::VectorXd::Zero(d), diag.asDiagonal().toDenseMatrix());

  LangevinReport report;
  report.settings = s;
  report.analytic = analytic_covariances(s.friction, s.dt, pot);

  const auto cfg = LangevinConfig::from_noise_covariance(s.mass, s.friction, s.dt, pot.hessian());
  const double sd = std::sqrt(s.dt / (2.0 * s.friction));
  std::vector<MarginalHistogram> hists;
  for (Eigen::Index i = 0; i < d; ++i) hists.emplace_back(pot.minimizer()[i], sd, tv_histogram_bins);
  const PhaseState start{pot.minimizer(), Eigen::VectorXd::Zero(d)};
  report.empirical = simulate(cfg, pot, start, s.steps, s.burn_in, s.seed, [&](std::size_t step, const PhaseState& st) {
    for (Eigen::Index i = 0; i < d; ++i) hists[static_cast<std::size_t>(i)].add(st.position[i]);
    if (trajectory) trajectory(step, st);
  });
  report.rel_error_cov_position =
      (report.empirical.cov_position - report.analytic.position).norm() / report.analytic.position.norm();
  report.rel_error_cov_velocity =
      (report.empirical.cov_velocity - report.analytic.velocity).norm() / report.analytic.velocity.norm();
  for (const auto& h : hists) report.tv_distance_position.push_back(h.tv_distance());

  current_grid(cfg, pot, s.grid, report);

  const LangevinConfig still(s.mass, s.friction, s.dt, Eigen::MatrixXd::Zero(d, d));
  const SimulationMoments rest = simulate(still, pot, start, 1000, 0, s.seed);
  report.fixed_point_drift = std::max((rest.final_state.position - pot.minimizer()).cwiseAbs().maxCoeff(),
                                      rest.final_state.velocity.cwiseAbs().maxCoeff());
  return report;
}

}  // namespace sgnlab

#endif  // SGNLAB_EXPERIMENT_HPP
