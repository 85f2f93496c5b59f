// sgnlab: train a small MLP, probe its gradient noise, and report on Gaussianity,
// moment bounds, tail indices and the Langevin steady state.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sgnlab/config.hpp"
#include "sgnlab/dataset.hpp"
#include "sgnlab/error.hpp"
#include "sgnlab/experiment.hpp"
#include "sgnlab/noise.hpp"
#include "sgnlab/report.hpp"

namespace fs = std::filesystem;
using namespace sgnlab;

namespace {

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::size_t workers = 1;
};

ExperimentConfig resolve_config(const Options& opt) {
  ExperimentConfig cfg = opt.config_path.empty() ? ExperimentConfig{} : load_config(opt.config_path);
  if (opt.seed) {
    cfg.data.seed = cfg.train.seed = cfg.probe.seed = cfg.stats.seed = cfg.langevin.seed = *opt.seed;
  }
  if (opt.out) cfg.output_dir = *opt.out;
  cfg.validate();
  return cfg;
}

// Reads back the per-epoch log written next to the checkpoints; reals were printed with
// 17 significant digits, so the values round-trip exactly.
std::vector<EpochStats> read_training_log(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("checkpoint found but its training log " + path.string() + " is missing");
  std::vector<EpochStats> log;
  std::string line;
  std::getline(f, line);
  while (std::getline(f, line)) {
    EpochStats e;
    char c1 = 0, c2 = 0, c3 = 0;
    std::istringstream is(line);
    if (!(is >> e.epoch >> c1 >> e.learning_rate >> c2 >> e.loss >> c3 >> e.accuracy))
      throw ValidationError("malformed training log line in " + path.string() + ": " + line);
    log.push_back(e);
  }
  return log;
}

// Stages share artifacts through the output directory: a stage reuses the files an
// earlier stage wrote for the same configuration and recomputes whatever is missing.
class Pipeline {
 public:
  Pipeline(ExperimentConfig cfg, std::size_t workers)
      : cfg_(std::move(cfg)), workers_(workers), dir_(cfg_.output_dir), tag_(hash_hex(config_hash(cfg_))) {
    report_.config = cfg_;
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw IoError("cannot create output directory " + dir_.string() + ": " + ec.message());
  }

  void train() {
    ExperimentConfig run = cfg_;
    auto& cps = run.train.checkpoints;
    if (std::find(cps.begin(), cps.end(), cfg_.probe.checkpoint) == cps.end()) cps.push_back(cfg_.probe.checkpoint);
    const TrainingResult result = sgnlab::train(run, data());
    report_.training = result.log;
    for (const auto& c : result.checkpoints) {
      const auto path = checkpoint_path(c.epoch);
      std::ofstream f(path, std::ios::binary);
      if (!f) throw IoError("cannot open " + path.string() + " for writing");
      write_checkpoint(c, f);
      if (c.epoch == cfg_.probe.checkpoint) checkpoint_ = c;
    }
    std::ofstream log(log_path());
    if (!(log << training_csv(result.log))) throw IoError("failed writing " + log_path().string());
  }

  const ProbeRun& probe() {
    if (probe_) return *probe_;
    const Checkpoint& frozen = checkpoint();
    ProbeRun run;
    run.checkpoint = cfg_.probe.checkpoint;
    run.coordinates = select_coordinates(cfg_.net, cfg_.probe.max_coords_per_layer, cfg_.probe.seed,
                                         cfg_.probe.include_bias);
    bool cached = true;
    for (std::size_t bs : cfg_.probe.batch_sizes) {
      std::ifstream f(noise_path(bs), std::ios::binary);
      if (!f) {
        cached = false;
        break;
      }
      NoiseSampleSet set = read_binary(f);
      if (set.n_coordinates() != run.coordinates.size() || set.n_draws() != cfg_.probe.n_draws)
        throw ValidationError("stale noise file " + noise_path(bs).string() + " does not match the configuration");
      set.coordinates = run.coordinates;
      run.sets.push_back(std::move(set));
    }
    if (!cached) {
      run = probe_sweep(cfg_, frozen, data(), workers_);
      for (const auto& set : run.sets) {
        const auto path = noise_path(set.batch_size);
        std::ofstream f(path, std::ios::binary);
        if (!f) throw IoError("cannot open " + path.string() + " for writing");
        write_binary(set, f);
      }
    }
    probe_ = std::move(run);
    return *probe_;
  }

  void gaussianity() {
    if (!report_.gaussianity) report_.gaussianity = gaussianity_sweep(cfg_, probe(), workers_);
  }

  void bounds() {
    gaussianity();
    report_.bounds = bound_sweep(cfg_, probe(), *report_.gaussianity, workers_);
  }

  void tail_index() { report_.tail_index = tail_index_sweep(probe(), workers_); }

  void langevin() {
    const auto& s = cfg_.langevin;
    if (s.trajectory_stride == 0) {
      report_.langevin = langevin_campaign(s);
      return;
    }
    const auto path = dir_ / ("trajectory-" + tag_ + ".csv");
    std::ofstream f(path);
    if (!f) throw IoError("cannot open " + path.string() + " for writing");
    TrajectoryCsvWriter writer(f, static_cast<Eigen::Index>(s.hessian_diag.size()), s.trajectory_stride);
    report_.langevin = langevin_campaign(s, [&](std::size_t step, const PhaseState& st) { writer(step, st); });
    if (!f) throw IoError("failed writing " + path.string());
  }

  void emit() {
    for (const auto& p : emit_report(report_, dir_).paths) std::cout << p.string() << '\n';
  }

 private:
  const Dataset& data() {
    if (!data_) data_ = load_dataset(cfg_.data.source());
    return *data_;
  }

  const Checkpoint& checkpoint() {
    if (checkpoint_) return *checkpoint_;
    std::ifstream f(checkpoint_path(cfg_.probe.checkpoint), std::ios::binary);
    if (f) {
      checkpoint_ = read_checkpoint(f, cfg_.net);
      report_.training = read_training_log(log_path());
    } else {
      train();
    }
    return *checkpoint_;
  }

  fs::path checkpoint_path(std::size_t epoch) const {
    return dir_ / ("params-" + tag_ + "-e" + std::to_string(epoch) + ".bin");
  }

  fs::path log_path() const { return dir_ / ("training-" + tag_ + ".csv"); }

  fs::path noise_path(std::size_t batch_size) const {
    return dir_ / ("noise-" + tag_ + "-b" + std::to_string(batch_size) + ".sgnl");
  }

  ExperimentConfig cfg_;
  std::size_t workers_;
  fs::path dir_;
  std::string tag_;
  ExperimentReport report_;
  std::optional<Dataset> data_;
  std::optional<Checkpoint> checkpoint_;
  std::optional<ProbeRun> probe_;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gradient-noise Gaussianity experiments and Langevin steady-state checks"};
  app.require_subcommand(1);
  Options opt;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config_path, "configuration file (INI sections)");
    sub->add_option("--seed", opt.seed, "override every seed in the configuration");
    sub->add_option("--out", opt.out, "output directory (overrides output_dir)");
    sub->add_option("--workers", opt.workers, "worker threads for the sweeps")->check(CLI::Range(1, 256));
  };

  struct Command {
    const char* name;
    const char* help;
  };
  const std::vector<Command> commands{
      {"train", "train the network and save checkpoints"},
      {"probe", "sample gradient noise at the probed checkpoint for every batch size"},
      {"gaussianity", "Shapiro-Wilk Gaussianity percentages per layer and batch size"},
      {"bounds", "distribution of the moment ratios per layer and batch size"},
      {"tailindex", "tail-index estimates per layer and batch size"},
      {"langevin", "simulate the Langevin dynamics and compare with the steady state"},
      {"report", "run every stage and write the full report"},
  };
  for (const auto& c : commands) add_common(app.add_subcommand(c.name, c.help));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ExitCode::validation);
  }

  try {
    Pipeline p(resolve_config(opt), opt.workers);
    const std::string cmd = app.get_subcommands().front()->get_name();
    if (cmd == "train") {
      p.train();
    } else if (cmd == "probe") {
      p.probe();
    } else if (cmd == "gaussianity") {
      p.gaussianity();
    } else if (cmd == "bounds") {
      p.bounds();
    } else if (cmd == "tailindex") {
      p.tail_index();
    } else if (cmd == "langevin") {
      p.langevin();
    } else {
      p.bounds();
      p.tail_index();
      p.langevin();
    }
    p.emit();
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(e.exit_code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::numerical);
  }
}
