#ifndef SGNLAB_CONFIG_HPP
#define SGNLAB_CONFIG_HPP

// Experiment configuration in a sectioned key = value text format:
//
//   [net]
//   layers = 32, 64, 64, 64, 10
//   activations = relu, relu, relu, identity
//   loss = cross_entropy
//
// Missing keys take the defaults below; unknown sections or keys are rejected.
// `to_text` emits a canonical form (fixed section order, sorted keys, 17-digit reals)
// that parses back to an equal configuration and feeds the config hash.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "sgnlab/dataset.hpp"
#include "sgnlab/error.hpp"
#include "sgnlab/net.hpp"
#include "sgnlab/noise.hpp"
#include "sgnlab/numeric.hpp"

namespace sgnlab {

enum class DataKind { synthetic, idx, csv };

struct DataConfig {
  DataKind kind = DataKind::synthetic;
  std::size_t classes = 10;
  std::size_t dim = 32;
  std::size_t n = 4096;
  double separation = 1.0;
  std::uint64_t seed = 7;
  std::string images;  // idx
  std::string labels;  // idx
  std::string path;    // csv

  [[nodiscard]] DataSource source() const {
    switch (kind) {
      case DataKind::idx:
        return IdxSource{images, labels, classes};
      case DataKind::csv:
        return CsvSource{path, classes};
      case DataKind::synthetic:
        break;
    }
    return SyntheticSource{classes, dim, n, separation, seed};
  }

  friend bool operator==(const DataConfig&, const DataConfig&) = default;
};

struct TrainConfig {
  std::size_t epochs = 30;
  double learning_rate = 0.05;
  std::size_t lr_drop_epoch = 20;  // 0 disables the drop
  double lr_drop_factor = 0.1;
  double momentum = 0.9;
  std::size_t batch_size = 128;
  double weight_decay = 5e-4;
  std::uint64_t seed = 1;
  std::vector<std::size_t> checkpoints{30};

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct ProbeSettings {
  std::size_t checkpoint = 30;  // epoch whose parameters are probed
  std::vector<std::size_t> batch_sizes{16, 64, 256, 512};
  std::size_t n_draws = 200;
  std::size_t max_coords_per_layer = 4096;
  Sampling sampling = Sampling::without_replacement;
  bool include_bias = false;
  std::uint64_t seed = 11;

  friend bool operator==(const ProbeSettings&, const ProbeSettings&) = default;
};

struct StatsSettings {
  double alpha_level = 0.05;
  std::size_t sw_subsample_cap = 2000;
  std::uint64_t seed = 13;

  friend bool operator==(const StatsSettings&, const StatsSettings&) = default;
};

struct LangevinSettings {
  double mass = 1.0;
  double friction = 1.0;
  double dt = 0.01;
  std::vector<double> hessian_diag{1.0, 4.0};
  std::size_t steps = 1'000'000;
  std::size_t burn_in = 100'000;
  std::uint64_t seed = 17;
  std::size_t grid = 21;
  std::size_t trajectory_stride = 0;  // 0 disables the trajectory CSV

  friend bool operator==(const LangevinSettings&, const LangevinSettings&) = default;
};

struct ExperimentConfig {
  NetSpec net{{32, 64, 64, 64, 10},
              {{Activation::relu}, {Activation::relu}, {Activation::relu}, {Activation::identity}},
              LossKind::cross_entropy};
  DataConfig data;
  TrainConfig train;
  ProbeSettings probe;
  StatsSettings stats;
  LangevinSettings langevin;
  std::string output_dir = "out";

  void validate() const {
    net.validate();
    require(data.classes >= 2, "data.classes must be at least 2");
    require(net.output_dim() == data.classes || net.loss == LossKind::mse,
            "network output dimension must equal data.classes for cross-entropy");
    if (data.kind == DataKind::synthetic)
      require(net.input_dim() == data.dim, "network input dimension must equal data.dim");
    require(train.batch_size > 0, "train.batch_size must be positive");
    require(train.learning_rate >= 0.0, "train.learning_rate must be non-negative");
    require(train.momentum >= 0.0 && train.momentum < 1.0, "train.momentum must lie in [0, 1)");
    require(train.weight_decay >= 0.0, "train.weight_decay must be non-negative");
    require(std::all_of(train.checkpoints.begin(), train.checkpoints.end(),
                        [&](std::size_t e) { return e <= train.epochs; }),
            "train.checkpoints must not exceed train.epochs");
    require(!probe.batch_sizes.empty(), "probe.batch_sizes must not be empty");
    require(probe.n_draws >= 3, "probe.n_draws must be at least 3");
    require(stats.alpha_level > 0.0 && stats.alpha_level < 1.0, "stats.alpha_level must lie in (0, 1)");
    require(stats.sw_subsample_cap >= 3 && stats.sw_subsample_cap <= 5000,
            "stats.sw_subsample_cap must lie in [3, 5000]");
    require(langevin.friction > 0.0 && langevin.dt > 0.0 && langevin.mass > 0.0,
            "langevin mass, friction and dt must be positive");
    require(!langevin.hessian_diag.empty(), "langevin.hessian_diag must not be empty");
    require(langevin.steps > langevin.burn_in, "langevin.steps must exceed langevin.burn_in");
  }

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

namespace detail {

inline std::string real_text(double x) {
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

template <typename T, typename F>
std::string join(const std::vector<T>& xs, F&& fmt) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? ", " : "") + fmt(xs[i]);
  return out;
}

inline std::string activation_text(const ActivationSpec& a) {
  switch (a.kind) {
    case Activation::relu:
      return "relu";
    case Activation::leaky_relu:
      return "leaky_relu:" + real_text(a.slope);
    case Activation::sigmoid:
      return "sigmoid";
    case Activation::tanh:
      return "tanh";
    case Activation::softplus:
      return "softplus";
    case Activation::identity:
      return "identity";
  }
  return "identity";
}

// Reads typed values out of one section, remembering which keys were consumed.
class SectionReader {
 public:
  SectionReader(const boost::property_tree::ptree& tree, std::string name) : name_(std::move(name)) {
    if (const auto child = tree.get_child_optional(name_)) section_ = *child;
  }

  [[nodiscard]] const std::string* raw(const std::string& key) {
    used_.push_back(key);
    const auto it = section_.find(key);
    return it == section_.not_found() ? nullptr : &it->second.data();
  }

  void text(const std::string& key, std::string& out) {
    if (const auto* v = raw(key)) out = *v;
  }

  template <typename T>
  void number(const std::string& key, T& out) {
    if (const auto* v = raw(key)) out = parse<T>(key, *v);
  }

  template <typename T>
  void list(const std::string& key, std::vector<T>& out) {
    const auto* v = raw(key);
    if (!v) return;
    out.clear();
    std::stringstream ss(*v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse<T>(key, trim(item)));
  }

  void flag(const std::string& key, bool& out) {
    const auto* v = raw(key);
    if (!v) return;
    if (*v == "true" || *v == "1") {
      out = true;
    } else if (*v == "false" || *v == "0") {
      out = false;
    } else {
      fail(key, *v);
    }
  }

  void check_unknown() const {
    for (const auto& [key, _] : section_)
      if (std::find(used_.begin(), used_.end(), key) == used_.end())
        throw ValidationError("unknown configuration key " + name_ + "." + key);
  }

  [[noreturn]] void fail(const std::string& key, const std::string& value) const {
    throw ValidationError("invalid value \"" + value + "\" for " + name_ + "." + key);
  }

  static std::string trim(std::string s) {
    s.erase(0, s.find_first_not_of(" \t"));
    s.erase(s.find_last_not_of(" \t") + 1);
    return s;
  }

 private:
  template <typename T>
  T parse(const std::string& key, const std::string& text) const {
    try {
      std::size_t used = 0;
      if constexpr (std::is_floating_point_v<T>) {
        const double v = std::stod(text, &used);
        if (used == text.size()) return v;
      } else {
        if (!text.empty() && text.front() != '-') {
          const unsigned long long v = std::stoull(text, &used);
          if (used == text.size()) return static_cast<T>(v);
        }
      }
    } catch (const std::logic_error&) {
    }
    fail(key, text);
  }

  std::string name_;
  boost::property_tree::ptree section_;
  std::vector<std::string> used_;
};

inline ActivationSpec parse_activation(const std::string& text) {
  const std::string name = text.substr(0, text.find(':'));
  if (name == "relu") return {Activation::relu};
  if (name == "sigmoid") return {Activation::sigmoid};
  if (name == "tanh") return {Activation::tanh};
  if (name == "softplus") return {Activation::softplus};
  if (name == "identity") return {Activation::identity};
  if (name == "leaky_relu") {
    ActivationSpec a{Activation::leaky_relu};
    if (const auto colon = text.find(':'); colon != std::string::npos) {
      try {
        a.slope = std::stod(text.substr(colon + 1));
      } catch (const std::logic_error&) {
        throw ValidationError("invalid LeakyReLU slope in \"" + text + "\"");
      }
    }
    return a;
  }
  throw ValidationError("unknown activation \"" + text + "\"");
}

}  // namespace detail

inline ExperimentConfig parse_config(std::istream& is) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(is, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ValidationError("configuration syntax error at line " + std::to_string(e.line()) + ": " + e.message());
  }
  static const std::vector<std::string> sections{"net", "data", "train", "probe", "stats", "langevin", "output"};
  for (const auto& [name, child] : tree) {
    if (std::find(sections.begin(), sections.end(), name) == sections.end())
      throw ValidationError("unknown configuration section [" + name + "]");
    if (child.empty() && !child.data().empty()) throw ValidationError("key \"" + name + "\" outside any section");
  }

  ExperimentConfig cfg;
  {
    detail::SectionReader r(tree, "net");
    r.list("layers", cfg.net.layer_sizes);
    if (const auto* v = r.raw("activations")) {
      cfg.net.activations.clear();
      std::stringstream ss(*v);
      std::string item;
      while (std::getline(ss, item, ',')) cfg.net.activations.push_back(detail::parse_activation(detail::SectionReader::trim(item)));
    }
    if (const auto* v = r.raw("loss")) {
      if (*v == "mse") {
        cfg.net.loss = LossKind::mse;
      } else if (*v == "cross_entropy") {
        cfg.net.loss = LossKind::cross_entropy;
      } else {
        r.fail("loss", *v);
      }
    }
    r.check_unknown();
  }
  {
    detail::SectionReader r(tree, "data");
    if (const auto* v = r.raw("source")) {
      if (*v == "synthetic") {
        cfg.data.kind = DataKind::synthetic;
      } else if (*v == "idx") {
        cfg.data.kind = DataKind::idx;
      } else if (*v == "csv") {
        cfg.data.kind = DataKind::csv;
      } else {
        r.fail("source", *v);
      }
    }
    r.number("classes", cfg.data.classes);
    r.number("dim", cfg.data.dim);
    r.number("n", cfg.data.n);
    r.number("separation", cfg.data.separation);
    r.number("seed", cfg.data.seed);
    r.text("images", cfg.data.images);
    r.text("labels", cfg.data.labels);
    r.text("path", cfg.data.path);
    r.check_unknown();
  }
  {
    detail::SectionReader r(tree, "train");
    r.number("epochs", cfg.train.epochs);
    r.number("learning_rate", cfg.train.learning_rate);
    r.number("lr_drop_epoch", cfg.train.lr_drop_epoch);
    r.number("lr_drop_factor", cfg.train.lr_drop_factor);
    r.number("momentum", cfg.train.momentum);
    r.number("batch_size", cfg.train.batch_size);
    r.number("weight_decay", cfg.train.weight_decay);
    r.number("seed", cfg.train.seed);
    r.list("checkpoints", cfg.train.checkpoints);
    r.check_unknown();
  }
  {
    detail::SectionReader r(tree, "probe");
    r.number("checkpoint", cfg.probe.checkpoint);
    r.list("batch_sizes", cfg.probe.batch_sizes);
    r.number("n_draws", cfg.probe.n_draws);
    r.number("max_coords_per_layer", cfg.probe.max_coords_per_layer);
    if (const auto* v = r.raw("sampling")) {
      if (*v == "with_replacement") {
        cfg.probe.sampling = Sampling::with_replacement;
      } else if (*v == "without_replacement") {
        cfg.probe.sampling = Sampling::without_replacement;
      } else {
        r.fail("sampling", *v);
      }
    }
    r.flag("include_bias", cfg.probe.include_bias);
    r.number("seed", cfg.probe.seed);
    r.check_unknown();
  }
  {
    detail::SectionReader r(tree, "stats");
    r.number("alpha_level", cfg.stats.alpha_level);
    r.number("sw_subsample_cap", cfg.stats.sw_subsample_cap);
    r.number("seed", cfg.stats.seed);
    r.check_unknown();
  }
  {
    detail::SectionReader r(tree, "langevin");
    r.number("mass", cfg.langevin.mass);
    r.number("friction", cfg.langevin.friction);
    r.number("dt", cfg.langevin.dt);
    r.list("hessian_diag", cfg.langevin.hessian_diag);
    r.number("steps", cfg.langevin.steps);
    r.number("burn_in", cfg.langevin.burn_in);
    r.number("seed", cfg.langevin.seed);
    r.number("grid", cfg.langevin.grid);
    r.number("trajectory_stride", cfg.langevin.trajectory_stride);
    r.check_unknown();
  }
  {
    detail::SectionReader r(tree, "output");
    r.text("dir", cfg.output_dir);
    r.check_unknown();
  }
  cfg.validate();
  return cfg;
}

inline ExperimentConfig parse_config(const std::string& text) {
  std::istringstream is(text);
  return parse_config(is);
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open configuration file " + path);
  return parse_config(f);
}

inline std::string to_text(const ExperimentConfig& cfg) {
  using detail::join;
  using detail::real_text;
  const auto num = [](auto x) { return std::to_string(x); };
  std::ostringstream os;
  const auto section = [&](const std::string& name, const std::map<std::string, std::string>& kv) {
    os << '[' << name << "]\n";
    for (const auto& [k, v] : kv) os << k << " = " << v << '\n';
    os << '\n';
  };
  section("net", {{"activations", join(cfg.net.activations, detail::activation_text)},
                  {"layers", join(cfg.net.layer_sizes, num)},
                  {"loss", cfg.net.loss == LossKind::mse ? "mse" : "cross_entropy"}});
  const char* kinds[] = {"synthetic", "idx", "csv"};
  section("data", {{"classes", num(cfg.data.classes)},
                   {"dim", num(cfg.data.dim)},
                   {"images", cfg.data.images},
                   {"labels", cfg.data.labels},
                   {"n", num(cfg.data.n)},
                   {"path", cfg.data.path},
                   {"seed", num(cfg.data.seed)},
                   {"separation", real_text(cfg.data.separation)},
                   {"source", kinds[static_cast<int>(cfg.data.kind)]}});
  section("train", {{"batch_size", num(cfg.train.batch_size)},
                    {"checkpoints", join(cfg.train.checkpoints, num)},
                    {"epochs", num(cfg.train.epochs)},
                    {"learning_rate", real_text(cfg.train.learning_rate)},
                    {"lr_drop_epoch", num(cfg.train.lr_drop_epoch)},
                    {"lr_drop_factor", real_text(cfg.train.lr_drop_factor)},
                    {"momentum", real_text(cfg.train.momentum)},
                    {"seed", num(cfg.train.seed)},
                    {"weight_decay", real_text(cfg.train.weight_decay)}});
  section("probe", {{"batch_sizes", join(cfg.probe.batch_sizes, num)},
                    {"checkpoint", num(cfg.probe.checkpoint)},
                    {"include_bias", cfg.probe.include_bias ? "true" : "false"},
                    {"max_coords_per_layer", num(cfg.probe.max_coords_per_layer)},
                    {"n_draws", num(cfg.probe.n_draws)},
                    {"sampling", cfg.probe.sampling == Sampling::with_replacement ? "with_replacement"
                                                                                  : "without_replacement"},
                    {"seed", num(cfg.probe.seed)}});
  section("stats", {{"alpha_level", real_text(cfg.stats.alpha_level)},
                    {"seed", num(cfg.stats.seed)},
                    {"sw_subsample_cap", num(cfg.stats.sw_subsample_cap)}});
  section("langevin", {{"burn_in", num(cfg.langevin.burn_in)},
                       {"dt", real_text(cfg.langevin.dt)},
                       {"friction", real_text(cfg.langevin.friction)},
                       {"grid", num(cfg.langevin.grid)},
                       {"hessian_diag", join(cfg.langevin.hessian_diag, real_text)},
                       {"mass", real_text(cfg.langevin.mass)},
                       {"seed", num(cfg.langevin.seed)},
                       {"steps", num(cfg.langevin.steps)},
                       {"trajectory_stride", num(cfg.langevin.trajectory_stride)}});
  section("output", {{"dir", cfg.output_dir}});
  return os.str();
}

// Hash of the canonical text, excluding the output directory (it does not affect results).
inline std::uint64_t config_hash(const ExperimentConfig& cfg) {
  ExperimentConfig c = cfg;
  c.output_dir.clear();
  Fnv1a h;
  h.update(to_text(c));
  return h.digest();
}

inline std::string hash_hex(std::uint64_t h) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

}  // namespace sgnlab

#endif  // SGNLAB_CONFIG_HPP
