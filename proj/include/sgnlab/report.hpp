#ifndef SGNLAB_REPORT_HPP
#define SGNLAB_REPORT_HPP

// Report emission: schema-versioned JSON, CSV tables, and minimal SVG plots. All file
// names derive from the config hash, and identical reports serialize to identical bytes.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sgnlab/config.hpp"
#include "sgnlab/error.hpp"
#include "sgnlab/experiment.hpp"
#include "sgnlab/stats.hpp"

namespace sgnlab {

inline constexpr const char* report_schema = "sgnlab-report/1";


struct ExperimentReport {
  ExperimentConfig config;
  std::vector<EpochStats> training;
  std::optional<GaussianityReport> gaussianity;
  std::optional<BoundReport> bounds;
  std::vector<TailIndexCell> tail_index;
  std::optional<LangevinReport> langevin;
};

// Every stage in memory: train, probe the configured checkpoint, then the Gaussianity,
// moment-bound, tail-index and Langevin sections.
inline ExperimentReport run_experiment(const ExperimentConfig& cfg, std::size_t workers = 1) {
  cfg.validate();
  ExperimentReport report;
  report.config = cfg;
  ExperimentConfig run = cfg;
  auto& cps = run.train.checkpoints;
  if (std::find(cps.begin(), cps.end(), cfg.probe.checkpoint) == cps.end()) cps.push_back(cfg.probe.checkpoint);

  const Dataset data = load_dataset(cfg.data.source());
  const TrainingResult trained = train(run, data);
  report.training = trained.log;
  const ProbeRun probe = probe_sweep(cfg, trained.at_epoch(cfg.probe.checkpoint), data, workers);
  report.gaussianity = gaussianity_sweep(cfg, probe, workers);
  report.bounds = bound_sweep(cfg, probe, *report.gaussianity, workers);
  report.tail_index = tail_index_sweep(probe, workers);
  report.langevin = langevin_campaign(cfg.langevin);
  return report;
}

namespace detail {

inline nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
  auto rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    auto row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

inline nlohmann::json vector_json(const Eigen::VectorXd& v) {
  auto out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

inline nlohmann::json histogram_json(const Histogram& h) {
  return {{"lo", h.lo}, {"hi", h.hi}, {"counts", h.counts}};
}

}  // namespace detail

// Object keys come out sorted (nlohmann's default map); NaN becomes null.
inline nlohmann::json to_json(const ExperimentReport& r) {
  nlohmann::json j;
  j["schema"] = report_schema;
  j["config_hash"] = hash_hex(config_hash(r.config));
  ExperimentConfig canonical = r.config;
  canonical.output_dir.clear();
  j["config"] = to_text(canonical);
  j["seeds"] = {{"data", r.config.data.seed},
                {"train", r.config.train.seed},
                {"probe", r.config.probe.seed},
                {"stats", r.config.stats.seed},
                {"langevin", r.config.langevin.seed}};

  auto training = nlohmann::json::array();
  for (const auto& e : r.training)
    training.push_back({{"epoch", e.epoch}, {"learning_rate", e.learning_rate}, {"loss", e.loss}, {"accuracy", e.accuracy}});
  j["training"] = training;

  if (r.gaussianity) {
    auto cells = nlohmann::json::array();
    for (const auto& c : r.gaussianity->cells)
      cells.push_back({{"layer", c.layer + 1},
                       {"batch_size", c.batch_size},
                       {"checkpoint", c.checkpoint},
                       {"gaussian", c.gaussian},
                       {"dirac", c.dirac},
                       {"non_gaussian", c.non_gaussian},
                       {"tested", c.tested()},
                       {"percentage", c.percentage()}});
    j["gaussianity"] = {{"n_draws", r.gaussianity->n_draws}, {"alpha_level", r.gaussianity->alpha_level}, {"cells", cells}};
  }
  if (r.bounds) {
    auto cells = nlohmann::json::array();
    for (const auto& c : r.bounds->cells)
      cells.push_back({{"layer", c.layer + 1},
                       {"batch_size", c.batch_size},
                       {"checkpoint", c.checkpoint},
                       {"tested", c.tested},
                       {"dirac", c.dirac},
                       {"gaussian_percentage", c.gaussian_percentage},
                       {"median_beta_ratio", c.median_beta_ratio},
                       {"beta_ratio_quantiles", c.beta_ratio_quantiles},
                       {"kurtosis_bound_quantiles", c.kurtosis_bound_quantiles},
                       {"spine_beta_ratio", c.spine_beta_ratio},
                       {"spine_kurtosis_bound", c.spine_kurtosis_bound},
                       {"beta_ratio_histogram", detail::histogram_json(c.beta_ratio_hist)},
                       {"kurtosis_bound_histogram", detail::histogram_json(c.kurtosis_bound_hist)}});
    j["bounds"] = {{"quantile_levels", reported_quantile_levels()}, {"cells", cells}};
  }
  if (!r.tail_index.empty()) {
    auto cells = nlohmann::json::array();
    for (const auto& c : r.tail_index)
      cells.push_back({{"layer", c.layer + 1},
                       {"batch_size", c.batch_size},
                       {"tested", c.tested},
                       {"median_alpha", c.median_alpha},
                       {"dirac", c.dirac},
                       {"fraction_below_threshold", c.fraction_below}});
    j["tail_index"] = {{"method", "mcculloch-quantile"}, {"threshold", tail_heavy_threshold}, {"cells", cells}};
  }
  if (r.langevin) {
    const auto& l = *r.langevin;
    j["langevin"] = {
        {"friction", l.settings.friction},
        {"dt", l.settings.dt},
        {"mass", l.settings.mass},
        {"hessian_diag", l.settings.hessian_diag},
        {"steps", l.settings.steps},
        {"burn_in", l.settings.burn_in},
        {"samples", l.empirical.samples},
        {"analytic_cov_position", detail::matrix_json(l.analytic.position)},
        {"analytic_cov_velocity", detail::matrix_json(l.analytic.velocity)},
        {"empirical_cov_position", detail::matrix_json(l.empirical.cov_position)},
        {"empirical_cov_velocity", detail::matrix_json(l.empirical.cov_velocity)},
        {"empirical_mean_position", detail::vector_json(l.empirical.mean_position)},
        {"stderr_mean_position", detail::vector_json(l.empirical.stderr_mean_position)},
        {"skew_velocity", detail::vector_json(l.empirical.skew_velocity)},
        {"rel_error_cov_position", l.rel_error_cov_position},
        {"rel_error_cov_velocity", l.rel_error_cov_velocity},
        {"tv_distance_position", l.tv_distance_position},
        {"min_current_ratio", l.min_current_ratio},
        {"min_current_norm", l.min_current_norm},
        {"grid_points", l.grid_points},
        {"underflow_points", l.underflow_points},
        {"fixed_point_drift", l.fixed_point_drift}};
  }
  return j;
}

// ---------------------------------------------------------------------------
// SVG

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

namespace detail {

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

inline std::string fmt(double x, int precision = 4) {
  std::ostringstream os;
  os << std::setprecision(precision) << x;
  return os.str();
}

}  // namespace detail

// Line plot with labelled axes, min/max tick labels, and a legend.
inline std::string svg_line_plot(const std::string& title, const std::string& x_label, const std::string& y_label,
                                 const std::vector<Series>& series, bool step = false) {
  constexpr double width = 640, height = 420, left = 70, right = 170, top = 40, bottom = 60;
  const double plot_w = width - left - right, plot_h = height - top - bottom;
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& s : series) {
    for (double x : s.x)
      if (std::isfinite(x)) x0 = std::min(x0, x), x1 = std::max(x1, x);
    for (double y : s.y)
      if (std::isfinite(y)) y0 = std::min(y0, y), y1 = std::max(y1, y);
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 <= x0) x1 = x0 + 1;
  if (y1 <= y0) y1 = y0 + 1;
  const auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * plot_w; };
  const auto py = [&](double y) { return top + plot_h - (y - y0) / (y1 - y0) * plot_h; };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};

  std::ostringstream os;
  using detail::fmt;
  using detail::xml_escape;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" viewBox=\"0 0 " << width << ' ' << height << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << xml_escape(title)
     << "</text>\n"
     << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << plot_w << "\" height=\"" << plot_h
     << "\" fill=\"none\" stroke=\"black\"/>\n"
     << "<text x=\"" << left + plot_w / 2 << "\" y=\"" << height - 15 << "\" text-anchor=\"middle\">"
     << xml_escape(x_label) << "</text>\n"
     << "<text x=\"18\" y=\"" << top + plot_h / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
     << top + plot_h / 2 << ")\">" << xml_escape(y_label) << "</text>\n"
     << "<text x=\"" << left << "\" y=\"" << top + plot_h + 16 << "\" text-anchor=\"middle\">" << fmt(x0)
     << "</text>\n"
     << "<text x=\"" << left + plot_w << "\" y=\"" << top + plot_h + 16 << "\" text-anchor=\"middle\">" << fmt(x1)
     << "</text>\n"
     << "<text x=\"" << left - 6 << "\" y=\"" << top + plot_h << "\" text-anchor=\"end\">" << fmt(y0) << "</text>\n"
     << "<text x=\"" << left - 6 << "\" y=\"" << top + 4 << "\" text-anchor=\"end\">" << fmt(y1) << "</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = colors[k % std::size(colors)];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      if (step && i > 0) os << fmt(px(s.x[i]), 6) << ',' << fmt(py(s.y[i - 1]), 6) << ' ';
      os << fmt(px(s.x[i]), 6) << ',' << fmt(py(s.y[i]), 6) << ' ';
    }
    os << "\"/>\n";
    const double ly = top + 14 + 18 * static_cast<double>(k);
    os << "<line x1=\"" << width - right + 12 << "\" y1=\"" << ly - 4 << "\" x2=\"" << width - right + 34
       << "\" y2=\"" << ly - 4 << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n"
       << "<text x=\"" << width - right + 40 << "\" y=\"" << ly << "\">" << xml_escape(s.label) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Files

inline std::string gaussianity_csv(const GaussianityReport& g) {
  std::ostringstream os;
  os << "layer,batch_size,checkpoint,gaussian,dirac,non_gaussian,tested,percentage\n";
  for (const auto& c : g.cells)
    os << c.layer + 1 << ',' << c.batch_size << ',' << c.checkpoint << ',' << c.gaussian << ',' << c.dirac << ','
       << c.non_gaussian << ',' << c.tested() << ',' << format_real(c.percentage()) << '\n';
  return os.str();
}

inline std::string bounds_csv(const BoundReport& b) {
  std::ostringstream os;
  os << "layer,batch_size,checkpoint,tested,dirac,gaussian_percentage,median_beta_ratio,spine_beta_ratio,"
        "spine_kurtosis_bound";
  for (double q : reported_quantile_levels()) os << ",beta_ratio_q" << format_real(q);
  for (double q : reported_quantile_levels()) os << ",kurtosis_bound_q" << format_real(q);
  os << '\n';
  for (const auto& c : b.cells) {
    os << c.layer + 1 << ',' << c.batch_size << ',' << c.checkpoint << ',' << c.tested << ',' << c.dirac << ','
       << format_real(c.gaussian_percentage) << ',' << format_real(c.median_beta_ratio) << ','
       << format_real(c.spine_beta_ratio) << ',' << format_real(c.spine_kurtosis_bound);
    for (std::size_t i = 0; i < reported_quantile_levels().size(); ++i)
      os << ',' << (i < c.beta_ratio_quantiles.size() ? format_real(c.beta_ratio_quantiles[i]) : "nan");
    for (std::size_t i = 0; i < reported_quantile_levels().size(); ++i)
      os << ',' << (i < c.kurtosis_bound_quantiles.size() ? format_real(c.kurtosis_bound_quantiles[i]) : "nan");
    os << '\n';
  }
  return os.str();
}

inline std::string training_csv(const std::vector<EpochStats>& log) {
  std::ostringstream os;
  os << "epoch,learning_rate,loss,accuracy\n";
  for (const auto& e : log)
    os << e.epoch << ',' << format_real(e.learning_rate) << ',' << format_real(e.loss) << ','
       << format_real(e.accuracy) << '\n';
  return os.str();
}

inline std::string gaussianity_svg(const GaussianityReport& g) {
  std::vector<Series> series;
  for (const auto& c : g.cells) {
    if (series.size() <= c.layer) series.resize(c.layer + 1);
    series[c.layer].label = "layer " + std::to_string(c.layer + 1);
    series[c.layer].x.push_back(std::log2(static_cast<double>(c.batch_size)));
    series[c.layer].y.push_back(c.percentage());
  }
  return svg_line_plot("Gaussianity of gradient noise", "log2(batch size)", "Gaussian coordinates (%)", series);
}

// Normalized beta/sigma^3 histograms at one batch size, one step line per layer.
inline std::string bounds_svg(const BoundReport& b, std::size_t batch_size) {
  std::vector<Series> series;
  for (const auto& c : b.cells) {
    if (c.batch_size != batch_size) continue;
    Series s{"layer " + std::to_string(c.layer + 1), {}, {}};
    const auto& h = c.beta_ratio_hist;
    std::size_t total = 0;
    for (auto n : h.counts) total += n;
    const double width = (h.hi - h.lo) / static_cast<double>(h.counts.size());
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
      s.x.push_back(h.lo + width * static_cast<double>(i));
      s.y.push_back(total ? static_cast<double>(h.counts[i]) / static_cast<double>(total) : 0.0);
    }
    series.push_back(std::move(s));
  }
  return svg_line_plot("beta/sigma^3 per coordinate (batch " + std::to_string(batch_size) + ")", "beta/sigma^3",
                       "fraction of coordinates", series, true);
}

struct EmittedFiles {
  std::vector<std::filesystem::path> paths;
};

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f << content;
  if (!f) throw IoError("failed writing " + path.string());
}

namespace detail {

// Pretty printer matching nlohmann's layout, except reals always carry 17 significant digits.
inline void dump_json(const nlohmann::json& j, std::ostream& os, int depth) {
  const std::string pad(static_cast<std::size_t>(2 * (depth + 1)), ' ');
  const std::string close(static_cast<std::size_t>(2 * depth), ' ');
  switch (j.type()) {
    case nlohmann::json::value_t::object: {
      if (j.empty()) {
        os << "{}";
        return;
      }
      os << "{\n";
      bool first = true;
      for (const auto& [key, value] : j.items()) {
        if (!first) os << ",\n";
        first = false;
        os << pad << nlohmann::json(key).dump() << ": ";
        dump_json(value, os, depth + 1);
      }
      os << '\n' << close << '}';
      return;
    }
    case nlohmann::json::value_t::array: {
      if (j.empty()) {
        os << "[]";
        return;
      }
      os << "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) os << ",\n";
        os << pad;
        dump_json(j[i], os, depth + 1);
      }
      os << '\n' << close << ']';
      return;
    }
    case nlohmann::json::value_t::number_float: {
      const double x = j.get<double>();
      if (!std::isfinite(x)) {
        os << "null";
        return;
      }
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", x);
      std::string text = buf;
      if (text.find_first_of(".eE") == std::string::npos) text += ".0";
      os << text;
      return;
    }
    default:
      os << j.dump();
  }
}

}  // namespace detail

inline std::string report_json_text(const ExperimentReport& r) {
  std::ostringstream os;
  detail::dump_json(to_json(r), os, 0);
  os << '\n';
  return os.str();
}

// Writes report-<hash>.json plus the CSV/SVG companions of every section present.
inline EmittedFiles emit_report(const ExperimentReport& r, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  const std::string tag = hash_hex(config_hash(r.config));
  EmittedFiles out;
  const auto emit = [&](const std::string& name, const std::string& content) {
    const auto path = dir / name;
    write_text_file(path, content);
    out.paths.push_back(path);
  };

  emit("report-" + tag + ".json", report_json_text(r));
  if (!r.training.empty()) emit("training-" + tag + ".csv", training_csv(r.training));
  if (r.gaussianity) {
    emit("gaussianity-" + tag + ".csv", gaussianity_csv(*r.gaussianity));
    emit("gaussianity-" + tag + ".svg", gaussianity_svg(*r.gaussianity));
  }
  if (r.bounds) {
    emit("bounds-" + tag + ".csv", bounds_csv(*r.bounds));
    for (std::size_t bs : r.config.probe.batch_sizes)
      emit("bounds-" + tag + "-b" + std::to_string(bs) + ".svg", bounds_svg(*r.bounds, bs));
  }
  if (!r.tail_index.empty()) {
    std::ostringstream os;
    os << "layer,batch_size,tested,dirac,median_alpha,fraction_below_threshold\n";
    for (const auto& c : r.tail_index)
      os << c.layer + 1 << ',' << c.batch_size << ',' << c.tested << ',' << c.dirac << ','
         << format_real(c.median_alpha) << ',' << format_real(c.fraction_below) << '\n';
    emit("tailindex-" + tag + ".csv", os.str());
  }
  if (r.langevin) {
    const auto& l = *r.langevin;
    std::ostringstream os;
    os << "quantity,i,j,analytic,empirical\n";
    const auto rows = [&](const char* name, const Eigen::MatrixXd& a, const Eigen::MatrixXd& e) {
      for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index k = 0; k < a.cols(); ++k)
          os << name << ',' << i << ',' << k << ',' << format_real(a(i, k)) << ',' << format_real(e(i, k)) << '\n';
    };
    rows("cov_position", l.analytic.position, l.empirical.cov_position);
    rows("cov_velocity", l.analytic.velocity, l.empirical.cov_velocity);
    emit("langevin-" + tag + ".csv", os.str());
  }
  return out;
}

}  // namespace sgnlab

#endif  // SGNLAB_REPORT_HPP
