#ifndef SGNLAB_DATASET_HPP
#define SGNLAB_DATASET_HPP

// Dataset ingestion: IDX image/label pairs, CSV with a "label" column, and seeded
// Gaussian-mixture synthetic data. Inputs end up in [0, 1]; targets are one-hot.

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <random>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "sgnlab/error.hpp"
#include "sgnlab/net.hpp"

namespace sgnlab {

struct SyntheticSource {
  std::size_t classes = 10;
  std::size_t dim = 32;
  std::size_t n = 4096;
  double separation = 1.0;  // scale of the class means relative to the unit within-class noise
  std::uint64_t seed = 0;
};

struct IdxSource {
  std::string images;
  std::string labels;
  std::size_t classes = 10;
};

struct CsvSource {
  std::string path;
  std::size_t classes = 2;
};

using DataSource = std::variant<SyntheticSource, IdxSource, CsvSource>;

inline Eigen::VectorXd one_hot(std::size_t label, std::size_t classes) {
  Eigen::VectorXd y = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(classes));
  y[static_cast<Eigen::Index>(label)] = 1.0;
  return y;
}

inline std::size_t argmax(const Eigen::VectorXd& v) {
  Eigen::Index i = 0;
  v.maxCoeff(&i);
  return static_cast<std::size_t>(i);
}

// Class means ~ separation * N(0, I); samples = mean + N(0, I); labels cycle through classes.
// Each feature is then min-max scaled to [0, 1] over the dataset.
inline Dataset make_synthetic(const SyntheticSource& src) {
  require(src.classes >= 2 && src.dim > 0 && src.n > 0, "synthetic data needs >= 2 classes, dim > 0, n > 0");
  require(src.separation >= 0.0, "separation must be non-negative");
  std::mt19937_64 rng(src.seed);
  std::normal_distribution<double> normal;
  const auto dim = static_cast<Eigen::Index>(src.dim);

  std::vector<Eigen::VectorXd> means(src.classes, Eigen::VectorXd(dim));
  for (auto& m : means)
    for (Eigen::Index j = 0; j < dim; ++j) m[j] = src.separation * normal(rng);

  Dataset data(src.n);
  for (std::size_t i = 0; i < src.n; ++i) {
    const std::size_t label = i % src.classes;
    data[i].input.resize(dim);
    for (Eigen::Index j = 0; j < dim; ++j) data[i].input[j] = means[label][j] + normal(rng);
    data[i].target = one_hot(label, src.classes);
  }
  for (Eigen::Index j = 0; j < dim; ++j) {
    double lo = data[0].input[j], hi = lo;
    for (const auto& s : data) {
      lo = std::min(lo, s.input[j]);
      hi = std::max(hi, s.input[j]);
    }
    const double span = hi > lo ? hi - lo : 1.0;
    for (auto& s : data) s.input[j] = (s.input[j] - lo) / span;
  }
  return data;
}

namespace detail {

class ByteReader {
 public:
  explicit ByteReader(std::istream& is) : is_(is) {}

  std::uint32_t be32(const char* what) {
    std::array<unsigned char, 4> b{};
    read(b.data(), b.size(), what);
    return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) | b[3];
  }

  void read(unsigned char* dst, std::size_t n, const char* what) {
    if (!is_.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n)))
      throw ParseError(std::string("truncated IDX file while reading ") + what, offset_);
    offset_ += n;
  }

  [[nodiscard]] std::size_t offset() const { return offset_; }

 private:
  std::istream& is_;
  std::size_t offset_ = 0;
};

}  // namespace detail

// Unsigned-byte IDX tensors: images (magic 0x00000803, dims n x rows x cols) scaled by 1/255.
inline std::vector<Eigen::VectorXd> read_idx_images(std::istream& is) {
  detail::ByteReader r(is);
  const std::uint32_t magic = r.be32("magic");
  if (magic != 0x00000803U) throw ParseError("bad IDX image magic, expected 0x00000803", 0);
  const std::uint32_t n = r.be32("image count");
  const std::uint32_t rows = r.be32("row count");
  const std::uint32_t cols = r.be32("column count");
  if (rows == 0 || cols == 0) throw ParseError("IDX images have an empty dimension", 8);
  const std::size_t pixels = std::size_t{rows} * cols;
  std::vector<unsigned char> buf(pixels);
  std::vector<Eigen::VectorXd> images;
  images.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    r.read(buf.data(), pixels, "pixel data");
    Eigen::VectorXd x(static_cast<Eigen::Index>(pixels));
    for (std::size_t p = 0; p < pixels; ++p) x[static_cast<Eigen::Index>(p)] = buf[p] / 255.0;
    images.push_back(std::move(x));
  }
  return images;
}

// Labels (magic 0x00000801, dims n).
inline std::vector<std::size_t> read_idx_labels(std::istream& is) {
  detail::ByteReader r(is);
  const std::uint32_t magic = r.be32("magic");
  if (magic != 0x00000801U) throw ParseError("bad IDX label magic, expected 0x00000801", 0);
  const std::uint32_t n = r.be32("label count");
  std::vector<unsigned char> buf(n);
  if (n > 0) r.read(buf.data(), n, "label data");
  return {buf.begin(), buf.end()};
}

inline Dataset assemble(std::vector<Eigen::VectorXd> inputs, const std::vector<std::size_t>& labels,
                        std::size_t classes) {
  require(inputs.size() == labels.size(), "have " + std::to_string(inputs.size()) + " inputs but " +
                                              std::to_string(labels.size()) + " labels");
  require(classes >= 2, "need at least 2 classes");
  Dataset data(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    require(labels[i] < classes, "label " + std::to_string(labels[i]) + " of sample " + std::to_string(i) +
                                     " is outside the " + std::to_string(classes) + " configured classes");
    data[i] = {std::move(inputs[i]), one_hot(labels[i], classes)};
  }
  return data;
}

// CSV with a header row and an integer "label" column; all other columns are features.
// Features already within [0, 1] are kept as is; other features are min-max scaled.
inline Dataset read_csv(std::istream& is, std::size_t classes) {
  std::string line;
  if (!std::getline(is, line)) throw ParseError("empty CSV file", 0);
  std::size_t offset = line.size() + 1;

  const auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      cell.erase(0, cell.find_first_not_of(" \t\r"));
      cell.erase(cell.find_last_not_of(" \t\r") + 1);
      cells.push_back(cell);
    }
    return cells;
  };

  const auto header = split(line);
  const auto label_it = std::find(header.begin(), header.end(), "label");
  if (label_it == header.end()) throw ParseError("CSV header has no \"label\" column", 0);
  const auto label_col = static_cast<std::size_t>(label_it - header.begin());
  require(header.size() >= 2, "CSV needs at least one feature column");

  std::vector<Eigen::VectorXd> inputs;
  std::vector<std::size_t> labels;
  while (std::getline(is, line)) {
    const std::size_t row_offset = offset;
    offset += line.size() + 1;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split(line);
    if (cells.size() != header.size())
      throw ParseError("CSV row has " + std::to_string(cells.size()) + " cells, header has " +
                           std::to_string(header.size()),
                       row_offset);
    Eigen::VectorXd x(static_cast<Eigen::Index>(header.size() - 1));
    Eigen::Index j = 0;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      try {
        std::size_t used = 0;
        if (c == label_col) {
          const long v = std::stol(cells[c], &used);
          if (used != cells[c].size() || v < 0) throw std::invalid_argument("label");
          labels.push_back(static_cast<std::size_t>(v));
        } else {
          x[j++] = std::stod(cells[c], &used);
          if (used != cells[c].size()) throw std::invalid_argument("feature");
        }
      } catch (const std::logic_error&) {
        throw ParseError("CSV cell \"" + cells[c] + "\" is not a valid number", row_offset);
      }
    }
    inputs.push_back(std::move(x));
  }
  require(!inputs.empty(), "CSV file has no data rows");

  for (Eigen::Index j = 0; j < inputs.front().size(); ++j) {
    double lo = inputs.front()[j], hi = lo;
    for (const auto& x : inputs) {
      lo = std::min(lo, x[j]);
      hi = std::max(hi, x[j]);
    }
    if (lo >= 0.0 && hi <= 1.0) continue;
    const double span = hi > lo ? hi - lo : 1.0;
    for (auto& x : inputs) x[j] = (x[j] - lo) / span;
  }
  return assemble(std::move(inputs), labels, classes);
}

inline Dataset load_dataset(const DataSource& source) {
  const auto open = [](const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path);
    return f;
  };
  if (const auto* s = std::get_if<SyntheticSource>(&source)) return make_synthetic(*s);
  if (const auto* idx = std::get_if<IdxSource>(&source)) {
    auto fi = open(idx->images);
    auto fl = open(idx->labels);
    return assemble(read_idx_images(fi), read_idx_labels(fl), idx->classes);
  }
  const auto& csv = std::get<CsvSource>(source);
  auto f = open(csv.path);
  return read_csv(f, csv.classes);
}

}  // namespace sgnlab

#endif  // SGNLAB_DATASET_HPP
