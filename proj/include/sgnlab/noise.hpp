#ifndef SGNLAB_NOISE_HPP
#define SGNLAB_NOISE_HPP

// Stochastic gradient noise at a frozen parameter snapshot:
//   eps = (mean gradient over a random mini-batch) - (mean gradient over the full dataset).

#include <algorithm>
#include <array>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sgnlab/error.hpp"
#include "sgnlab/net.hpp"
#include "sgnlab/numeric.hpp"
#include "sgnlab/parallel.hpp"

namespace sgnlab {

enum class ParamKind { weight, bias };

struct CoordinateId {
  std::size_t flat_index = 0;
  std::size_t layer = 0;  // 0-based learnable layer
  ParamKind kind = ParamKind::weight;
  std::size_t row = 0;
  std::size_t col = 0;  // 0 for biases

  // e.g. "L1.W[3,4]" or "L2.b[0]"; layers are numbered from 1.
  [[nodiscard]] std::string label() const {
    std::string s = "L" + std::to_string(layer + 1);
    if (kind == ParamKind::weight) return s + ".W[" + std::to_string(row) + "," + std::to_string(col) + "]";
    return s + ".b[" + std::to_string(row) + "]";
  }

  friend bool operator==(const CoordinateId&, const CoordinateId&) = default;
};

inline CoordinateId coordinate_of(const NetSpec& spec, std::size_t flat_index) {
  require(flat_index < spec.param_count(), "flat index out of range");
  std::size_t k = 0;
  while (spec.layer_offset(k + 1) <= flat_index) ++k;
  const std::size_t local = flat_index - spec.layer_offset(k);
  const std::size_t fan_in = spec.layer_sizes[k];
  const std::size_t n_weights = spec.layer_sizes[k + 1] * fan_in;
  if (local < n_weights) return {flat_index, k, ParamKind::weight, local / fan_in, local % fan_in};
  return {flat_index, k, ParamKind::bias, local - n_weights, 0};
}

enum class Sampling { with_replacement, without_replacement };

struct ProbeConfig {
  std::size_t batch_size = 128;
  std::size_t n_draws = 200;
  std::size_t max_coords_per_layer = 4096;
  Sampling sampling = Sampling::without_replacement;  // within a batch; batches are always i.i.d.
  bool include_bias = false;
  std::uint64_t seed = 0;

  void validate(std::size_t dataset_size) const {
    require(batch_size > 0, "batch size must be positive");
    require(n_draws > 0, "number of noise draws must be positive");
    require(max_coords_per_layer > 0, "coordinate cap must be positive");
    require(sampling == Sampling::with_replacement || batch_size <= dataset_size,
            "batch size " + std::to_string(batch_size) + " exceeds dataset size " + std::to_string(dataset_size) +
                " under sampling without replacement");
  }
};

struct NoiseSampleSet {
  std::vector<CoordinateId> coordinates;
  Eigen::MatrixXd draws;  // rows = coordinates, cols = mini-batch draws
  std::size_t batch_size = 0;
  std::uint64_t seed = 0;
  std::uint64_t params_hash = 0;

  [[nodiscard]] std::size_t n_coordinates() const { return static_cast<std::size_t>(draws.rows()); }
  [[nodiscard]] std::size_t n_draws() const { return static_cast<std::size_t>(draws.cols()); }
  [[nodiscard]] std::vector<double> row(std::size_t i) const {
    std::vector<double> r(n_draws());
    for (std::size_t j = 0; j < r.size(); ++j) r[j] = draws(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    return r;
  }
};

inline Gradient full_gradient(const Params& params, const NetSpec& spec, const Dataset& data) {
  require(!data.empty(), "full gradient of an empty dataset is undefined");
  return batch_gradient(params, spec, data);
}

// At most `max_per_layer` coordinates per learnable layer, chosen uniformly (seeded) and
// returned in ascending flat-index order.
inline std::vector<CoordinateId> select_coordinates(const NetSpec& spec, std::size_t max_per_layer,
                                                    std::uint64_t seed, bool include_bias = false) {
  std::vector<CoordinateId> out;
  for (std::size_t k = 0; k < spec.depth(); ++k) {
    const std::size_t begin = spec.layer_offset(k);
    const std::size_t n_weights = spec.layer_sizes[k + 1] * spec.layer_sizes[k];
    const std::size_t n = include_bias ? spec.layer_offset(k + 1) - begin : n_weights;
    std::vector<std::size_t> pool(n);
    std::iota(pool.begin(), pool.end(), begin);
    const std::size_t take = std::min(max_per_layer, n);
    if (take < n) {
      std::mt19937_64 rng(mix_seed(seed, k));
      for (std::size_t i = 0; i < take; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, n - 1);
        std::swap(pool[i], pool[pick(rng)]);
      }
      pool.resize(take);
      std::sort(pool.begin(), pool.end());
    }
    for (std::size_t idx : pool) out.push_back(coordinate_of(spec, idx));
  }
  return out;
}

// Indices come back sorted, so a full batch sums in the same order as the reference gradient.
inline std::vector<std::size_t> draw_batch(std::size_t dataset_size, std::size_t batch_size, Sampling sampling,
                                           std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> batch;
  if (sampling == Sampling::with_replacement) {
    std::uniform_int_distribution<std::size_t> pick(0, dataset_size - 1);
    batch.resize(batch_size);
    for (auto& i : batch) i = pick(rng);
    std::sort(batch.begin(), batch.end());
    return batch;
  }
  batch.resize(dataset_size);
  std::iota(batch.begin(), batch.end(), std::size_t{0});
  for (std::size_t i = 0; i < batch_size; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, dataset_size - 1);
    std::swap(batch[i], batch[pick(rng)]);
  }
  batch.resize(batch_size);
  std::sort(batch.begin(), batch.end());
  return batch;
}

// Noise draws on the given coordinates. Draw j uses the seed mix_seed(cfg.seed, j), so the
// result does not depend on the worker count.
inline NoiseSampleSet sample_noise(const Params& params, const NetSpec& spec, const Dataset& data,
                                   const ProbeConfig& cfg, std::vector<CoordinateId> coordinates,
                                   const Gradient& reference, std::size_t workers = 1) {
  cfg.validate(data.size());
  require(static_cast<std::size_t>(reference.size()) == spec.param_count(), "reference gradient has the wrong length");

  NoiseSampleSet out;
  out.coordinates = std::move(coordinates);
  out.batch_size = cfg.batch_size;
  out.seed = cfg.seed;
  out.params_hash = params.hash();
  out.draws.resize(static_cast<Eigen::Index>(out.coordinates.size()), static_cast<Eigen::Index>(cfg.n_draws));

  parallel_for(cfg.n_draws, workers, [&](std::size_t j) {
    const auto batch = draw_batch(data.size(), cfg.batch_size, cfg.sampling, mix_seed(cfg.seed, j));
    const Gradient g = mean_gradient(params, spec, data, batch);
    for (std::size_t i = 0; i < out.coordinates.size(); ++i) {
      const auto idx = static_cast<Eigen::Index>(out.coordinates[i].flat_index);
      out.draws(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = g[idx] - reference[idx];
    }
  });
  if (!out.draws.allFinite()) throw NumericalError("gradient noise contains non-finite values");
  return out;
}

inline NoiseSampleSet sample_noise(const Params& params, const NetSpec& spec, const Dataset& data,
                                   const ProbeConfig& cfg, std::size_t workers = 1) {
  cfg.validate(data.size());
  return sample_noise(params, spec, data, cfg,
                      select_coordinates(spec, cfg.max_coords_per_layer, cfg.seed, cfg.include_bias),
                      full_gradient(params, spec, data), workers);
}

// ---------------------------------------------------------------------------
// Serialization
//
// Binary container, all integers and reals little-endian:
//   "SGNL" | version u32 | coords u64 | draws u64 | batch_size u64 | seed u64 | row-major f64 payload

inline constexpr std::array<char, 4> noise_magic{'S', 'G', 'N', 'L'};
inline constexpr std::uint32_t noise_format_version = 1;

namespace detail {

template <typename T>
void put_le(std::ostream& os, T value) {
  std::array<char, sizeof(T)> bytes{};
  auto bits = std::bit_cast<std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    bytes[i] = static_cast<char>(bits & 0xFF);
    bits >>= 8;
  }
  os.write(bytes.data(), bytes.size());
}

template <typename T>
T get_le(std::istream& is, std::size_t& offset, const char* what) {
  std::array<unsigned char, sizeof(T)> bytes{};
  if (!is.read(reinterpret_cast<char*>(bytes.data()), bytes.size()))
    throw ParseError(std::string("truncated file while reading ") + what, offset);
  using Bits = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  Bits bits = 0;
  for (std::size_t i = sizeof(T); i-- > 0;) bits = (bits << 8) | bytes[i];
  offset += sizeof(T);
  return std::bit_cast<T>(bits);
}

}  // namespace detail

inline void write_binary(const NoiseSampleSet& set, std::ostream& os) {
  os.write(noise_magic.data(), noise_magic.size());
  detail::put_le<std::uint32_t>(os, noise_format_version);
  detail::put_le<std::uint64_t>(os, set.n_coordinates());
  detail::put_le<std::uint64_t>(os, set.n_draws());
  detail::put_le<std::uint64_t>(os, set.batch_size);
  detail::put_le<std::uint64_t>(os, set.seed);
  for (Eigen::Index i = 0; i < set.draws.rows(); ++i)
    for (Eigen::Index j = 0; j < set.draws.cols(); ++j) detail::put_le<double>(os, set.draws(i, j));
  if (!os) throw IoError("failed writing noise sample set");
}

// The container carries no coordinate labels; rows come back with flat_index = row number.
inline NoiseSampleSet read_binary(std::istream& is) {
  std::size_t offset = 0;
  std::array<char, 4> magic{};
  if (!is.read(magic.data(), magic.size())) throw ParseError("truncated noise file while reading magic", offset);
  if (magic != noise_magic) throw ParseError("bad magic, expected \"SGNL\"", offset);
  offset += 4;
  const auto version = detail::get_le<std::uint32_t>(is, offset, "version");
  if (version != noise_format_version)
    throw ParseError("unsupported noise format version " + std::to_string(version), offset - 4);
  const auto rows = detail::get_le<std::uint64_t>(is, offset, "coordinate count");
  const auto cols = detail::get_le<std::uint64_t>(is, offset, "draw count");
  NoiseSampleSet set;
  set.batch_size = detail::get_le<std::uint64_t>(is, offset, "batch size");
  set.seed = detail::get_le<std::uint64_t>(is, offset, "seed");
  if (rows > (1ULL << 32) || cols > (1ULL << 32)) throw ParseError("implausible matrix shape", 12);

  set.draws.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < set.draws.rows(); ++i)
    for (Eigen::Index j = 0; j < set.draws.cols(); ++j) set.draws(i, j) = detail::get_le<double>(is, offset, "payload");
  set.coordinates.resize(rows);
  for (std::size_t i = 0; i < rows; ++i) set.coordinates[i].flat_index = i;
  return set;
}

inline std::string format_real(double x) {
  std::array<char, 32> buf{};
  std::snprintf(buf.data(), buf.size(), "%.17g", x);
  return buf.data();
}

// One row per coordinate: the quoted label (it contains a comma), then one column per draw.
inline void write_csv(const NoiseSampleSet& set, std::ostream& os) {
  os << "coordinate";
  for (std::size_t j = 0; j < set.n_draws(); ++j) os << ",draw_" << j;
  os << '\n';
  for (std::size_t i = 0; i < set.n_coordinates(); ++i) {
    os << '"' << (i < set.coordinates.size() ? set.coordinates[i].label() : std::to_string(i)) << '"';
    for (std::size_t j = 0; j < set.n_draws(); ++j)
      os << ',' << format_real(set.draws(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    os << '\n';
  }
  if (!os) throw IoError("failed writing noise CSV");
}

}  // namespace sgnlab

#endif  // SGNLAB_NOISE_HPP
