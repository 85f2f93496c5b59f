#include <cmath>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "sgnlab/dataset.hpp"
#include "sgnlab/noise.hpp"

using namespace sgnlab;

namespace {

struct Fixture {
  NetSpec spec{{4, 6, 3}, {{Activation::tanh}, {Activation::identity}}, LossKind::cross_entropy};
  Dataset data = make_synthetic({3, 4, 60, 1.5, 21});
  Params params = initialize(spec, 5);
};

std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  return idx;
}

}  // namespace

TEST(Coordinates, LabelsAndLayout) {
  const NetSpec spec{{3, 2, 2}, {{Activation::relu}, {Activation::identity}}, LossKind::mse};
  EXPECT_EQ(coordinate_of(spec, 0).label(), "L1.W[0,0]");
  EXPECT_EQ(coordinate_of(spec, 4).label(), "L1.W[1,1]");
  EXPECT_EQ(coordinate_of(spec, 6).label(), "L1.b[0]");
  EXPECT_EQ(coordinate_of(spec, 8).label(), "L2.W[0,0]");
  EXPECT_EQ(coordinate_of(spec, 13).label(), "L2.b[1]");
  EXPECT_THROW(coordinate_of(spec, 14), ValidationError);
}

TEST(Coordinates, SelectionIsCappedSortedAndSeeded) {
  const NetSpec spec{{10, 20, 5}, {{Activation::relu}, {Activation::identity}}, LossKind::mse};
  const auto all = select_coordinates(spec, 10000, 1);
  EXPECT_EQ(all.size(), 200u + 100u);
  for (const auto& c : all) EXPECT_EQ(c.kind, ParamKind::weight);
  const auto with_bias = select_coordinates(spec, 10000, 1, true);
  EXPECT_EQ(with_bias.size(), spec.param_count());

  const auto capped = select_coordinates(spec, 50, 9);
  EXPECT_EQ(capped.size(), 100u);
  for (std::size_t i = 1; i < capped.size(); ++i) EXPECT_LT(capped[i - 1].flat_index, capped[i].flat_index);
  EXPECT_EQ(std::count_if(capped.begin(), capped.end(), [](const CoordinateId& c) { return c.layer == 0; }), 50);
  EXPECT_EQ(capped, select_coordinates(spec, 50, 9));
  EXPECT_NE(capped, select_coordinates(spec, 50, 10));
}

TEST(FullGradient, SingleSampleAndWholeBatch) {
  Fixture f;
  const Dataset one{f.data[3]};
  EXPECT_EQ(full_gradient(f.params, f.spec, one),
            per_sample_gradient(f.params, f.spec, f.data[3].input, f.data[3].target));
  EXPECT_EQ(full_gradient(f.params, f.spec, f.data), batch_gradient(f.params, f.spec, f.data));
  const Dataset two{f.data[0], f.data[1]};
  const Gradient g1 = per_sample_gradient(f.params, f.spec, f.data[0].input, f.data[0].target);
  const Gradient g2 = per_sample_gradient(f.params, f.spec, f.data[1].input, f.data[1].target);
  EXPECT_LE((full_gradient(f.params, f.spec, two) - 0.5 * (g1 + g2)).cwiseAbs().maxCoeff(), 1e-16);
  EXPECT_THROW(full_gradient(f.params, f.spec, {}), ValidationError);
}

TEST(SampleNoise, FullBatchIsExactlyZero) {
  Fixture f;
  const ProbeConfig cfg{f.data.size(), 25, 4096, Sampling::without_replacement, true, 3};
  const auto set = sample_noise(f.params, f.spec, f.data, cfg);
  EXPECT_EQ(set.n_coordinates(), f.spec.param_count());
  EXPECT_TRUE((set.draws.array() == 0.0).all());
}

TEST(SampleNoise, TwoSampleEnumeration) {
  Fixture f;
  const Dataset two{f.data[0], f.data[1]};
  const Gradient g1 = per_sample_gradient(f.params, f.spec, two[0].input, two[0].target);
  const Gradient g2 = per_sample_gradient(f.params, f.spec, two[1].input, two[1].target);
  for (auto sampling : {Sampling::with_replacement, Sampling::without_replacement}) {
    const ProbeConfig cfg{1, 200, 4096, sampling, true, 17};
    const auto set = sample_noise(f.params, f.spec, two, cfg);
    bool saw_first = false, saw_second = false;
    for (std::size_t j = 0; j < set.n_draws(); ++j) {
      bool first = true, second = true;
      for (std::size_t i = 0; i < set.n_coordinates(); ++i) {
        const auto idx = static_cast<Eigen::Index>(set.coordinates[i].flat_index);
        const double d = (g1[idx] - g2[idx]) / 2.0;
        const double e = set.draws(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        const double tol = 1e-15 * std::max(1.0, std::abs(d));
        first = first && std::abs(e - d) <= tol;
        second = second && std::abs(e + d) <= tol;
      }
      ASSERT_TRUE(first || second) << "draw " << j;
      saw_first = saw_first || first;
      saw_second = saw_second || second;
    }
    EXPECT_TRUE(saw_first && saw_second);
  }
}

TEST(SampleNoise, EnumeratedSingletonBatchesAverageToZero) {
  Fixture f;
  const Gradient full = full_gradient(f.params, f.spec, f.data);
  CompensatedVectorSum sum(full.size());
  for (std::size_t i = 0; i < f.data.size(); ++i) {
    const std::size_t idx[] = {i};
    sum.add(mean_gradient(f.params, f.spec, f.data, idx) - full);
  }
  const Eigen::VectorXd mean = sum.value() / static_cast<double>(f.data.size());
  EXPECT_LT(mean.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(SampleNoise, ColumnMeanWithinCltBand) {
  Fixture f;
  const ProbeConfig cfg{8, 10000, 4096, Sampling::without_replacement, true, 99};
  const auto set = sample_noise(f.params, f.spec, f.data, cfg);
  std::size_t inside = 0;
  for (Eigen::Index i = 0; i < set.draws.rows(); ++i) {
    const Eigen::ArrayXd row = set.draws.row(i).array();
    const double mean = row.mean();
    const double sd = std::sqrt((row - mean).square().mean());
    inside += std::abs(mean) < 4.0 * sd / std::sqrt(static_cast<double>(cfg.n_draws)) || sd == 0.0;
  }
  EXPECT_GE(static_cast<double>(inside), 0.99 * static_cast<double>(set.draws.rows()));
}

TEST(SampleNoise, DeterministicAndIndependentOfWorkers) {
  Fixture f;
  const ProbeConfig cfg{5, 64, 10, Sampling::without_replacement, false, 1234};
  const auto a = sample_noise(f.params, f.spec, f.data, cfg, 1);
  const auto b = sample_noise(f.params, f.spec, f.data, cfg, 1);
  const auto c = sample_noise(f.params, f.spec, f.data, cfg, 4);
  EXPECT_EQ(a.draws, b.draws);
  EXPECT_EQ(a.draws, c.draws);
  EXPECT_EQ(a.coordinates, c.coordinates);
  EXPECT_EQ(a.params_hash, f.params.hash());
  EXPECT_EQ(a.batch_size, 5u);
  EXPECT_EQ(a.seed, 1234u);
  EXPECT_EQ(a.n_coordinates(), a.coordinates.size());
  auto other = cfg;
  other.seed = 1235;
  EXPECT_NE(a.draws, sample_noise(f.params, f.spec, f.data, other).draws);
}

TEST(SampleNoise, BoundedInputsGiveFiniteMoments) {
  Fixture f;
  const ProbeConfig cfg{4, 100000, 4, Sampling::with_replacement, false, 8};
  const auto set = sample_noise(f.params, f.spec, f.data, cfg);
  EXPECT_TRUE(set.draws.allFinite());
  EXPECT_TRUE(set.draws.array().pow(4).rowwise().mean().allFinite());
}

TEST(SampleNoise, ValidatesConfig) {
  Fixture f;
  EXPECT_THROW(sample_noise(f.params, f.spec, f.data, {f.data.size() + 1, 10, 10, Sampling::without_replacement}),
               ValidationError);
  EXPECT_NO_THROW(sample_noise(f.params, f.spec, f.data, {f.data.size() + 1, 10, 10, Sampling::with_replacement}));
  EXPECT_THROW(sample_noise(f.params, f.spec, f.data, {0, 10}), ValidationError);
  EXPECT_THROW(sample_noise(f.params, f.spec, f.data, {4, 0}), ValidationError);
}

TEST(DrawBatch, WithoutReplacementHasDistinctIndices) {
  const auto b = draw_batch(50, 50, Sampling::without_replacement, 4);
  EXPECT_EQ(b, all_indices(50));
  const auto c = draw_batch(50, 20, Sampling::without_replacement, 4);
  EXPECT_EQ(std::adjacent_find(c.begin(), c.end()), c.end());
}

TEST(Serialization, BinaryRoundTrip) {
  Fixture f;
  const auto set = sample_noise(f.params, f.spec, f.data, {6, 13, 7, Sampling::without_replacement, false, 2});
  std::stringstream ss;
  write_binary(set, ss);
  const std::string bytes = ss.str();
  EXPECT_EQ(bytes.size(), 4u + 4 + 4 * 8 + set.n_coordinates() * set.n_draws() * 8);
  EXPECT_EQ(bytes.substr(0, 4), "SGNL");
  const auto back = read_binary(ss);
  EXPECT_EQ(back.draws, set.draws);
  EXPECT_EQ(back.batch_size, 6u);
  EXPECT_EQ(back.seed, 2u);
}

TEST(Serialization, MalformedInputReportsOffset) {
  Fixture f;
  const auto set = sample_noise(f.params, f.spec, f.data, {6, 4, 2, Sampling::without_replacement, false, 2});
  std::stringstream ss;
  write_binary(set, ss);
  const std::string bytes = ss.str();

  std::istringstream bad_magic("XXXX" + bytes.substr(4));
  try {
    read_binary(bad_magic);
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 0u);
  }
  std::istringstream truncated(bytes.substr(0, bytes.size() - 3));
  try {
    read_binary(truncated);
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), bytes.size() - 8);
  }
  std::string wrong_version = bytes;
  wrong_version[4] = 9;
  std::istringstream versioned(wrong_version);
  EXPECT_THROW(read_binary(versioned), ParseError);
}

TEST(Serialization, CsvHasOneRowPerCoordinate) {
  Fixture f;
  const auto set = sample_noise(f.params, f.spec, f.data, {6, 3, 2, Sampling::without_replacement, false, 2});
  std::ostringstream os;
  write_csv(set, os);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "coordinate,draw_0,draw_1,draw_2");
  std::size_t rows = 0;
  while (std::getline(is, line)) {
    if (rows == 0) {
      EXPECT_EQ(line.substr(0, line.find("\",") + 1), '"' + set.coordinates[0].label() + '"');
      EXPECT_EQ(std::count(line.begin(), line.end(), ','), 1 + 3);  // one inside the label
    }
    ++rows;
  }
  EXPECT_EQ(rows, set.n_coordinates());
}
