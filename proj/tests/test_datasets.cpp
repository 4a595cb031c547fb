// Copyright 2026 The QuadMech Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <fstream>
#include <numbers>
#include <set>

#include "quadmech/data_io.hpp"
#include "quadmech/sinusoidal.hpp"

using namespace quadmech;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "quadmech_test_datasets";
  fs::create_directories(dir);
  return dir / name;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::IoError;
}

void write_bytes(const fs::path& p, const std::vector<std::uint8_t>& b) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
}

// Labels 0..9 repeated; images carry the label in their first pixel.
void tiny_mnist(const fs::path& images, const fs::path& labels, std::uint32_t n) {
  IdxArray img{{n, 28, 28}, std::vector<std::uint8_t>(std::size_t{n} * 784, 0)};
  IdxArray lab{{n}, std::vector<std::uint8_t>(n)};
  for (std::uint32_t i = 0; i < n; ++i) {
    lab.bytes[i] = static_cast<std::uint8_t>(i % 10);
    img.bytes[std::size_t{i} * 784] = static_cast<std::uint8_t>(25 * (i % 10) + 5);
  }
  img.bytes[783] = 255;
  write_idx(images, img);
  write_idx(labels, lab);
}

}  // namespace

TEST(Sinusoidal, PretrainTargetsMatchFormula) {
  const LabeledDataset d = sinusoidal_generate(SinusoidalParams::pretrain(500, 3));
  ASSERT_EQ(d.size(), 500u);
  ASSERT_EQ(d.input_dim(), 5u);
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double x1 = d.inputs(i, 0), x2 = d.inputs(i, 1);
    EXPECT_NEAR(d.targets(i, 0), std::sin(2 * std::numbers::pi * x1) + 0.3 * x2 + 0.25, 1e-12);
    EXPECT_LE(std::abs(d.targets(i, 0) - 0.25), 1.0 + 0.3 * std::abs(x2) + 1e-12);
  }
  // x ~ N(0, I): coarse moment check.
  double s = 0, s2 = 0;
  for (double v : d.inputs.data()) {
    s += v;
    s2 += v * v;
  }
  EXPECT_NEAR(s / 2500, 0.0, 0.07);
  EXPECT_NEAR(s2 / 2500, 1.0, 0.1);
}

TEST(Sinusoidal, FinetuneShiftAndModes) {
  SinusoidalParams p = SinusoidalParams::finetune(300, 4);
  const LabeledDataset in = sinusoidal_generate(p);
  p.shift_mode = ShiftMode::Target;
  const LabeledDataset tg = sinusoidal_generate(p);
  // Same underlying draws: input mode stores the mapped coordinates.
  for (std::size_t i = 0; i < 300; ++i) {
    EXPECT_NEAR(in.inputs(i, 0), 1.1 * (tg.inputs(i, 0) + 0.1), 1e-12);
    EXPECT_NEAR(in.inputs(i, 1), 1.1 * (tg.inputs(i, 1) + 0.1), 1e-12);
    EXPECT_EQ(in.inputs(i, 4), tg.inputs(i, 4));
    EXPECT_EQ(in.targets(i, 0), tg.targets(i, 0));
    const double x1 = in.inputs(i, 0), x2 = in.inputs(i, 1);
    EXPECT_NEAR(in.targets(i, 0), 0.9 * std::sin(2 * std::numbers::pi * x1) + 0.35 * x2 + 0.25,
                1e-12);
  }
}

TEST(Sinusoidal, ConstantWhenAmplitudesVanish) {
  const LabeledDataset d = sinusoidal_generate({0.0, 0.0, -1.5, true, 100, 5, ShiftMode::Input});
  for (std::size_t i = 0; i < d.size(); ++i) EXPECT_EQ(d.targets(i, 0), -1.5);
}

TEST(Sinusoidal, DeterministicPerSeed) {
  EXPECT_EQ(sinusoidal_generate(SinusoidalParams::pretrain(50, 1)),
            sinusoidal_generate(SinusoidalParams::pretrain(50, 1)));
  EXPECT_FALSE(sinusoidal_generate(SinusoidalParams::pretrain(50, 1)) ==
               sinusoidal_generate(SinusoidalParams::pretrain(50, 2)));
  EXPECT_THROW(sinusoidal_generate(SinusoidalParams::pretrain(0, 1)), Error);
}

TEST(Idx, RoundTripIsIdentity) {
  const IdxArray a{{3, 2, 4}, {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11,
                               200, 201, 202, 203, 250, 251, 252, 253, 254, 255, 7, 9}};
  write_idx(scratch("rt.idx"), a);
  const IdxArray b = read_idx(scratch("rt.idx"), kIdxImagesMagic);
  EXPECT_EQ(a.dims, b.dims);
  EXPECT_EQ(a.bytes, b.bytes);
  // Header bytes are big-endian.
  std::ifstream in(scratch("rt.idx"), std::ios::binary);
  std::vector<unsigned char> head(8);
  in.read(reinterpret_cast<char*>(head.data()), 8);
  EXPECT_EQ(head, (std::vector<unsigned char>{0, 0, 8, 3, 0, 0, 0, 3}));
}

TEST(Idx, ErrorsAreTyped) {
  tiny_mnist(scratch("i"), scratch("l"), 20);
  EXPECT_EQ(code_of([] { mnist_load_idx(scratch("l"), scratch("i")); }), ErrorCode::BadMagic);
  EXPECT_EQ(code_of([] { mnist_load_idx(scratch("nope"), scratch("l")); }),
            ErrorCode::DataMissing);
  write_bytes(scratch("short"), {0, 0, 8, 3, 0, 0, 0, 2, 0, 0});
  EXPECT_EQ(code_of([] { read_idx(scratch("short"), kIdxImagesMagic); }),
            ErrorCode::TruncatedFile);
  write_bytes(scratch("short2"), {0, 0, 8, 1, 0, 0, 0, 5, 1, 2});
  EXPECT_EQ(code_of([] { read_idx(scratch("short2"), kIdxLabelsMagic); }),
            ErrorCode::TruncatedFile);
  tiny_mnist(scratch("i2"), scratch("l2"), 30);
  EXPECT_EQ(code_of([] { mnist_load_idx(scratch("i2"), scratch("l")); }),
            ErrorCode::CountMismatch);
}

TEST(Mnist, TinyFileScalingAndOneHot) {
  tiny_mnist(scratch("i"), scratch("l"), 20);
  const ImageDataset ds = mnist_load_idx(scratch("i"), scratch("l"));
  ASSERT_EQ(ds.data.size(), 20u);
  ASSERT_EQ(ds.data.input_dim(), 784u);
  ASSERT_EQ(ds.data.output_dim(), 10u);
  EXPECT_EQ(ds.data.inputs(0, 783), 1.0);
  for (std::size_t i = 0; i < 20; ++i) {
    EXPECT_DOUBLE_EQ(ds.data.inputs(i, 0), (25.0 * (i % 10) + 5) / 255.0);
    double sum = 0;
    for (std::size_t c = 0; c < 10; ++c) sum += ds.data.targets(i, c);
    EXPECT_EQ(sum, 1.0);
    EXPECT_EQ(ds.data.targets(i, i % 10), 1.0);
  }
}

TEST(Mnist, BundledSubsetLoadsAndNormalizes) {
  const fs::path dir = fs::path(QUADMECH_SOURCE_DIR) / "data" / "mnist-subset";
  const ImageDataset ds =
      mnist_load_idx(dir / "images-idx3-ubyte", dir / "labels-idx1-ubyte");
  ASSERT_EQ(ds.data.size(), 5000u);
  ASSERT_EQ(ds.data.input_dim(), 784u);
  const auto [lo, hi] = std::ranges::minmax(ds.data.inputs.data());
  EXPECT_EQ(lo, 0.0);
  EXPECT_EQ(hi, 1.0);
  const ImageDataset norm = corrupt_and_normalize(ds, 0.0, 0.1307, 0.3081, 1);
  double s = 0;
  for (double v : norm.data.inputs.data()) s += v;
  EXPECT_NEAR(s / static_cast<double>(norm.data.inputs.data().size()), 0.0, 0.02);
  // Every class is represented.
  std::vector<int> per_class(10, 0);
  for (std::size_t i = 0; i < ds.data.size(); ++i)
    for (std::size_t c = 0; c < 10; ++c) per_class[c] += ds.data.targets(i, c) == 1.0;
  for (int n : per_class) EXPECT_GT(n, 300);
}

TEST(Corrupt, IdentityAndNoiseMoments) {
  tiny_mnist(scratch("i"), scratch("l"), 50);
  const ImageDataset ds = mnist_load_idx(scratch("i"), scratch("l"));
  EXPECT_EQ(corrupt_and_normalize(ds, 0.0, 0.0, 1.0, 3).data, ds.data);
  const ImageDataset noisy = corrupt_and_normalize(ds, 0.5, 0.0, 1.0, 3);
  double s = 0, s2 = 0;
  const std::size_t n = ds.data.inputs.data().size();
  for (std::size_t k = 0; k < n; ++k) {
    const double e = noisy.data.inputs.data()[k] - ds.data.inputs.data()[k];
    s += e;
    s2 += e * e;
  }
  EXPECT_NEAR(s / n, 0.0, 4 * 0.5 / std::sqrt(n));
  EXPECT_NEAR(std::sqrt(s2 / n), 0.5, 0.01);
  EXPECT_EQ(noisy.provenance.noise_std, 0.5);
  EXPECT_EQ(corrupt_and_normalize(ds, 0.5, 0.0, 1.0, 3).data, noisy.data);
  EXPECT_THROW(corrupt_and_normalize(ds, 0.0, 0.0, 0.0, 3), Error);
}

TEST(Split, PermutationStratificationDisjointness) {
  tiny_mnist(scratch("i"), scratch("l"), 1200);
  const LabeledDataset d = mnist_load_idx(scratch("i"), scratch("l")).data;
  std::vector<std::size_t> all;
  const LabeledDataset perm = split_and_subset(d, d.size(), 5, false, &all);
  std::vector<std::size_t> sorted = all;
  std::ranges::sort(sorted);
  for (std::size_t i = 0; i < sorted.size(); ++i) EXPECT_EQ(sorted[i], i);
  EXPECT_EQ(perm.size(), d.size());

  std::vector<std::size_t> chosen;
  const LabeledDataset strat = split_and_subset(d, 1000, 6, true, &chosen);
  std::vector<int> per_class(10, 0);
  for (std::size_t i = 0; i < strat.size(); ++i)
    for (std::size_t c = 0; c < 10; ++c) per_class[c] += strat.targets(i, c) == 1.0;
  for (int n : per_class) EXPECT_EQ(n, 100);

  const LabeledDataset rest = complement(d, chosen);
  EXPECT_EQ(rest.size(), 200u);
  const std::set<std::size_t> taken(chosen.begin(), chosen.end());
  EXPECT_EQ(taken.size(), chosen.size());
  std::size_t rest_count = 0;
  for (std::size_t i = 0; i < d.size(); ++i) rest_count += !taken.count(i);
  EXPECT_EQ(rest_count, rest.size());
  EXPECT_EQ(split_and_subset(d, 300, 9), split_and_subset(d, 300, 9));
  EXPECT_EQ(code_of([&] { split_and_subset(d, 1201, 1); }), ErrorCode::InsufficientData);
  // Class 9 absent: one per class cannot be met.
  std::vector<std::size_t> no_nines;
  for (std::size_t i = 0; i < 20; ++i)
    if (i % 10 != 9) no_nines.push_back(i);
  EXPECT_EQ(code_of([&] { split_and_subset(d.subset(no_nines), 10, 1, true); }),
            ErrorCode::InsufficientData);
}

TEST(TabularCsv, LoadsAndValidates) {
  {
    std::ofstream out(scratch("t.csv"));
    out << "a, b ,label\n0.5,1e-3,1\n-2,3,0\n\n7,8,1\n";
  }
  const LabeledDataset d = load_tabular_csv(scratch("t.csv"));
  ASSERT_EQ(d.size(), 3u);
  EXPECT_EQ(d.input_dim(), 2u);
  EXPECT_EQ(d.output_dim(), 2u);
  EXPECT_EQ(d.inputs(0, 1), 1e-3);
  EXPECT_EQ(d.targets(1, 0), 1.0);
  EXPECT_EQ(d.targets(2, 1), 1.0);
  {
    std::ofstream out(scratch("bad.csv"));
    out << "a,b\n1,2\n";
  }
  EXPECT_EQ(code_of([] { load_tabular_csv(scratch("bad.csv")); }), ErrorCode::SchemaMismatch);
  {
    std::ofstream out(scratch("bad2.csv"));
    out << "a,label\n1,x\n";
  }
  EXPECT_EQ(code_of([] { load_tabular_csv(scratch("bad2.csv")); }), ErrorCode::SchemaMismatch);
  EXPECT_EQ(code_of([] { load_tabular_csv(scratch("missing.csv")); }), ErrorCode::DataMissing);
}
