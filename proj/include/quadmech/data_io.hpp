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

// On-disk datasets: IDX (MNIST) images and labels, and a generic CSV with a
// header row and an integer "label" column.

#pragma once

#include <algorithm>
#include <charconv>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "quadmech/dataset.hpp"
#include "quadmech/error.hpp"
#include "quadmech/linalg.hpp"
#include "quadmech/random.hpp"

namespace quadmech {

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;
inline constexpr std::size_t kMnistClasses = 10;

struct IdxArray {
  std::vector<std::uint32_t> dims;
  std::vector<std::uint8_t> bytes;
};

namespace detail {

inline std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::DataMissing, "file not found: " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::uint32_t read_be32(const std::vector<std::uint8_t>& b, std::size_t at) {
  return (std::uint32_t{b[at]} << 24) | (std::uint32_t{b[at + 1]} << 16) |
         (std::uint32_t{b[at + 2]} << 8) | std::uint32_t{b[at + 3]};
}

inline void write_be32(std::ofstream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                     static_cast<char>(v >> 8), static_cast<char>(v)};
  out.write(b, 4);
}

}  // namespace detail

// Unsigned-byte IDX file whose magic must equal `expected_magic`.
inline IdxArray read_idx(const std::filesystem::path& path, std::uint32_t expected_magic) {
  const auto raw = detail::read_file(path);
  require(raw.size() >= 4, ErrorCode::TruncatedFile, path.string() + ": no header");
  const std::uint32_t magic = detail::read_be32(raw, 0);
  require(magic == expected_magic, ErrorCode::BadMagic,
          path.string() + ": magic " + std::to_string(magic) + ", expected " +
              std::to_string(expected_magic));
  const std::size_t ndim = magic & 0xff;
  const std::size_t header = 4 + 4 * ndim;
  require(raw.size() >= header, ErrorCode::TruncatedFile, path.string() + ": short header");
  IdxArray out;
  std::size_t count = 1;
  for (std::size_t d = 0; d < ndim; ++d) {
    out.dims.push_back(detail::read_be32(raw, 4 + 4 * d));
    count *= out.dims.back();
  }
  require(raw.size() - header >= count, ErrorCode::TruncatedFile,
          path.string() + ": expected " + std::to_string(count) + " data bytes, found " +
              std::to_string(raw.size() - header));
  out.bytes.assign(raw.begin() + static_cast<std::ptrdiff_t>(header),
                   raw.begin() + static_cast<std::ptrdiff_t>(header + count));
  return out;
}

inline void write_idx(const std::filesystem::path& path, const IdxArray& arr) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorCode::IoError, "cannot write " + path.string());
  detail::write_be32(out, 0x00000800u | static_cast<std::uint32_t>(arr.dims.size()));
  for (std::uint32_t d : arr.dims) detail::write_be32(out, d);
  out.write(reinterpret_cast<const char*>(arr.bytes.data()),
            static_cast<std::streamsize>(arr.bytes.size()));
  require(static_cast<bool>(out), ErrorCode::IoError, "short write to " + path.string());
}

struct ImageProvenance {
  std::string images_file;
  std::string labels_file;
  double noise_std = 0.0;
  double norm_mean = 0.0;
  double norm_std = 1.0;
};

struct ImageDataset {
  LabeledDataset data;  // classification, one-hot targets
  ImageProvenance provenance;
};

inline ImageDataset mnist_load_idx(const std::filesystem::path& images_path,
                                   const std::filesystem::path& labels_path) {
  const IdxArray images = read_idx(images_path, kIdxImagesMagic);
  const IdxArray labels = read_idx(labels_path, kIdxLabelsMagic);
  const std::size_t n = images.dims[0];
  require(labels.dims[0] == n, ErrorCode::CountMismatch,
          std::to_string(n) + " images but " + std::to_string(labels.dims[0]) + " labels");
  const std::size_t d = std::size_t{images.dims[1]} * images.dims[2];
  Matrix x(n, d);
  for (std::size_t k = 0; k < n * d; ++k) x.data()[k] = images.bytes[k] / 255.0;
  Matrix y(n, kMnistClasses);
  for (std::size_t i = 0; i < n; ++i) {
    require(labels.bytes[i] < kMnistClasses, ErrorCode::InvalidTarget,
            "label " + std::to_string(labels.bytes[i]) + " out of range");
    y(i, labels.bytes[i]) = 1.0;
  }
  return ImageDataset{LabeledDataset(Task::Classification, std::move(x), std::move(y)),
                      ImageProvenance{images_path.string(), labels_path.string()}};
}

// pixel <- (pixel + N(0, noise_std²) - mean) / std, one draw per pixel.
inline ImageDataset corrupt_and_normalize(const ImageDataset& ds, double noise_std, double mean,
                                          double std, std::uint64_t seed) {
  require(std > 0.0, ErrorCode::InvalidInputs, "normalization std must be > 0");
  require(noise_std >= 0.0, ErrorCode::InvalidInputs, "noise_std must be >= 0");
  ImageDataset out = ds;
  Rng rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (double& v : out.data.inputs.data()) {
    const double e = noise_std > 0.0 ? noise_std * noise(rng) : 0.0;
    v = (v + e - mean) / std;
  }
  out.provenance.noise_std = noise_std;
  out.provenance.norm_mean = mean;
  out.provenance.norm_std = std;
  return out;
}

// Header row of column names; float features; integer "label" column
// (one-hot encoded over 0..max label, so binary labels give m = 2).
inline LabeledDataset load_tabular_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::DataMissing, "file not found: " + path.string());
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorCode::EmptyDataset,
          path.string() + " is empty");
  auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      const auto b = cell.find_first_not_of(" \t\r");
      const auto e = cell.find_last_not_of(" \t\r");
      cells.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
    }
    return cells;
  };
  const auto header = split(line);
  const auto label_it = std::find(header.begin(), header.end(), "label");
  require(label_it != header.end(), ErrorCode::SchemaMismatch,
          path.string() + ": no 'label' column");
  const auto label_col = static_cast<std::size_t>(label_it - header.begin());
  const std::size_t d = header.size() - 1;

  std::vector<double> features;
  std::vector<long> labels;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split(line);
    require(cells.size() == header.size(), ErrorCode::SchemaMismatch,
            path.string() + ":" + std::to_string(line_no) + ": wrong column count");
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const char* first = cells[c].data();
      const char* last = first + cells[c].size();
      if (c == label_col) {
        long v = 0;
        const auto r = std::from_chars(first, last, v);
        require(r.ec == std::errc{} && r.ptr == last && v >= 0, ErrorCode::SchemaMismatch,
                path.string() + ":" + std::to_string(line_no) + ": bad label");
        labels.push_back(v);
      } else {
        double v = 0.0;
        const auto r = std::from_chars(first, last, v);
        require(r.ec == std::errc{} && r.ptr == last, ErrorCode::SchemaMismatch,
                path.string() + ":" + std::to_string(line_no) + ": bad feature");
        features.push_back(v);
      }
    }
  }
  require(!labels.empty(), ErrorCode::EmptyDataset, path.string() + " has no rows");
  const std::size_t m = static_cast<std::size_t>(*std::max_element(labels.begin(), labels.end())) + 1;
  Matrix y(labels.size(), std::max<std::size_t>(m, 2));
  for (std::size_t i = 0; i < labels.size(); ++i) y(i, static_cast<std::size_t>(labels[i])) = 1.0;
  return LabeledDataset(Task::Classification, Matrix(labels.size(), d, std::move(features)),
                        std::move(y));
}

}  // namespace quadmech
