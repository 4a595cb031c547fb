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

// Parameter checkpoints: one JSON header line {spec, p, seed}, then p
// little-endian float64 values.

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>

#include "json.hpp"
#include "quadmech/error.hpp"
#include "quadmech/model.hpp"

namespace quadmech {

inline nlohmann::json spec_to_json(const ModelSpec& spec) {
  return {{"input_dim", spec.input_dim},
          {"output_dim", spec.output_dim},
          {"hidden", spec.hidden},
          {"activation", std::string(activation_name(spec.activation))}};
}

inline ModelSpec spec_from_json(const nlohmann::json& j) {
  try {
    ModelSpec spec;
    spec.input_dim = j.at("input_dim").get<std::size_t>();
    spec.output_dim = j.at("output_dim").get<std::size_t>();
    spec.hidden = j.value("hidden", std::vector<std::size_t>{});
    spec.activation = parse_activation(j.value("activation", std::string("relu")));
    spec.validate();
    return spec;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ConfigInvalid, std::string("model spec: ") + e.what());
  }
}

struct Checkpoint {
  ParamVector params;
  std::uint64_t seed = 0;
};

namespace detail {

inline std::uint64_t to_little_endian(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    std::uint64_t r = 0;
    for (int i = 0; i < 8; ++i) r = (r << 8) | ((v >> (8 * i)) & 0xff);
    return r;
  }
  return v;
}

}  // namespace detail

inline void save_checkpoint(const std::filesystem::path& path, const ParamVector& params,
                            std::uint64_t seed) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorCode::IoError, "cannot write " + path.string());
  const nlohmann::json header = {
      {"spec", spec_to_json(params.spec())}, {"p", params.size()}, {"seed", seed}};
  out << header.dump() << '\n';
  for (double v : params.values()) {
    const std::uint64_t bits = detail::to_little_endian(std::bit_cast<std::uint64_t>(v));
    char buf[8];
    std::memcpy(buf, &bits, 8);
    out.write(buf, 8);
  }
  require(static_cast<bool>(out), ErrorCode::IoError, "short write to " + path.string());
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::DataMissing, "checkpoint not found: " + path.string());
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorCode::TruncatedFile,
          "empty checkpoint " + path.string());
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::SchemaMismatch, "checkpoint header: " + std::string(e.what()));
  }
  const ModelSpec spec = spec_from_json(header.at("spec"));
  const auto p = header.at("p").get<std::size_t>();
  require(p == spec.param_count(), ErrorCode::SchemaMismatch,
          "checkpoint p=" + std::to_string(p) + " but spec implies " +
              std::to_string(spec.param_count()));
  Vector values(p);
  for (double& v : values) {
    char buf[8];
    in.read(buf, 8);
    require(in.gcount() == 8, ErrorCode::TruncatedFile, "checkpoint ends early: " + path.string());
    std::uint64_t bits;
    std::memcpy(&bits, buf, 8);
    v = std::bit_cast<double>(detail::to_little_endian(bits));
  }
  return Checkpoint{ParamVector(spec, std::move(values)), header.value("seed", std::uint64_t{0})};
}

}  // namespace quadmech
