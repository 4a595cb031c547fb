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

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace quadmech {

enum class ErrorCode {
  DimensionMismatch,
  NotPositiveDefinite,
  NotConverged,
  RankDeficient,
  DimensionCap,
  InvalidTarget,
  EmptyDataset,
  TaskMismatch,
  InvalidInputs,
  BudgetExceeded,
  SingularCurvature,
  ProposalBudgetExceeded,
  InfeasibleState,
  EmptyInterval,
  DivergedLoss,
  BudgetInfeasible,
  BadMagic,
  TruncatedFile,
  CountMismatch,
  InsufficientData,
  InsufficientSamples,
  DegenerateSets,
  InfeasibleThreshold,
  ConfigInvalid,
  DataMissing,
  SchemaMismatch,
  IoError,
};

constexpr std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::NotConverged: return "NotConverged";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::DimensionCap: return "DimensionCap";
    case ErrorCode::InvalidTarget: return "InvalidTarget";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::TaskMismatch: return "TaskMismatch";
    case ErrorCode::InvalidInputs: return "InvalidInputs";
    case ErrorCode::BudgetExceeded: return "BudgetExceeded";
    case ErrorCode::SingularCurvature: return "SingularCurvature";
    case ErrorCode::ProposalBudgetExceeded: return "ProposalBudgetExceeded";
    case ErrorCode::InfeasibleState: return "InfeasibleState";
    case ErrorCode::EmptyInterval: return "EmptyInterval";
    case ErrorCode::DivergedLoss: return "DivergedLoss";
    case ErrorCode::BudgetInfeasible: return "BudgetInfeasible";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::CountMismatch: return "CountMismatch";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::InsufficientSamples: return "InsufficientSamples";
    case ErrorCode::DegenerateSets: return "DegenerateSets";
    case ErrorCode::InfeasibleThreshold: return "InfeasibleThreshold";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::DataMissing: return "DataMissing";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

// Every failure in the library surfaces as an Error carrying a stable code so
// callers (and tests) can branch on the kind without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) fail(code, message);
}

}  // namespace quadmech
