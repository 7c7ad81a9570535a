// Copyright 2026 The fidnet Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
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

namespace fidnet {

enum class ErrorCode {
  InvalidArgument,
  UnsupportedState,
  DimensionMismatch,
  LengthMismatch,
  NonPSDInput,
  NegativeRadicand,
  InfeasibleSpec,
  TooFewStates,
  ZeroTotal,
  KOutOfRange,
  BadEdges,
  IoError,
  SchemaMismatch,
  CorruptRecord,
  ShapeMismatch,
  LabelOutOfRange,
  EmptyDataset,
  NonFiniteLoss,
  InsufficientSamples,
  MissingModel,
  LayoutMismatch,
  DegenerateWeight,
};

std::string_view to_string(ErrorCode code);

/// Single exception type for the library; callers dispatch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::UnsupportedState: return "UnsupportedState";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::NonPSDInput: return "NonPSDInput";
    case ErrorCode::NegativeRadicand: return "NegativeRadicand";
    case ErrorCode::InfeasibleSpec: return "InfeasibleSpec";
    case ErrorCode::TooFewStates: return "TooFewStates";
    case ErrorCode::ZeroTotal: return "ZeroTotal";
    case ErrorCode::KOutOfRange: return "KOutOfRange";
    case ErrorCode::BadEdges: return "BadEdges";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::CorruptRecord: return "CorruptRecord";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::InsufficientSamples: return "InsufficientSamples";
    case ErrorCode::MissingModel: return "MissingModel";
    case ErrorCode::LayoutMismatch: return "LayoutMismatch";
    case ErrorCode::DegenerateWeight: return "DegenerateWeight";
  }
  return "Unknown";
}

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace fidnet
