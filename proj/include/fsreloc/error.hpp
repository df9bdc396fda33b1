// Copyright 2026 The fsreloc Authors
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

namespace fsreloc {

/// Failure categories raised as exceptions. Outcomes that are ordinary values
/// (a point behind the camera, a degenerate minimal sample, a rejected
/// hypothesis) are returned, not thrown.
enum class ErrorCode {
  InvalidArgument,
  NumericallyDegenerate,
  EmptyOverlap,
  DivergedLoss,
  EmptySamples,
  DimensionMismatch,
  HypothesisStarvation,
  MissingFile,
  MalformedPose,
  BadFormat,
  EmptyResults,
  ConfigError,
};

inline const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NumericallyDegenerate: return "NumericallyDegenerate";
    case ErrorCode::EmptyOverlap: return "EmptyOverlap";
    case ErrorCode::DivergedLoss: return "DivergedLoss";
    case ErrorCode::EmptySamples: return "EmptySamples";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::HypothesisStarvation: return "HypothesisStarvation";
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::MalformedPose: return "MalformedPose";
    case ErrorCode::BadFormat: return "BadFormat";
    case ErrorCode::EmptyResults: return "EmptyResults";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

inline void require(bool condition, const std::string& what,
                    ErrorCode code = ErrorCode::InvalidArgument) {
  if (!condition) throw Error(code, what);
}

}  // namespace fsreloc
