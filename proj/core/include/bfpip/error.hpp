// Copyright 2025-present the bfpip authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
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
#include <utility>
#include <vector>

namespace bfpip {

enum class ErrorKind {
  kFileNotFound,
  kSchemaViolation,
  kDuplicateInstanceId,
  kMissingAnnotationField,
  kUnknownSplitVideo,
  kNoEvaluableInstances,
  kInsufficientHistory,
  kMissingFrame,
  kDecoderFailure,
  kEncoderFailure,
  kBoxOutOfBounds,
  kMissingAnnotation,
  kTemplateVariableUnbound,
  kRateLimitExhausted,
  kTransportFailure,
  kVendorRejection,
  kMalformedResponse,
  kEmptyRecordSet,
  kLengthMismatch,
  kUnsupportedFormat,
  kUnknownKey,
  kInvalidValue,
  kMissingFile,
  kEvaluationFailed,
  kInternal,
};

inline std::string_view error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kFileNotFound: return "FileNotFound";
    case ErrorKind::kSchemaViolation: return "SchemaViolation";
    case ErrorKind::kDuplicateInstanceId: return "DuplicateInstanceId";
    case ErrorKind::kMissingAnnotationField: return "MissingAnnotationField";
    case ErrorKind::kUnknownSplitVideo: return "UnknownSplitVideo";
    case ErrorKind::kNoEvaluableInstances: return "NoEvaluableInstances";
    case ErrorKind::kInsufficientHistory: return "InsufficientHistory";
    case ErrorKind::kMissingFrame: return "MissingFrame";
    case ErrorKind::kDecoderFailure: return "DecoderFailure";
    case ErrorKind::kEncoderFailure: return "EncoderFailure";
    case ErrorKind::kBoxOutOfBounds: return "BoxOutOfBounds";
    case ErrorKind::kMissingAnnotation: return "MissingAnnotation";
    case ErrorKind::kTemplateVariableUnbound: return "TemplateVariableUnbound";
    case ErrorKind::kRateLimitExhausted: return "RateLimitExhausted";
    case ErrorKind::kTransportFailure: return "TransportFailure";
    case ErrorKind::kVendorRejection: return "VendorRejection";
    case ErrorKind::kMalformedResponse: return "MalformedResponse";
    case ErrorKind::kEmptyRecordSet: return "EmptyRecordSet";
    case ErrorKind::kLengthMismatch: return "LengthMismatch";
    case ErrorKind::kUnsupportedFormat: return "UnsupportedFormat";
    case ErrorKind::kUnknownKey: return "UnknownKey";
    case ErrorKind::kInvalidValue: return "InvalidValue";
    case ErrorKind::kMissingFile: return "MissingFile";
    case ErrorKind::kEvaluationFailed: return "EvaluationFailed";
    case ErrorKind::kInternal: return "Internal";
  }
  return "Internal";
}

/// Single exception type for every failure the harness reports. `kind`
/// identifies the contract violation; `details` carries the full list of
/// individual violations when one operation detects several at once
/// (e.g. manifest validation).
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string message, std::vector<std::string> details = {})
      : std::runtime_error(compose(kind, message, details)),
        kind_(kind),
        message_(std::move(message)),
        details_(std::move(details)) {}

  ErrorKind kind() const { return kind_; }
  const std::string& message() const { return message_; }
  const std::vector<std::string>& details() const { return details_; }

  /// Returns a copy with `context` prepended to the message. Used when
  /// propagating backend/clip errors annotated with the instance and config
  /// they occurred under.
  Error with_context(const std::string& context) const {
    return Error(kind_, context + ": " + message_, details_);
  }

 private:
  static std::string compose(ErrorKind kind, const std::string& message,
                             const std::vector<std::string>& details) {
    std::string out;
    out.append(error_kind_name(kind));
    out.append(": ");
    out.append(message);
    for (const auto& d : details) {
      out.append("\n  - ");
      out.append(d);
    }
    return out;
  }

  ErrorKind kind_;
  std::string message_;
  std::vector<std::string> details_;
};

}  // namespace bfpip
