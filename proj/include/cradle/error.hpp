// Copyright 2026 The cradle Authors
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

#ifndef CRADLE_ERROR_HPP_
#define CRADLE_ERROR_HPP_

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace cradle {

// Closed set of failure codes shared by every module. The service maps these
// onto HTTP statuses, so adding one means touching service.cpp too.
enum class ErrorCode {
  // design model
  kMissingDesign,
  kMissingTestbench,
  kAmbiguousTop,
  kEmptyDesign,
  kInvalidDesign,
  kCyclicHierarchy,
  kParseGaveNothing,
  kUndefinedReduction,
  kInvalidArgument,
  // eda adapters
  kToolMissing,
  kCompileError,
  kTimeout,
  kStatsUnparseable,
  kPnrFailed,
  kUtilizationNotFound,
  kFixtureMiss,
  // llm gateway
  kAuthError,
  kRateLimited,
  kScriptExhausted,
  kMalformedResponse,
  kGatewayError,  // transient failures that outlived the retries
  // agent core
  kPromptTooLarge,
  kUnparseablePlan,
  kNoCodeBlock,
  kInterfaceChanged,
  kRefFailsVerification,
  // session
  kUnknownCommand,
  kBadState,
  kNoSuchVariant,
  kSessionNotFound,
  kCorruptLog,
  // bench / io / service
  kEmptySuite,
  kIoError,
  kPortInUse,
};

std::string_view ErrorCodeName(ErrorCode code);
std::optional<ErrorCode> ErrorCodeFromName(std::string_view name);

// True for the failures a chat backend can raise.
bool IsGatewayError(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace cradle

#endif  // CRADLE_ERROR_HPP_
