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

#include "cradle/error.hpp"

namespace cradle {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMissingDesign: return "MissingDesign";
    case ErrorCode::kMissingTestbench: return "MissingTestbench";
    case ErrorCode::kAmbiguousTop: return "AmbiguousTop";
    case ErrorCode::kEmptyDesign: return "EmptyDesign";
    case ErrorCode::kInvalidDesign: return "InvalidDesign";
    case ErrorCode::kCyclicHierarchy: return "CyclicHierarchy";
    case ErrorCode::kParseGaveNothing: return "ParseGaveNothing";
    case ErrorCode::kUndefinedReduction: return "UndefinedReduction";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kToolMissing: return "ToolMissing";
    case ErrorCode::kCompileError: return "CompileError";
    case ErrorCode::kTimeout: return "Timeout";
    case ErrorCode::kStatsUnparseable: return "StatsUnparseable";
    case ErrorCode::kPnrFailed: return "PnrFailed";
    case ErrorCode::kUtilizationNotFound: return "UtilizationNotFound";
    case ErrorCode::kFixtureMiss: return "FixtureMiss";
    case ErrorCode::kAuthError: return "AuthError";
    case ErrorCode::kRateLimited: return "RateLimited";
    case ErrorCode::kScriptExhausted: return "ScriptExhausted";
    case ErrorCode::kMalformedResponse: return "MalformedResponse";
    case ErrorCode::kGatewayError: return "GatewayError";
    case ErrorCode::kPromptTooLarge: return "PromptTooLarge";
    case ErrorCode::kUnparseablePlan: return "UnparseablePlan";
    case ErrorCode::kNoCodeBlock: return "NoCodeBlock";
    case ErrorCode::kInterfaceChanged: return "InterfaceChanged";
    case ErrorCode::kRefFailsVerification: return "RefFailsVerification";
    case ErrorCode::kUnknownCommand: return "UnknownCommand";
    case ErrorCode::kBadState: return "BadState";
    case ErrorCode::kNoSuchVariant: return "NoSuchVariant";
    case ErrorCode::kSessionNotFound: return "SessionNotFound";
    case ErrorCode::kCorruptLog: return "CorruptLog";
    case ErrorCode::kEmptySuite: return "EmptySuite";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kPortInUse: return "PortInUse";
  }
  return "Unknown";
}

std::optional<ErrorCode> ErrorCodeFromName(std::string_view name) {
  for (int i = 0; i <= static_cast<int>(ErrorCode::kPortInUse); ++i) {
    auto code = static_cast<ErrorCode>(i);
    if (ErrorCodeName(code) == name) return code;
  }
  return std::nullopt;
}

bool IsGatewayError(ErrorCode code) {
  switch (code) {
    case ErrorCode::kAuthError:
    case ErrorCode::kRateLimited:
    case ErrorCode::kScriptExhausted:
    case ErrorCode::kMalformedResponse:
    case ErrorCode::kGatewayError:
      return true;
    default:
      return false;
  }
}

}  // namespace cradle
