// include/ppgvc/error.h

// Copyright 2026  The ppgvc Authors

// See ../../COPYING for clarification regarding multiple authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef PPGVC_ERROR_H_
#define PPGVC_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace ppgvc {

enum class ErrorCode {
  kEmptyInput,
  kFrameCountMismatch,
  kInvalidF0,
  kParseError,
  kInvalidValue,
  kLanguageMismatch,
  kDuplicateLanguage,
  kIndexOutOfRange,
  kInvalidConfig,
  kDimensionMismatch,
  kDivergenceDetected,
  kMissingPpg,
  kMissingReference,
  kIoError,
};

std::string_view ErrorCodeName(ErrorCode code);

/// Every domain failure in the library is reported as an Error carrying a
/// code; callers that need to branch on the failure kind inspect code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string &what)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + what),
        code_(code),
        detail_(what) {}

  ErrorCode code() const noexcept { return code_; }
  // Message without the code name.
  const std::string &detail() const noexcept { return detail_; }
  // Same code, message prefixed with e.g. an utterance id.
  Error WithContext(const std::string &context) const {
    return Error(code_, context + ": " + detail_);
  }

 private:
  ErrorCode code_;
  std::string detail_;
};

[[noreturn]] inline void Fail(ErrorCode code, const std::string &what) {
  throw Error(code, what);
}

}  // namespace ppgvc

#endif  // PPGVC_ERROR_H_
