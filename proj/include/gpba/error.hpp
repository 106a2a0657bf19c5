#pragma once

#include <stdexcept>
#include <string>

namespace gpba {

enum class ErrorCode {
  kInvalidInterval,
  kInvalidProbability,
  kInvalidSplit,
  kDegenerateUpdate,
  kInvalidAccuracy,
  kInvalidCount,
  kUnsupportedBatch,
  kConfig,
  kDomain,
  kParse,
};

const char* to_string(ErrorCode code) noexcept;

/// Every recoverable failure in the library is reported through this type;
/// `code()` lets callers branch without parsing the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace gpba
