#include "gpba/error.hpp"

namespace gpba {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kInvalidInterval: return "invalid interval";
    case ErrorCode::kInvalidProbability: return "invalid probability";
    case ErrorCode::kInvalidSplit: return "invalid split";
    case ErrorCode::kDegenerateUpdate: return "degenerate update";
    case ErrorCode::kInvalidAccuracy: return "invalid accuracy";
    case ErrorCode::kInvalidCount: return "invalid count";
    case ErrorCode::kUnsupportedBatch: return "unsupported batch";
    case ErrorCode::kConfig: return "config error";
    case ErrorCode::kDomain: return "domain error";
    case ErrorCode::kParse: return "parse error";
  }
  return "error";
}

}  // namespace gpba
