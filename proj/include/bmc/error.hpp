#pragma once

#include <stdexcept>
#include <string>

namespace bmc {

enum class ErrorCode {
  invalid_argument,   // malformed input to a library call
  invalid_node,       // node id below the root
  insufficient_depth, // population too shallow for the requested average
  config,             // invalid run or experiment configuration
  data,               // incomplete or malformed observed data
  degenerate,         // zero empirical variance, zero residual variance, ...
  not_ergodic,        // reducible, periodic or not geometrically ergodic chain
  resource_guard,     // enumeration or simulation size over its limit
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// CLI exit status for an error category: 2 config, 3 data, 4 degenerate.
inline int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::data:
      return 3;
    case ErrorCode::degenerate:
      return 4;
    default:
      return 2;
  }
}

}  // namespace bmc
