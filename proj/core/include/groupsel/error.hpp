#pragma once

#include <stdexcept>
#include <string>

namespace groupsel {

enum class ErrorCode {
  kConfigSchema = 2,
  kBoundViolation = 3,
  kLadderNotIncreasing = 4,
  kInitialMass = 5,
  kContract = 6,
  kOverflow = 7,
  kCfl = 8,
  kSingularDrift = 9,
  kMassUnderflow = 10,
  kUnknownSelector = 11,
  kIo = 12,
  kStudyFailed = 13,
};

const char* to_string(ErrorCode code);

// Single exception type for the library; the code distinguishes failure
// classes and doubles as the CLI exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace groupsel
