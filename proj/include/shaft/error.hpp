#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace shaft {

/// Every failure the library reports. The CLI maps each code to its own exit
/// status, so the numeric values are part of the command-line contract.
enum class ErrorCode : int {
  Usage = 2,
  Io = 3,
  MissingColumn = 10,
  NonNumericCell = 11,
  EmptyFile = 12,
  RaggedRow = 13,
  TooShort = 14,
  BadId = 15,
  OutOfRange = 20,
  BadLength = 30,
  NonFinite = 31,
  TooFewRows = 32,
  ZeroVariance = 33,
  BadParams = 34,
  SingleClass = 40,
  ShapeMismatch = 41,
  DivergedLoss = 42,
  EmptyInput = 43,
  EmptySequence = 44,
  MissingDataset = 50,
  TooFew = 51,
  EmptyInterval = 52,
  MissingClass = 53,
  VersionMismatch = 60,
  BadModel = 61,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace shaft
