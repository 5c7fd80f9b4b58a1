#pragma once

#include <stdexcept>
#include <string>

namespace mmslam {

enum class ErrorCode {
  kInvalidArgument,
  kEmptyInput,
  kDegenerate,
  kDimensionMismatch,
  kNoOverlap,
  kDuplicateId,
  kUnknownNode,
  kGaugeFreedom,
  kSingular,
  kIdMismatch,
  kOutOfBounds,
  kIo,
  kConfig,
  kPrecondition,
};

const char* to_string(ErrorCode code);

// Library-wide exception. Validation outcomes that are part of normal
// operation (RANSAC rejection, failed gates) are reported through result
// structs instead.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace mmslam
