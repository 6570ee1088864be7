#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace geoflow {

enum class ErrorCode {
  Syntax,
  DeltaTooSmall,
  UnknownVertex,
  DuplicateRay,
  InvalidModel,
  UnknownEdge,
  UnknownState,
  NotIrreducible,
  NotLattice,
  UnsupportedMode,
  SingularCompactBlock,
  Singular,
  InadmissiblePath,
  EmptySamples,
  InvalidArgument,
};

std::string_view to_string(ErrorCode code);

/// Library-wide exception. `line` is the 1-based model-file line when the
/// error originates in a model file, 0 otherwise.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, int line = 0)
      : std::runtime_error(message), code_(code), line_(line) {}

  ErrorCode code() const noexcept { return code_; }
  int line() const noexcept { return line_; }

 private:
  ErrorCode code_;
  int line_;
};

}  // namespace geoflow
