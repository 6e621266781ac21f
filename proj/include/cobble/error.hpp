#pragma once

#include <stdexcept>
#include <string>

namespace cobble {

enum class ErrorKind {
  SyntaxError,           // bad surface text; carries line/column
  DuplicateDeclaration,
  UnknownIdentifier,
  TypeMismatch,
  ChoiceSubnormMismatch,
  NonHermitianPolyBase,
  AllTermsCancel,
  DimensionMismatch,
  OversizeDenotation,
  OversizeCircuit,
  StepLimitExceeded,
  QsvtInadmissible,
  NotFixedParity,
  SupNormExceedsOne,
  NoConvergence,
  UnboundOracle,
  InternalArity,
  VerificationFailed,
  UsageError,
};

// Single exception type for the whole pipeline. `path` identifies the
// offending subexpression for semantic errors ("main.terms[1].factors[0]").
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string message, std::string path = {})
      : std::runtime_error(path.empty() ? message : message + " (at " + path + ")"),
        kind_(kind),
        path_(std::move(path)) {}

  ErrorKind kind() const { return kind_; }
  const std::string& path() const { return path_; }

 private:
  ErrorKind kind_;
  std::string path_;
};

const char* error_kind_name(ErrorKind kind);

}  // namespace cobble
