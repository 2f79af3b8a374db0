#pragma once

#include <stdexcept>
#include <string>

namespace pqfl {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input violates an operation's precondition (non-finite value, bad sizes, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A field cannot be represented in the canonical wire layout.
class EncodingError : public Error {
 public:
  using Error::Error;
};

/// Unknown scheme identifier.
class RegistryError : public Error {
 public:
  using Error::Error;
};

/// Signature backend failure. Carries the scheme it came from.
class CryptoError : public Error {
 public:
  CryptoError(std::string scheme_id, const std::string& what)
      : Error(scheme_id + ": " + what), scheme_id_(std::move(scheme_id)) {}

  const std::string& scheme_id() const noexcept { return scheme_id_; }

 private:
  std::string scheme_id_;
};

/// Every update of a round was rejected; there is nothing to average.
class AggregationError : public Error {
 public:
  using Error::Error;
};

/// SGD produced a non-finite loss.
class TrainingError : public Error {
 public:
  TrainingError(std::size_t step, const std::string& what)
      : Error(what + " at step " + std::to_string(step)), step_(step) {}

  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

/// The convergence fit is undefined for the supplied trace.
class FitError : public Error {
 public:
  using Error::Error;
};

/// A timing probe aborted; partial measurements are discarded.
class ProbeError : public Error {
 public:
  using Error::Error;
};

enum class ParseErrorKind { kIo, kBadMagic, kTruncated, kCountMismatch };

/// IDX / fixture parsing failure.
class ParseError : public Error {
 public:
  ParseError(ParseErrorKind kind, const std::string& what) : Error(what), kind_(kind) {}

  ParseErrorKind kind() const noexcept { return kind_; }

 private:
  ParseErrorKind kind_;
};

}  // namespace pqfl
