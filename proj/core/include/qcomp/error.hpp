#pragma once

#include <stdexcept>
#include <string>

namespace qcomp {

// Root of every error the engine throws. Subclasses map onto the CLI exit
// codes (see tools/cli.cpp).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InputError : public Error {
 public:
  using Error::Error;
};

// A generation or embedding backend failed. `diagnostic()` carries whatever
// the backend reported (HTTP status, transport error, exception text).
class BackendError : public Error {
 public:
  BackendError(const std::string& what, std::string diagnostic = {})
      : Error(what), diagnostic_(std::move(diagnostic)) {}
  const std::string& diagnostic() const noexcept { return diagnostic_; }

 private:
  std::string diagnostic_;
};

class EmptyGenerationError : public Error {
 public:
  using Error::Error;
};

// Backend output could not be parsed. The raw text is kept for inspection.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::string raw)
      : Error(what), raw_(std::move(raw)) {}
  const std::string& raw_output() const noexcept { return raw_; }

 private:
  std::string raw_;
};

class CardOverflowError : public Error {
 public:
  using Error::Error;
};

class StorageError : public Error {
 public:
  using Error::Error;
};

// A backend violated its declared contract (e.g. wrong embedding dimension).
class ContractError : public Error {
 public:
  using Error::Error;
};

// Operation invoked against an index in the wrong state (empty, unbuilt).
class StateError : public Error {
 public:
  using Error::Error;
};

// A staged artifact required by a later pipeline step is missing on disk.
class MissingArtifactError : public StateError {
 public:
  using StateError::StateError;
};

}  // namespace qcomp
